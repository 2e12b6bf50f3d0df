#pragma once

// Reading and writing models: the `.om` algebraic text language and the
// equivalent JSON document form.
//
//   model NAME;
//   param NAME = NUMBER [mutable] ["description"];
//   var NAME [integer] [>= NUMBER] [<= NUMBER] ["description"];
//   s.t. NAME: linexpr (<=|>=|=) linexpr ["description"];
//   min: linexpr;   |   max: linexpr;
//
// A linexpr term is NUMBER, PARAM, NUMBER*PARAM, VAR, NUMBER*VAR, PARAM*VAR
// or NUMBER*PARAM*VAR. NUMBER is an integer, a decimal, or p/q; all are read
// exactly. `#` starts a line comment.

#include "iiswb/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iiswb {

struct SourceSpan {
  int line = 1;
  int column = 1;
  int length = 0;
  bool operator==(const SourceSpan&) const = default;
};

struct ParseError {
  enum class Kind { Lex, Syntax, Resolve, DuplicateName };
  SourceSpan span;
  Kind kind;
  std::string message;
};

std::string_view to_string(ParseError::Kind kind);

using ParseResult = std::variant<Model, std::vector<ParseError>>;

enum class ModelFormat { Text, Structured };

ParseResult parse_text(std::string_view source);
ParseResult parse_structured(std::string_view document);
ParseResult parse_model(std::string_view source, ModelFormat format);

/// `.json` selects the structured form; everything else is text.
ModelFormat format_for_path(const std::filesystem::path& path);
ParseResult load_model_file(const std::filesystem::path& path);

/// Canonical rendering. Throws Error(InvalidModel) on an invalid model.
std::string serialize(const Model& model, ModelFormat format);

/// "3*x - w*y" style rendering of a term list; "0" when empty.
std::string format_terms(const std::vector<Term>& terms);
std::string format_coefficient(const Coefficient& coef);
/// "x + y >= dmin"
std::string format_constraint(const Constraint& constraint);

}  // namespace iiswb
