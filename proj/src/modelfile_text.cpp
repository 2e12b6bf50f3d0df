#include "iiswb/error.hpp"
#include "iiswb/modelfile.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace iiswb {

std::string_view to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::Lex: return "Lex";
    case ParseError::Kind::Syntax: return "Syntax";
    case ParseError::Kind::Resolve: return "Resolve";
    case ParseError::Kind::DuplicateName: return "DuplicateName";
  }
  return "?";
}

namespace {

enum class Tok {
  Ident, Number, String, SubjectTo,
  Semicolon, Colon, Assign, Le, Ge, Star, Plus, Minus,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<ParseError>& errors) : src_(src), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) break;
      const int line = line_, col = col_;
      const std::size_t start = pos_;
      auto make = [&](Tok kind, std::string text) {
        out.push_back({kind, std::move(text), {line, col, static_cast<int>(pos_ - start)}});
      };
      const char c = src_[pos_];
      if (c == 's' && src_.substr(pos_, 4) == "s.t." && (pos_ + 4 >= src_.size() || !ident_char(src_[pos_ + 4]))) {
        advance(4);
        make(Tok::SubjectTo, "s.t.");
      } else if (ident_start(c)) {
        while (pos_ < src_.size() && ident_char(src_[pos_])) advance(1);
        make(Tok::Ident, std::string(src_.substr(start, pos_ - start)));
      } else if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
        lex_number();
        make(Tok::Number, std::string(src_.substr(start, pos_ - start)));
      } else if (c == '"') {
        std::string text;
        if (lex_string(text)) make(Tok::String, std::move(text));
        else errors_.push_back({{line, col, static_cast<int>(pos_ - start)}, ParseError::Kind::Lex, "unterminated string"});
      } else if (c == '<' || c == '>') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          advance(2);
          make(c == '<' ? Tok::Le : Tok::Ge, c == '<' ? "<=" : ">=");
        } else {
          advance(1);
          errors_.push_back({{line, col, 1}, ParseError::Kind::Lex,
                             std::string("strict inequality '") + c + "' is not supported; use '" + c + "='"});
        }
      } else if (c == '=') {
        advance(pos_ + 1 < src_.size() && src_[pos_ + 1] == '=' ? 2 : 1);
        make(Tok::Assign, "=");
      } else if (c == ';') { advance(1); make(Tok::Semicolon, ";"); }
      else if (c == ':') { advance(1); make(Tok::Colon, ":"); }
      else if (c == '*') { advance(1); make(Tok::Star, "*"); }
      else if (c == '+') { advance(1); make(Tok::Plus, "+"); }
      else if (c == '-') { advance(1); make(Tok::Minus, "-"); }
      else {
        advance(1);
        errors_.push_back({{line, col, 1}, ParseError::Kind::Lex, std::string("unexpected character '") + c + "'"});
      }
    }
    out.push_back({Tok::End, "", {line_, col_, 0}});
    return out;
  }

 private:
  void advance(std::size_t count) {
    for (std::size_t i = 0; i < count && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') { ++line_; col_ = 1; }
      else { ++col_; }
      ++pos_;
    }
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
      } else {
        break;
      }
    }
  }

  void lex_number() {
    while (pos_ < src_.size() && digit(src_[pos_])) advance(1);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance(1);
      while (pos_ < src_.size() && digit(src_[pos_])) advance(1);
    } else if (pos_ + 1 < src_.size() && src_[pos_] == '/' && digit(src_[pos_ + 1])) {
      advance(1);
      while (pos_ < src_.size() && digit(src_[pos_])) advance(1);
    }
  }

  bool lex_string(std::string& text) {
    advance(1);
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '"') { advance(1); return true; }
      if (c == '\n') return false;
      if (c == '\\' && pos_ + 1 < src_.size()) {
        const char e = src_[pos_ + 1];
        text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        advance(2);
        continue;
      }
      text += c;
      advance(1);
    }
    return false;
  }

  std::string_view src_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct RawFactorName {
  std::string name;
  SourceSpan span;
};

struct RawTerm {
  Rational factor = 1;
  bool explicit_number = false;
  std::vector<RawFactorName> names;
  SourceSpan span;
};

struct RawConstraint {
  std::string name;
  SourceSpan span;
  std::vector<RawTerm> lhs;
  Sense sense = Sense::Le;
  std::vector<RawTerm> rhs;
  std::string description;
};

struct RawObjective {
  ObjectiveSense sense;
  std::vector<RawTerm> terms;
  SourceSpan span;
};

struct Abort {};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<ParseError>& errors)
      : toks_(std::move(tokens)), errors_(errors) {}

  Model run() {
    while (peek().kind != Tok::End) {
      try {
        statement();
      } catch (const Abort&) {
        recover();
      }
    }
    resolve();
    return std::move(model_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    next();
    return true;
  }
  bool accept_word(std::string_view word) {
    if (peek().kind != Tok::Ident || peek().text != word) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(const Token& at, const std::string& message) {
    errors_.push_back({at.span, ParseError::Kind::Syntax, message});
    throw Abort{};
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), std::string("expected ") + what + describe_found());
    return next();
  }

  std::string describe_found() const {
    const Token& t = peek();
    if (t.kind == Tok::End) return " but reached end of input";
    return " but found '" + t.text + "'";
  }

  void recover() {
    while (peek().kind != Tok::End && peek().kind != Tok::Semicolon) next();
    accept(Tok::Semicolon);
  }

  bool declare(const std::string& name, const SourceSpan& span) {
    if (auto it = declared_.find(name); it != declared_.end()) {
      std::ostringstream msg;
      msg << "'" << name << "' already declared at line " << it->second.line << ", column " << it->second.column;
      errors_.push_back({span, ParseError::Kind::DuplicateName, msg.str()});
      return false;
    }
    declared_.emplace(name, span);
    return true;
  }

  Rational signed_number(const char* what) {
    bool negative = false;
    while (peek().kind == Tok::Minus || peek().kind == Tok::Plus) negative ^= next().kind == Tok::Minus;
    const Token& tok = expect(Tok::Number, what);
    auto value = parse_rational(tok.text);
    if (!value) fail(tok, "malformed number '" + tok.text + "'");
    return negative ? Rational(-*value) : *value;
  }

  std::string optional_description() {
    if (peek().kind == Tok::String) return next().text;
    return {};
  }

  void statement() {
    const Token& head = peek();
    if (head.kind == Tok::SubjectTo) {
      next();
      constraint();
    } else if (head.kind == Tok::Ident && head.text == "param") {
      next();
      param();
    } else if (head.kind == Tok::Ident && head.text == "var") {
      next();
      var();
    } else if (head.kind == Tok::Ident && (head.text == "min" || head.text == "max")) {
      objective();
    } else if (head.kind == Tok::Ident && head.text == "model") {
      next();
      if (peek().kind == Tok::Ident || peek().kind == Tok::String) model_.name = next().text;
      else fail(peek(), "expected model name" + describe_found());
      expect(Tok::Semicolon, "';'");
    } else {
      fail(head, "expected 'param', 'var', 's.t.', 'min', 'max' or 'model'" + describe_found());
    }
  }

  void param() {
    const Token& name = expect(Tok::Ident, "parameter name");
    expect(Tok::Assign, "'='");
    ParamDef p{name.text, signed_number("parameter value"), false, {}};
    if (accept_word("mutable")) p.is_mutable = true;
    p.description = optional_description();
    expect(Tok::Semicolon, "';'");
    if (declare(p.name, name.span)) model_.params.push_back(std::move(p));
  }

  void var() {
    const Token& name = expect(Tok::Ident, "variable name");
    VarDef v{name.text, VarKind::Continuous, std::nullopt, std::nullopt, {}};
    if (accept_word("integer")) v.kind = VarKind::Integer;
    for (int i = 0; i < 2; ++i) {
      if (accept(Tok::Ge)) {
        if (v.lower) fail(peek(), "lower bound given twice");
        v.lower = signed_number("lower bound");
      } else if (accept(Tok::Le)) {
        if (v.upper) fail(peek(), "upper bound given twice");
        v.upper = signed_number("upper bound");
      }
    }
    v.description = optional_description();
    expect(Tok::Semicolon, "';'");
    if (v.lower && v.upper && *v.lower > *v.upper)
      errors_.push_back({name.span, ParseError::Kind::Resolve, "variable '" + v.name + "' has lower bound above upper bound"});
    if (declare(v.name, name.span)) model_.vars.push_back(std::move(v));
  }

  void constraint() {
    const Token& name = expect(Tok::Ident, "constraint name");
    expect(Tok::Colon, "':'");
    RawConstraint c;
    c.name = name.text;
    c.span = name.span;
    c.lhs = linexpr();
    if (accept(Tok::Le)) c.sense = Sense::Le;
    else if (accept(Tok::Ge)) c.sense = Sense::Ge;
    else if (accept(Tok::Assign)) c.sense = Sense::Eq;
    else fail(peek(), "expected '<=', '>=' or '='" + describe_found());
    c.rhs = linexpr();
    c.description = optional_description();
    expect(Tok::Semicolon, "';'");
    if (declare(c.name, c.span)) raw_constraints_.push_back(std::move(c));
  }

  void objective() {
    const Token& head = next();
    RawObjective obj{head.text == "max" ? ObjectiveSense::Maximize : ObjectiveSense::Minimize, {}, head.span};
    expect(Tok::Colon, "':'");
    obj.terms = linexpr();
    expect(Tok::Semicolon, "';'");
    if (raw_objective_) {
      errors_.push_back({head.span, ParseError::Kind::DuplicateName, "objective declared more than once"});
      return;
    }
    raw_objective_ = std::move(obj);
  }

  std::vector<RawTerm> linexpr() {
    std::vector<RawTerm> terms;
    bool negative = false;
    if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) negative = next().kind == Tok::Minus;
    terms.push_back(term(negative));
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      negative = next().kind == Tok::Minus;
      terms.push_back(term(negative));
    }
    return terms;
  }

  RawTerm term(bool negative) {
    RawTerm t;
    t.span = peek().span;
    do {
      const Token& tok = peek();
      if (tok.kind == Tok::Number) {
        next();
        auto value = parse_rational(tok.text);
        if (!value) fail(tok, "malformed number '" + tok.text + "'");
        t.factor *= *value;
        t.explicit_number = true;
      } else if (tok.kind == Tok::Ident) {
        next();
        t.names.push_back({tok.text, tok.span});
      } else {
        fail(tok, "expected a number or name" + describe_found());
      }
    } while (accept(Tok::Star));
    if (negative) t.factor = -t.factor;
    return t;
  }

  // Resolution ----------------------------------------------------------------

  void resolve_error(const SourceSpan& span, std::string message) {
    errors_.push_back({span, ParseError::Kind::Resolve, std::move(message)});
  }

  static Coefficient param_coefficient(const RawTerm& t, const std::string& param) {
    if (!t.explicit_number && t.factor == 1) return ParamRef{param};
    return ScaledParam{t.factor, param};
  }

  // Splits a term into either a variable term or a constant.
  bool classify(const RawTerm& t, std::optional<Term>& var_term, std::optional<Coefficient>& constant) {
    const RawFactorName* var_name = nullptr;
    const RawFactorName* param_name = nullptr;
    for (const auto& n : t.names) {
      const bool is_param = model_.find_param(n.name) != nullptr;
      const bool is_var = model_.find_var(n.name) != nullptr;
      if (!is_param && !is_var) {
        resolve_error(n.span, "unknown name '" + n.name + "'");
        return false;
      }
      if (is_var) {
        if (var_name) {
          resolve_error(n.span, "product of variables '" + var_name->name + "' and '" + n.name + "' is not linear");
          return false;
        }
        var_name = &n;
      } else {
        if (param_name) {
          resolve_error(n.span, "product of parameters '" + param_name->name + "' and '" + n.name + "' is not supported");
          return false;
        }
        param_name = &n;
      }
    }
    if (var_name) {
      Coefficient coef = param_name ? param_coefficient(t, param_name->name) : Coefficient{Literal{t.factor}};
      var_term = Term{var_name->name, std::move(coef)};
    } else if (param_name) {
      constant = param_coefficient(t, param_name->name);
    } else {
      constant = Literal{t.factor};
    }
    return true;
  }

  struct Lowered {
    std::vector<Term> terms;
    Coefficient constant = Literal{0};
    bool ok = true;
  };

  // Moves variables to the left and constants to the right of the relation.
  Lowered lower(const std::vector<RawTerm>& left, const std::vector<RawTerm>& right, const SourceSpan& where) {
    Lowered out;
    Rational literal_sum = 0;
    std::optional<Coefficient> param_constant;
    std::map<std::string, SourceSpan> seen;
    auto absorb = [&](const RawTerm& t, bool on_left) {
      std::optional<Term> var_term;
      std::optional<Coefficient> constant;
      if (!classify(t, var_term, constant)) {
        out.ok = false;
        return;
      }
      if (var_term) {
        if (!seen.emplace(var_term->var, t.span).second) {
          resolve_error(t.span, "variable '" + var_term->var + "' appears more than once");
          out.ok = false;
          return;
        }
        if (!on_left) var_term->coef = negate(var_term->coef);
        out.terms.push_back(std::move(*var_term));
        return;
      }
      Coefficient moved = on_left ? negate(*constant) : *constant;
      if (const auto* lit = std::get_if<Literal>(&moved)) {
        literal_sum += lit->value;
      } else if (param_constant) {
        errors_.push_back({t.span, ParseError::Kind::Syntax, "at most one parameter constant per constraint"});
        out.ok = false;
      } else {
        param_constant = std::move(moved);
      }
    };
    for (const auto& t : left) absorb(t, true);
    for (const auto& t : right) absorb(t, false);
    if (param_constant && literal_sum != 0) {
      errors_.push_back({where, ParseError::Kind::Syntax,
                         "a parameter constant cannot be combined with a numeric constant"});
      out.ok = false;
    }
    out.constant = param_constant ? *param_constant : Coefficient{Literal{literal_sum}};
    return out;
  }

  void resolve() {
    for (const auto& raw : raw_constraints_) {
      Lowered lowered = lower(raw.lhs, raw.rhs, raw.span);
      if (!lowered.ok) continue;
      model_.constraints.push_back({raw.name, std::move(lowered.terms), raw.sense, std::move(lowered.constant), raw.description});
    }
    if (raw_objective_) {
      Lowered lowered = lower(raw_objective_->terms, {}, raw_objective_->span);
      if (lowered.ok) {
        const auto* lit = std::get_if<Literal>(&lowered.constant);
        if (lit == nullptr || lit->value != 0)
          errors_.push_back({raw_objective_->span, ParseError::Kind::Syntax, "objective may not contain constant terms"});
        else
          model_.objective = Objective{raw_objective_->sense, std::move(lowered.terms)};
      }
    }
    if (model_.vars.empty() && errors_.empty())
      resolve_error(SourceSpan{1, 1, 0}, "model declares no variables");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ParseError>& errors_;
  Model model_;
  std::map<std::string, SourceSpan> declared_;
  std::vector<RawConstraint> raw_constraints_;
  std::optional<RawObjective> raw_objective_;
};

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') { out += '\\'; out += c; }
    else if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  return out + "\"";
}

bool is_plain_identifier(std::string_view s) {
  if (s.empty() || !ident_start(s.front())) return false;
  for (char c : s)
    if (!ident_char(c)) return false;
  return true;
}

// Term text; `drop_sign` prints the magnitude for use after " - ".
std::string term_body(const Term& t, bool drop_sign) {
  const std::string& var = t.var;
  if (const auto* lit = std::get_if<Literal>(&t.coef)) {
    Rational v = drop_sign ? Rational(abs(lit->value)) : lit->value;
    if (v == 1) return var;
    if (v == -1) return "-" + var;
    return to_string(v) + "*" + var;
  }
  if (const auto* ref = std::get_if<ParamRef>(&t.coef)) return ref->name + "*" + var;
  // A bare "-p" reads back as factor -1, so that factor needs no number.
  const auto& scaled = std::get<ScaledParam>(t.coef);
  if (scaled.factor == -1) return (drop_sign ? "" : "-") + scaled.name + "*" + var;
  Rational k = drop_sign ? Rational(abs(scaled.factor)) : scaled.factor;
  return to_string(k) + "*" + scaled.name + "*" + var;
}

bool term_negative(const Term& t) {
  if (std::holds_alternative<ParamRef>(t.coef)) return false;
  return factor_of(t.coef) < 0;
}

}  // namespace

ParseResult parse_text(std::string_view source) {
  std::vector<ParseError> errors;
  auto tokens = Lexer(source, errors).run();
  Model model = Parser(std::move(tokens), errors).run();
  if (errors.empty()) {
    for (const auto& v : validate(model))
      errors.push_back({{1, 1, 0}, v.rule == Violation::Rule::DuplicateName ? ParseError::Kind::DuplicateName : ParseError::Kind::Resolve, v.message});
  }
  if (!errors.empty()) return errors;
  return model;
}

ParseResult parse_model(std::string_view source, ModelFormat format) {
  return format == ModelFormat::Text ? parse_text(source) : parse_structured(source);
}

ModelFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? ModelFormat::Structured : ModelFormat::Text;
}

ParseResult load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::vector<ParseError>{{{1, 1, 0}, ParseError::Kind::Lex, "cannot read '" + path.string() + "'"}};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), format_for_path(path));
}

std::string format_coefficient(const Coefficient& coef) {
  if (const auto* lit = std::get_if<Literal>(&coef)) return to_string(lit->value);
  if (const auto* ref = std::get_if<ParamRef>(&coef)) return ref->name;
  const auto& scaled = std::get<ScaledParam>(coef);
  if (scaled.factor == -1) return "-" + scaled.name;
  return to_string(scaled.factor) + "*" + scaled.name;
}

std::string format_terms(const std::vector<Term>& terms) {
  if (terms.empty()) return "0";
  std::string out = term_body(terms.front(), false);
  for (std::size_t i = 1; i < terms.size(); ++i) {
    const bool negative = term_negative(terms[i]);
    out += negative ? " - " : " + ";
    out += term_body(terms[i], negative);
  }
  return out;
}

std::string format_constraint(const Constraint& c) {
  const char* rel = c.sense == Sense::Le ? " <= " : c.sense == Sense::Ge ? " >= " : " = ";
  return format_terms(c.terms) + rel + format_coefficient(c.rhs);
}

namespace detail {

std::string serialize_text(const Model& model) {
  std::ostringstream out;
  out << "model " << (is_plain_identifier(model.name) ? model.name : quote(model.name)) << ";\n";
  if (!model.params.empty()) out << '\n';
  for (const auto& p : model.params) {
    out << "param " << p.name << " = " << to_string(p.value);
    if (p.is_mutable) out << " mutable";
    if (!p.description.empty()) out << ' ' << quote(p.description);
    out << ";\n";
  }
  out << '\n';
  for (const auto& v : model.vars) {
    out << "var " << v.name;
    if (v.kind == VarKind::Integer) out << " integer";
    if (v.lower) out << " >= " << to_string(*v.lower);
    if (v.upper) out << " <= " << to_string(*v.upper);
    if (!v.description.empty()) out << ' ' << quote(v.description);
    out << ";\n";
  }
  if (!model.constraints.empty()) out << '\n';
  for (const auto& c : model.constraints) {
    out << "s.t. " << c.name << ": " << format_constraint(c);
    if (!c.description.empty()) out << ' ' << quote(c.description);
    out << ";\n";
  }
  if (model.objective) {
    out << '\n' << (model.objective->sense == ObjectiveSense::Maximize ? "max" : "min") << ": "
        << format_terms(model.objective->terms) << ";\n";
  }
  return out.str();
}

std::string serialize_structured(const Model& model);

}  // namespace detail

std::string serialize(const Model& model, ModelFormat format) {
  if (auto violations = validate(model); !violations.empty())
    throw Error(ErrorCode::InvalidModel, "cannot serialize invalid model: " + violations.front().message);
  return format == ModelFormat::Text ? detail::serialize_text(model) : detail::serialize_structured(model);
}

}  // namespace iiswb
