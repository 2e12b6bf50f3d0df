#pragma once

// Symbolic optimization model and its lowering to an A x <= b system whose
// rows and entries remember which constraint, bound, and parameter they came
// from.

#include "iiswb/rational.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iiswb {

struct ParamDef {
  std::string name;
  Rational value;
  bool is_mutable = false;
  std::string description;

  bool operator==(const ParamDef&) const = default;
};

enum class VarKind { Continuous, Integer };

struct VarDef {
  std::string name;
  VarKind kind = VarKind::Continuous;
  std::optional<Rational> lower;  // nullopt is -inf
  std::optional<Rational> upper;  // nullopt is +inf
  std::string description;

  bool operator==(const VarDef&) const = default;
};

struct Literal {
  Rational value;
  bool operator==(const Literal&) const = default;
};

struct ParamRef {
  std::string name;
  bool operator==(const ParamRef&) const = default;
};

struct ScaledParam {
  Rational factor;
  std::string name;
  bool operator==(const ScaledParam&) const = default;
};

using Coefficient = std::variant<Literal, ParamRef, ScaledParam>;

/// Name of the parameter a coefficient reads, if any.
std::optional<std::string_view> param_of(const Coefficient& coef);
/// Multiplier applied to the parameter (1 for a plain reference); the literal
/// value for literals.
Rational factor_of(const Coefficient& coef);
Coefficient negate(const Coefficient& coef);

struct Term {
  std::string var;
  Coefficient coef;
  bool operator==(const Term&) const = default;
};

enum class Sense { Le, Ge, Eq };

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::Le;
  Coefficient rhs = Literal{0};
  std::string description;

  bool operator==(const Constraint&) const = default;
};

enum class ObjectiveSense { Minimize, Maximize };

struct Objective {
  ObjectiveSense sense = ObjectiveSense::Minimize;
  std::vector<Term> terms;
  bool operator==(const Objective&) const = default;
};

struct Model {
  std::string name = "model";
  std::vector<ParamDef> params;
  std::vector<VarDef> vars;
  std::vector<Constraint> constraints;
  std::optional<Objective> objective;

  bool operator==(const Model&) const = default;

  const ParamDef* find_param(std::string_view name) const;
  const VarDef* find_var(std::string_view name) const;
  const Constraint* find_constraint(std::string_view name) const;
  std::optional<std::size_t> var_index(std::string_view name) const;
};

Rational evaluate(const Coefficient& coef, const Model& model);

struct Violation {
  enum class Rule {
    DuplicateName,
    UnresolvedRef,
    DuplicateVariableInConstraint,
    InvertedBounds,
    NoVariables,
    BadIdentifier,
  };
  Rule rule;
  std::string element;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string_view to_string(Violation::Rule rule);

std::vector<Violation> validate(const Model& model);

enum class RowHalf { LeSide, GeSide, BoundLower, BoundUpper };

std::string_view to_string(RowHalf half);

struct RowOrigin {
  /// Constraint name, or variable name for bound rows.
  std::string source;
  RowHalf half;

  bool is_bound() const { return half == RowHalf::BoundLower || half == RowHalf::BoundUpper; }
  /// User-facing IIS member id: the constraint name, or "x.lb" / "x.ub".
  std::string member_id() const;
  bool operator==(const RowOrigin&) const = default;
};

struct EntryOrigin {
  Eigen::Index col;
  Coefficient coef;  // already carries the row's normalization sign
  bool operator==(const EntryOrigin&) const = default;
};

/// A x <= b over the model's variables (columns in declaration order).
/// Constraint rows come first in declaration order, then one row per finite
/// variable bound (lower before upper).
struct NormalizedSystem {
  RMatrix A;
  RVector b;
  std::vector<std::string> var_names;
  std::vector<bool> integer_mask;
  std::vector<RowOrigin> rows;
  std::vector<std::vector<EntryOrigin>> entry_provenance;
  std::vector<Coefficient> rhs_provenance;
  /// Minimization-form cost vector; maximization objectives arrive negated.
  std::optional<RVector> cost;

  Eigen::Index num_rows() const { return A.rows(); }
  Eigen::Index num_vars() const { return A.cols(); }
  bool has_integers() const;

  friend bool operator==(const NormalizedSystem& lhs, const NormalizedSystem& rhs);
};

/// Throws Error(InvalidModel) when validate() reports anything.
NormalizedSystem normalize(const Model& model);

/// Copy of `model` with parameter values replaced. Throws UnknownParam.
Model with_param_values(const Model& model, const std::map<std::string, Rational>& overrides);

NormalizedSystem substitute_params(const Model& model,
                                   const std::map<std::string, Rational>& overrides);

struct KeyEntry {
  std::string name;
  std::string description;
  bool operator==(const KeyEntry&) const = default;
};

struct ParamKey {
  std::string name;
  std::string description;
  Rational value;
  bool is_mutable = false;
  bool operator==(const ParamKey&) const = default;
};

struct KeyInventory {
  std::vector<ParamKey> params;
  std::vector<KeyEntry> constraints;
  std::vector<KeyEntry> vars;

  bool operator==(const KeyInventory&) const = default;
  /// Names only; the value-independent part of the inventory.
  std::vector<std::string> all_names() const;
};

KeyInventory list_keys(const Model& model);

/// Where a parameter occurs in the constraint system.
struct ParamUsage {
  bool in_rhs = false;
  bool in_lhs = false;
  bool in_objective = false;
};

ParamUsage param_usage(const Model& model, std::string_view param);

}  // namespace iiswb
