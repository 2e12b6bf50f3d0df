#include "iiswb/model.hpp"

#include "iiswb/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace iiswb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::UnknownParam: return "UnknownParam";
    case ErrorCode::NotInfeasible: return "NotInfeasible";
    case ErrorCode::IntegerVariablesPresent: return "IntegerVariablesPresent";
    case ErrorCode::EnumerationBudgetExceeded: return "EnumerationBudgetExceeded";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NodeBudgetExceeded: return "NodeBudgetExceeded";
    case ErrorCode::SolveBudgetExceeded: return "SolveBudgetExceeded";
    case ErrorCode::NonlinearRepairUnsupported: return "NonlinearRepairUnsupported";
    case ErrorCode::Unrepairable: return "Unrepairable";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::ToolLoopExceeded: return "ToolLoopExceeded";
    case ErrorCode::ClientError: return "ClientError";
  }
  return "Unknown";
}

std::optional<std::string_view> param_of(const Coefficient& coef) {
  if (const auto* ref = std::get_if<ParamRef>(&coef)) return ref->name;
  if (const auto* scaled = std::get_if<ScaledParam>(&coef)) return scaled->name;
  return std::nullopt;
}

Rational factor_of(const Coefficient& coef) {
  if (const auto* lit = std::get_if<Literal>(&coef)) return lit->value;
  if (const auto* scaled = std::get_if<ScaledParam>(&coef)) return scaled->factor;
  return Rational(1);
}

Coefficient negate(const Coefficient& coef) {
  if (const auto* lit = std::get_if<Literal>(&coef)) return Literal{-lit->value};
  if (const auto* ref = std::get_if<ParamRef>(&coef)) return ScaledParam{Rational(-1), ref->name};
  const auto& scaled = std::get<ScaledParam>(coef);
  return ScaledParam{-scaled.factor, scaled.name};
}

const ParamDef* Model::find_param(std::string_view name) const {
  auto it = std::find_if(params.begin(), params.end(), [&](const ParamDef& p) { return p.name == name; });
  return it == params.end() ? nullptr : &*it;
}

const VarDef* Model::find_var(std::string_view name) const {
  auto it = std::find_if(vars.begin(), vars.end(), [&](const VarDef& v) { return v.name == name; });
  return it == vars.end() ? nullptr : &*it;
}

const Constraint* Model::find_constraint(std::string_view name) const {
  auto it = std::find_if(constraints.begin(), constraints.end(),
                         [&](const Constraint& c) { return c.name == name; });
  return it == constraints.end() ? nullptr : &*it;
}

std::optional<std::size_t> Model::var_index(std::string_view name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return i;
  return std::nullopt;
}

Rational evaluate(const Coefficient& coef, const Model& model) {
  const auto name = param_of(coef);
  if (!name) return std::get<Literal>(coef).value;
  const ParamDef* param = model.find_param(*name);
  if (param == nullptr) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + std::string(*name) + "'");
  return factor_of(coef) * param->value;
}

std::string_view to_string(Violation::Rule rule) {
  switch (rule) {
    case Violation::Rule::DuplicateName: return "DuplicateName";
    case Violation::Rule::UnresolvedRef: return "UnresolvedRef";
    case Violation::Rule::DuplicateVariableInConstraint: return "DuplicateVariableInConstraint";
    case Violation::Rule::InvertedBounds: return "InvertedBounds";
    case Violation::Rule::NoVariables: return "NoVariables";
    case Violation::Rule::BadIdentifier: return "BadIdentifier";
  }
  return "Unknown";
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!std::isalpha(head) && s.front() != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

class Validator {
 public:
  explicit Validator(const Model& model) : model_(model) {}

  std::vector<Violation> run() {
    std::set<std::string> seen;
    auto declare = [&](const std::string& name) {
      if (!is_identifier(name))
        add(Violation::Rule::BadIdentifier, name, "'" + name + "' is not an identifier");
      if (!seen.insert(name).second)
        add(Violation::Rule::DuplicateName, name, "name '" + name + "' is declared more than once");
    };
    for (const auto& p : model_.params) declare(p.name);
    for (const auto& v : model_.vars) declare(v.name);
    for (const auto& c : model_.constraints) declare(c.name);

    if (model_.vars.empty()) add(Violation::Rule::NoVariables, model_.name, "model declares no variables");

    for (const auto& v : model_.vars) {
      if (v.lower && v.upper && *v.lower > *v.upper)
        add(Violation::Rule::InvertedBounds, v.name,
            "lower bound " + to_string(*v.lower) + " exceeds upper bound " + to_string(*v.upper));
    }
    for (const auto& c : model_.constraints) {
      check_terms(c.terms, c.name);
      check_param(c.rhs);
    }
    if (model_.objective) check_terms(model_.objective->terms, "objective");
    return std::move(violations_);
  }

 private:
  void add(Violation::Rule rule, std::string element, std::string message) {
    violations_.push_back({rule, std::move(element), std::move(message)});
  }

  void check_param(const Coefficient& coef) {
    if (auto name = param_of(coef); name && model_.find_param(*name) == nullptr)
      add(Violation::Rule::UnresolvedRef, std::string(*name), "unknown parameter '" + std::string(*name) + "'");
  }

  void check_terms(const std::vector<Term>& terms, const std::string& owner) {
    std::set<std::string> used;
    for (const auto& t : terms) {
      if (model_.find_var(t.var) == nullptr)
        add(Violation::Rule::UnresolvedRef, t.var, "unknown variable '" + t.var + "' in " + owner);
      else if (!used.insert(t.var).second)
        add(Violation::Rule::DuplicateVariableInConstraint, t.var,
            "variable '" + t.var + "' appears twice in " + owner);
      check_param(t.coef);
    }
  }

  const Model& model_;
  std::vector<Violation> violations_;
};

}  // namespace

std::vector<Violation> validate(const Model& model) { return Validator(model).run(); }

std::string_view to_string(RowHalf half) {
  switch (half) {
    case RowHalf::LeSide: return "le";
    case RowHalf::GeSide: return "ge";
    case RowHalf::BoundLower: return "bound-lower";
    case RowHalf::BoundUpper: return "bound-upper";
  }
  return "?";
}

std::string RowOrigin::member_id() const {
  switch (half) {
    case RowHalf::BoundLower: return source + ".lb";
    case RowHalf::BoundUpper: return source + ".ub";
    default: return source;
  }
}

bool NormalizedSystem::has_integers() const {
  return std::find(integer_mask.begin(), integer_mask.end(), true) != integer_mask.end();
}

bool operator==(const NormalizedSystem& lhs, const NormalizedSystem& rhs) {
  if (lhs.A.rows() != rhs.A.rows() || lhs.A.cols() != rhs.A.cols()) return false;
  if (lhs.A != rhs.A || lhs.b != rhs.b) return false;
  if (lhs.cost.has_value() != rhs.cost.has_value()) return false;
  if (lhs.cost && (lhs.cost->size() != rhs.cost->size() || *lhs.cost != *rhs.cost)) return false;
  return lhs.var_names == rhs.var_names && lhs.integer_mask == rhs.integer_mask &&
         lhs.rows == rhs.rows && lhs.entry_provenance == rhs.entry_provenance &&
         lhs.rhs_provenance == rhs.rhs_provenance;
}

NormalizedSystem normalize(const Model& model) {
  if (auto violations = validate(model); !violations.empty()) {
    std::ostringstream msg;
    msg << "model '" << model.name << "' is invalid:";
    for (const auto& v : violations) msg << ' ' << v.message << ';';
    throw Error(ErrorCode::InvalidModel, msg.str());
  }

  const auto n = static_cast<Eigen::Index>(model.vars.size());
  std::size_t num_rows = 0;
  for (const auto& c : model.constraints) num_rows += c.sense == Sense::Eq ? 2 : 1;
  for (const auto& v : model.vars) num_rows += (v.lower ? 1 : 0) + (v.upper ? 1 : 0);

  NormalizedSystem sys;
  sys.A = RMatrix::Zero(static_cast<Eigen::Index>(num_rows), n);
  sys.b = RVector::Zero(static_cast<Eigen::Index>(num_rows));
  sys.rows.reserve(num_rows);
  sys.entry_provenance.reserve(num_rows);
  sys.rhs_provenance.reserve(num_rows);
  for (const auto& v : model.vars) {
    sys.var_names.push_back(v.name);
    sys.integer_mask.push_back(v.kind == VarKind::Integer);
  }

  Eigen::Index row = 0;
  auto emit = [&](const Constraint& c, RowHalf half, bool flip) {
    std::vector<EntryOrigin> entries;
    for (const auto& t : c.terms) {
      const auto col = static_cast<Eigen::Index>(*model.var_index(t.var));
      Coefficient coef = flip ? negate(t.coef) : t.coef;
      sys.A(row, col) = evaluate(coef, model);
      entries.push_back({col, std::move(coef)});
    }
    Coefficient rhs = flip ? negate(c.rhs) : c.rhs;
    sys.b(row) = evaluate(rhs, model);
    sys.rows.push_back({c.name, half});
    sys.entry_provenance.push_back(std::move(entries));
    sys.rhs_provenance.push_back(std::move(rhs));
    ++row;
  };

  for (const auto& c : model.constraints) {
    switch (c.sense) {
      case Sense::Le: emit(c, RowHalf::LeSide, false); break;
      case Sense::Ge: emit(c, RowHalf::GeSide, true); break;
      case Sense::Eq:
        emit(c, RowHalf::LeSide, false);
        emit(c, RowHalf::GeSide, true);
        break;
    }
  }

  for (Eigen::Index col = 0; col < n; ++col) {
    const auto& v = model.vars[static_cast<std::size_t>(col)];
    if (v.lower) {
      sys.A(row, col) = -1;
      sys.b(row) = -*v.lower;
      sys.rows.push_back({v.name, RowHalf::BoundLower});
      sys.entry_provenance.push_back({{col, Literal{Rational(-1)}}});
      sys.rhs_provenance.push_back(Literal{-*v.lower});
      ++row;
    }
    if (v.upper) {
      sys.A(row, col) = 1;
      sys.b(row) = *v.upper;
      sys.rows.push_back({v.name, RowHalf::BoundUpper});
      sys.entry_provenance.push_back({{col, Literal{Rational(1)}}});
      sys.rhs_provenance.push_back(Literal{*v.upper});
      ++row;
    }
  }

  if (model.objective) {
    RVector cost = RVector::Zero(n);
    const Rational sign = model.objective->sense == ObjectiveSense::Maximize ? -1 : 1;
    for (const auto& t : model.objective->terms)
      cost(static_cast<Eigen::Index>(*model.var_index(t.var))) = sign * evaluate(t.coef, model);
    sys.cost = std::move(cost);
  }
  return sys;
}

Model with_param_values(const Model& model, const std::map<std::string, Rational>& overrides) {
  Model out = model;
  for (const auto& [name, value] : overrides) {
    auto it = std::find_if(out.params.begin(), out.params.end(),
                           [&](const ParamDef& p) { return p.name == name; });
    if (it == out.params.end()) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
    it->value = value;
  }
  return out;
}

NormalizedSystem substitute_params(const Model& model,
                                   const std::map<std::string, Rational>& overrides) {
  return normalize(with_param_values(model, overrides));
}

std::vector<std::string> KeyInventory::all_names() const {
  std::vector<std::string> names;
  for (const auto& p : params) names.push_back(p.name);
  for (const auto& c : constraints) names.push_back(c.name);
  for (const auto& v : vars) names.push_back(v.name);
  return names;
}

KeyInventory list_keys(const Model& model) {
  KeyInventory keys;
  for (const auto& p : model.params) keys.params.push_back({p.name, p.description, p.value, p.is_mutable});
  for (const auto& c : model.constraints) keys.constraints.push_back({c.name, c.description});
  for (const auto& v : model.vars) keys.vars.push_back({v.name, v.description});
  return keys;
}

ParamUsage param_usage(const Model& model, std::string_view param) {
  ParamUsage usage;
  auto names = [&](const Coefficient& c) { return param_of(c) == param; };
  for (const auto& c : model.constraints) {
    if (names(c.rhs)) usage.in_rhs = true;
    for (const auto& t : c.terms)
      if (names(t.coef)) usage.in_lhs = true;
  }
  if (model.objective)
    for (const auto& t : model.objective->terms)
      if (names(t.coef)) usage.in_objective = true;
  return usage;
}

}  // namespace iiswb
