#include "iiswb/repair.hpp"

#include "iiswb/error.hpp"
#include "iiswb/simplex.hpp"

#include <algorithm>
#include <set>

namespace iiswb {

namespace {

using Eigen::Index;

std::string advisory(const std::vector<SupportEntry>& matrix_side, const NormalizedSystem& sys) {
  std::set<std::string> params;
  for (const auto& e : matrix_side) params.insert(e.param);
  std::string names;
  for (const auto& p : params) names += (names.empty() ? "" : ", ") + p;
  const auto& first = matrix_side.front();
  return "cannot relax " + names + ": it multiplies variable " +
         sys.var_names[static_cast<std::size_t>(*first.col)] + " in " +
         sys.rows[static_cast<std::size_t>(first.row)].member_id() +
         ", so slack on it turns the repair into a nonconvex mixed-integer quadratically constrained program "
         "(MIQCP), which is not solved here. Left-hand-side parameters are best left unchanged unless you insist; "
         "choose right-hand-side parameters to relax instead.";
}

Rational weight_of(const RepairSpec& spec, const std::string& param) {
  auto it = spec.weights.find(param);
  return it == spec.weights.end() ? Rational(1) : it->second;
}

void check_spec(const Model& model, const RepairSpec& spec) {
  for (const auto& t : spec.targets)
    if (!model.find_param(t)) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + t + "'");
  for (const auto& [name, w] : spec.weights) {
    if (!model.find_param(name)) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
    if (std::find(spec.targets.begin(), spec.targets.end(), name) == spec.targets.end())
      throw Error(ErrorCode::InvalidModel, "weight given for '" + name + "', which is not a repair target");
    if (w <= 0) throw Error(ErrorCode::InvalidModel, "weight for '" + name + "' must be positive");
  }
}

std::map<std::string, Rational> point_map(const NormalizedSystem& sys, const RVector& x) {
  std::map<std::string, Rational> out;
  for (std::size_t j = 0; j < sys.var_names.size(); ++j) out[sys.var_names[j]] = x(static_cast<Index>(j));
  return out;
}

struct ElasticColumn {
  std::string param;  // tied: the parameter; entry: the row's parameter
  Rational weight;
  Index row = -1;  // entry mode
  int sign = 1;    // tied: +1 for d+, -1 for d-
};

}  // namespace

std::string to_string(RepairMode mode) { return mode == RepairMode::Tied ? "tied" : "entry"; }

std::string to_string(RepairStatus status) {
  switch (status) {
    case RepairStatus::Repaired: return "repaired";
    case RepairStatus::AlreadyFeasible: return "already_feasible";
    case RepairStatus::Rejected: return "rejected";
  }
  return "unknown";
}

SupportSets derive_support(const Model& model, const RepairSpec& spec) {
  check_spec(model, spec);
  const auto sys = normalize(model);
  auto targeted = [&](const Coefficient& c) -> std::optional<std::string> {
    auto p = param_of(c);
    if (!p) return std::nullopt;
    if (std::find(spec.targets.begin(), spec.targets.end(), *p) == spec.targets.end()) return std::nullopt;
    return std::string(*p);
  };
  SupportSets out;
  for (Index r = 0; r < sys.num_rows(); ++r) {
    for (const auto& e : sys.entry_provenance[static_cast<std::size_t>(r)])
      if (auto p = targeted(e.coef)) out.matrix.push_back({r, e.col, *p, factor_of(e.coef)});
    const auto& rhs = sys.rhs_provenance[static_cast<std::size_t>(r)];
    if (auto p = targeted(rhs)) out.rhs.push_back({r, std::nullopt, *p, factor_of(rhs)});
  }
  return out;
}

RepairPlan solve_repair(const Model& model, const RepairSpec& spec, const MilpOptions& options) {
  const auto support = derive_support(model, spec);
  const auto sys = normalize(model);
  if (!support.matrix.empty()) throw Error(ErrorCode::NonlinearRepairUnsupported, advisory(support.matrix, sys));

  const RowSet all = all_rows(sys.num_rows());
  const bool integers = sys.has_integers();
  RepairPlan plan;
  plan.mode = spec.mode;

  std::optional<RVector> witness;
  if (integers) {
    auto out = check_feasible_milp(sys, all, options);
    if (auto* f = std::get_if<milp::Feasible>(&out)) witness = f->point;
  } else {
    auto out = check_feasible(sys, all);
    if (auto* f = std::get_if<lp::Feasible<Rational>>(&out)) witness = f->point;
  }
  if (witness) {
    plan.status = RepairStatus::AlreadyFeasible;
    plan.total = 0;
    plan.repaired_point = point_map(sys, *witness);
    return plan;
  }

  // Elastic columns after the model's own.
  std::vector<ElasticColumn> extra;
  if (spec.mode == RepairMode::Tied) {
    for (const auto& t : spec.targets) {
      extra.push_back({t, weight_of(spec, t), -1, 1});
      extra.push_back({t, weight_of(spec, t), -1, -1});
    }
  } else {
    for (const auto& e : support.rhs) extra.push_back({e.param, weight_of(spec, e.param), e.row, 1});
  }

  const Index n = sys.num_vars();
  const auto k = static_cast<Index>(extra.size());
  const Index m = sys.num_rows();
  NormalizedSystem elastic;
  elastic.A = RMatrix::Zero(m + k, n + k);
  elastic.b = RVector::Zero(m + k);
  elastic.A.topLeftCorner(m, n) = sys.A;
  elastic.b.head(m) = sys.b;
  elastic.var_names = sys.var_names;
  elastic.integer_mask = sys.integer_mask;
  elastic.rows = sys.rows;
  RVector cost = RVector::Zero(n + k);
  for (Index e = 0; e < k; ++e) {
    const auto& col = extra[static_cast<std::size_t>(e)];
    elastic.var_names.push_back(col.param + (col.sign > 0 ? "+" : "-"));
    elastic.integer_mask.push_back(false);
    elastic.rows.push_back({elastic.var_names.back(), RowHalf::BoundLower});
    elastic.A(m + e, n + e) = -1;  // slack >= 0
    cost(n + e) = col.weight;
  }
  if (spec.mode == RepairMode::Tied) {
    for (const auto& s : support.rhs) {
      const auto it = std::find(spec.targets.begin(), spec.targets.end(), s.param);
      const auto plus = n + 2 * static_cast<Index>(it - spec.targets.begin());
      elastic.A(s.row, plus) -= s.factor;
      elastic.A(s.row, plus + 1) += s.factor;
    }
  } else {
    for (Index e = 0; e < k; ++e) elastic.A(extra[static_cast<std::size_t>(e)].row, n + e) = -1;
  }

  const RowSet elastic_rows = all_rows(m + k);
  RVector solution;
  Rational total;
  if (integers) {
    auto out = solve_milp(elastic, cost, elastic_rows, options);
    if (!std::holds_alternative<milp::Optimal>(out))
      throw Error(ErrorCode::Unrepairable, "no amount of relaxation on the chosen parameters restores feasibility");
    solution = std::get<milp::Optimal>(out).point;
    total = std::get<milp::Optimal>(out).value;
  } else {
    auto out = solve_lp<Rational>(elastic.A, elastic.b, cost, elastic_rows);
    if (!std::holds_alternative<lp::Optimal<Rational>>(out))
      throw Error(ErrorCode::Unrepairable, "no amount of relaxation on the chosen parameters restores feasibility");
    solution = std::get<lp::Optimal<Rational>>(out).point;
    total = std::get<lp::Optimal<Rational>>(out).value;
  }

  plan.status = RepairStatus::Repaired;
  plan.total = total;
  plan.repaired_point = point_map(sys, solution.head(n));
  if (spec.mode == RepairMode::Tied) {
    for (std::size_t t = 0; t < spec.targets.size(); ++t) {
      const auto plus = n + 2 * static_cast<Index>(t);
      const Rational delta = solution(plus) - solution(plus + 1);
      if (delta != 0) plan.param_deltas[spec.targets[t]] = delta;
    }
  } else {
    for (Index e = 0; e < k; ++e)
      if (solution(n + e) != 0) plan.entry_slacks[extra[static_cast<std::size_t>(e)].row] = solution(n + e);
  }
  return plan;
}

Model apply_repair(const Model& model, const RepairPlan& plan) {
  if (plan.status == RepairStatus::AlreadyFeasible) return model;
  if (plan.status == RepairStatus::Rejected)
    throw Error(ErrorCode::NotApplicable, "the plan was rejected and cannot be applied");
  if (plan.mode == RepairMode::Entry)
    throw Error(ErrorCode::NotApplicable,
                "entry-mode slacks are per row and only reported; re-run the repair in tied mode to apply it");
  std::map<std::string, Rational> values;
  for (const auto& [name, delta] : plan.param_deltas) {
    const ParamDef* p = model.find_param(name);
    if (!p) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
    values[name] = p->value + delta;
  }
  return with_param_values(model, values);
}

std::string Recommendation::phrase() const {
  return direction + " " + param + " from " + to_string(old_value) + " to " + to_string(new_value);
}

std::vector<Recommendation> explain_deltas(const Model& model, const RepairPlan& plan) {
  std::vector<Recommendation> out;
  auto recommend = [&](const std::string& param, const Rational& delta, std::string member) {
    const ParamDef* p = model.find_param(param);
    if (!p) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + param + "'");
    out.push_back({param, p->value, p->value + delta, delta > 0 ? "increase" : "decrease", std::move(member)});
  };
  if (plan.mode == RepairMode::Tied) {
    for (const auto& [param, delta] : plan.param_deltas)
      if (delta != 0) recommend(param, delta, "");
    return out;
  }
  if (plan.entry_slacks.empty()) return out;
  const auto sys = normalize(model);
  for (const auto& [row, slack] : plan.entry_slacks) {
    if (slack == 0) continue;
    const auto& rhs = sys.rhs_provenance[static_cast<std::size_t>(row)];
    auto param = param_of(rhs);
    if (!param) continue;
    recommend(std::string(*param), slack / factor_of(rhs), sys.rows[static_cast<std::size_t>(row)].member_id());
  }
  return out;
}

}  // namespace iiswb
