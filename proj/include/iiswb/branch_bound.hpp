#pragma once

// LP-relaxation branch-and-bound for systems with integer-masked columns.
// Nodes are explored best-bound first (ties by creation order) and branch on
// the lowest-index fractional integer variable, so results are reproducible.

#include "iiswb/model.hpp"
#include "iiswb/simplex.hpp"

#include <cstddef>
#include <span>
#include <variant>

namespace iiswb {

struct MilpOptions {
  std::size_t node_limit = 100'000;
  /// Integer variables left unbounded by the relaxation are searched inside
  /// boxes widened 10x at a time up to this radius.
  Rational horizon{1'000'000};
};

namespace milp {

struct Optimal {
  RVector point;
  Rational value;
};

struct Feasible {
  RVector point;
};

/// No certificate: Farkas' lemma does not cover integrality.
struct Infeasible {};

struct Unbounded {};

}  // namespace milp

using MilpOutcome = std::variant<milp::Optimal, milp::Feasible, milp::Infeasible, milp::Unbounded>;
using MilpFeasibility = std::variant<milp::Feasible, milp::Infeasible>;

/// Throws Error(NodeBudgetExceeded) when the node limit or the horizon runs out.
MilpFeasibility check_feasible_milp(const NormalizedSystem& system, std::span<const Eigen::Index> active,
                                    const MilpOptions& options = {});

MilpOutcome solve_milp(const NormalizedSystem& system, const RVector& cost, std::span<const Eigen::Index> active,
                       const MilpOptions& options = {});
/// All rows, system.cost (zero objective if absent).
MilpOutcome solve_milp(const NormalizedSystem& system, const MilpOptions& options = {});

}  // namespace iiswb
