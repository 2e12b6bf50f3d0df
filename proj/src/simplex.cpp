#include "iiswb/simplex.hpp"

#include <numeric>

namespace iiswb {

RowSet all_rows(Eigen::Index rows) {
  RowSet out(static_cast<std::size_t>(rows));
  std::iota(out.begin(), out.end(), Eigen::Index{0});
  return out;
}

FeasibilityOutcome<Rational> check_feasible(const NormalizedSystem& system, std::span<const Eigen::Index> active) {
  return check_feasible<Rational>(system.A, system.b, active);
}

FeasibilityOutcome<Rational> check_feasible(const NormalizedSystem& system) {
  const RowSet rows = all_rows(system.num_rows());
  return check_feasible(system, rows);
}

LpOutcome<Rational> solve_lp(const NormalizedSystem& system, const RVector& cost) {
  const RowSet rows = all_rows(system.num_rows());
  return solve_lp<Rational>(system.A, system.b, cost, rows);
}

LpOutcome<Rational> solve_lp(const NormalizedSystem& system) {
  return solve_lp(system, system.cost ? *system.cost : RVector(RVector::Zero(system.num_vars())));
}

}  // namespace iiswb
