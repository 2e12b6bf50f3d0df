#pragma once

// Brute-force reference solvers. None of these touch the simplex code path:
// they enumerate tight-row subsets and solve the resulting square-ish systems
// with their own Gaussian elimination.

#include "iiswb/rational.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace iiswb::testing {

/// Some solution of M x = r (free columns set to zero), or nullopt.
inline std::optional<RVector> solve_equalities(RMatrix M, RVector r) {
  const Eigen::Index rows = M.rows(), cols = M.cols();
  std::vector<Eigen::Index> pivot_col;
  Eigen::Index rank = 0;
  for (Eigen::Index c = 0; c < cols && rank < rows; ++c) {
    Eigen::Index p = -1;
    for (Eigen::Index i = rank; i < rows; ++i)
      if (M(i, c) != 0) { p = i; break; }
    if (p < 0) continue;
    M.row(p).swap(M.row(rank));
    std::swap(r(p), r(rank));
    const Rational inv = Rational(1) / M(rank, c);
    M.row(rank) *= inv;
    r(rank) *= inv;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == rank || M(i, c) == 0) continue;
      const Rational f = M(i, c);
      M.row(i) -= f * M.row(rank);
      r(i) -= f * r(rank);
    }
    pivot_col.push_back(c);
    ++rank;
  }
  for (Eigen::Index i = rank; i < rows; ++i)
    if (r(i) != 0) return std::nullopt;
  RVector x = RVector::Zero(cols);
  for (Eigen::Index i = 0; i < rank; ++i) x(pivot_col[static_cast<std::size_t>(i)]) = r(i);
  return x;
}

inline Eigen::Index rank_of(RMatrix M) {
  Eigen::Index rank = 0;
  for (Eigen::Index c = 0; c < M.cols() && rank < M.rows(); ++c) {
    Eigen::Index p = -1;
    for (Eigen::Index i = rank; i < M.rows(); ++i)
      if (M(i, c) != 0) { p = i; break; }
    if (p < 0) continue;
    M.row(p).swap(M.row(rank));
    for (Eigen::Index i = rank + 1; i < M.rows(); ++i) {
      if (M(i, c) == 0) continue;
      const Rational f = M(i, c) / M(rank, c);
      M.row(i) -= f * M.row(rank);
    }
    ++rank;
  }
  return rank;
}

/// Calls `visit(point)` for a particular solution of every subset of `rows`
/// (size <= cols) made tight. Every minimal face of a nonempty polyhedron
/// contains one of these points.
inline void for_each_candidate_point(const RMatrix& A, const RVector& b, const std::vector<Eigen::Index>& rows,
                                     const std::function<void(const RVector&)>& visit) {
  const auto n = A.cols();
  std::vector<Eigen::Index> tight;
  std::function<void(std::size_t)> extend = [&](std::size_t from) {
    RMatrix M(static_cast<Eigen::Index>(tight.size()), n);
    RVector r(static_cast<Eigen::Index>(tight.size()));
    for (std::size_t k = 0; k < tight.size(); ++k) {
      M.row(static_cast<Eigen::Index>(k)) = A.row(tight[k]);
      r(static_cast<Eigen::Index>(k)) = b(tight[k]);
    }
    if (auto x = solve_equalities(M, r)) visit(*x);
    if (static_cast<Eigen::Index>(tight.size()) == n) return;
    for (std::size_t i = from; i < rows.size(); ++i) {
      tight.push_back(rows[i]);
      extend(i + 1);
      tight.pop_back();
    }
  };
  extend(0);
}

inline bool point_satisfies(const RMatrix& A, const RVector& b, const std::vector<Eigen::Index>& rows,
                            const RVector& x) {
  for (auto r : rows)
    if (A.row(r).dot(x) > b(r)) return false;
  return true;
}

inline bool brute_force_feasible(const RMatrix& A, const RVector& b, const std::vector<Eigen::Index>& rows) {
  bool found = false;
  for_each_candidate_point(A, b, rows, [&](const RVector& x) {
    if (!found && point_satisfies(A, b, rows, x)) found = true;
  });
  return found;
}

/// min c^T x over the rows, assuming the minimum is attained (bounded and
/// nonempty). nullopt when the rows are infeasible.
inline std::optional<Rational> brute_force_minimum(const RMatrix& A, const RVector& b, const RVector& c,
                                                   const std::vector<Eigen::Index>& rows) {
  std::optional<Rational> best;
  for_each_candidate_point(A, b, rows, [&](const RVector& x) {
    if (!point_satisfies(A, b, rows, x)) return;
    Rational v = c.dot(x);
    if (!best || v < *best) best = v;
  });
  return best;
}

/// Unbounded below: feasible, and some d has A d <= 0 on the rows with c^T d <= -1.
inline bool brute_force_unbounded(const RMatrix& A, const RVector& b, const RVector& c,
                                  const std::vector<Eigen::Index>& rows) {
  if (!brute_force_feasible(A, b, rows)) return false;
  RMatrix D(static_cast<Eigen::Index>(rows.size()) + 1, A.cols());
  RVector z = RVector::Zero(D.rows());
  std::vector<Eigen::Index> all;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    D.row(static_cast<Eigen::Index>(k)) = A.row(rows[k]);
    all.push_back(static_cast<Eigen::Index>(k));
  }
  D.row(D.rows() - 1) = c.transpose();
  z(D.rows() - 1) = -1;
  all.push_back(D.rows() - 1);
  return brute_force_feasible(D, z, all);
}

struct IntegerEnumeration {
  bool feasible = false;
  /// False when some integer column was unbounded and only a window was searched.
  bool exact = true;
  std::optional<Rational> minimum;
  std::optional<RVector> point;
};

/// Exhaustive integer enumeration: every integer column ranges over the
/// integers of its relaxation interval (or [-window, window] if unbounded),
/// and each assignment is followed by a brute-force LP on the continuous part.
/// With a cost, the relaxation is assumed bounded below.
inline IntegerEnumeration enumerate_integers(const RMatrix& A, const RVector& b, const std::vector<bool>& integer,
                                             const std::vector<Eigen::Index>& rows,
                                             const std::optional<RVector>& cost = std::nullopt, int window = 12) {
  IntegerEnumeration out;
  if (!brute_force_feasible(A, b, rows)) return out;
  const Eigen::Index n = A.cols();
  std::vector<Eigen::Index> ints, conts;
  for (Eigen::Index j = 0; j < n; ++j) (integer[static_cast<std::size_t>(j)] ? ints : conts).push_back(j);

  std::vector<std::pair<long, long>> range;
  for (auto j : ints) {
    // Rows touching only column j bound it directly; the relaxation interval lies inside.
    std::optional<Rational> lo_bound, hi_bound;
    for (auto r : rows) {
      bool single = A(r, j) != 0;
      for (Eigen::Index k = 0; k < n && single; ++k)
        if (k != j && A(r, k) != 0) single = false;
      if (!single) continue;
      const Rational v = b(r) / A(r, j);
      if (A(r, j) > 0 && (!hi_bound || v < *hi_bound)) hi_bound = v;
      if (A(r, j) < 0 && (!lo_bound || v > *lo_bound)) lo_bound = v;
    }
    long lo = -window, hi = window;
    if (lo_bound) lo = static_cast<long>(ceil(*lo_bound));
    if (hi_bound) hi = static_cast<long>(floor(*hi_bound));
    for (int sign : {1, -1}) {
      if ((sign == 1 && lo_bound) || (sign == -1 && hi_bound)) continue;
      RVector c = RVector::Zero(n);
      c(j) = sign;
      if (brute_force_unbounded(A, b, c, rows)) {
        out.exact = false;
        continue;
      }
      const Rational v = *brute_force_minimum(A, b, c, rows);
      if (sign == 1) lo = static_cast<long>(ceil(v));
      else hi = static_cast<long>(floor(Rational(-v)));
    }
    range.push_back({lo, hi});
  }

  RMatrix Ac(A.rows(), static_cast<Eigen::Index>(conts.size()));
  for (std::size_t k = 0; k < conts.size(); ++k) Ac.col(static_cast<Eigen::Index>(k)) = A.col(conts[k]);
  RVector cc(static_cast<Eigen::Index>(conts.size()));
  if (cost)
    for (std::size_t k = 0; k < conts.size(); ++k) cc(static_cast<Eigen::Index>(k)) = (*cost)(conts[k]);

  std::vector<long> value(ints.size());
  std::function<void(std::size_t)> recurse = [&](std::size_t depth) {
    if (depth == ints.size()) {
      RVector fixed = RVector::Zero(n);
      for (std::size_t k = 0; k < ints.size(); ++k) fixed(ints[k]) = Rational(value[k]);
      const RVector rest = b - A * fixed;
      std::optional<RVector> point;
      Rational objective = 0;
      for_each_candidate_point(Ac, rest, rows, [&](const RVector& y) {
        if (!point_satisfies(Ac, rest, rows, y)) return;
        const Rational v = cost ? Rational(cc.dot(y)) : Rational(0);
        if (point && v >= objective) return;
        RVector x = fixed;
        for (std::size_t k = 0; k < conts.size(); ++k) x(conts[k]) = y(static_cast<Eigen::Index>(k));
        point = x;
        objective = v;
      });
      if (!point) return;
      out.feasible = true;
      const Rational total = cost ? Rational(cost->dot(*point)) : Rational(0);
      if (!out.minimum || total < *out.minimum) {
        out.minimum = total;
        out.point = point;
      }
      return;
    }
    for (long v = range[depth].first; v <= range[depth].second; ++v) {
      value[depth] = v;
      recurse(depth + 1);
    }
  };
  recurse(0);
  return out;
}

}  // namespace iiswb::testing
