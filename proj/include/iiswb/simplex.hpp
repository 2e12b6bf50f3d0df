#pragma once

// Dense two-phase primal simplex over an exact field (Rational in practice).
//
// Works on A x <= b with free x. Every free variable is split into x+ - x-,
// every row gets a slack, and rows with negative right-hand side get an
// artificial. Bland's rule (lowest eligible index enters, lowest basic index
// breaks ratio ties) makes every result deterministic.
//
// Infeasible systems come back with a Farkas certificate y >= 0, y^T A = 0,
// y^T b = -1, read off the phase-1 reduced costs of the slack columns.

#include "iiswb/budget.hpp"
#include "iiswb/model.hpp"
#include "iiswb/rational.hpp"

#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace iiswb {

using RowSet = std::vector<Eigen::Index>;

/// 0..rows-1
RowSet all_rows(Eigen::Index rows);

template <typename Scalar>
struct FarkasCertificate {
  /// Nonzero multipliers keyed by row index of the full system.
  std::map<Eigen::Index, Scalar> y;

  RowSet support() const {
    RowSet rows;
    for (const auto& [row, value] : y) rows.push_back(row);
    return rows;
  }
};

namespace lp {

template <typename Scalar>
struct Optimal {
  VectorX<Scalar> point;
  Scalar value;
};

template <typename Scalar>
struct Feasible {
  VectorX<Scalar> point;
};

template <typename Scalar>
struct Infeasible {
  FarkasCertificate<Scalar> certificate;
};

template <typename Scalar>
struct Unbounded {
  VectorX<Scalar> ray;
};

}  // namespace lp

template <typename Scalar>
using LpOutcome = std::variant<lp::Optimal<Scalar>, lp::Feasible<Scalar>, lp::Infeasible<Scalar>,
                               lp::Unbounded<Scalar>>;
template <typename Scalar>
using FeasibilityOutcome = std::variant<lp::Feasible<Scalar>, lp::Infeasible<Scalar>>;

namespace detail {

template <typename Scalar>
class SimplexTableau {
 public:
  SimplexTableau(const MatrixX<Scalar>& A, const VectorX<Scalar>& b, std::span<const Eigen::Index> active)
      : rows_(active.begin(), active.end()),
        m_(static_cast<Eigen::Index>(active.size())),
        n_(A.cols()) {
    Eigen::Index artificials = 0;
    for (auto r : rows_)
      if (b(r) < 0) ++artificials;
    first_artificial_ = 2 * n_ + m_;
    cols_ = first_artificial_ + artificials;
    T_ = MatrixX<Scalar>::Zero(m_, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));

    Eigen::Index next_artificial = first_artificial_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index r = rows_[static_cast<std::size_t>(i)];
      const bool flip = b(r) < 0;
      const Scalar sign = flip ? Scalar(-1) : Scalar(1);
      T_.row(i).segment(0, n_) = sign * A.row(r);
      T_.row(i).segment(n_, n_) = -sign * A.row(r);
      T_(i, 2 * n_ + i) = sign;
      T_(i, cols_) = sign * b(r);
      if (flip) {
        T_(i, next_artificial) = 1;
        basis_[static_cast<std::size_t>(i)] = next_artificial++;
      } else {
        basis_[static_cast<std::size_t>(i)] = 2 * n_ + i;
      }
    }
  }

  /// Phase 1. Returns true when the active rows are feasible.
  bool phase_one() {
    VectorX<Scalar> cost = VectorX<Scalar>::Zero(cols_);
    for (Eigen::Index j = first_artificial_; j < cols_; ++j) cost(j) = 1;
    price(cost);
    iterate(cols_);
    return reduced_(cols_) == 0;
  }

  /// Phase-1 objective value is -reduced_(cols_); certificate per slack column.
  FarkasCertificate<Scalar> certificate() const {
    const Scalar infeasibility = -reduced_(cols_);
    FarkasCertificate<Scalar> cert;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Scalar w = reduced_(2 * n_ + i);
      if (w != 0) cert.y.emplace(rows_[static_cast<std::size_t>(i)], w / infeasibility);
    }
    return cert;
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_artificial_) continue;
      for (Eigen::Index j = 0; j < first_artificial_; ++j) {
        if (T_(i, j) != 0) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  /// Phase 2 on min cost^T x. Returns false when unbounded (ray_ is set).
  bool phase_two(const VectorX<Scalar>& cost) {
    VectorX<Scalar> full = VectorX<Scalar>::Zero(cols_);
    full.segment(0, n_) = cost;
    full.segment(n_, n_) = -cost;
    price(full);
    return iterate(first_artificial_);
  }

  VectorX<Scalar> point() const {
    VectorX<Scalar> x = VectorX<Scalar>::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) x(j) += T_(i, cols_);
      else if (j < 2 * n_) x(j - n_) -= T_(i, cols_);
    }
    return x;
  }

  Scalar objective_value() const { return -reduced_(cols_); }
  const VectorX<Scalar>& ray() const { return ray_; }

 private:
  void price(const VectorX<Scalar>& cost) {
    reduced_ = VectorX<Scalar>::Zero(cols_ + 1);
    reduced_.head(cols_) = cost;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Scalar cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0) reduced_ -= cb * T_.row(i).transpose();
    }
  }

  // Bland's rule over columns [0, eligible). Returns false on unboundedness.
  bool iterate(Eigen::Index eligible) {
    while (true) {
      poll_deadline();
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < eligible; ++j) {
        if (reduced_(j) < 0) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      Scalar best_ratio;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (T_(i, enter) <= 0) continue;
        Scalar ratio = T_(i, cols_) / T_(i, enter);
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) {
        record_ray(enter);
        return false;
      }
      pivot(leave, enter);
    }
  }

  void record_ray(Eigen::Index enter) {
    VectorX<Scalar> direction = VectorX<Scalar>::Zero(cols_);
    direction(enter) = 1;
    for (Eigen::Index i = 0; i < m_; ++i) direction(basis_[static_cast<std::size_t>(i)]) -= T_(i, enter);
    ray_ = direction.segment(0, n_) - direction.segment(n_, n_);
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    const Scalar pivot_value = T_(row, col);
    T_.row(row) /= pivot_value;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const Scalar f = T_(i, col);
      if (f != 0) T_.row(i) -= f * T_.row(row);
    }
    const Scalar f = reduced_(col);
    if (f != 0) reduced_ -= f * T_.row(row).transpose();
    basis_[static_cast<std::size_t>(row)] = col;
  }

  RowSet rows_;
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index first_artificial_ = 0;
  Eigen::Index cols_ = 0;
  MatrixX<Scalar> T_;
  VectorX<Scalar> reduced_;
  std::vector<Eigen::Index> basis_;
  VectorX<Scalar> ray_;
};

}  // namespace detail

/// Feasibility of the rows in `active` (LP semantics: integrality ignored).
template <typename Scalar>
FeasibilityOutcome<Scalar> check_feasible(const MatrixX<Scalar>& A, const VectorX<Scalar>& b,
                                          std::span<const Eigen::Index> active) {
  detail::SimplexTableau<Scalar> tableau(A, b, active);
  if (!tableau.phase_one()) return lp::Infeasible<Scalar>{tableau.certificate()};
  return lp::Feasible<Scalar>{tableau.point()};
}

/// min cost^T x subject to the rows in `active`.
template <typename Scalar>
LpOutcome<Scalar> solve_lp(const MatrixX<Scalar>& A, const VectorX<Scalar>& b, const VectorX<Scalar>& cost,
                           std::span<const Eigen::Index> active) {
  detail::SimplexTableau<Scalar> tableau(A, b, active);
  if (!tableau.phase_one()) return lp::Infeasible<Scalar>{tableau.certificate()};
  tableau.drive_out_artificials();
  if (!tableau.phase_two(cost)) return lp::Unbounded<Scalar>{tableau.ray()};
  return lp::Optimal<Scalar>{tableau.point(), tableau.objective_value()};
}

/// y >= 0, y^T A = 0 over the listed rows, y^T b <= -1.
template <typename Scalar>
bool verify_certificate(const MatrixX<Scalar>& A, const VectorX<Scalar>& b, const FarkasCertificate<Scalar>& cert) {
  if (cert.y.empty()) return false;
  VectorX<Scalar> combo = VectorX<Scalar>::Zero(A.cols());
  Scalar rhs = 0;
  for (const auto& [row, value] : cert.y) {
    if (value < 0 || row < 0 || row >= A.rows()) return false;
    combo += value * A.row(row).transpose();
    rhs += value * b(row);
  }
  for (Eigen::Index j = 0; j < combo.size(); ++j)
    if (combo(j) != 0) return false;
  return rhs <= -1;
}

/// Every listed row holds exactly at `point`.
template <typename Scalar>
bool satisfies(const MatrixX<Scalar>& A, const VectorX<Scalar>& b, const VectorX<Scalar>& point,
               std::span<const Eigen::Index> rows) {
  for (auto r : rows)
    if (A.row(r).dot(point) > b(r)) return false;
  return true;
}

// NormalizedSystem conveniences.

FeasibilityOutcome<Rational> check_feasible(const NormalizedSystem& system, std::span<const Eigen::Index> active);
FeasibilityOutcome<Rational> check_feasible(const NormalizedSystem& system);
/// Uses system.cost (zero objective when the model has none).
LpOutcome<Rational> solve_lp(const NormalizedSystem& system, const RVector& cost);
LpOutcome<Rational> solve_lp(const NormalizedSystem& system);

template <typename Scalar>
bool is_infeasible(const FeasibilityOutcome<Scalar>& outcome) {
  return std::holds_alternative<lp::Infeasible<Scalar>>(outcome);
}

}  // namespace iiswb
