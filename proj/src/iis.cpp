#include "iiswb/iis.hpp"

#include "iiswb/budget.hpp"
#include "iiswb/error.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>

namespace iiswb {

namespace {

using Eigen::Index;

RowSet kept_rows(const std::vector<bool>& keep) {
  RowSet rows;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) rows.push_back(static_cast<Index>(i));
  return rows;
}

void require_infeasible(const NormalizedSystem& system, OracleKind oracle, const MilpOptions& options) {
  const RowSet all = all_rows(system.num_rows());
  if (feasible_under(system, all, oracle, options))
    throw Error(ErrorCode::NotInfeasible, "the system is feasible; there is no infeasible subset to isolate");
}

IisResult make_result(const NormalizedSystem& system, RowSet rows, IisMethod method, std::size_t calls) {
  std::sort(rows.begin(), rows.end());
  IisResult result;
  result.members = member_ids(system, rows);
  result.rows = std::move(rows);
  result.method = method;
  result.solver_calls = calls;
  return result;
}

// Unique solution of M y = r, or nullopt when M lacks full column rank or the
// system is inconsistent.
std::optional<RVector> solve_unique(RMatrix M, RVector r) {
  const Index rows = M.rows(), cols = M.cols();
  Index rank = 0;
  for (Index c = 0; c < cols; ++c) {
    Index p = -1;
    for (Index i = rank; i < rows; ++i)
      if (M(i, c) != 0) {
        p = i;
        break;
      }
    if (p < 0) return std::nullopt;
    M.row(p).swap(M.row(rank));
    std::swap(r(p), r(rank));
    const Rational inv = Rational(1) / M(rank, c);
    M.row(rank) *= inv;
    r(rank) *= inv;
    for (Index i = 0; i < rows; ++i) {
      if (i == rank || M(i, c) == 0) continue;
      const Rational f = M(i, c);
      M.row(i) -= f * M.row(rank);
      r(i) -= f * r(rank);
    }
    ++rank;
  }
  for (Index i = rank; i < rows; ++i)
    if (r(i) != 0) return std::nullopt;
  return RVector(r.head(cols));
}

}  // namespace

std::string to_string(IisMethod method) {
  switch (method) {
    case IisMethod::Deletion: return "deletion";
    case IisMethod::Additive: return "additive";
    case IisMethod::Enumeration: return "enumeration";
    case IisMethod::Oracle: return "oracle";
  }
  return "unknown";
}

std::string to_string(OracleKind oracle) { return oracle == OracleKind::Lp ? "lp" : "milp"; }

OracleKind default_oracle(const NormalizedSystem& system) {
  for (bool integer : system.integer_mask)
    if (integer) return OracleKind::Milp;
  return OracleKind::Lp;
}

bool feasible_under(const NormalizedSystem& system, std::span<const Eigen::Index> rows, OracleKind oracle,
                    const MilpOptions& options) {
  if (oracle == OracleKind::Milp)
    return std::holds_alternative<milp::Feasible>(check_feasible_milp(system, rows, options));
  return !is_infeasible(check_feasible(system, rows));
}

std::vector<std::string> member_ids(const NormalizedSystem& system, const RowSet& rows) {
  std::vector<std::string> ids;
  for (Index r : rows) {
    std::string id = system.rows[static_cast<std::size_t>(r)].member_id();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
  }
  return ids;
}

IisResult deletion_filter(const NormalizedSystem& system, OracleKind oracle, const MilpOptions& options) {
  require_infeasible(system, oracle, options);
  std::vector<bool> keep(static_cast<std::size_t>(system.num_rows()), true);
  std::size_t calls = 0;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    keep[r] = false;
    ++calls;
    if (feasible_under(system, kept_rows(keep), oracle, options)) keep[r] = true;
  }
  return make_result(system, kept_rows(keep), IisMethod::Deletion, calls);
}

IisResult additive_method(const NormalizedSystem& system, OracleKind oracle, const MilpOptions& options) {
  require_infeasible(system, oracle, options);
  const Index m = system.num_rows();
  std::vector<bool> in_t(static_cast<std::size_t>(m), false);
  std::size_t calls = 0;
  while (true) {
    std::vector<bool> sweep = in_t;
    std::optional<Index> culprit;
    for (Index r = 0; r < m && !culprit; ++r) {
      if (in_t[static_cast<std::size_t>(r)]) continue;
      sweep[static_cast<std::size_t>(r)] = true;
      ++calls;
      if (!feasible_under(system, kept_rows(sweep), oracle, options)) culprit = r;
    }
    if (!culprit) throw Error(ErrorCode::NotInfeasible, "additive sweep found no infeasible extension");
    in_t[static_cast<std::size_t>(*culprit)] = true;
    ++calls;
    if (!feasible_under(system, kept_rows(in_t), oracle, options)) break;
  }
  return make_result(system, kept_rows(in_t), IisMethod::Additive, calls);
}

std::vector<IisResult> enumerate_iis_lp(const NormalizedSystem& system, std::size_t candidate_limit) {
  if (default_oracle(system) == OracleKind::Milp)
    throw Error(ErrorCode::IntegerVariablesPresent,
                "IIS enumeration through the alternative polyhedron applies to pure LPs only");
  const Index m = system.num_rows();
  const Index n = system.num_vars();
  const Index max_size = std::min(m, n + 1);

  std::vector<IisResult> found;
  std::size_t examined = 0;
  RowSet subset;
  // y over `subset` solves A_S^T y = 0, b_S^T y = -1, uniquely and strictly positive.
  std::function<void(Index)> extend = [&](Index from) {
    if (!subset.empty()) {
      if (++examined > candidate_limit)
        throw Error(ErrorCode::EnumerationBudgetExceeded,
                    "vertex enumeration exceeded " + std::to_string(candidate_limit) + " candidate row subsets");
      poll_deadline();
      const auto k = static_cast<Index>(subset.size());
      RMatrix M(n + 1, k);
      RVector rhs = RVector::Zero(n + 1);
      for (Index c = 0; c < k; ++c) {
        const Index row = subset[static_cast<std::size_t>(c)];
        M.col(c).head(n) = system.A.row(row).transpose();
        M(n, c) = system.b(row);
      }
      rhs(n) = -1;
      if (auto y = solve_unique(M, rhs)) {
        bool positive = true;
        for (Index c = 0; c < k; ++c)
          if ((*y)(c) <= 0) positive = false;
        if (positive) found.push_back(make_result(system, subset, IisMethod::Enumeration, examined));
      }
    }
    if (static_cast<Index>(subset.size()) == max_size) return;
    for (Index r = from; r < m; ++r) {
      subset.push_back(r);
      extend(r + 1);
      subset.pop_back();
    }
  };
  extend(0);
  std::sort(found.begin(), found.end(), [](const IisResult& a, const IisResult& b) { return a.rows < b.rows; });
  for (auto& result : found) result.solver_calls = examined;
  return found;
}

std::vector<RowSet> oracle_iis_all(const NormalizedSystem& system, OracleKind oracle, const MilpOptions& options) {
  const Index m = system.num_rows();
  if (m > kOracleRowCap)
    throw Error(ErrorCode::TooLarge, "exhaustive IIS oracle is capped at " + std::to_string(kOracleRowCap) +
                                         " rows; this system has " + std::to_string(m));
  std::vector<std::uint32_t> minimal;
  for (Index size = 1; size <= m; ++size) {
    // Gosper's hack: every mask with `size` bits below 2^m.
    std::uint32_t mask = (std::uint32_t{1} << size) - 1;
    const std::uint32_t end = std::uint32_t{1} << m;
    while (mask < end) {
      const bool covers_known =
          std::any_of(minimal.begin(), minimal.end(), [&](std::uint32_t s) { return (mask & s) == s; });
      if (!covers_known) {
        poll_deadline();
        RowSet rows;
        for (Index r = 0; r < m; ++r)
          if (mask & (std::uint32_t{1} << r)) rows.push_back(r);
        // Every proper subset is feasible, or it would contain a smaller known set.
        if (!feasible_under(system, rows, oracle, options)) minimal.push_back(mask);
      }
      const std::uint32_t low = mask & -mask;
      const std::uint32_t ripple = mask + low;
      mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
  }
  std::vector<RowSet> out;
  for (std::uint32_t mask : minimal) {
    RowSet rows;
    for (Index r = 0; r < m; ++r)
      if (mask & (std::uint32_t{1} << r)) rows.push_back(r);
    out.push_back(std::move(rows));
  }
  std::sort(out.begin(), out.end(), [](const RowSet& a, const RowSet& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

}  // namespace iiswb
