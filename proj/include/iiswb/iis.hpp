#pragma once

// Irreducible infeasible subsets of a normalized system. Rows are tested in
// index order (declaration order, bounds last), and bound rows take part like
// any constraint row.

#include "iiswb/branch_bound.hpp"
#include "iiswb/model.hpp"
#include "iiswb/simplex.hpp"

#include <string>
#include <vector>

namespace iiswb {

enum class IisMethod { Deletion, Additive, Enumeration, Oracle };
enum class OracleKind { Lp, Milp };

std::string to_string(IisMethod method);
std::string to_string(OracleKind oracle);

struct IisResult {
  /// Constraint names and bound ids ("x.lb"), first-occurrence order, each once.
  std::vector<std::string> members;
  /// Sorted row indices into the normalized system.
  RowSet rows;
  IisMethod method = IisMethod::Deletion;
  std::size_t solver_calls = 0;

  bool operator==(const IisResult&) const = default;
};

/// Milp when any column is integer-masked.
OracleKind default_oracle(const NormalizedSystem& system);

/// One feasibility verdict under the chosen oracle.
bool feasible_under(const NormalizedSystem& system, std::span<const Eigen::Index> rows, OracleKind oracle,
                    const MilpOptions& options = {});

std::vector<std::string> member_ids(const NormalizedSystem& system, const RowSet& rows);

/// Single pass. solver_calls counts the per-row tests only (one per row); the
/// up-front infeasibility check is not included. Throws NotInfeasible.
IisResult deletion_filter(const NormalizedSystem& system, OracleKind oracle = OracleKind::Lp,
                          const MilpOptions& options = {});

/// Throws NotInfeasible.
IisResult additive_method(const NormalizedSystem& system, OracleKind oracle = OracleKind::Lp,
                          const MilpOptions& options = {});

/// Supports of the vertices of {y >= 0 : y^T A = 0, y^T b <= -1}, sorted by
/// rows. Empty for feasible systems. Throws IntegerVariablesPresent, and
/// EnumerationBudgetExceeded once more than `candidate_limit` row subsets
/// would be examined.
std::vector<IisResult> enumerate_iis_lp(const NormalizedSystem& system, std::size_t candidate_limit = 2'000'000);

/// Every minimal infeasible row subset, by size then lexicographically.
/// Throws TooLarge above 20 rows.
std::vector<RowSet> oracle_iis_all(const NormalizedSystem& system, OracleKind oracle = OracleKind::Lp,
                                   const MilpOptions& options = {});

constexpr Eigen::Index kOracleRowCap = 20;

}  // namespace iiswb
