#pragma once

// Elastic repair: relax right-hand sides fed by chosen parameters and minimize
// the weighted total relaxation.
//
// Tied mode (default) gives every target parameter one signed delta, applied
// at each of its right-hand-side occurrences with that occurrence's factor:
//   A_r x <= b_r + k (d+ - d-),  minimize sum w_p (d+ + d-).
// Entry mode gives every affected row its own one-sided slack:
//   A_r x <= b_r + s_r,  s_r >= 0,  minimize sum w_p(r) s_r.
// Entry plans are reported only; apply_repair refuses them.

#include "iiswb/branch_bound.hpp"
#include "iiswb/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace iiswb {

enum class RepairMode { Entry, Tied };
enum class RepairStatus { Repaired, AlreadyFeasible, Rejected };

std::string to_string(RepairMode mode);
std::string to_string(RepairStatus status);

struct RepairSpec {
  std::vector<std::string> targets;
  RepairMode mode = RepairMode::Tied;
  /// Positive; missing targets weigh 1.
  std::map<std::string, Rational> weights;
};

/// A provenance entry naming a target parameter. `col` is set for matrix
/// entries; `factor` is the multiplier k in k*param after normalization.
struct SupportEntry {
  Eigen::Index row = 0;
  std::optional<Eigen::Index> col;
  std::string param;
  Rational factor;

  bool operator==(const SupportEntry&) const = default;
};

struct SupportSets {
  std::vector<SupportEntry> matrix;  // S_A
  std::vector<SupportEntry> rhs;     // S_b
};

/// Throws UnknownParam.
SupportSets derive_support(const Model& model, const RepairSpec& spec);

struct RepairPlan {
  RepairStatus status = RepairStatus::Repaired;
  RepairMode mode = RepairMode::Tied;
  Rational total;
  /// Entry mode: normalized row index -> slack (only nonzero slacks).
  std::map<Eigen::Index, Rational> entry_slacks;
  /// Tied mode: parameter -> signed change (only nonzero changes).
  std::map<std::string, Rational> param_deltas;
  /// Variable values satisfying the relaxed system.
  std::map<std::string, Rational> repaired_point;
};

/// Throws UnknownParam, InvalidModel (bad weight), NonlinearRepairUnsupported
/// (a target multiplies a variable), Unrepairable, NodeBudgetExceeded.
RepairPlan solve_repair(const Model& model, const RepairSpec& spec, const MilpOptions& options = {});

/// Tied plans only: parameter values move by their deltas. Throws NotApplicable.
Model apply_repair(const Model& model, const RepairPlan& plan);

struct Recommendation {
  std::string param;
  Rational old_value;
  Rational new_value;
  /// "increase" or "decrease".
  std::string direction;
  /// Entry mode: the constraint or bound the slack sits on.
  std::string member;

  /// "decrease dmin from 1 to 0"
  std::string phrase() const;
};

/// One recommendation per nonzero delta (tied) or nonzero row slack (entry,
/// mapped back as slack / k through the row's right-hand-side coefficient).
std::vector<Recommendation> explain_deltas(const Model& model, const RepairPlan& plan);

}  // namespace iiswb
