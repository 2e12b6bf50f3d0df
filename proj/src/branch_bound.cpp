#include "iiswb/branch_bound.hpp"

#include "iiswb/error.hpp"

#include <queue>
#include <string>

namespace iiswb {

namespace {

using Eigen::Index;

struct BoundRow {
  Index var;
  bool upper;  // x_var <= value, else x_var >= value
  Rational value;
};

struct Node {
  std::vector<BoundRow> bounds;
  std::optional<Rational> parent_bound;  // unset means -inf
  std::size_t id;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // priority_queue pops the "largest"; we want the smallest bound, then the oldest id.
    if (a.parent_bound != b.parent_bound) {
      if (!a.parent_bound) return false;
      if (!b.parent_bound) return true;
      return *a.parent_bound > *b.parent_bound;
    }
    return a.id > b.id;
  }
};

struct Incumbent {
  RVector point;
  Rational value;
};

class Search {
 public:
  Search(const NormalizedSystem& sys, std::span<const Index> active, const RVector* cost, const MilpOptions& options)
      : sys_(sys), active_(active.begin(), active.end()), cost_(cost), options_(options) {}

  // Relaxation of the active rows plus `extra`, no integrality.
  LpOutcome<Rational> relax(const std::vector<BoundRow>& extra, const RVector* cost) {
    const Index n = sys_.num_vars();
    const auto m = static_cast<Index>(active_.size() + extra.size());
    RMatrix A = RMatrix::Zero(m, n);
    RVector b(m);
    Index r = 0;
    for (Index row : active_) {
      A.row(r) = sys_.A.row(row);
      b(r++) = sys_.b(row);
    }
    for (const auto& e : extra) {
      A(r, e.var) = e.upper ? 1 : -1;
      b(r++) = e.upper ? e.value : Rational(-e.value);
    }
    const RowSet rows = all_rows(m);
    if (cost) return solve_lp<Rational>(A, b, *cost, rows);
    auto feas = check_feasible<Rational>(A, b, rows);
    if (auto* f = std::get_if<lp::Feasible<Rational>>(&feas)) return lp::Optimal<Rational>{f->point, Rational(0)};
    return std::get<lp::Infeasible<Rational>>(feas);
  }

  std::optional<Index> first_fractional(const RVector& x) const {
    for (Index j = 0; j < x.size(); ++j)
      if (sys_.integer_mask[static_cast<std::size_t>(j)] && !is_integral(x(j))) return j;
    return std::nullopt;
  }

  // Branch-and-bound with the given box rows. The relaxation must be bounded
  // under the objective. Returns the best integral point, or nullopt.
  std::optional<Incumbent> run(const std::vector<BoundRow>& box, const RVector* cost) {
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::size_t next_id = 0;
    open.push(Node{box, std::nullopt, next_id++});
    std::optional<Incumbent> best;
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      if (best && node.parent_bound && *node.parent_bound >= best->value) continue;
      if (++nodes_ > options_.node_limit)
        throw Error(ErrorCode::NodeBudgetExceeded,
                    "branch-and-bound node limit of " + std::to_string(options_.node_limit) + " reached");
      auto out = relax(node.bounds, cost);
      if (std::holds_alternative<lp::Infeasible<Rational>>(out)) continue;
      if (std::holds_alternative<lp::Unbounded<Rational>>(out))
        throw Error(ErrorCode::NodeBudgetExceeded, "unbounded relaxation inside a bounded search");
      auto& opt = std::get<lp::Optimal<Rational>>(out);
      if (best && opt.value >= best->value) continue;
      auto j = first_fractional(opt.point);
      if (!j) {
        best = Incumbent{opt.point, opt.value};
        if (!cost) break;
        continue;
      }
      const Rational v = opt.point(*j);
      Node down{node.bounds, opt.value, next_id++};
      down.bounds.push_back({*j, true, floor(v)});
      Node up{node.bounds, opt.value, next_id++};
      up.bounds.push_back({*j, false, ceil(v)});
      open.push(std::move(down));
      open.push(std::move(up));
    }
    return best;
  }

  static std::vector<BoundRow> box_rows(const std::vector<Index>& vars, const Rational& h) {
    std::vector<BoundRow> rows;
    for (Index j : vars) {
      rows.push_back({j, false, Rational(-h)});
      rows.push_back({j, true, h});
    }
    return rows;
  }

  std::vector<Rational> radii() const {
    std::vector<Rational> out;
    for (Rational h = 10; h < options_.horizon; h *= 10) out.push_back(h);
    out.push_back(options_.horizon);
    return out;
  }

  [[noreturn]] void horizon_exceeded() const {
    throw Error(ErrorCode::NodeBudgetExceeded,
                "no conclusion within the integer horizon of +-" + to_string(options_.horizon));
  }

  // Integer columns that the relaxation leaves unbounded in some direction.
  std::vector<Index> unbounded_integers() {
    std::vector<Index> out;
    const Index n = sys_.num_vars();
    for (Index j = 0; j < n; ++j) {
      if (!sys_.integer_mask[static_cast<std::size_t>(j)]) continue;
      for (int sign : {1, -1}) {
        RVector c = RVector::Zero(n);
        c(j) = sign;
        if (std::holds_alternative<lp::Unbounded<Rational>>(relax({}, &c))) {
          out.push_back(j);
          break;
        }
      }
    }
    return out;
  }

  std::optional<RVector> find_integral_point(const std::vector<Index>& loose) {
    if (loose.empty()) {
      auto found = run({}, nullptr);
      if (!found) return std::nullopt;
      return found->point;
    }
    for (const Rational& h : radii())
      if (auto found = run(box_rows(loose, h), nullptr)) return found->point;
    horizon_exceeded();
  }

  MilpFeasibility feasibility() {
    auto root = relax({}, nullptr);
    if (std::holds_alternative<lp::Infeasible<Rational>>(root)) return milp::Infeasible{};
    if (auto x = find_integral_point(unbounded_integers())) return milp::Feasible{*x};
    return milp::Infeasible{};
  }

  MilpOutcome optimize() {
    auto root = relax({}, cost_);
    if (std::holds_alternative<lp::Infeasible<Rational>>(root)) return milp::Infeasible{};
    const auto loose = unbounded_integers();
    if (std::holds_alternative<lp::Unbounded<Rational>>(root)) {
      // Rational data: an unbounded relaxation with any integral point is an unbounded MILP.
      if (find_integral_point(loose)) return milp::Unbounded{};
      return milp::Infeasible{};
    }
    if (loose.empty()) {
      auto best = run({}, cost_);
      if (!best) return milp::Infeasible{};
      return milp::Optimal{best->point, best->value};
    }
    // Widen until the box optimum repeats with no loose variable on the box face.
    std::optional<Incumbent> previous;
    for (const Rational& h : radii()) {
      auto best = run(box_rows(loose, h), cost_);
      if (!best) continue;
      bool interior = true;
      for (Index j : loose)
        if (abs(best->point(j)) == h) interior = false;
      if (previous && interior && previous->value == best->value) return milp::Optimal{best->point, best->value};
      previous = std::move(best);
    }
    horizon_exceeded();
  }

 private:
  const NormalizedSystem& sys_;
  RowSet active_;
  const RVector* cost_;
  MilpOptions options_;
  std::size_t nodes_ = 0;
};

}  // namespace

MilpFeasibility check_feasible_milp(const NormalizedSystem& system, std::span<const Eigen::Index> active,
                                    const MilpOptions& options) {
  return Search(system, active, nullptr, options).feasibility();
}

MilpOutcome solve_milp(const NormalizedSystem& system, const RVector& cost, std::span<const Eigen::Index> active,
                       const MilpOptions& options) {
  if (cost.size() != system.num_vars()) throw Error(ErrorCode::InvalidModel, "objective length mismatch");
  return Search(system, active, &cost, options).optimize();
}

MilpOutcome solve_milp(const NormalizedSystem& system, const MilpOptions& options) {
  const RVector cost = system.cost ? *system.cost : RVector(RVector::Zero(system.num_vars()));
  const RowSet rows = all_rows(system.num_rows());
  return solve_milp(system, cost, rows, options);
}

}  // namespace iiswb
