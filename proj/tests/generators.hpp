#pragma once

// Seeded random instance generators shared by the unit and acceptance suites.

#include "iiswb/model.hpp"

#include <random>
#include <string>

namespace iiswb::testing {

class Generator {
 public:
  explicit Generator(std::uint32_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  /// Rational in [-limit, limit] with denominator at most `max_den`.
  Rational rational(int limit = 5, int max_den = 4) {
    const int den = uniform(1, max_den);
    return Rational(uniform(-limit * den, limit * den), den);
  }

  Rational small_int(int limit = 5) { return Rational(uniform(-limit, limit)); }

  /// Dense random system A x <= b: `rows` x `cols`, entries in [-5, 5].
  NormalizedSystem lp_system(int rows, int cols, double density = 0.7) {
    Model m;
    m.name = "random_lp";
    for (int j = 0; j < cols; ++j) m.vars.push_back({"x" + std::to_string(j), VarKind::Continuous, {}, {}, {}});
    for (int i = 0; i < rows; ++i) {
      Constraint c;
      c.name = "r" + std::to_string(i);
      for (int j = 0; j < cols; ++j) {
        if (!coin(density)) continue;
        Rational v = rational();
        if (v != 0) c.terms.push_back({"x" + std::to_string(j), Literal{v}});
      }
      c.sense = Sense::Le;
      c.rhs = Literal{rational()};
      m.constraints.push_back(std::move(c));
    }
    return normalize(m);
  }

  /// Random rows drawn until `accept` says yes (typically an infeasibility oracle).
  template <typename Accept>
  NormalizedSystem lp_system_where(int max_rows, int max_cols, Accept&& accept) {
    while (true) {
      auto sys = lp_system(uniform(2, max_rows), uniform(1, max_cols));
      if (accept(sys)) return sys;
    }
  }

  /// Random mixed system: `ints` integer columns with bounds of range <= 4,
  /// then `conts` continuous columns boxed in [-5, 5], then `rows` <= rows.
  Model milp_model(int rows, int ints, int conts, double density = 0.7) {
    Model m;
    m.name = "random_milp";
    for (int j = 0; j < ints; ++j) {
      const int lo = uniform(-2, 2);
      m.vars.push_back({"n" + std::to_string(j), VarKind::Integer, Rational(lo), Rational(lo + uniform(0, 4)), {}});
    }
    for (int j = 0; j < conts; ++j) m.vars.push_back({"y" + std::to_string(j), VarKind::Continuous, -5, 5, {}});
    for (int i = 0; i < rows; ++i) {
      Constraint c;
      c.name = "r" + std::to_string(i);
      for (const auto& v : m.vars) {
        if (!coin(density)) continue;
        Rational coef = rational(4, 3);
        if (coef != 0) c.terms.push_back({v.name, Literal{coef}});
      }
      c.sense = Sense::Le;
      c.rhs = Literal{rational(6, 4)};
      m.constraints.push_back(std::move(c));
    }
    return m;
  }

  /// Parameters p0..p{k-1} (all mutable) feeding right-hand sides of a small
  /// continuous model; with `lhs_param` one of them also multiplies a variable.
  Model repair_model(bool lhs_param = false) {
    Model m;
    m.name = "random_repair";
    const int num_params = uniform(1, 3);
    const int num_vars = uniform(1, 3);
    for (int i = 0; i < num_params; ++i) m.params.push_back({"p" + std::to_string(i), small_int(4), true, ""});
    int bound_rows = 0;
    for (int j = 0; j < num_vars; ++j) {
      VarDef v{"x" + std::to_string(j), VarKind::Continuous, {}, {}, {}};
      if (coin(0.4)) {
        v.lower = small_int(2);
        ++bound_rows;
      }
      m.vars.push_back(std::move(v));
    }
    const int num_cons = uniform(2, std::max(2, 8 - bound_rows) / 2 + 1);
    int rows = bound_rows;
    for (int i = 0; i < num_cons && rows < 8; ++i) {
      Constraint c;
      c.name = "c" + std::to_string(i);
      for (const auto& v : m.vars) {
        if (!coin(0.7)) continue;
        const Rational coef = rational(3, 2);
        if (coef != 0) c.terms.push_back({v.name, Literal{coef}});
      }
      const int s = uniform(0, 4);
      c.sense = s <= 1 ? Sense::Le : s <= 3 ? Sense::Ge : Sense::Eq;
      if (c.sense == Sense::Eq && rows + 2 > 8) c.sense = Sense::Le;
      const std::string p = "p" + std::to_string(uniform(0, num_params - 1));
      const int form = uniform(0, 2);
      if (form == 0) c.rhs = ParamRef{p};
      else if (form == 1) c.rhs = ScaledParam{Rational(uniform(1, 3) * (coin() ? 1 : -1), uniform(1, 2)), p};
      else c.rhs = Literal{small_int(4)};
      rows += c.sense == Sense::Eq ? 2 : 1;
      m.constraints.push_back(std::move(c));
    }
    if (lhs_param) {
      Constraint c;
      c.name = "lhs";
      c.terms.push_back({m.vars[0].name, ParamRef{"p0"}});
      c.sense = Sense::Le;
      c.rhs = Literal{3};
      m.constraints.push_back(std::move(c));
    }
    return m;
  }

  /// A fully random model over the whole grammar (params, bounds, senses,
  /// every coefficient form, optional objective).
  Model model() {
    Model m;
    m.name = "gen" + std::to_string(uniform(0, 999));
    const int num_params = uniform(0, 3);
    const int num_vars = uniform(1, 4);
    const int num_cons = uniform(0, 5);
    for (int i = 0; i < num_params; ++i)
      m.params.push_back({"p" + std::to_string(i), rational(9, 7), coin(), coin() ? "param " + std::to_string(i) : ""});
    for (int j = 0; j < num_vars; ++j) {
      VarDef v{"v" + std::to_string(j), coin(0.3) ? VarKind::Integer : VarKind::Continuous, {}, {}, {}};
      if (coin(0.6)) v.lower = rational();
      if (coin(0.4)) v.upper = v.lower ? Rational(*v.lower + abs(rational())) : rational();
      if (coin(0.3)) v.description = "decision \"" + std::to_string(j) + "\"";
      m.vars.push_back(std::move(v));
    }
    auto coefficient = [&](bool allow_param) -> Coefficient {
      if (!allow_param || num_params == 0 || coin(0.6)) return Literal{rational()};
      const std::string p = "p" + std::to_string(uniform(0, num_params - 1));
      if (coin()) return ParamRef{p};
      return ScaledParam{rational(), p};
    };
    auto terms = [&]() {
      std::vector<Term> out;
      for (int j = 0; j < num_vars; ++j)
        if (coin(0.6)) out.push_back({"v" + std::to_string(j), coefficient(true)});
      return out;
    };
    for (int i = 0; i < num_cons; ++i) {
      Constraint c;
      c.name = "c" + std::to_string(i);
      c.terms = terms();
      const int s = uniform(0, 2);
      c.sense = s == 0 ? Sense::Le : s == 1 ? Sense::Ge : Sense::Eq;
      c.rhs = coefficient(true);
      if (coin(0.3)) c.description = "constraint #" + std::to_string(i);
      m.constraints.push_back(std::move(c));
    }
    if (coin(0.5)) m.objective = Objective{coin() ? ObjectiveSense::Minimize : ObjectiveSense::Maximize, terms()};
    return m;
  }

  std::mt19937& engine() { return rng_; }

 private:
  std::mt19937 rng_;
};

}  // namespace iiswb::testing
