#include "iiswb/iis.hpp"

#include "generators.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace iiswb;
using namespace iiswb::testing;

namespace {

NormalizedSystem sys_of(const std::string& text) { return normalize(parse_or_throw(text)); }

using Names = std::vector<std::string>;

// The two defining properties, decided by the brute-force oracle.
bool is_iis(const NormalizedSystem& sys, const RowSet& rows) {
  if (brute_force_feasible(sys.A, sys.b, rows)) return false;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    RowSet rest = rows;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
    if (!brute_force_feasible(sys.A, sys.b, rest)) return false;
  }
  return true;
}

const char* kThree = "var x; s.t. a: x <= 5; s.t. b: x >= 1; s.t. c: x <= 0;";

}  // namespace

TEST_CASE("deletion filter drops the redundant upper bound", "[iis]") {
  auto sys = sys_of(kThree);
  auto iis = deletion_filter(sys);
  CHECK(iis.members == Names{"b", "c"});
  CHECK(iis.rows == RowSet{1, 2});
  CHECK(iis.method == IisMethod::Deletion);
  CHECK(iis.solver_calls == 3);
  CHECK(oracle_iis_all(sys) == std::vector<RowSet>{{1, 2}});
}

TEST_CASE("additive sweep follows the hand trace", "[iis]") {
  auto iis = additive_method(sys_of(kThree));
  CHECK(iis.members == Names{"b", "c"});
  // Round 1: {a}, {a,b}, {a,b,c} then T={c}; round 2: {c,a}, {c,a,b} then T={c,b}.
  CHECK(iis.solver_calls == 7);
}

TEST_CASE("a self-contradictory row is its own IIS", "[iis]") {
  auto sys = sys_of("var x; s.t. ok: x <= 3; s.t. bad: 0*x <= -1;");
  CHECK(additive_method(sys).members == Names{"bad"});
  CHECK(deletion_filter(sys).members == Names{"bad"});
  auto all = enumerate_iis_lp(sys);
  REQUIRE(all.size() == 1);
  CHECK(all[0].members == Names{"bad"});
}

TEST_CASE("the pairwise-feasible triple is irreducible by every method", "[iis]") {
  auto sys = normalize(fixture("pairwise_triple.om"));
  const Names all{"A", "B", "C"};
  CHECK(deletion_filter(sys).members == all);
  CHECK(additive_method(sys).members == all);
  auto enumerated = enumerate_iis_lp(sys);
  REQUIRE(enumerated.size() == 1);
  CHECK(enumerated[0].members == all);
  CHECK(oracle_iis_all(sys) == std::vector<RowSet>{{0, 1, 2}});
  for (RowSet pair : {RowSet{0, 1}, RowSet{0, 2}, RowSet{1, 2}}) CHECK(brute_force_feasible(sys.A, sys.b, pair));
}

TEST_CASE("feasible systems have nothing to isolate", "[iis]") {
  auto sys = normalize(fixture("feasible.om"));
  CHECK(error_code_of([&] { deletion_filter(sys); }) == ErrorCode::NotInfeasible);
  CHECK(error_code_of([&] { additive_method(sys); }) == ErrorCode::NotInfeasible);
  CHECK(enumerate_iis_lp(sys).empty());
  CHECK(oracle_iis_all(sys).empty());
}

TEST_CASE("enumeration finds the single vertex of the alternative polyhedron", "[iis]") {
  auto sys = sys_of("var x; s.t. up: x <= 1; s.t. down: -x <= -3;");
  auto all = enumerate_iis_lp(sys);
  REQUIRE(all.size() == 1);
  CHECK(all[0].rows == RowSet{0, 1});
  // The certificate is that vertex: y = (1/2, 1/2).
  auto out = check_feasible(sys);
  REQUIRE(std::holds_alternative<lp::Infeasible<Rational>>(out));
  const auto& y = std::get<lp::Infeasible<Rational>>(out).certificate.y;
  CHECK(y.at(0) == Rational(1, 2));
  CHECK(y.at(1) == Rational(1, 2));
}

TEST_CASE("enumeration skips the feasible pair", "[iis]") {
  auto sys = sys_of("var x; s.t. ge1: x >= 1; s.t. le0: x <= 0; s.t. le5: x <= 5;");
  auto all = enumerate_iis_lp(sys);
  REQUIRE(all.size() == 1);
  CHECK(all[0].members == Names{"ge1", "le0"});
  CHECK(oracle_iis_all(sys) == std::vector<RowSet>{all[0].rows});
}

TEST_CASE("bounds are members with their own ids", "[iis]") {
  auto sys = sys_of("var x >= 1 <= 9; s.t. c: x <= 0;");
  auto iis = deletion_filter(sys);
  CHECK(iis.members == Names{"c", "x.lb"});
}

TEST_CASE("equality halves map to one member", "[iis]") {
  auto sys = sys_of("var x; var y; s.t. e: x + y = 1; s.t. f: x >= 2; s.t. g: y >= 0;");
  CHECK(member_ids(sys, RowSet{0, 1, 2}) == Names{"e", "f"});
  auto iis = deletion_filter(sys);
  CHECK(iis.members == Names{"e", "f", "g"});
  for (const auto& result : enumerate_iis_lp(sys)) CHECK(is_iis(sys, result.rows));
}

TEST_CASE("integer gaps need the branch-and-bound oracle", "[iis][milp]") {
  auto sys = normalize(fixture("integer_gap.om"));
  CHECK(default_oracle(sys) == OracleKind::Milp);
  CHECK(error_code_of([&] { deletion_filter(sys, OracleKind::Lp); }) == ErrorCode::NotInfeasible);
  CHECK(deletion_filter(sys, OracleKind::Milp).members == Names{"low", "high"});
  CHECK(additive_method(sys, OracleKind::Milp).members == Names{"low", "high"});
  CHECK(error_code_of([&] { enumerate_iis_lp(sys); }) == ErrorCode::IntegerVariablesPresent);
  CHECK(oracle_iis_all(sys, OracleKind::Milp) == std::vector<RowSet>{{0, 1}});
}

TEST_CASE("the on-the-job-training fixture isolates its three-row conflict", "[iis]") {
  auto sys = normalize(fixture("on_the_job_training.om"));
  auto iis = deletion_filter(sys, default_oracle(sys));
  auto sorted = iis.members;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == Names{"day_length", "deliver", "fill"});
}

TEST_CASE("limits are reported as errors", "[iis]") {
  std::string text = "var x;";
  for (int i = 0; i < 21; ++i) text += " s.t. c" + std::to_string(i) + ": x <= " + std::to_string(i) + ";";
  CHECK(error_code_of([&] { oracle_iis_all(sys_of(text)); }) == ErrorCode::TooLarge);
  CHECK(error_code_of([&] { enumerate_iis_lp(sys_of(kThree), 1); }) == ErrorCode::EnumerationBudgetExceeded);
}

TEST_CASE("filters return IISs that the exhaustive oracle also lists", "[iis][property]") {
  Generator gen(31);
  for (int trial = 0; trial < 60; ++trial) {
    auto sys = gen.lp_system_where(8, 4, [](const NormalizedSystem& s) {
      return !brute_force_feasible(s.A, s.b, all_rows(s.num_rows()));
    });
    INFO("trial " << trial);
    const auto all = oracle_iis_all(sys);
    for (const auto& iis : {deletion_filter(sys), additive_method(sys)}) {
      CHECK(is_iis(sys, iis.rows));
      CHECK(std::find(all.begin(), all.end(), iis.rows) != all.end());
    }
    CHECK(deletion_filter(sys).solver_calls == static_cast<std::size_t>(sys.num_rows()));

    auto enumerated = enumerate_iis_lp(sys);
    std::vector<RowSet> supports;
    for (const auto& e : enumerated) supports.push_back(e.rows);
    auto expected = all;
    std::sort(expected.begin(), expected.end());
    CHECK(supports == expected);
  }
}
