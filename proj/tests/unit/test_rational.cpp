#include "test_support.hpp"

using namespace iiswb;
using iiswb::testing::R;

TEST_CASE("decimal and fraction literals parse exactly", "[rational]") {
  CHECK(*parse_rational("0.1") == Rational(1, 10));
  CHECK(*parse_rational("-2.50") == Rational(-5, 2));
  CHECK(*parse_rational("7/2") == Rational(7, 2));
  CHECK(*parse_rational("-4/6") == Rational(-2, 3));
  CHECK(*parse_rational(".5") == Rational(1, 2));
  CHECK(*parse_rational("12") == Rational(12));
}

TEST_CASE("malformed literals are rejected", "[rational]") {
  for (const char* bad : {"", "-", "1/0", "1.2.3", "a", "1/2/3", "1e3", "/3", "."}) {
    INFO(bad);
    CHECK_FALSE(parse_rational(bad).has_value());
  }
}

TEST_CASE("canonical text round-trips", "[rational]") {
  for (const char* text : {"0", "7/2", "-1/3", "1000000000000000000000001"}) {
    CHECK(to_string(R(text)) == text);
  }
  CHECK(to_string(R("2.500")) == "5/2");
}

TEST_CASE("floor and ceil follow the number line", "[rational]") {
  CHECK(floor(R("7/2")) == 3);
  CHECK(ceil(R("7/2")) == 4);
  CHECK(floor(R("-7/2")) == -4);
  CHECK(ceil(R("-7/2")) == -3);
  CHECK(floor(R("-3")) == -3);
  CHECK(ceil(R("-3")) == -3);
  CHECK(is_integral(R("4/2")));
  CHECK_FALSE(is_integral(R("1/2")));
}
