#pragma once

// Exact rational scalar used throughout the workbench, plus the Eigen
// aliases every numeric module shares.

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>

namespace iiswb {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RMatrix = MatrixX<Rational>;
using RVector = VectorX<Rational>;

/// Parses "12", "-3.25", "1e3"-free decimals and "p/q" exactly. Returns
/// nullopt on malformed input or a zero denominator.
std::optional<Rational> parse_rational(std::string_view text);

/// Canonical text: "7/2", "-3", "0".
std::string to_string(const Rational& value);

BigInt floor(const Rational& value);
BigInt ceil(const Rational& value);
bool is_integral(const Rational& value);

}  // namespace iiswb
