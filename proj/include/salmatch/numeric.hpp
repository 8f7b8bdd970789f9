#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace salmatch {

/// Absolute tolerance used for every real comparison in the library.
inline constexpr double kTol = 1e-9;

/// Lower bound standing in for the open constraint lambda > 0.
inline constexpr double kLambdaMin = 1e-9;

/// Radii and bounds that are not attained by any perturbation are +infinity.
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

inline bool is_unbounded(double r) { return std::isinf(r) && r > 0; }

using Vec = std::vector<double>;

enum class Norm { l1, l2, linf };

/// Dual norm: l1 <-> linf, l2 <-> l2.
inline constexpr Norm dual(Norm p) {
  switch (p) {
    case Norm::l1: return Norm::linf;
    case Norm::linf: return Norm::l1;
    case Norm::l2: return Norm::l2;
  }
  return Norm::l2;
}

inline std::string to_string(Norm p) {
  switch (p) {
    case Norm::l1: return "1";
    case Norm::l2: return "2";
    case Norm::linf: return "inf";
  }
  return "?";
}

inline Norm parse_norm(std::string_view s) {
  if (s == "1") return Norm::l1;
  if (s == "2") return Norm::l2;
  if (s == "inf" || s == "infinity") return Norm::linf;
  throw Error(ErrorCode::input, "norm must be one of 1, 2, inf (got '" + std::string(s) + "')");
}

inline double norm(std::span<const double> v, Norm p) {
  double acc = 0.0;
  switch (p) {
    case Norm::l1:
      for (double x : v) acc += std::abs(x);
      return acc;
    case Norm::l2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case Norm::linf:
      for (double x : v) acc = std::max(acc, std::abs(x));
      return acc;
  }
  return acc;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

inline Vec sub(std::span<const double> x, std::span<const double> y) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return out;
}

/// Diameter of the probability simplex under the given norm.
inline double simplex_diameter(Norm p) {
  switch (p) {
    case Norm::l1: return 2.0;
    case Norm::l2: return std::sqrt(2.0);
    case Norm::linf: return 1.0;
  }
  return 2.0;
}

}  // namespace salmatch
