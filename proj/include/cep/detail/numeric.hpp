#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cep::detail {

// Products like (1-alpha)*(n+1) carry float dust at integer boundaries
// (0.8*5 evaluates above 4), so counts and unbounded-vs-finite decisions
// snap to the boundary at this relative tolerance before comparing.
inline constexpr double kBoundarySnapRel = 1e-9;

inline bool nearly_equal(double x, double y) {
  double scale = std::max({1.0, std::abs(x), std::abs(y)});
  return std::abs(x - y) <= kBoundarySnapRel * scale;
}

// x <= bound, treating values within the snap tolerance of bound as equal.
inline bool leq_snapped(double x, double bound) {
  return x <= bound || nearly_equal(x, bound);
}

// Ceiling with integer-boundary snapping.
inline std::int64_t ceil_count(double x) {
  double r = std::nearbyint(x);
  if (nearly_equal(x, r)) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly between 0 and 1, got " + std::to_string(alpha));
}

}  // namespace cep::detail
