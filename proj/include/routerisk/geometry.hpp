#pragma once

// Mean Euclidean distance between two independent uniform points in a
// rectangle: closed form plus a Monte Carlo estimator used as its oracle.

#include <cmath>
#include <cstdint>

#include "routerisk/errors.hpp"
#include "routerisk/random.hpp"

namespace routerisk {

class Rectangle {
 public:
  Rectangle(double length_m, double width_m) : length_(length_m), width_(width_m) {
    if (!(length_m > 0.0 && width_m > 0.0) || !std::isfinite(length_m) || !std::isfinite(width_m)) {
      throw DomainError("rectangle sides must be finite and > 0");
    }
  }

  double length() const noexcept { return length_; }
  double width() const noexcept { return width_; }
  double diagonal() const noexcept { return std::hypot(length_, width_); }

 private:
  double length_;
  double width_;
};

/// E|P - Q| for P, Q uniform in the rectangle (natural logarithm).
inline double mean_distance_closed(const Rectangle& rect) {
  const double a = rect.length();
  const double b = rect.width();
  const double d = rect.diagonal();
  const double a2 = a * a;
  const double b2 = b * b;
  const double sum = a2 * a / b2 + b2 * b / a2 + d * (3.0 - a2 / b2 - b2 / a2) +
                     2.5 * (b2 / a * std::log((a + d) / b) + a2 / b * std::log((b + d) / a));
  return sum / 15.0;
}

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline constexpr std::int64_t kMinGeometrySamples = 1000;

inline Estimate mean_distance_mc(const Rectangle& rect, std::int64_t samples, std::uint64_t seed) {
  if (samples < kMinGeometrySamples) {
    throw ConfigError("mean_distance_mc needs at least 1000 samples");
  }
  RandomStream rng(seed);
  const double a = rect.length();
  const double b = rect.width();
  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double dx = (rng.uniform() - rng.uniform()) * a;
    const double dy = (rng.uniform() - rng.uniform()) * b;
    const double r = std::sqrt(dx * dx + dy * dy);
    const double delta = r - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (r - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

}  // namespace routerisk
