#pragma once

// Closed-form infection probability: the exponential hazard law, route
// combination, activity-dependent k(E) coefficients and prevalence.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "routerisk/errors.hpp"

namespace routerisk {

class Probability {
 public:
  constexpr Probability() = default;

  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("probability out of [0,1]: " + std::to_string(value));
    }
  }

  constexpr double value() const noexcept { return value_; }
  constexpr double complement() const noexcept { return 1.0 - value_; }

  friend constexpr auto operator<=>(Probability, Probability) = default;

 private:
  double value_ = 0.0;
};

/// Exponential hazard in events per hour. Stored as lambda >= 0, the negated
/// exponent coefficient of f(z) = 1 - e^{cz}.
class HazardRate {
 public:
  constexpr HazardRate() = default;

  explicit HazardRate(double per_hour) : lambda_(per_hour) {
    if (!(per_hour >= 0.0) || !std::isfinite(per_hour)) {
      throw DomainError("hazard rate must be finite and >= 0: " + std::to_string(per_hour));
    }
  }

  /// From an exponent coefficient c <= 0.
  static HazardRate from_exponent(double c) { return HazardRate(c == 0.0 ? 0.0 : -c); }

  constexpr double per_hour() const noexcept { return lambda_; }

  friend constexpr auto operator<=>(HazardRate, HazardRate) = default;

 private:
  double lambda_ = 0.0;
};

enum class ActivityLabel { sitting, low, moderate, intense };

/// Air intake of the exposed person in liters per hour.
struct ActivityLevel {
  double air_intake_lph = 0.0;
  std::optional<ActivityLabel> label;

  static constexpr ActivityLevel of(ActivityLabel l) noexcept {
    switch (l) {
      case ActivityLabel::sitting:
        return {300.0, l};
      case ActivityLabel::low:
        return {780.0, l};
      case ActivityLabel::moderate:
        return {1740.0, l};
      case ActivityLabel::intense:
        return {3180.0, l};
    }
    return {};
  }

  static ActivityLevel custom(double intake_lph) {
    if (!(intake_lph > 0.0)) throw DomainError("air intake must be > 0");
    return {intake_lph, std::nullopt};
  }
};

inline constexpr double kMinCalibratedIntake = 300.0;
inline constexpr double kMaxCalibratedIntake = 3180.0;

inline std::string_view to_string(ActivityLabel l) noexcept {
  switch (l) {
    case ActivityLabel::sitting:
      return "sitting";
    case ActivityLabel::low:
      return "low";
    case ActivityLabel::moderate:
      return "moderate";
    case ActivityLabel::intense:
      return "intense";
  }
  return "?";
}

inline std::optional<ActivityLabel> parse_activity_label(std::string_view s) noexcept {
  if (s == "sitting") return ActivityLabel::sitting;
  if (s == "low") return ActivityLabel::low;
  if (s == "moderate") return ActivityLabel::moderate;
  if (s == "intense") return ActivityLabel::intense;
  return std::nullopt;
}

enum class Mode { walking, subway, brt, city_bus, car };

inline constexpr std::array<Mode, 5> kAllModes = {Mode::walking, Mode::subway, Mode::brt,
                                                  Mode::city_bus, Mode::car};

inline std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::walking:
      return "walking";
    case Mode::subway:
      return "subway";
    case Mode::brt:
      return "brt";
    case Mode::city_bus:
      return "city_bus";
    case Mode::car:
      return "car";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) noexcept {
  for (Mode m : kAllModes) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline bool is_transit(Mode m) noexcept {
  return m == Mode::subway || m == Mode::brt || m == Mode::city_bus;
}

/// k(E) = k1 * E + k2
struct KLine {
  double k1 = 0.0;
  double k2 = 0.0;
  constexpr double operator()(double intake_lph) const noexcept { return k1 * intake_lph + k2; }
};

struct FixedK {
  double k = 0.0;
};

using KModel = std::variant<KLine, FixedK>;

struct EnvironmentProfile {
  Mode mode = Mode::walking;
  double length_m = 0.0;
  double width_m = 0.0;
  int capacity = 0;
  KModel k_model = KLine{};
  double canonical_r_mean_m = 0.0;
  double canonical_n_infected = 0.0;
  HazardRate canonical_rate;
  ActivityLevel default_activity = ActivityLevel::of(ActivityLabel::low);

  /// Persons per square meter at full capacity.
  double density_x() const noexcept { return capacity / (length_m * width_m); }
};

struct PrevalenceModel {
  std::int64_t active_cases = 0;
  std::int64_t population = 1;
};

// ---------------------------------------------------------------------------

/// 1 - prod(1 - p_i). Empty input yields 0.
inline Probability combine_route_probabilities(std::span<const Probability> probs) {
  // Accumulate log-survival so long routes of tiny probabilities keep precision.
  double log_survival = 0.0;
  for (Probability p : probs) {
    if (p.value() == 1.0) return Probability(1.0);
    log_survival += std::log1p(-p.value());
  }
  return Probability(-std::expm1(log_survival));
}

inline Probability combine_route_probabilities(std::initializer_list<Probability> probs) {
  return combine_route_probabilities(std::span<const Probability>(probs.begin(), probs.size()));
}

/// Unchecked overload for raw doubles; throws DomainError if any is outside [0,1].
inline Probability combine_route_probabilities(std::span<const double> probs) {
  double log_survival = 0.0;
  for (double p : probs) {
    Probability checked(p);
    if (checked.value() == 1.0) return Probability(1.0);
    log_survival += std::log1p(-checked.value());
  }
  return Probability(-std::expm1(log_survival));
}

/// f(z) = 1 - e^{-lambda z}
inline Probability hazard_probability(HazardRate rate, double duration_hours) {
  if (!(duration_hours >= 0.0)) {
    throw DomainError("exposure duration must be >= 0: " + std::to_string(duration_hours));
  }
  if (std::isinf(duration_hours)) return Probability(rate.per_hour() > 0.0 ? 1.0 : 0.0);
  return Probability(-std::expm1(-rate.per_hour() * duration_hours));
}

/// k for the profile at the given activity. Car-like profiles ignore activity.
inline double k_of_activity(const EnvironmentProfile& profile, const ActivityLevel& activity) {
  if (const auto* fixed = std::get_if<FixedK>(&profile.k_model)) return fixed->k;
  const auto& line = std::get<KLine>(profile.k_model);
  const double e = activity.air_intake_lph;
  if (e < kMinCalibratedIntake || e > kMaxCalibratedIntake) {
    throw CalibrationRangeError("air intake " + std::to_string(e) +
                                " L/h outside calibrated range [300, 3180]");
  }
  const double k = line(e);
  if (!(k < 0.0)) {
    throw CalibrationRangeError("k(E) = " + std::to_string(k) + " is not negative for " +
                                std::string(to_string(profile.mode)) + " at E = " +
                                std::to_string(e));
  }
  return k;
}

/// lambda = -k(E) * n / r_mean^2
inline HazardRate environment_rate(const EnvironmentProfile& profile, const ActivityLevel& activity,
                                   double n_infected, double r_mean_m) {
  if (!(n_infected >= 0.0)) throw DomainError("infected count must be >= 0");
  if (r_mean_m == 0.0) throw SingularityError("mean distance is zero");
  if (!(r_mean_m > 0.0)) throw DomainError("mean distance must be > 0");
  const double k = k_of_activity(profile, activity);
  if (n_infected == 0.0) return HazardRate(0.0);
  return HazardRate(-k * n_infected / (r_mean_m * r_mean_m));
}

inline double prevalence_fraction(const PrevalenceModel& model) {
  if (model.population <= 0) throw DomainError("population must be > 0");
  if (model.active_cases < 0) throw DomainError("active cases must be >= 0");
  if (model.active_cases > model.population) {
    throw DomainError("active cases exceed population");
  }
  return static_cast<double>(model.active_cases) / static_cast<double>(model.population);
}

/// Real-valued expected number of carriers; deliberately not rounded.
inline double expected_infected(int capacity, double prevalence) {
  if (capacity < 0) throw DomainError("capacity must be >= 0");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw DomainError("prevalence out of [0,1]");
  return capacity * prevalence;
}

}  // namespace routerisk
