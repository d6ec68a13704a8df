#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "routerisk/presets.hpp"
#include "routerisk/risk_model.hpp"

namespace routerisk {
namespace {

const EnvironmentProfile& preset(Mode m) { return builtin_presets().at(m); }

TEST(Combine, WorkedRouteFromSegmentProbabilities) {
  auto p = combine_route_probabilities({Probability(0.0006), Probability(0.0777), Probability(0.0054)});
  EXPECT_NEAR(p.value(), 0.0833, 1e-4);
}

TEST(Combine, EmptyAndSingleton) {
  EXPECT_EQ(combine_route_probabilities(std::span<const Probability>{}).value(), 0.0);
  EXPECT_DOUBLE_EQ(combine_route_probabilities({Probability(0.37)}).value(), 0.37);
  EXPECT_DOUBLE_EQ(combine_route_probabilities({Probability(0.5), Probability(0.5)}).value(), 0.75);
}

TEST(Combine, CertainSegmentDominates) {
  EXPECT_EQ(combine_route_probabilities({Probability(0.2), Probability(1.0)}).value(), 1.0);
}

TEST(Combine, RejectsOutOfRange) {
  std::vector<double> bad = {0.1, 1.2};
  EXPECT_THROW(combine_route_probabilities(bad), DomainError);
  std::vector<double> neg = {-0.01};
  EXPECT_THROW(combine_route_probabilities(neg), DomainError);
  EXPECT_THROW(Probability(std::nan("")), DomainError);
}

TEST(CombineProperty, PairLawAssociativityCommutativity) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double p = u(gen), q = u(gen), r = u(gen);
    const Probability P(p), Q(q), R(r);
    EXPECT_NEAR(combine_route_probabilities({P, Q}).value(), p + q - p * q, 1e-12);
    EXPECT_NEAR(combine_route_probabilities({P, Q}).value(), combine_route_probabilities({Q, P}).value(), 1e-12);
    auto left = combine_route_probabilities({combine_route_probabilities({P, Q}), R});
    auto right = combine_route_probabilities({P, combine_route_probabilities({Q, R})});
    EXPECT_NEAR(left.value(), right.value(), 1e-12);
  }
}

TEST(Hazard, WorkedValues) {
  EXPECT_NEAR(hazard_probability(HazardRate(0.025299), 1.6).value(), 0.0397, 1e-4);
  EXPECT_NEAR(hazard_probability(HazardRate(0.407105), 28.0 / 60.0).value(), 0.1730, 1e-4);
  EXPECT_EQ(hazard_probability(HazardRate(3.0), 0.0).value(), 0.0);
  EXPECT_EQ(hazard_probability(HazardRate(0.1), INFINITY).value(), 1.0);
}

TEST(Hazard, NegativeDurationRejected) {
  EXPECT_THROW(hazard_probability(HazardRate(0.1), -1.0), DomainError);
  EXPECT_THROW(HazardRate(-0.1), DomainError);
}

TEST(HazardProperty, TimeCompositionAndScaling) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> lam(0.0, 3.0), t(0.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const HazardRate rate(lam(gen));
    const double a = t(gen), b = t(gen);
    auto whole = hazard_probability(rate, a + b);
    auto parts = combine_route_probabilities({hazard_probability(rate, a), hazard_probability(rate, b)});
    EXPECT_NEAR(whole.value(), parts.value(), 1e-12);
    for (int k : {2, 3, 10}) {
      const double piece = hazard_probability(rate, a / k).value();
      EXPECT_NEAR(1.0 - std::pow(1.0 - piece, k), hazard_probability(rate, a).value(), 1e-10);
    }
  }
}

TEST(HazardProperty, StrictlyIncreasingInRateAndTime) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double l = u(gen), z = u(gen), dl = u(gen) * 0.1, dz = u(gen) * 0.1;
    const double base = hazard_probability(HazardRate(l), z).value();
    EXPECT_LT(base, hazard_probability(HazardRate(l + dl), z).value());
    EXPECT_LT(base, hazard_probability(HazardRate(l), z + dz).value());
  }
}

TEST(KOfActivity, LinesAndFixed) {
  EXPECT_NEAR(k_of_activity(preset(Mode::walking), ActivityLevel::of(ActivityLabel::moderate)), -1.78849, 1e-4);
  // -0.00180107 * 780 + 0.82402941
  EXPECT_NEAR(k_of_activity(preset(Mode::subway), ActivityLevel::of(ActivityLabel::low)), -0.58080519, 1e-8);
  EXPECT_EQ(k_of_activity(preset(Mode::car), ActivityLevel::of(ActivityLabel::intense)), -2.729480);
  EXPECT_EQ(k_of_activity(preset(Mode::car), ActivityLevel::custom(10.0)), -2.729480);
}

TEST(KOfActivity, ActivityTableValues) {
  EXPECT_EQ(ActivityLevel::of(ActivityLabel::sitting).air_intake_lph, 300.0);
  EXPECT_EQ(ActivityLevel::of(ActivityLabel::low).air_intake_lph, 780.0);
  EXPECT_EQ(ActivityLevel::of(ActivityLabel::moderate).air_intake_lph, 1740.0);
  EXPECT_EQ(ActivityLevel::of(ActivityLabel::intense).air_intake_lph, 3180.0);
}

TEST(KOfActivity, RejectsExtrapolationAndNonNegativeK) {
  EXPECT_THROW(k_of_activity(preset(Mode::brt), ActivityLevel::custom(299.0)), CalibrationRangeError);
  EXPECT_THROW(k_of_activity(preset(Mode::brt), ActivityLevel::custom(3181.0)), CalibrationRangeError);
  // The open-environment line crosses zero near E = 497.
  EXPECT_THROW(k_of_activity(preset(Mode::walking), ActivityLevel::of(ActivityLabel::sitting)),
               CalibrationRangeError);
  EXPECT_THROW(k_of_activity(preset(Mode::subway), ActivityLevel::of(ActivityLabel::sitting)),
               CalibrationRangeError);
  EXPECT_LT(k_of_activity(preset(Mode::brt), ActivityLevel::of(ActivityLabel::sitting)), 0.0);
  EXPECT_LT(k_of_activity(preset(Mode::city_bus), ActivityLevel::of(ActivityLabel::sitting)), 0.0);
}

TEST(EnvironmentRate, MatchesCanonicalConstants) {
  auto walk = environment_rate(preset(Mode::walking), ActivityLevel::of(ActivityLabel::moderate), 0.34656, 4.95);
  EXPECT_NEAR(walk.per_hour(), 0.025296, 2e-6);
  EXPECT_NEAR(walk.per_hour() / 0.025299, 1.0, 0.01);

  auto bus = environment_rate(preset(Mode::city_bus), ActivityLevel::of(ActivityLabel::low), 0.69248, 2.98);
  EXPECT_NEAR(bus.per_hour(), 0.089870, 1e-6);
  EXPECT_NEAR(bus.per_hour() / 0.089912, 1.0, 0.001);
}

TEST(EnvironmentRate, ZeroCarriersAndSingularity) {
  const auto& p = preset(Mode::subway);
  EXPECT_EQ(environment_rate(p, ActivityLevel::of(ActivityLabel::low), 0.0, 3.0).per_hour(), 0.0);
  EXPECT_THROW(environment_rate(p, ActivityLevel::of(ActivityLabel::low), 1.0, 0.0), SingularityError);
  EXPECT_THROW(environment_rate(p, ActivityLevel::of(ActivityLabel::low), -1.0, 3.0), DomainError);
}

TEST(EnvironmentRate, DerivedWithinOnePercentOfExactForAllPresets) {
  const double y = builtin_presets().reference_fraction();
  for (Mode m : kAllModes) {
    const auto& p = preset(m);
    const double n = expected_infected(p.capacity, y);
    const double derived = environment_rate(p, p.default_activity, n, p.canonical_r_mean_m).per_hour();
    EXPECT_NEAR(derived / p.canonical_rate.per_hour(), 1.0, 0.01) << to_string(m);
  }
}

TEST(Prevalence, Fraction) {
  EXPECT_NEAR(prevalence_fraction({727550, 84055000}), 0.008656, 1e-6);
  EXPECT_EQ(prevalence_fraction({0, 100}), 0.0);
  EXPECT_EQ(prevalence_fraction({100, 100}), 1.0);
  EXPECT_THROW(prevalence_fraction({101, 100}), DomainError);
  EXPECT_THROW(prevalence_fraction({1, 0}), DomainError);
}

TEST(Prevalence, ExpectedInfectedIsNotRounded) {
  EXPECT_NEAR(expected_infected(180, 0.008656), 1.55808, 1e-12);
  EXPECT_NEAR(expected_infected(150, 0.008656), 1.2984, 1e-12);
  EXPECT_EQ(expected_infected(0, 0.3), 0.0);
  EXPECT_THROW(expected_infected(10, 1.5), DomainError);
}

TEST(Profile, DensityAndCarK) {
  const auto& walking = preset(Mode::walking);
  EXPECT_NEAR(walking.density_x(), 40.0 / 240.0, 1e-12);
  EXPECT_TRUE(std::holds_alternative<FixedK>(preset(Mode::car).k_model));
  for (Mode m : {Mode::walking, Mode::subway, Mode::brt, Mode::city_bus}) {
    EXPECT_TRUE(std::holds_alternative<KLine>(preset(m).k_model));
  }
}

}  // namespace
}  // namespace routerisk
