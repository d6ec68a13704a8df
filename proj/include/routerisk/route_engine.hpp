#pragma once

// Segment- and route-level scoring, ranking of candidate routes, the
// walking-length sweep, and the plain-text route document format.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "routerisk/errors.hpp"
#include "routerisk/geometry.hpp"
#include "routerisk/presets.hpp"
#include "routerisk/risk_model.hpp"
#include "routerisk/text.hpp"

namespace routerisk {

struct ExplicitHours {
  double hours = 0.0;
  friend bool operator==(const ExplicitHours&, const ExplicitHours&) = default;
};
struct WalkDistance {
  double meters = 0.0;
  friend bool operator==(const WalkDistance&, const WalkDistance&) = default;
};
struct TransitStops {
  int count = 0;
  friend bool operator==(const TransitStops&, const TransitStops&) = default;
};

using DurationSource = std::variant<ExplicitHours, WalkDistance, TransitStops>;

struct Segment {
  Mode mode = Mode::walking;
  DurationSource duration = ExplicitHours{};
  std::optional<ActivityLevel> activity_override;

  void validate() const {
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ExplicitHours>) {
            if (!(d.hours >= 0.0) || !std::isfinite(d.hours)) throw ValidationError("hours must be >= 0");
          } else if constexpr (std::is_same_v<T, WalkDistance>) {
            if (mode != Mode::walking) {
              throw ValidationError("distance_m is only valid for walking, not " + std::string(to_string(mode)));
            }
            if (!(d.meters >= 0.0) || !std::isfinite(d.meters)) throw ValidationError("distance_m must be >= 0");
          } else {
            if (!is_transit(mode)) {
              throw ValidationError("stops are only valid for subway, brt and city_bus, not " +
                                    std::string(to_string(mode)));
            }
            if (d.count < 0) throw ValidationError("stops must be >= 0");
          }
        },
        duration);
    if (activity_override && !(activity_override->air_intake_lph > 0.0)) {
      throw ValidationError("activity air intake must be > 0");
    }
  }
};

struct Route {
  std::string id;
  std::string label;
  std::vector<Segment> segments;

  void validate() const {
    if (id.empty()) throw ValidationError("route id is empty");
    if (segments.empty()) throw ValidationError("route '" + id + "' has no segments");
    for (const auto& s : segments) s.validate();
  }
};

enum class RateMode { exact, derived };

struct EngineConfig {
  double walking_speed_kmh = 5.0;
  double minutes_per_stop = 3.0;
  RateMode rate_mode = RateMode::exact;
  /// Carrier fraction; unset means the presets' reference prevalence.
  std::optional<double> prevalence;
};

struct SegmentReport {
  std::size_t index = 0;
  Mode mode = Mode::walking;
  double duration_hours = 0.0;
  HazardRate rate;
  Probability probability;
};

struct RiskReport {
  std::string route_id;
  std::string label;
  std::vector<SegmentReport> per_segment;
  Probability total;
};

inline double effective_prevalence(const PresetSet& presets, const EngineConfig& cfg) {
  const double y = cfg.prevalence.value_or(presets.reference_fraction());
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("prevalence out of [0,1]");
  return y;
}

inline double segment_duration(const Segment& segment, const EngineConfig& cfg) {
  segment.validate();
  if (!(cfg.walking_speed_kmh > 0.0)) throw ConfigError("walking speed must be > 0");
  if (!(cfg.minutes_per_stop >= 0.0)) throw ConfigError("minutes per stop must be >= 0");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ExplicitHours>) return d.hours;
        else if constexpr (std::is_same_v<T, WalkDistance>) return d.meters / (cfg.walking_speed_kmh * 1000.0);
        else return d.count * cfg.minutes_per_stop / 60.0;
      },
      segment.duration);
}

/// Hazard for one segment. Exact mode scales the canonical constant linearly
/// with prevalence and with k(E) when the activity differs from the preset's
/// default; both factors are exactly 1 at the reference inputs.
inline HazardRate segment_rate(const Segment& segment, const PresetSet& presets, const EngineConfig& cfg) {
  const EnvironmentProfile& profile = presets.at(segment.mode);
  const ActivityLevel activity = segment.activity_override.value_or(profile.default_activity);
  const double y = effective_prevalence(presets, cfg);

  if (cfg.rate_mode == RateMode::derived) {
    return environment_rate(profile, activity, expected_infected(profile.capacity, y), profile.canonical_r_mean_m);
  }

  const double y_ref = presets.reference_fraction();
  double scale = 1.0;
  if (y != y_ref) {
    if (y_ref == 0.0) throw ConfigError("reference prevalence is zero; use derived mode");
    scale = y / y_ref;
  }
  if (segment.activity_override && std::holds_alternative<KLine>(profile.k_model) &&
      activity.air_intake_lph != profile.default_activity.air_intake_lph) {
    scale *= k_of_activity(profile, activity) / k_of_activity(profile, profile.default_activity);
  }
  if (scale == 1.0) return profile.canonical_rate;
  return HazardRate(profile.canonical_rate.per_hour() * scale);
}

inline SegmentReport score_segment(const Segment& segment, std::size_t index, const PresetSet& presets,
                                   const EngineConfig& cfg) {
  SegmentReport r;
  r.index = index;
  r.mode = segment.mode;
  r.duration_hours = segment_duration(segment, cfg);
  r.rate = segment_rate(segment, presets, cfg);
  r.probability = hazard_probability(r.rate, r.duration_hours);
  return r;
}

inline Probability segment_probability(const Segment& segment, const PresetSet& presets, const EngineConfig& cfg) {
  return score_segment(segment, 0, presets, cfg).probability;
}

inline RiskReport route_probability(const Route& route, const PresetSet& presets, const EngineConfig& cfg) {
  route.validate();
  RiskReport report{route.id, route.label, {}, Probability(0.0)};
  std::vector<Probability> probs;
  for (std::size_t i = 0; i < route.segments.size(); ++i) {
    report.per_segment.push_back(score_segment(route.segments[i], i, presets, cfg));
    probs.push_back(report.per_segment.back().probability);
  }
  report.total = combine_route_probabilities(probs);
  return report;
}

/// Reports in ascending order of total probability; ties keep input order.
inline std::vector<RiskReport> rank_routes(std::span<const Route> routes, const PresetSet& presets,
                                           const EngineConfig& cfg) {
  if (routes.empty()) throw ValidationError("no routes");
  std::vector<RiskReport> reports;
  reports.reserve(routes.size());
  for (const auto& r : routes) reports.push_back(route_probability(r, presets, cfg));
  std::stable_sort(reports.begin(), reports.end(),
                   [](const RiskReport& a, const RiskReport& b) { return a.total < b.total; });
  return reports;
}

struct SweepPoint {
  double length_m = 0.0;
  double density = 0.0;
  double probability = 0.0;
};

/// Walking exposure over a length x width strip for each (length, density):
/// n = density * area * prevalence, r_mean from the rectangle closed form.
inline std::vector<SweepPoint> walking_sweep(const EnvironmentProfile& walking, double width_m,
                                             std::span<const double> lengths_m, std::span<const double> densities,
                                             double exposure_hours, const ActivityLevel& activity,
                                             double prevalence) {
  if (!(width_m > 0.0)) throw DomainError("sweep width must be > 0");
  if (!(exposure_hours > 0.0)) throw DomainError("sweep exposure must be > 0");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw DomainError("prevalence out of [0,1]");
  std::vector<SweepPoint> out;
  out.reserve(lengths_m.size() * densities.size());
  for (double len : lengths_m) {
    if (!(len > 0.0)) throw DomainError("sweep lengths must be > 0");
    const double r_mean = mean_distance_closed(Rectangle(len, width_m));
    for (double rho : densities) {
      if (!(rho >= 0.0)) throw DomainError("sweep densities must be >= 0");
      const double n = rho * len * width_m * prevalence;
      const auto rate = environment_rate(walking, activity, n, r_mean);
      out.push_back({len, rho, hazard_probability(rate, exposure_hours).value()});
    }
  }
  return out;
}

// --- route documents -------------------------------------------------------
//
//   format = routerisk-routes
//   version = 1
//   route = <id> | <label>
//   <mode> hours=<h> | minutes=<min> | distance_m=<m> | stops=<n>  [activity=<label> | activity_lph=<E>]
//
// Segment lines belong to the most recent `route` line. `#` starts a comment.

inline std::vector<Route> parse_routes(std::string_view doc, const std::string& source = "routes") {
  std::vector<Route> routes;
  std::set<std::string> ids;
  std::size_t route_line = 0;
  std::size_t line_no = 0;

  auto close_route = [&]() {
    if (!routes.empty() && routes.back().segments.empty()) {
      throw ParseError(source, route_line, "route '" + routes.back().id + "' has no segments");
    }
  };

  for (std::string_view raw : text::split_lines(doc)) {
    ++line_no;
    auto line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;

    auto head = line.substr(0, line.find_first_of(" \t="));
    auto rest = text::trim(line.substr(head.size()));
    if ((head == "format" || head == "version" || head == "route") && !rest.empty() && rest.front() == '=') {
      auto value = text::trim(rest.substr(1));
      if (head == "format") {
        if (value != "routerisk-routes") throw ParseError(source, line_no, "unknown format '" + std::string(value) + "'");
      } else if (head == "version") {
        if (value != "1") throw ParseError(source, line_no, "unsupported version '" + std::string(value) + "'");
      } else {
        close_route();
        auto bar = value.find('|');
        Route r;
        r.id = std::string(text::trim(value.substr(0, bar)));
        if (bar != std::string_view::npos) r.label = std::string(text::trim(value.substr(bar + 1)));
        if (r.id.empty() || r.id.find_first_of(" \t") != std::string::npos) {
          throw ParseError(source, line_no, "route id must be a single non-empty token");
        }
        if (!ids.insert(r.id).second) throw ParseError(source, line_no, "duplicate route id '" + r.id + "'");
        routes.push_back(std::move(r));
        route_line = line_no;
      }
      continue;
    }

    if (routes.empty()) throw ParseError(source, line_no, "segment before any 'route = ...' line");
    auto tokens = text::split_ws(line);
    auto mode = parse_mode(tokens[0]);
    if (!mode) throw ParseError(source, line_no, "unknown mode '" + std::string(tokens[0]) + "'");
    Segment seg;
    seg.mode = *mode;
    bool have_duration = false;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto kv = tokens[i];
      auto e = kv.find('=');
      if (e == std::string_view::npos) throw ParseError(source, line_no, "expected key=value, got '" + std::string(kv) + "'");
      auto key = kv.substr(0, e);
      auto val = kv.substr(e + 1);
      auto num = text::parse_double(val);
      if (key == "activity") {
        auto lbl = parse_activity_label(val);
        if (!lbl) throw ParseError(source, line_no, "unknown activity '" + std::string(val) + "'");
        seg.activity_override = ActivityLevel::of(*lbl);
        continue;
      }
      if (!num) throw ParseError(source, line_no, "not a number: '" + std::string(val) + "'");
      if (key == "activity_lph") {
        if (!(*num > 0.0)) throw ParseError(source, line_no, "activity_lph must be > 0");
        seg.activity_override = ActivityLevel::custom(*num);
        continue;
      }
      if (have_duration) throw ParseError(source, line_no, "more than one duration given");
      have_duration = true;
      if (key == "hours") seg.duration = ExplicitHours{*num};
      else if (key == "minutes") seg.duration = ExplicitHours{*num / 60.0};
      else if (key == "distance_m") seg.duration = WalkDistance{*num};
      else if (key == "stops") {
        if (*num != std::floor(*num)) throw ParseError(source, line_no, "stops must be an integer");
        seg.duration = TransitStops{static_cast<int>(*num)};
      } else {
        throw ParseError(source, line_no, "unknown key '" + std::string(key) + "'");
      }
    }
    if (!have_duration) throw ParseError(source, line_no, "segment needs hours, minutes, distance_m or stops");
    try {
      seg.validate();
    } catch (const ValidationError& err) {
      throw ParseError(source, line_no, err.what());
    }
    routes.back().segments.push_back(seg);
  }
  close_route();
  return routes;
}

inline std::string serialize_routes(std::span<const Route> routes) {
  std::ostringstream out;
  out << "format = routerisk-routes\nversion = 1\n";
  for (const auto& r : routes) {
    out << "\nroute = " << r.id;
    if (!r.label.empty()) out << " | " << r.label;
    out << "\n";
    for (const auto& s : r.segments) {
      out << to_string(s.mode) << " ";
      std::visit(
          [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, ExplicitHours>) out << "hours=" << text::format_double(d.hours);
            else if constexpr (std::is_same_v<T, WalkDistance>) out << "distance_m=" << text::format_double(d.meters);
            else out << "stops=" << d.count;
          },
          s.duration);
      if (s.activity_override) {
        if (s.activity_override->label) out << " activity=" << to_string(*s.activity_override->label);
        else out << " activity_lph=" << text::format_double(s.activity_override->air_intake_lph);
      }
      out << "\n";
    }
  }
  return out.str();
}

inline std::vector<Route> load_routes(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open route file '" + file + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_routes(ss.str(), file);
}

}  // namespace routerisk
