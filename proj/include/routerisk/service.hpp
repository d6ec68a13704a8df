#pragma once

// JSON request/response layer shared by the CLI and the HTTP service.
//
// POST /api/score
//   { "routes": [ { "id": "r1", "label": "...", "segments": [
//         { "mode": "walking", "distance_m": 126 },
//         { "mode": "city_bus", "stops": 18, "activity": "low" },
//         { "mode": "car", "minutes": 28 } ] } ],
//     "routes_text": "<route document>",          (alternative to "routes")
//     "prevalence": 0.008656 | { "active_cases": n, "population": s },
//     "derived": false,
//     "walking_speed_kmh": 5, "minutes_per_stop": 3 }
//
// A segment carries exactly one of hours | minutes | distance_m | stops.
// "activity" is a label (sitting, low, moderate, intense) or liters/hour.
//
// Errors: malformed bodies answer 400 with
//   { "error": "...", "fields": [ { "field": "routes[0].segments[1].stops", "message": "..." } ] }
// and an unknown mode or a model-range violation answers 422.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "routerisk/presets.hpp"
#include "routerisk/route_engine.hpp"

namespace routerisk::service {

using nlohmann::json;

inline constexpr const char* kEngineVersion = "1.0.0";

struct Response {
  int status = 200;
  json body;
};

struct FieldError {
  std::string field;
  std::string message;
};

inline json error_body(const std::string& error, const std::vector<FieldError>& fields = {}) {
  json j{{"error", error}, {"fields", json::array()}};
  for (const auto& f : fields) j["fields"].push_back({{"field", f.field}, {"message", f.message}});
  return j;
}

inline json activity_json(const ActivityLevel& a) {
  json j{{"air_intake_lph", a.air_intake_lph}};
  if (a.label) j["label"] = std::string(to_string(*a.label));
  return j;
}

inline json report_json(const RiskReport& r, std::size_t rank) {
  json segs = json::array();
  for (const auto& s : r.per_segment) {
    segs.push_back({{"index", s.index},
                    {"mode", std::string(to_string(s.mode))},
                    {"duration_hours", s.duration_hours},
                    {"rate_per_hour", s.rate.per_hour()},
                    {"probability", s.probability.value()}});
  }
  return {{"rank", rank}, {"route_id", r.route_id}, {"label", r.label}, {"total", r.total.value()},
          {"segments", std::move(segs)}};
}

inline json score_response(const std::vector<RiskReport>& ranked, const PresetSet& presets,
                           const EngineConfig& cfg) {
  json reports = json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) reports.push_back(report_json(ranked[i], i + 1));
  return {{"engine_version", kEngineVersion},
          {"preset_version", presets.version},
          {"rate_mode", cfg.rate_mode == RateMode::exact ? "exact" : "derived"},
          {"prevalence", effective_prevalence(presets, cfg)},
          {"reports", std::move(reports)}};
}

inline json presets_json(const PresetSet& presets) {
  json envs = json::array();
  const double y = presets.reference_fraction();
  for (const auto& [mode, p] : presets.profiles) {
    json k;
    if (const auto* line = std::get_if<KLine>(&p.k_model)) k = {{"type", "line"}, {"k1", line->k1}, {"k2", line->k2}};
    else k = {{"type", "fixed"}, {"k", std::get<FixedK>(p.k_model).k}};
    json derived = nullptr;
    try {
      derived = environment_rate(p, p.default_activity, expected_infected(p.capacity, y), p.canonical_r_mean_m)
                    .per_hour();
    } catch (const Error&) {
      // left null: the default activity is outside this profile's calibrated range
    }
    envs.push_back({{"mode", std::string(to_string(mode))},
                    {"length_m", p.length_m},
                    {"width_m", p.width_m},
                    {"capacity", p.capacity},
                    {"density_x", p.density_x()},
                    {"k_model", std::move(k)},
                    {"r_mean_m", p.canonical_r_mean_m},
                    {"n_infected", p.canonical_n_infected},
                    {"exact_rate_per_hour", p.canonical_rate.per_hour()},
                    {"derived_rate_per_hour", derived},
                    {"default_activity", activity_json(p.default_activity)}});
  }
  return {{"preset_version", presets.version},
          {"engine_version", kEngineVersion},
          {"reference_prevalence",
           {{"active_cases", presets.reference_prevalence.active_cases},
            {"population", presets.reference_prevalence.population},
            {"fraction", y}}},
          {"environments", std::move(envs)}};
}

namespace detail {

struct RequestErrors {
  std::vector<FieldError> invalid;     // -> 400
  std::vector<FieldError> unprocessable;  // -> 422

  bool any() const { return !invalid.empty() || !unprocessable.empty(); }

  Response response() const {
    if (!invalid.empty()) {
      auto all = invalid;
      all.insert(all.end(), unprocessable.begin(), unprocessable.end());
      return {400, error_body("invalid request", all)};
    }
    return {422, error_body("unprocessable request", unprocessable)};
  }
};

inline std::optional<ActivityLevel> parse_activity(const json& j, const std::string& field, RequestErrors& errs) {
  if (j.is_string()) {
    auto lbl = parse_activity_label(j.get<std::string>());
    if (!lbl) {
      errs.invalid.push_back({field, "unknown activity label"});
      return std::nullopt;
    }
    return ActivityLevel::of(*lbl);
  }
  if (j.is_number() && j.get<double>() > 0.0) return ActivityLevel::custom(j.get<double>());
  errs.invalid.push_back({field, "expected an activity label or a positive intake in liters/hour"});
  return std::nullopt;
}

inline std::optional<Segment> parse_segment(const json& j, const std::string& field, RequestErrors& errs) {
  if (!j.is_object()) {
    errs.invalid.push_back({field, "segment must be an object"});
    return std::nullopt;
  }
  Segment seg;
  if (!j.contains("mode") || !j["mode"].is_string()) {
    errs.invalid.push_back({field + ".mode", "required string"});
    return std::nullopt;
  }
  auto mode = parse_mode(j["mode"].get<std::string>());
  if (!mode) {
    errs.unprocessable.push_back({field + ".mode", "unknown mode '" + j["mode"].get<std::string>() + "'"});
    return std::nullopt;
  }
  seg.mode = *mode;

  int durations = 0;
  for (const char* key : {"hours", "minutes", "distance_m", "stops"}) {
    if (!j.contains(key)) continue;
    ++durations;
    const auto& v = j[key];
    const std::string f = field + "." + key;
    if (!v.is_number()) {
      errs.invalid.push_back({f, "must be a number"});
      return std::nullopt;
    }
    const double x = v.get<double>();
    const std::string k = key;
    if (k == "hours") seg.duration = ExplicitHours{x};
    else if (k == "minutes") seg.duration = ExplicitHours{x / 60.0};
    else if (k == "distance_m") seg.duration = WalkDistance{x};
    else {
      if (!v.is_number_integer()) {
        errs.invalid.push_back({f, "must be an integer"});
        return std::nullopt;
      }
      seg.duration = TransitStops{v.get<int>()};
    }
  }
  if (durations != 1) {
    errs.invalid.push_back({field, "exactly one of hours, minutes, distance_m, stops is required"});
    return std::nullopt;
  }
  if (j.contains("activity")) {
    auto a = parse_activity(j["activity"], field + ".activity", errs);
    if (!a) return std::nullopt;
    seg.activity_override = a;
  }
  try {
    seg.validate();
  } catch (const ValidationError& e) {
    errs.invalid.push_back({field, e.what()});
    return std::nullopt;
  }
  return seg;
}

inline std::vector<Route> parse_routes_json(const json& arr, RequestErrors& errs) {
  std::vector<Route> routes;
  if (!arr.is_array()) {
    errs.invalid.push_back({"routes", "must be an array"});
    return routes;
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string field = "routes[" + std::to_string(i) + "]";
    const auto& r = arr[i];
    if (!r.is_object()) {
      errs.invalid.push_back({field, "route must be an object"});
      continue;
    }
    Route route;
    if (!r.contains("id") || !r["id"].is_string() || r["id"].get<std::string>().empty()) {
      errs.invalid.push_back({field + ".id", "required non-empty string"});
    } else {
      route.id = r["id"].get<std::string>();
    }
    if (r.contains("label")) {
      if (r["label"].is_string()) route.label = r["label"].get<std::string>();
      else errs.invalid.push_back({field + ".label", "must be a string"});
    }
    if (!r.contains("segments") || !r["segments"].is_array() || r["segments"].empty()) {
      errs.invalid.push_back({field + ".segments", "required non-empty array"});
      continue;
    }
    const auto& segs = r["segments"];
    for (std::size_t s = 0; s < segs.size(); ++s) {
      auto seg = parse_segment(segs[s], field + ".segments[" + std::to_string(s) + "]", errs);
      if (seg) route.segments.push_back(*seg);
    }
    routes.push_back(std::move(route));
  }
  return routes;
}

inline std::optional<double> parse_prevalence(const json& j, RequestErrors& errs) {
  if (j.is_number()) {
    const double y = j.get<double>();
    if (y >= 0.0 && y <= 1.0) return y;
    errs.invalid.push_back({"prevalence", "fraction must lie in [0,1]"});
    return std::nullopt;
  }
  if (j.is_object() && j.contains("active_cases") && j.contains("population") &&
      j["active_cases"].is_number_integer() && j["population"].is_number_integer()) {
    try {
      return prevalence_fraction({j["active_cases"].get<std::int64_t>(), j["population"].get<std::int64_t>()});
    } catch (const DomainError& e) {
      errs.invalid.push_back({"prevalence", e.what()});
      return std::nullopt;
    }
  }
  errs.invalid.push_back({"prevalence", "expected a fraction or {active_cases, population} integers"});
  return std::nullopt;
}

inline std::optional<json> parse_body(const std::string& body, Response& fail) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) {
      fail = {400, error_body("request body must be a JSON object")};
      return std::nullopt;
    }
    return j;
  } catch (const json::parse_error& e) {
    fail = {400, error_body(std::string("malformed JSON: ") + e.what())};
    return std::nullopt;
  }
}

}  // namespace detail

/// Stateless request handlers over an immutable preset set.
class Service {
 public:
  explicit Service(PresetSet presets) : presets_(std::move(presets)) {}

  const PresetSet& presets() const noexcept { return presets_; }

  Response health() const { return {200, {{"status", "ok"}, {"engine_version", kEngineVersion}}}; }

  Response get_presets() const { return {200, presets_json(presets_)}; }

  Response score(const std::string& body) const {
    Response fail;
    auto req = detail::parse_body(body, fail);
    if (!req) return fail;

    detail::RequestErrors errs;
    std::vector<Route> routes;
    if (req->contains("routes_text")) {
      if (!(*req)["routes_text"].is_string()) {
        errs.invalid.push_back({"routes_text", "must be a string"});
      } else {
        try {
          routes = parse_routes((*req)["routes_text"].get<std::string>(), "routes_text");
        } catch (const ParseError& e) {
          errs.invalid.push_back({"routes_text", e.what()});
        }
      }
    } else if (req->contains("routes")) {
      routes = detail::parse_routes_json((*req)["routes"], errs);
    } else {
      errs.invalid.push_back({"routes", "required"});
    }

    EngineConfig cfg;
    if (req->contains("prevalence")) cfg.prevalence = detail::parse_prevalence((*req)["prevalence"], errs);
    if (req->contains("derived")) {
      if ((*req)["derived"].is_boolean()) {
        cfg.rate_mode = (*req)["derived"].get<bool>() ? RateMode::derived : RateMode::exact;
      } else {
        errs.invalid.push_back({"derived", "must be a boolean"});
      }
    }
    for (auto [key, target] : {std::pair{"walking_speed_kmh", &cfg.walking_speed_kmh},
                               std::pair{"minutes_per_stop", &cfg.minutes_per_stop}}) {
      if (!req->contains(key)) continue;
      const auto& v = (*req)[key];
      if (v.is_number() && v.get<double>() > 0.0) *target = v.get<double>();
      else errs.invalid.push_back({key, "must be a positive number"});
    }
    if (!errs.any() && routes.empty()) errs.invalid.push_back({"routes", "no routes"});
    if (errs.any()) return errs.response();

    for (const auto& r : routes) {
      for (const auto& s : r.segments) {
        if (!presets_.contains(s.mode)) {
          errs.unprocessable.push_back({"routes", "no preset for mode '" + std::string(to_string(s.mode)) + "'"});
          return errs.response();
        }
      }
    }
    try {
      return {200, score_response(rank_routes(routes, presets_, cfg), presets_, cfg)};
    } catch (const Error& e) {
      return {422, error_body(e.what())};
    }
  }

  Response sweep(const std::string& body) const {
    Response fail;
    auto req = detail::parse_body(body, fail);
    if (!req) return fail;
    detail::RequestErrors errs;

    auto number = [&](const char* key, double def) {
      if (!req->contains(key)) return def;
      const auto& v = (*req)[key];
      if (v.is_number() && v.get<double>() > 0.0) return v.get<double>();
      errs.invalid.push_back({key, "must be a positive number"});
      return def;
    };
    auto list = [&](const char* key, std::vector<double> def, bool allow_zero) {
      if (!req->contains(key)) return def;
      const auto& v = (*req)[key];
      std::vector<double> out;
      if (!v.is_array() || v.empty()) {
        errs.invalid.push_back({key, "must be a non-empty array of numbers"});
        return def;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        const bool ok = v[i].is_number() && (allow_zero ? v[i].get<double>() >= 0.0 : v[i].get<double>() > 0.0);
        if (!ok) {
          errs.invalid.push_back({std::string(key) + "[" + std::to_string(i) + "]", "invalid value"});
          continue;
        }
        out.push_back(v[i].get<double>());
      }
      return out;
    };

    const double width = number("width_m", 4.0);
    const double hours = number("hours", 1.0);
    const auto lengths = list("lengths_m", default_sweep_lengths(), false);
    const auto densities = list("densities", default_sweep_densities(), true);
    std::optional<double> prevalence;
    if (req->contains("prevalence")) prevalence = detail::parse_prevalence((*req)["prevalence"], errs);
    std::optional<ActivityLevel> activity;
    if (req->contains("activity")) activity = detail::parse_activity((*req)["activity"], "activity", errs);
    if (errs.any()) return errs.response();

    try {
      const auto& walking = presets_.at(Mode::walking);
      const double y = prevalence.value_or(presets_.reference_fraction());
      auto pts = walking_sweep(walking, width, lengths, densities, hours, activity.value_or(walking.default_activity), y);
      return {200, sweep_json(pts, width, hours, y)};
    } catch (const Error& e) {
      return {422, error_body(e.what())};
    }
  }

  static std::vector<double> default_sweep_lengths() {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    return v;
  }

  static std::vector<double> default_sweep_densities() { return {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}; }

  static json sweep_json(const std::vector<SweepPoint>& pts, double width, double hours, double prevalence) {
    json arr = json::array();
    for (const auto& p : pts) {
      arr.push_back({{"length_m", p.length_m}, {"density", p.density}, {"probability", p.probability}});
    }
    return {{"width_m", width}, {"hours", hours}, {"prevalence", prevalence}, {"points", std::move(arr)}};
  }

 private:
  PresetSet presets_;
};

}  // namespace routerisk::service
