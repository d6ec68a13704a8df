#pragma once

// Environment preset tables and their key-value file format.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "routerisk/errors.hpp"
#include "routerisk/risk_model.hpp"
#include "routerisk/text.hpp"

namespace routerisk {

inline constexpr std::string_view kPresetFormat = "routerisk-presets";
inline constexpr int kPresetFormatVersion = 1;

struct PresetSet {
  int version = kPresetFormatVersion;
  /// Prevalence at which the canonical rates and counts were computed.
  PrevalenceModel reference_prevalence;
  std::map<Mode, EnvironmentProfile> profiles;

  const EnvironmentProfile& at(Mode m) const {
    auto it = profiles.find(m);
    if (it == profiles.end()) {
      throw ConfigError("no preset for mode '" + std::string(to_string(m)) + "'");
    }
    return it->second;
  }

  bool contains(Mode m) const { return profiles.contains(m); }

  double reference_fraction() const { return prevalence_fraction(reference_prevalence); }
};

namespace detail {

struct PartialProfile {
  std::optional<double> length_m, width_m, k1, k2, k, r_mean_m, n_infected, rate;
  std::optional<long long> capacity;
  std::optional<ActivityLabel> activity;
  std::size_t first_line = 0;
};

}  // namespace detail

/// Parse a preset document. Every listed mode must be fully specified.
inline PresetSet parse_presets(std::string_view text, const std::string& source = "presets") {
  PresetSet out;
  std::optional<long long> active, population, version;
  bool saw_format = false;
  std::map<Mode, detail::PartialProfile> partial;

  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(text)) {
    ++line_no;
    std::string_view line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    std::string_view key = text::trim(line.substr(0, eq));
    std::string_view value = text::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(source, line_no, "empty key or value");

    auto number = [&](std::string_view v) {
      auto d = text::parse_double(v);
      if (!d) throw ParseError(source, line_no, "not a number: '" + std::string(v) + "'");
      return *d;
    };
    auto integer = [&](std::string_view v) {
      auto i = text::parse_int(v);
      if (!i) throw ParseError(source, line_no, "not an integer: '" + std::string(v) + "'");
      return *i;
    };

    if (key == "format") {
      if (value != kPresetFormat) throw ParseError(source, line_no, "unknown format");
      saw_format = true;
      continue;
    }
    if (key == "version") {
      version = integer(value);
      if (*version != kPresetFormatVersion) {
        throw ParseError(source, line_no, "unsupported preset version " + std::string(value));
      }
      continue;
    }
    if (key == "prevalence.active_cases") {
      active = integer(value);
      continue;
    }
    if (key == "prevalence.population") {
      population = integer(value);
      continue;
    }

    auto dot = key.find('.');
    if (dot == std::string_view::npos) {
      throw ParseError(source, line_no, "unknown key '" + std::string(key) + "'");
    }
    auto mode = parse_mode(key.substr(0, dot));
    if (!mode) {
      throw ParseError(source, line_no, "unknown mode '" + std::string(key.substr(0, dot)) + "'");
    }
    std::string_view field = key.substr(dot + 1);
    auto& p = partial[*mode];
    if (p.first_line == 0) p.first_line = line_no;

    if (field == "length_m") p.length_m = number(value);
    else if (field == "width_m") p.width_m = number(value);
    else if (field == "capacity") p.capacity = integer(value);
    else if (field == "k1") p.k1 = number(value);
    else if (field == "k2") p.k2 = number(value);
    else if (field == "k") p.k = number(value);
    else if (field == "r_mean_m") p.r_mean_m = number(value);
    else if (field == "n_infected") p.n_infected = number(value);
    else if (field == "rate") p.rate = number(value);
    else if (field == "activity") {
      p.activity = parse_activity_label(value);
      if (!p.activity) throw ParseError(source, line_no, "unknown activity '" + std::string(value) + "'");
    } else {
      throw ParseError(source, line_no, "unknown field '" + std::string(field) + "'");
    }
  }

  if (!saw_format) throw ParseError(source, 0, "missing 'format = routerisk-presets'");
  if (!version) throw ParseError(source, 0, "missing 'version'");
  if (!active || !population) throw ParseError(source, 0, "missing prevalence.active_cases/population");
  out.version = static_cast<int>(*version);
  out.reference_prevalence = {*active, *population};
  try {
    (void)prevalence_fraction(out.reference_prevalence);
  } catch (const DomainError& e) {
    throw ParseError(source, 0, std::string("invalid prevalence: ") + e.what());
  }
  if (partial.empty()) throw ParseError(source, 0, "no environments defined");

  for (auto& [mode, p] : partial) {
    auto fail = [&, mode = mode, line = p.first_line](const std::string& msg) {
      throw ParseError(source, line, std::string(to_string(mode)) + ": " + msg);
    };
    if (!p.length_m || !p.width_m || !p.capacity || !p.r_mean_m || !p.n_infected || !p.rate) {
      fail("requires length_m, width_m, capacity, r_mean_m, n_infected and rate");
    }
    const bool has_line = p.k1 || p.k2;
    if (has_line == p.k.has_value()) fail("exactly one of (k1, k2) or k must be given");
    if (has_line && !(p.k1 && p.k2)) fail("k1 and k2 must both be given");
    if (!(*p.length_m > 0 && *p.width_m > 0)) fail("dimensions must be > 0");
    if (*p.capacity <= 0) fail("capacity must be > 0");
    if (!(*p.r_mean_m > 0)) fail("r_mean_m must be > 0");
    if (!(*p.n_infected >= 0)) fail("n_infected must be >= 0");
    if (!(*p.rate >= 0) || !std::isfinite(*p.rate)) fail("rate must be >= 0");

    EnvironmentProfile prof;
    prof.mode = mode;
    prof.length_m = *p.length_m;
    prof.width_m = *p.width_m;
    prof.capacity = static_cast<int>(*p.capacity);
    if (has_line) prof.k_model = KLine{*p.k1, *p.k2};
    else prof.k_model = FixedK{*p.k};
    prof.canonical_r_mean_m = *p.r_mean_m;
    prof.canonical_n_infected = *p.n_infected;
    prof.canonical_rate = HazardRate(*p.rate);
    prof.default_activity = ActivityLevel::of(p.activity.value_or(ActivityLabel::low));
    out.profiles.emplace(mode, prof);
  }
  return out;
}

inline PresetSet load_presets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open preset file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_presets(ss.str(), path);
}

/// Canonical preset document; parse_presets(serialize_presets(p)) == p.
inline std::string serialize_presets(const PresetSet& set) {
  std::ostringstream out;
  out << "format = " << kPresetFormat << "\n";
  out << "version = " << set.version << "\n";
  out << "prevalence.active_cases = " << set.reference_prevalence.active_cases << "\n";
  out << "prevalence.population = " << set.reference_prevalence.population << "\n";
  for (const auto& [mode, p] : set.profiles) {
    const std::string m(to_string(mode));
    out << "\n";
    out << m << ".length_m = " << text::format_double(p.length_m) << "\n";
    out << m << ".width_m = " << text::format_double(p.width_m) << "\n";
    out << m << ".capacity = " << p.capacity << "\n";
    if (const auto* line = std::get_if<KLine>(&p.k_model)) {
      out << m << ".k1 = " << text::format_double(line->k1) << "\n";
      out << m << ".k2 = " << text::format_double(line->k2) << "\n";
    } else {
      out << m << ".k = " << text::format_double(std::get<FixedK>(p.k_model).k) << "\n";
    }
    out << m << ".r_mean_m = " << text::format_double(p.canonical_r_mean_m) << "\n";
    out << m << ".n_infected = " << text::format_double(p.canonical_n_infected) << "\n";
    out << m << ".rate = " << text::format_double(p.canonical_rate.per_hour()) << "\n";
    if (p.default_activity.label) {
      out << m << ".activity = " << to_string(*p.default_activity.label) << "\n";
    }
  }
  return out.str();
}

/// Built-in presets; identical to data/presets.kv.
inline constexpr std::string_view kBuiltinPresets = R"(format = routerisk-presets
version = 1
prevalence.active_cases = 727550
prevalence.population = 84055000

walking.length_m = 20
walking.width_m = 12
walking.capacity = 40
walking.k1 = -0.00143853
walking.k2 = 0.71455401
walking.r_mean_m = 4.95
walking.n_infected = 0.34656
walking.rate = 0.025299
walking.activity = moderate

subway.length_m = 19.52
subway.width_m = 2.6
subway.capacity = 180
subway.k1 = -0.00180107
subway.k2 = 0.82402941
subway.r_mean_m = 4.75
subway.n_infected = 1.55808
subway.rate = 0.040155
subway.activity = low

brt.length_m = 17.9
brt.width_m = 2.55
brt.capacity = 150
brt.k1 = -0.00149112
brt.k2 = 0.38875338
brt.r_mean_m = 4.36
brt.n_infected = 1.2984
brt.rate = 0.052831
brt.activity = low

city_bus.length_m = 12
city_bus.width_m = 2.55
city_bus.capacity = 80
city_bus.k1 = -0.00220276
city_bus.k2 = 0.56565911
city_bus.r_mean_m = 2.98
city_bus.n_infected = 0.69248
city_bus.rate = 0.089912
city_bus.activity = low

car.length_m = 1.5
car.width_m = 1.2
car.capacity = 4
car.k = -2.729480
car.r_mean_m = 0.48
car.n_infected = 0.034624
car.rate = 0.407105
car.activity = low
)";

inline const PresetSet& builtin_presets() {
  static const PresetSet set = parse_presets(kBuiltinPresets, "<builtin>");
  return set;
}

}  // namespace routerisk
