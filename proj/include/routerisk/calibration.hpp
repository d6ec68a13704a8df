#pragma once

// Re-derivation of k and k(E) from observed infection fractions: inversion
// of the single- and two-carrier hazard relations, dataset assembly from
// the table fixtures, Pearson correlation and OLS line fitting.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "routerisk/errors.hpp"
#include "routerisk/risk_model.hpp"
#include "routerisk/text.hpp"

namespace routerisk::calib {

inline constexpr double kSixFeetM = 1.8288;

namespace detail {
inline void check_inputs(double z, double f) {
  if (!(f > 0.0 && f < 1.0)) throw DomainError("infection fraction must lie in (0,1)");
  if (!(z > 0.0)) throw DomainError("duration must be > 0");
}
}  // namespace detail

/// k = (r^2 / z) ln(1 - f), one carrier at distance r.
inline double k_from_single(double r_m, double z_hours, double f) {
  detail::check_inputs(z_hours, f);
  if (!(r_m > 0.0)) throw DomainError("distance must be > 0");
  return r_m * r_m / z_hours * std::log1p(-f);
}

/// Two carriers at r1 and r2: k = r1^2 r2^2 / (z (r1^2 + r2^2)) ln(1 - f).
inline double k_from_pair(double r1_m, double r2_m, double z_hours, double f) {
  detail::check_inputs(z_hours, f);
  if (!(r1_m > 0.0 && r2_m > 0.0)) throw DomainError("distances must be > 0");
  if (std::isinf(r1_m)) return k_from_single(r2_m, z_hours, f);
  if (std::isinf(r2_m)) return k_from_single(r1_m, z_hours, f);
  const double a = r1_m * r1_m;
  const double b = r2_m * r2_m;
  // a*b/(a+b) written as 1/(1/a + 1/b) to stay finite for large radii
  return 1.0 / (1.0 / a + 1.0 / b) / z_hours * std::log1p(-f);
}

/// Car calibration with the exposure time in minutes: k = (60 r^2 / z) ln(1 - f).
inline double car_k_solve(double z_minutes, double f, double r_m) {
  return k_from_single(r_m, z_minutes / 60.0, f);
}

struct ObservationRow {
  double duration_hours = 0.0;
  double infection_fraction = 0.0;
  double room_area_m2 = 0.0;
  double separation_m = kSixFeetM;
  ActivityLevel activity;
  std::optional<double> published_k;
};

struct ObservationTable {
  std::string name;
  std::string environment;
  std::vector<ObservationRow> rows;
};

struct CalibrationPoint {
  double intake_lph = 0.0;
  double k = 0.0;
};

/// One point per row: (E of the row's activity, k from the inverted relation).
inline std::vector<CalibrationPoint> build_dataset(std::span<const ObservationTable> tables) {
  std::vector<CalibrationPoint> out;
  for (const auto& table : tables) {
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      const bool ok = row.infection_fraction > 0.0 && row.infection_fraction < 1.0 &&
                      row.duration_hours > 0.0 && row.room_area_m2 > 0.0 && row.separation_m > 0.0 &&
                      row.activity.air_intake_lph > 0.0;
      if (!ok) throw ParseError(table.name, 0, "invalid observation at row index " + std::to_string(i));
      out.push_back({row.activity.air_intake_lph,
                     k_from_single(row.separation_m, row.duration_hours, row.infection_fraction)});
    }
  }
  return out;
}

namespace detail {
struct Moments {
  double mean_x = 0.0, mean_y = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
};

inline Moments moments(std::span<const CalibrationPoint> pts) {
  Moments m;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    m.mean_x += p.intake_lph;
    m.mean_y += p.k;
  }
  m.mean_x /= n;
  m.mean_y /= n;
  for (const auto& p : pts) {
    const double dx = p.intake_lph - m.mean_x;
    const double dy = p.k - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}
}  // namespace detail

inline double pearson(std::span<const CalibrationPoint> pts) {
  if (pts.size() < 2) throw DegenerateDataError("pearson needs at least 2 points");
  const auto m = detail::moments(pts);
  if (m.sxx == 0.0 || m.syy == 0.0) throw DegenerateDataError("zero variance");
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

struct FitResult {
  double slope_k1 = 0.0;
  double intercept_k2 = 0.0;
  double pearson_r = 0.0;
  double r_score = 0.0;
  std::size_t points = 0;

  KLine line() const noexcept { return {slope_k1, intercept_k2}; }
};

/// Unweighted ordinary least squares of k on E over all points.
inline FitResult fit_line(std::span<const CalibrationPoint> pts) {
  if (pts.size() < 2) throw DegenerateDataError("fit needs at least 2 points");
  const auto m = detail::moments(pts);
  if (m.sxx == 0.0) throw DegenerateDataError("rank deficient: a single distinct activity level");
  FitResult r;
  r.points = pts.size();
  r.slope_k1 = m.sxy / m.sxx;
  r.intercept_k2 = m.mean_y - r.slope_k1 * m.mean_x;
  // A perfect horizontal fit has no correlation to speak of; report 0.
  r.pearson_r = m.syy == 0.0 ? 0.0 : std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
  r.r_score = r.pearson_r * r.pearson_r;
  return r;
}

// --- fixtures --------------------------------------------------------------

struct PublishedFit {
  std::string environment;
  double slope = 0.0;
  double intercept = 0.0;
  double pearson = 0.0;
  double r_score = 0.0;
};

struct Tolerances {
  double slope = 1e-7;
  double intercept = 1e-4;
  double pearson = 1e-4;
  double r_score = 1e-3;
};

struct FitCheck {
  bool slope_ok = false, intercept_ok = false, pearson_ok = false, r_score_ok = false;
  bool ok() const noexcept { return slope_ok && intercept_ok && pearson_ok && r_score_ok; }
};

inline FitCheck check_fit(const FitResult& fit, const PublishedFit& pub, const Tolerances& tol = {}) {
  return {std::abs(fit.slope_k1 - pub.slope) <= tol.slope,
          std::abs(fit.intercept_k2 - pub.intercept) <= tol.intercept,
          std::abs(fit.pearson_r - pub.pearson) <= tol.pearson,
          std::abs(fit.r_score - pub.r_score) <= tol.r_score};
}

struct Manifest {
  double separation_m = kSixFeetM;
  std::vector<ObservationTable> tables;
  std::vector<PublishedFit> published;

  std::vector<std::string> environments() const {
    std::vector<std::string> envs;
    for (const auto& t : tables) {
      if (std::find(envs.begin(), envs.end(), t.environment) == envs.end()) envs.push_back(t.environment);
    }
    return envs;
  }

  std::vector<ObservationTable> tables_for(const std::string& env) const {
    std::vector<ObservationTable> out;
    for (const auto& t : tables) {
      if (t.environment == env) out.push_back(t);
    }
    return out;
  }

  const PublishedFit* published_for(const std::string& env) const {
    for (const auto& p : published) {
      if (p.environment == env) return &p;
    }
    return nullptr;
  }
};

/// Table body: one row per line, `hours percent [published_k]`.
inline ObservationTable parse_table(std::string_view doc, const std::string& name, const std::string& env,
                                    ActivityLevel activity, double area_m2, double separation_m) {
  ObservationTable t{name, env, {}};
  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(doc)) {
    ++line_no;
    auto cols = text::split_ws(text::trim(text::strip_comment(raw)));
    if (cols.empty()) continue;
    if (cols.size() < 2 || cols.size() > 3) {
      throw ParseError(name, line_no, "row " + std::to_string(t.rows.size()) + ": expected 2 or 3 columns");
    }
    auto hours = text::parse_double(cols[0]);
    auto pct = text::parse_double(cols[1]);
    if (!hours || !pct) throw ParseError(name, line_no, "row " + std::to_string(t.rows.size()) + ": not a number");
    if (!(*hours > 0.0) || !(*pct > 0.0 && *pct < 100.0)) {
      throw ParseError(name, line_no,
                       "row " + std::to_string(t.rows.size()) + ": need hours > 0 and 0 < percent < 100");
    }
    ObservationRow row{*hours, *pct / 100.0, area_m2, separation_m, activity, std::nullopt};
    if (cols.size() == 3) {
      row.published_k = text::parse_double(cols[2]);
      if (!row.published_k) throw ParseError(name, line_no, "row " + std::to_string(t.rows.size()) + ": bad k");
    }
    t.rows.push_back(row);
  }
  return t;
}

namespace detail {
inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace detail

inline Manifest load_manifest(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) {
    throw ConfigError("no manifest.txt in '" + dir.string() + "'");
  }
  const std::string src = manifest_path.string();
  const std::string doc = detail::read_file(manifest_path);

  Manifest m;
  bool saw_format = false;
  struct Entry {
    std::string file, env;
    ActivityLevel activity;
    double area;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(doc)) {
    ++line_no;
    auto line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(src, line_no, "expected 'key = value'");
    auto key = text::trim(line.substr(0, eq));
    auto vals = text::split_ws(text::trim(line.substr(eq + 1)));
    if (key == "format") {
      if (vals.size() != 1 || vals[0] != "routerisk-calibration") throw ParseError(src, line_no, "unknown format");
      saw_format = true;
    } else if (key == "version") {
      if (vals.size() != 1 || vals[0] != "1") throw ParseError(src, line_no, "unsupported version");
    } else if (key == "separation_m") {
      auto v = vals.size() == 1 ? text::parse_double(vals[0]) : std::nullopt;
      if (!v || !(*v > 0.0)) throw ParseError(src, line_no, "bad separation");
      m.separation_m = *v;
    } else if (key == "table") {
      if (vals.size() != 4) throw ParseError(src, line_no, "table = <file> <env> <activity> <area>");
      auto act = parse_activity_label(vals[2]);
      auto area = text::parse_double(vals[3]);
      if (!act) throw ParseError(src, line_no, "unknown activity '" + std::string(vals[2]) + "'");
      if (!area || !(*area > 0.0)) throw ParseError(src, line_no, "bad area");
      entries.push_back({std::string(vals[0]), std::string(vals[1]), ActivityLevel::of(*act), *area, line_no});
    } else if (key == "published") {
      if (vals.size() != 5) throw ParseError(src, line_no, "published = <env> <slope> <intercept> <pearson> <r_score>");
      PublishedFit p{std::string(vals[0])};
      auto a = text::parse_double(vals[1]);
      auto b = text::parse_double(vals[2]);
      auto c = text::parse_double(vals[3]);
      auto d = text::parse_double(vals[4]);
      if (!a || !b || !c || !d) throw ParseError(src, line_no, "bad published fit");
      p.slope = *a;
      p.intercept = *b;
      p.pearson = *c;
      p.r_score = *d;
      m.published.push_back(p);
    } else {
      throw ParseError(src, line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!saw_format) throw ParseError(src, 0, "missing 'format = routerisk-calibration'");
  if (entries.empty()) throw ParseError(src, 0, "manifest lists no tables");

  std::vector<std::string> missing;
  for (const auto& e : entries) {
    if (!std::filesystem::exists(dir / e.file)) missing.push_back(e.file);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& f : missing) list += (list.empty() ? "" : ", ") + f;
    throw ConfigError("missing calibration tables: " + list);
  }
  for (const auto& e : entries) {
    const auto path = dir / e.file;
    m.tables.push_back(parse_table(detail::read_file(path), path.string(), e.env, e.activity, e.area,
                                   m.separation_m));
  }
  return m;
}

inline FitResult fit_environment(const Manifest& m, const std::string& env) {
  auto tables = m.tables_for(env);
  if (tables.empty()) throw ConfigError("no calibration tables for environment '" + env + "'");
  auto pts = build_dataset(tables);
  return fit_line(pts);
}

}  // namespace routerisk::calib
