#pragma once

// routerisk command line: score, calibrate, simulate, sweep, serve.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "routerisk/calibration.hpp"
#include "routerisk/grid_sim.hpp"
#include "routerisk/http_server.hpp"
#include "routerisk/presets.hpp"
#include "routerisk/route_engine.hpp"
#include "routerisk/service.hpp"

namespace routerisk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

namespace detail {

inline PresetSet presets_from(const std::string& path) { return path.empty() ? builtin_presets() : load_presets(path); }

inline std::string num(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

inline void print_reports(std::ostream& out, const std::vector<RiskReport>& ranked) {
  out << std::left << std::setw(6) << "rank" << std::setw(14) << "route" << std::setw(14) << "total"
      << "label\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    out << std::left << std::setw(6) << (i + 1) << std::setw(14) << r.route_id << std::setw(14)
        << num(r.total.value()) << r.label << "\n";
    for (const auto& s : r.per_segment) {
      out << "      [" << s.index << "] " << std::setw(10) << to_string(s.mode) << " z=" << std::setw(12)
          << num(s.duration_hours) << " rate=" << std::setw(12) << num(s.rate.per_hour())
          << " p=" << num(s.probability.value()) << "\n";
    }
  }
}

inline std::vector<double> split_numbers(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = text::parse_double(text::trim(item));
    if (!v) throw ConfigError("not a number in list: '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Route infection-risk engine"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // score
  std::string route_file, presets_file;
  std::optional<double> prevalence;
  bool derived = false, best = false, as_json = false;
  double walk_speed = 5.0, stop_minutes = 3.0;
  auto* score = app.add_subcommand("score", "Score and rank the routes in a route file");
  score->add_option("routes", route_file, "Route document")->required();
  score->add_option("--presets", presets_file, "Preset file (default: built-in)");
  score->add_option("--prevalence", prevalence, "Carrier fraction in [0,1]")->check(CLI::Range(0.0, 1.0));
  score->add_flag("--derived", derived, "Derive rates from k(E), capacity and prevalence");
  score->add_flag("--best", best, "Print only the id of the lowest-risk route");
  score->add_flag("--json", as_json, "Emit the JSON score response");
  score->add_option("--walking-speed", walk_speed, "Walking speed in km/h")->check(CLI::PositiveNumber);
  score->add_option("--stop-minutes", stop_minutes, "Minutes between transit stops")->check(CLI::NonNegativeNumber);

  // calibrate
  std::string tables_dir;
  bool check = false;
  std::vector<std::string> envs;
  auto* calibrate = app.add_subcommand("calibrate", "Refit k(E) lines from calibration tables");
  calibrate->add_option("tables_dir", tables_dir, "Directory holding manifest.txt")->required();
  calibrate->add_flag("--check", check, "Compare against published fits; exit 1 on a breach");
  calibrate->add_option("--env", envs, "Restrict to these environments")->delimiter(',');

  // simulate
  std::string scene_file;
  int grid_m = 60, grid_l = 40, carriers = 10;
  std::optional<int> row;
  double cell_size = 1.0, hours = 1.0;
  std::optional<double> k_opt;
  long long trials = 100000;
  std::uint64_t seed = 1;
  bool emit_scene = false;
  auto* simulate = app.add_subcommand("simulate", "Grid-walk Monte Carlo against the closed form");
  simulate->add_option("--scene", scene_file, "Scene document (overrides grid options)");
  simulate->add_option("--m", grid_m, "Grid length in cells")->check(CLI::PositiveNumber);
  simulate->add_option("--l", grid_l, "Grid width in cells")->check(CLI::PositiveNumber);
  simulate->add_option("--carriers", carriers, "Number of carriers")->check(CLI::NonNegativeNumber);
  simulate->add_option("--row", row, "Walker row (default: middle)");
  simulate->add_option("--cell-size", cell_size, "Cell size in meters")->check(CLI::PositiveNumber);
  simulate->add_option("--hours", hours, "Total exposure in hours")->check(CLI::NonNegativeNumber);
  simulate->add_option("--k", k_opt, "Coefficient k < 0 (default: walking k at moderate activity)");
  simulate->add_option("--trials", trials, "Monte Carlo trials (>= 1000)");
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_flag("--emit-scene", emit_scene, "Print the scene document and exit");

  // sweep
  double width = 4.0, sweep_hours = 1.0;
  std::string lengths_csv, densities_csv, activity_label;
  std::optional<double> sweep_prev;
  std::string sweep_presets;
  auto* sweep = app.add_subcommand("sweep", "Walking probability by strip length and density (CSV)");
  sweep->add_option("--width", width, "Strip width in meters")->check(CLI::PositiveNumber);
  sweep->add_option("--hours", sweep_hours, "Exposure in hours")->check(CLI::PositiveNumber);
  sweep->add_option("--lengths", lengths_csv, "Comma-separated lengths in meters (default 1..100)");
  sweep->add_option("--densities", densities_csv, "Comma-separated persons/m^2");
  sweep->add_option("--activity", activity_label, "sitting | low | moderate | intense");
  sweep->add_option("--prevalence", sweep_prev, "Carrier fraction in [0,1]")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--presets", sweep_presets, "Preset file (default: built-in)");

  // serve
  int port = 8080;
  std::string host = "0.0.0.0";
  std::string serve_presets;
  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON service");
  auto* port_opt = serve->add_option("--port", port, "Port (env ROUTERISK_PORT)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--presets", serve_presets, "Preset file (default: built-in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*score) {
      const PresetSet presets = detail::presets_from(presets_file);
      auto routes = load_routes(route_file);
      if (routes.empty()) {
        err << "error: no routes in " << route_file << "\n";
        return kExitInputError;
      }
      EngineConfig cfg;
      cfg.prevalence = prevalence;
      cfg.rate_mode = derived ? RateMode::derived : RateMode::exact;
      cfg.walking_speed_kmh = walk_speed;
      cfg.minutes_per_stop = stop_minutes;
      auto ranked = rank_routes(routes, presets, cfg);
      if (best) out << ranked.front().route_id << "\n";
      else if (as_json) out << service::score_response(ranked, presets, cfg).dump(2) << "\n";
      else detail::print_reports(out, ranked);
      return kExitOk;
    }

    if (*calibrate) {
      const auto manifest = calib::load_manifest(tables_dir);
      if (envs.empty()) envs = manifest.environments();
      bool all_ok = true;
      out << std::left << std::setw(10) << "env" << std::setw(8) << "points" << std::setw(16) << "slope_k1"
          << std::setw(14) << "intercept_k2" << std::setw(12) << "pearson" << std::setw(10) << "r_score"
          << (check ? "check" : "") << "\n";
      for (const auto& env : envs) {
        const auto fit = calib::fit_environment(manifest, env);
        out << std::left << std::setw(10) << env << std::setw(8) << fit.points << std::setw(16)
            << detail::num(fit.slope_k1, 9) << std::setw(14) << detail::num(fit.intercept_k2, 9) << std::setw(12)
            << detail::num(fit.pearson_r, 7) << std::setw(10) << detail::num(fit.r_score, 6);
        if (check) {
          const auto* pub = manifest.published_for(env);
          if (!pub) {
            out << "no published fit";
            all_ok = false;
          } else {
            auto c = calib::check_fit(fit, *pub);
            all_ok = all_ok && c.ok();
            out << (c.ok() ? "ok" : "BREACH");
            if (!c.ok()) {
              out << " (published " << detail::num(pub->slope, 9) << " " << detail::num(pub->intercept, 9) << " "
                  << detail::num(pub->pearson, 7) << " " << detail::num(pub->r_score, 4) << ";";
              if (!c.slope_ok) out << " slope";
              if (!c.intercept_ok) out << " intercept";
              if (!c.pearson_ok) out << " pearson";
              if (!c.r_score_ok) out << " r_score";
              out << ")";
            }
          }
        }
        out << "\n";
      }
      return check && !all_ok ? kExitCheckFailed : kExitOk;
    }

    if (*simulate) {
      std::optional<grid::Scene> scene;
      std::optional<grid::Path> path;
      if (!scene_file.empty()) {
        auto doc = grid::load_scene(scene_file);
        scene = doc.scene;
        path = doc.path;
      } else {
        const int walker_row = row.value_or(grid_l / 2);
        if (walker_row < 0 || walker_row >= grid_l) throw ConfigError("--row outside grid");
        auto excluded = grid::straight_path_cells(grid_m, walker_row);
        scene = grid::build_scene(grid_m, grid_l, carriers, cell_size, seed, excluded);
      }
      if (!path) path = grid::straight_path(*scene, row.value_or(scene->width_cells() / 2), hours);
      if (emit_scene) {
        out << grid::serialize_scene(*scene, &*path);
        return kExitOk;
      }
      const auto& walking = builtin_presets().at(Mode::walking);
      const double k = k_opt.value_or(k_of_activity(walking, ActivityLevel::of(ActivityLabel::moderate)));
      const auto closed = grid::closed_form_path_probability(*scene, *path, k);
      const auto mc = grid::simulate(*scene, *path, k, trials, seed);
      const double diff = mc.estimate - closed.value();
      out << "grid           " << scene->length_cells() << " x " << scene->width_cells() << " cells, "
          << scene->carriers().size() << " carriers, path " << path->cells.size() << " cells, z = "
          << detail::num(path->total_hours()) << " h\n";
      out << "k              " << detail::num(k) << "\n";
      out << "closed_form    " << detail::num(closed.value(), 9) << "\n";
      out << "monte_carlo    " << detail::num(mc.estimate, 9) << "\n";
      out << "std_error      " << detail::num(mc.std_error, 6) << "\n";
      out << "trials         " << mc.trials << "\n";
      const double sigmas = mc.std_error > 0 ? diff / mc.std_error : (diff == 0 ? 0.0 : INFINITY);
      out << "deviation      " << detail::num(sigmas, 4) << " sigma ("
          << (std::abs(sigmas) <= 3.0 ? "within 3 sigma" : "outside 3 sigma") << ")\n";
      try {
        out << "effective_c    " << detail::num(grid::effective_c(*scene, *path, k).per_hour(), 9) << " per hour\n";
      } catch (const DomainError&) {
        out << "effective_c    n/a (non-uniform dwell)\n";
      }
      return kExitOk;
    }

    if (*sweep) {
      const PresetSet presets = detail::presets_from(sweep_presets);
      const auto& walking = presets.at(Mode::walking);
      auto lengths = lengths_csv.empty() ? service::Service::default_sweep_lengths() : detail::split_numbers(lengths_csv);
      auto densities =
          densities_csv.empty() ? service::Service::default_sweep_densities() : detail::split_numbers(densities_csv);
      ActivityLevel activity = walking.default_activity;
      if (!activity_label.empty()) {
        auto lbl = parse_activity_label(activity_label);
        if (!lbl) throw ConfigError("unknown activity '" + activity_label + "'");
        activity = ActivityLevel::of(*lbl);
      }
      const double y = sweep_prev.value_or(presets.reference_fraction());
      auto pts = walking_sweep(walking, width, lengths, densities, sweep_hours, activity, y);
      out << "length_m,density,probability\n";
      out << std::setprecision(10);
      for (const auto& p : pts) out << p.length_m << "," << p.density << "," << p.probability << "\n";
      return kExitOk;
    }

    if (*serve) {
      if (port_opt->count() == 0) {
        if (const char* env = std::getenv("ROUTERISK_PORT")) {
          auto v = text::parse_int(env);
          if (!v || *v < 0 || *v > 65535) throw ConfigError("invalid ROUTERISK_PORT");
          port = static_cast<int>(*v);
        }
      }
      service::Service svc(detail::presets_from(serve_presets));
      httplib::Server server;
      service::mount(server, svc);
      out << "listening on " << host << ":" << port << std::endl;
      if (!server.listen(host, port)) {
        err << "error: cannot listen on " << host << ":" << port << "\n";
        return kExitInputError;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace routerisk::cli
