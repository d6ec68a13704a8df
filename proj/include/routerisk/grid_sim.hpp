#pragma once

// Grid-walk exposure model. A susceptible walker crosses cells of an
// m x l lattice while n carriers sit in fixed cells; the per-cell hazard is
// k * T_j * sum_i 1/r_ij^2 with k < 0, and cells are independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "routerisk/errors.hpp"
#include "routerisk/random.hpp"
#include "routerisk/risk_model.hpp"
#include "routerisk/text.hpp"

namespace routerisk::grid {

struct Cell {
  int col = 0;  // along the grid length, 0 <= col < m
  int row = 0;  // across the grid width, 0 <= row < l
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

class Scene {
 public:
  Scene(int length_cells, int width_cells, double cell_size_m, std::vector<Cell> carriers,
        std::uint64_t seed = 0)
      : m_(length_cells), l_(width_cells), cell_size_(cell_size_m), carriers_(std::move(carriers)),
        seed_(seed) {
    if (m_ <= 0 || l_ <= 0) throw DomainError("grid dimensions must be > 0");
    if (!(cell_size_ > 0.0)) throw DomainError("cell size must be > 0");
    std::set<Cell> seen;
    for (const Cell& c : carriers_) {
      if (!contains(c)) throw DomainError("carrier outside grid");
      if (!seen.insert(c).second) throw DomainError("duplicate carrier position");
    }
  }

  int length_cells() const noexcept { return m_; }
  int width_cells() const noexcept { return l_; }
  double cell_size_m() const noexcept { return cell_size_; }
  std::span<const Cell> carriers() const noexcept { return carriers_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool contains(Cell c) const noexcept { return c.col >= 0 && c.col < m_ && c.row >= 0 && c.row < l_; }

  /// Center-to-center distance in meters.
  double distance_m(Cell a, Cell b) const noexcept {
    return cell_size_ * std::hypot(static_cast<double>(a.col - b.col), static_cast<double>(a.row - b.row));
  }

  /// sum_i 1 / r_i^2 over carriers, in 1/m^2.
  double inverse_square_sum(Cell at) const {
    double s = 0.0;
    for (const Cell& c : carriers_) {
      if (c == at) throw SingularityError("walker cell coincides with a carrier");
      const double r = distance_m(at, c);
      s += 1.0 / (r * r);
    }
    return s;
  }

 private:
  int m_;
  int l_;
  double cell_size_;
  std::vector<Cell> carriers_;
  std::uint64_t seed_;
};

struct Path {
  std::vector<Cell> cells;
  std::vector<double> dwell_hours;

  double total_hours() const noexcept {
    double z = 0.0;
    for (double t : dwell_hours) z += t;
    return z;
  }

  void validate(const Scene& scene) const {
    if (cells.size() != dwell_hours.size()) throw DomainError("path cells and dwell times differ in length");
    for (const Cell& c : cells) {
      if (!scene.contains(c)) throw DomainError("path cell outside grid");
    }
    for (double t : dwell_hours) {
      if (!(t >= 0.0)) throw DomainError("dwell time must be >= 0");
    }
  }
};

/// Walk along `row` through every column, total time split evenly (T_j = z/m).
inline Path straight_path(const Scene& scene, int row, double total_hours) {
  if (row < 0 || row >= scene.width_cells()) throw DomainError("path row outside grid");
  if (!(total_hours >= 0.0)) throw DomainError("exposure time must be >= 0");
  Path p;
  const int m = scene.length_cells();
  p.cells.reserve(m);
  for (int j = 0; j < m; ++j) p.cells.push_back({j, row});
  p.dwell_hours.assign(m, total_hours / m);
  return p;
}

inline std::vector<Cell> straight_path_cells(int length_cells, int row) {
  std::vector<Cell> cells;
  for (int j = 0; j < length_cells; ++j) cells.push_back({j, row});
  return cells;
}

namespace detail {
inline void check_k(double k) {
  if (!(k <= 0.0) || !std::isfinite(k)) throw DomainError("grid coefficient k must be <= 0");
}
}  // namespace detail

/// 1 - exp(k * T_j * sum_i 1/r_ij^2)
inline Probability per_cell_probability(const Scene& scene, Cell cell, double k, double dwell_hours) {
  detail::check_k(k);
  if (!(dwell_hours >= 0.0)) throw DomainError("dwell time must be >= 0");
  const double s = scene.inverse_square_sum(cell);
  return Probability(-std::expm1(k * dwell_hours * s));
}

/// Sum of per-cell exponents k * T_j * sum_i 1/r_ij^2 along the path.
inline double path_exponent(const Scene& scene, const Path& path, double k) {
  detail::check_k(k);
  path.validate(scene);
  double e = 0.0;
  for (std::size_t j = 0; j < path.cells.size(); ++j) {
    e += k * path.dwell_hours[j] * scene.inverse_square_sum(path.cells[j]);
  }
  return e;
}

/// 1 - prod_j (1 - p_j), evaluated as 1 - exp(sum of exponents).
inline Probability closed_form_path_probability(const Scene& scene, const Path& path, double k) {
  return Probability(-std::expm1(path_exponent(scene, path, k)));
}

/// Time-independent hazard for a uniform-dwell path: -sum_j sum_i k / (m r_ij^2).
inline HazardRate effective_c(const Scene& scene, const Path& path, double k) {
  detail::check_k(k);
  path.validate(scene);
  if (path.cells.empty()) return HazardRate(0.0);
  const double first = path.dwell_hours.front();
  for (double t : path.dwell_hours) {
    if (std::abs(t - first) > 1e-12 * std::max(1.0, std::abs(first))) {
      throw DomainError("effective_c requires uniform dwell times");
    }
  }
  const double m = static_cast<double>(path.cells.size());
  double c = 0.0;
  for (const Cell& cell : path.cells) c += k * scene.inverse_square_sum(cell) / m;
  return HazardRate::from_exponent(c);
}

struct SimulationResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  std::int64_t infected = 0;
};

inline constexpr std::int64_t kMinTrials = 1000;

/// Monte Carlo over independent per-cell Bernoulli draws. Trials are split
/// into a fixed number of substreams, so the result does not depend on the
/// number of worker threads.
inline SimulationResult simulate(const Scene& scene, const Path& path, double k, std::int64_t trials,
                                 std::uint64_t seed, unsigned threads = 0) {
  if (trials < kMinTrials) throw ConfigError("simulate needs at least 1000 trials");
  detail::check_k(k);
  path.validate(scene);

  std::vector<double> p(path.cells.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = per_cell_probability(scene, path.cells[j], k, path.dwell_hours[j]).value();
  }

  constexpr std::int64_t kChunks = 16;
  std::vector<std::int64_t> hits(kChunks, 0);
  auto run_chunk = [&](std::int64_t chunk) {
    const std::int64_t begin = trials * chunk / kChunks;
    const std::int64_t end = trials * (chunk + 1) / kChunks;
    RandomStream rng(seed, static_cast<std::uint64_t>(chunk));
    std::int64_t count = 0;
    for (std::int64_t t = begin; t < end; ++t) {
      for (double pj : p) {
        if (rng.bernoulli(pj)) {
          ++count;
          break;
        }
      }
    }
    hits[chunk] = count;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, kChunks);
  if (threads <= 1) {
    for (std::int64_t c = 0; c < kChunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t c = w; c < kChunks; c += threads) run_chunk(c);
      });
    }
  }

  SimulationResult r;
  r.trials = trials;
  for (auto h : hits) r.infected += h;
  r.estimate = static_cast<double>(r.infected) / static_cast<double>(trials);
  r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(trials));
  return r;
}

/// Place n carriers uniformly without replacement among cells not listed in
/// `excluded`.
inline Scene build_scene(int length_cells, int width_cells, int n, double cell_size_m, std::uint64_t seed,
                         std::span<const Cell> excluded) {
  if (length_cells <= 0 || width_cells <= 0) throw DomainError("grid dimensions must be > 0");
  if (!(cell_size_m > 0.0)) throw DomainError("cell size must be > 0");
  if (n < 0) throw DomainError("carrier count must be >= 0");
  std::set<Cell> skip(excluded.begin(), excluded.end());
  std::vector<Cell> free;
  free.reserve(static_cast<std::size_t>(length_cells) * width_cells);
  for (int col = 0; col < length_cells; ++col) {
    for (int row = 0; row < width_cells; ++row) {
      if (!skip.contains(Cell{col, row})) free.push_back({col, row});
    }
  }
  if (static_cast<std::size_t>(n) > free.size()) {
    throw CapacityError("cannot place " + std::to_string(n) + " carriers in " +
                        std::to_string(free.size()) + " free cells");
  }
  RandomStream rng(seed);
  // partial Fisher-Yates
  for (int i = 0; i < n; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(free.size() - i));
    std::swap(free[i], free[j]);
  }
  free.resize(n);
  return Scene(length_cells, width_cells, cell_size_m, std::move(free), seed);
}

inline Scene build_scene(int length_cells, int width_cells, int n, double cell_size_m, std::uint64_t seed) {
  return build_scene(length_cells, width_cells, n, cell_size_m, seed, {});
}

// --- fixture format --------------------------------------------------------
//
//   format = routerisk-scene
//   version = 1
//   grid = <m> <l>
//   cell_size_m = <meters>
//   seed = <int>
//   carrier = <col> <row>          (repeated)
//   step = <col> <row> <hours>     (repeated, optional path)

struct SceneDocument {
  Scene scene;
  std::optional<Path> path;
};

inline SceneDocument parse_scene(std::string_view doc, const std::string& source = "scene") {
  std::optional<int> m, l;
  double cell = 1.0;
  std::uint64_t seed = 0;
  bool saw_format = false;
  std::vector<Cell> carriers;
  Path path;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(doc)) {
    ++line_no;
    auto line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    auto key = text::trim(line.substr(0, eq));
    auto vals = text::split_ws(text::trim(line.substr(eq + 1)));
    auto ints = [&](std::size_t count) {
      if (vals.size() != count) throw ParseError(source, line_no, "wrong number of values");
      std::vector<long long> out;
      for (std::size_t i = 0; i < count; ++i) {
        auto v = text::parse_int(vals[i]);
        if (!v) throw ParseError(source, line_no, "not an integer: '" + std::string(vals[i]) + "'");
        out.push_back(*v);
      }
      return out;
    };
    if (key == "format") {
      if (vals.size() != 1 || vals[0] != "routerisk-scene") throw ParseError(source, line_no, "unknown format");
      saw_format = true;
    } else if (key == "version") {
      if (ints(1)[0] != 1) throw ParseError(source, line_no, "unsupported version");
    } else if (key == "grid") {
      auto v = ints(2);
      m = static_cast<int>(v[0]);
      l = static_cast<int>(v[1]);
    } else if (key == "cell_size_m") {
      auto d = vals.size() == 1 ? text::parse_double(vals[0]) : std::nullopt;
      if (!d) throw ParseError(source, line_no, "bad cell size");
      cell = *d;
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(ints(1)[0]);
    } else if (key == "carrier") {
      auto v = ints(2);
      carriers.push_back({static_cast<int>(v[0]), static_cast<int>(v[1])});
    } else if (key == "step") {
      if (vals.size() != 3) throw ParseError(source, line_no, "step needs col row hours");
      auto c = text::parse_int(vals[0]);
      auto r = text::parse_int(vals[1]);
      auto h = text::parse_double(vals[2]);
      if (!c || !r || !h) throw ParseError(source, line_no, "bad step");
      path.cells.push_back({static_cast<int>(*c), static_cast<int>(*r)});
      path.dwell_hours.push_back(*h);
    } else {
      throw ParseError(source, line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!saw_format) throw ParseError(source, 0, "missing 'format = routerisk-scene'");
  if (!m || !l) throw ParseError(source, 0, "missing 'grid'");
  try {
    Scene scene(*m, *l, cell, std::move(carriers), seed);
    std::optional<Path> p;
    if (!path.cells.empty()) {
      path.validate(scene);
      p = std::move(path);
    }
    return {std::move(scene), std::move(p)};
  } catch (const DomainError& e) {
    throw ParseError(source, 0, e.what());
  }
}

inline std::string serialize_scene(const Scene& scene, const Path* path = nullptr) {
  std::ostringstream out;
  out << "format = routerisk-scene\nversion = 1\n";
  out << "grid = " << scene.length_cells() << " " << scene.width_cells() << "\n";
  out << "cell_size_m = " << text::format_double(scene.cell_size_m()) << "\n";
  out << "seed = " << scene.seed() << "\n";
  for (const Cell& c : scene.carriers()) out << "carrier = " << c.col << " " << c.row << "\n";
  if (path) {
    for (std::size_t j = 0; j < path->cells.size(); ++j) {
      out << "step = " << path->cells[j].col << " " << path->cells[j].row << " "
          << text::format_double(path->dwell_hours[j]) << "\n";
    }
  }
  return out.str();
}

inline SceneDocument load_scene(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scene file '" + file + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), file);
}

}  // namespace routerisk::grid
