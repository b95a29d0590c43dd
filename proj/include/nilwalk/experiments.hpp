#ifndef NILWALK__EXPERIMENTS_HPP_
#define NILWALK__EXPERIMENTS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "albanese.hpp"
#include "io.hpp"
#include "lattice_oracle.hpp"
#include "quotient_graph.hpp"
#include "random.hpp"
#include "rate.hpp"
#include "walker.hpp"

#ifndef NILWALK_GIT_DESCRIBE
#define NILWALK_GIT_DESCRIBE "unknown"
#endif

namespace nilwalk::experiments {

namespace fs = std::filesystem;

/// Independent seed for sub-task `tag` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag)
{
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z               = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct ExperimentConfig
{
  json raw;
  fs::path base_dir;

  std::string preset;
  std::map<std::string, double> preset_params;
  fs::path graph_file;

  std::string scaling_kind{"power"};
  double theta{0.75};

  std::vector<std::int64_t> n_grid;
  std::int64_t samples{100};
  std::vector<double> delta{1.0};
  std::uint64_t seed{0};
  int workers{1};
  int start{0};
  std::string mode{"auto"};
  std::string realization{"harmonic"};

  // LIL scan.
  std::int64_t trajectories{20};
  std::int64_t n_min{1000};
  std::int64_t n_max{10000000};
  double level{1.0};
  double level_tol{0.1};

  // Rate evaluation.
  int knots{8};
  int restarts{8};
  fs::path albanese_file;
  std::vector<double> target;
  bool limit{false};

  /**
   * Reads a config object. `seed` and `workers`, when given, override the
   * file. Paths are resolved against `base_dir`.
   */
  static ExperimentConfig from_json(json root, const fs::path & base_dir = ".",
                                    std::optional<std::uint64_t> seed = std::nullopt,
                                    std::optional<int> workers = std::nullopt)
  {
    if (!root.is_object()) { throw ConfigError("config must be a JSON object"); }
    if (seed) { root["seed"] = *seed; }
    if (workers) { root["workers"] = *workers; }
    ExperimentConfig c;
    c.raw      = root;
    c.base_dir = base_dir;
    auto number = [&](const json & node, const std::string & key, double fallback, const std::string & where) {
      auto it = node.find(key);
      return it == node.end() ? fallback : io::as_number(*it, where + "/" + key);
    };
    auto integer = [&](const json & node, const std::string & key, std::int64_t fallback, const std::string & where) {
      auto it = node.find(key);
      return it == node.end() ? fallback : io::as_integer(*it, where + "/" + key);
    };

    if (auto g = root.find("graph"); g != root.end()) {
      if (g->contains("file")) {
        c.graph_file = base_dir / g->at("file").get<std::string>();
      } else if (g->contains("preset")) {
        c.preset = g->at("preset").get<std::string>();
        if (auto p = g->find("params"); p != g->end()) {
          if (!p->is_object()) { throw SchemaError("/graph/params: expected an object"); }
          for (auto it = p->begin(); it != p->end(); ++it) {
            c.preset_params[it.key()] = io::as_number(it.value(), "/graph/params/" + it.key());
          }
        }
      } else {
        throw SchemaError("/graph: expected 'preset' or 'file'");
      }
    }
    if (auto s = root.find("scaling"); s != root.end()) {
      c.scaling_kind = s->value("kind", std::string("power"));
      c.theta        = number(*s, "theta", 0.75, "/scaling");
    }
    if (auto n = root.find("n_grid"); n != root.end()) {
      if (!n->is_array()) { throw SchemaError("/n_grid: expected an array"); }
      for (std::size_t i = 0; i < n->size(); ++i) {
        c.n_grid.push_back(io::as_integer((*n)[i], "/n_grid/" + std::to_string(i)));
      }
    }
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
      if (c.n_grid[i] < 1 || (i > 0 && c.n_grid[i] <= c.n_grid[i - 1])) {
        throw ConfigError("n_grid must be positive and strictly increasing");
      }
    }
    c.samples = integer(root, "samples", c.samples, "");
    if (c.samples < 1) { throw ConfigError("samples must be >= 1"); }
    if (auto d = root.find("delta"); d != root.end()) {
      c.delta = d->is_array() ? io::as_numbers(*d, "/delta") : std::vector<double>{io::as_number(*d, "/delta")};
      for (double x : c.delta) {
        if (!(x > 0.0)) { throw ConfigError("delta values must be positive"); }
      }
    }
    c.seed    = static_cast<std::uint64_t>(integer(root, "seed", 0, ""));
    c.workers = static_cast<int>(integer(root, "workers", 1, ""));
    c.start   = static_cast<int>(integer(root, "start", 0, ""));
    if (c.workers < 1) { throw ConfigError("workers must be >= 1"); }
    c.mode        = root.value("mode", c.mode);
    c.realization = root.value("realization", c.realization);
    if (c.mode != "auto" && c.mode != "exact" && c.mode != "monte_carlo") {
      throw ConfigError("mode must be auto, exact or monte_carlo");
    }
    if (c.realization != "harmonic" && c.realization != "trivial") {
      throw ConfigError("realization must be harmonic or trivial");
    }
    if (auto l = root.find("lil"); l != root.end()) {
      c.trajectories = integer(*l, "trajectories", c.trajectories, "/lil");
      c.n_min        = integer(*l, "n_min", c.n_min, "/lil");
      c.n_max        = integer(*l, "n_max", c.n_max, "/lil");
      c.level        = number(*l, "level", c.level, "/lil");
      c.level_tol    = number(*l, "tol", c.level_tol, "/lil");
      c.knots        = static_cast<int>(integer(*l, "knots", c.knots, "/lil"));
      c.restarts     = static_cast<int>(integer(*l, "restarts", c.restarts, "/lil"));
      if (c.trajectories < 1 || c.n_min < 16 || c.n_max < c.n_min) {
        throw ConfigError("lil needs trajectories >= 1 and 16 <= n_min <= n_max");
      }
    }
    if (auto r = root.find("rate"); r != root.end()) {
      c.knots    = static_cast<int>(integer(*r, "knots", c.knots, "/rate"));
      c.restarts = static_cast<int>(integer(*r, "restarts", c.restarts, "/rate"));
      if (r->contains("albanese")) { c.albanese_file = base_dir / r->at("albanese").get<std::string>(); }
      if (r->contains("target")) { c.target = io::as_numbers(r->at("target"), "/rate/target"); }
      c.limit = r->value("limit", false);
    }
    return c;
  }

  static ExperimentConfig load(const fs::path & path, std::optional<std::uint64_t> seed = std::nullopt,
                               std::optional<int> workers = std::nullopt)
  {
    return from_json(io::read_json_file(path), path.parent_path(), seed, workers);
  }

  VoltageGraph graph() const
  {
    if (!graph_file.empty()) { return io::ingest_graph(graph_file); }
    if (preset.empty()) { throw ConfigError("config has no graph"); }
    auto g = presets::by_name(preset, preset_params);
    validate(g);
    return g;
  }

  ScalingSequence scaling() const
  {
    if (scaling_kind == "power") { return ScalingSequence::power(theta); }
    if (scaling_kind == "lil") { return ScalingSequence::lil(); }
    throw ConfigError("unknown scaling kind '" + scaling_kind + "'");
  }

  /// Hash of the config with the worker count removed.
  std::string hash() const
  {
    json h = raw;
    h.erase("workers");
    return io::fnv1a_hex(h.dump());
  }
};

struct RunResult
{
  json metrics;
  std::vector<fs::path> files;
};

namespace detail {

inline void write_summary(const ExperimentConfig & cfg, const std::string & name, const fs::path & out,
                          RunResult & result)
{
  json summary{{"experiment", name},
               {"config_hash", cfg.hash()},
               {"git_describe", NILWALK_GIT_DESCRIBE},
               {"metrics", result.metrics}};
  const auto path = out / "summary.json";
  io::write_text(path, summary.dump(2) + "\n");
  result.files.push_back(path);
}

inline void save(const io::CsvWriter & csv, const fs::path & path, RunResult & result)
{
  csv.save(path);
  result.files.push_back(path);
}

inline Realization realization(const ExperimentConfig & cfg, const VoltageGraph & graph, const AlbaneseData & data)
{
  return cfg.realization == "harmonic" ? data.harmonic : Realization::trivial(graph);
}

/// Linear-interpolation quantile of sorted data.
inline double quantile(const std::vector<double> & sorted, double q)
{
  if (sorted.empty()) { return std::numeric_limits<double>::quiet_NaN(); }
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo    = static_cast<std::size_t>(std::floor(pos));
  const auto hi    = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::vector<std::string> coordinate_header(const std::string & prefix, int count)
{
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) { out.push_back(prefix + std::to_string(i)); }
  return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string> & b)
{
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// albanese
// ---------------------------------------------------------------------------

inline RunResult run_albanese(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  const auto graph = cfg.graph();
  const auto meas  = invariant_measure(graph);
  const auto data  = analyze(graph);
  RunResult result;

  const auto path = out / "albanese.json";
  io::write_text(path, io::albanese_to_json(graph, data, meas).dump(2) + "\n");
  result.files.push_back(path);

  const int D = graph.algebra().dim();
  io::CsvWriter csv(detail::concat({"vertex", "m"}, detail::coordinate_header("x", D)));
  for (int v = 0; v < graph.vertex_count(); ++v) {
    csv.cell(v).cell(meas.vertex[v]).cells(data.harmonic.positions[v].log).end_row();
  }
  detail::save(csv, out / "harmonic.csv", result);

  result.metrics = {{"rho", io::to_json(data.rho)},
                    {"sigma", io::to_json(data.sigma)},
                    {"sigma_inv", io::to_json(data.sigma_inv)},
                    {"residual", data.residual},
                    {"symmetric", is_symmetric(graph, meas)},
                    {"betti_number", cycle_basis(graph).rank()}};
  detail::write_summary(cfg, "albanese", out, result);
  return result;
}

// ---------------------------------------------------------------------------
// lln
// ---------------------------------------------------------------------------

inline RunResult run_lln(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  if (cfg.n_grid.empty()) { throw ConfigError("lln needs n_grid"); }
  const auto graph   = cfg.graph();
  const auto data    = analyze(graph);
  const auto phi     = detail::realization(cfg, graph, data);
  const auto scaling = cfg.scaling();
  const int d1       = graph.algebra().first_dim();
  const int D        = graph.algebra().dim();

  io::CsvWriter lln({"n", "samples", "min", "q25", "median", "q75", "max", "mean"});
  io::CsvWriter ends(detail::concat(detail::concat({"sample_id", "n"}, detail::coordinate_header("z", D)),
                                    detail::coordinate_header("xi_bar", d1)));
  json medians = json::array();
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
    const auto n     = cfg.n_grid[k];
    const auto batch = batch_endpoints(graph, phi, data.rho, scaling, n, cfg.samples, derive_seed(cfg.seed, k),
                                       cfg.workers, cfg.start);
    std::vector<double> err(cfg.samples);
    double mean = 0.0;
    for (std::int64_t i = 0; i < cfg.samples; ++i) {
      err[i] = batch.xi_bar.col(i).norm() / static_cast<double>(n);
      mean += err[i];
      ends.cell(i).cell(n).cells(batch.endpoints[i].log).cells(batch.xi_bar.col(i)).end_row();
    }
    mean /= static_cast<double>(cfg.samples);
    std::sort(err.begin(), err.end());
    const double med = detail::quantile(err, 0.5);
    lln.cell(n).cell(cfg.samples).cell(err.front()).cell(detail::quantile(err, 0.25)).cell(med)
        .cell(detail::quantile(err, 0.75)).cell(err.back()).cell(mean).end_row();
    medians.push_back({{"n", n}, {"median_error", med}});
  }
  RunResult result;
  detail::save(lln, out / "lln.csv", result);
  detail::save(ends, out / "endpoints.csv", result);
  result.metrics = {{"rho", io::to_json(data.rho)}, {"median_error", medians}};
  detail::write_summary(cfg, "lln", out, result);
  return result;
}

// ---------------------------------------------------------------------------
// clt
// ---------------------------------------------------------------------------

inline RunResult run_clt(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  if (cfg.n_grid.empty()) { throw ConfigError("clt needs n_grid"); }
  const auto graph = cfg.graph();
  const auto meas  = invariant_measure(graph);
  const auto data  = analyze(graph);
  const auto phi   = detail::realization(cfg, graph, data);
  const int d1     = graph.algebra().first_dim();

  io::CsvWriter csv({"N", "i", "j", "estimate", "stderr", "sigma_ref", "z"});
  json per_n = json::array();
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
    const auto N   = cfg.n_grid[k];
    const auto est = clt_covariance_oracle(graph, meas, phi, N, cfg.samples, derive_seed(cfg.seed, k), cfg.workers,
                                           cfg.start);
    double worst = 0.0;
    for (int i = 0; i < d1; ++i) {
      for (int j = 0; j < d1; ++j) {
        const double diff = est.mean(i, j) - data.sigma(i, j);
        const double se   = est.standard_error(i, j);
        const double z    = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        worst             = std::max(worst, std::abs(z));
        csv.cell(N).cell(i).cell(j).cell(est.mean(i, j)).cell(se).cell(data.sigma(i, j)).cell(z).end_row();
      }
    }
    per_n.push_back({{"N", N}, {"max_abs_z", worst}});
  }
  RunResult result;
  detail::save(csv, out / "clt.csv", result);
  result.metrics = {{"sigma", io::to_json(data.sigma)}, {"per_n", per_n}};
  detail::write_summary(cfg, "clt", out, result);
  return result;
}

// ---------------------------------------------------------------------------
// mdp
// ---------------------------------------------------------------------------

/// inf { 1/2 v^T Sigma^-1 v : |v| >= delta } = delta^2 / (2 lambda_max(Sigma)).
inline double mdp_target(const Matrix & sigma, double delta)
{
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  return -delta * delta / (2.0 * eig.eigenvalues().maxCoeff());
}

struct MdpRow
{
  std::int64_t n;
  double delta;
  double a;
  std::string mode;
  double tail;
  double stderr_tail;
  double r;
  double target;
};

inline RunResult run_mdp(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  if (cfg.n_grid.empty()) { throw ConfigError("mdp needs n_grid"); }
  const auto graph   = cfg.graph();
  const auto data    = analyze(graph);
  const auto scaling = cfg.scaling();

  bool exact = cfg.mode == "exact";
  if (cfg.mode == "auto") {
    try {
      lattice_step_law(graph);
      exact = true;
    } catch (const OracleUnavailable &) {
      exact = false;
    }
  } else if (exact) {
    lattice_step_law(graph);
  }

  const auto grid = cfg.n_grid;
  std::vector<std::vector<MdpRow>> rows(grid.size());
  auto fill = [&](std::size_t k, const std::vector<double> & tails, const std::vector<double> & ses) {
    const auto n   = grid[k];
    const double a = scaling(n);
    for (std::size_t d = 0; d < cfg.delta.size(); ++d) {
      const double r = static_cast<double>(n) / (a * a) * std::log(tails[d]);
      rows[k].push_back({n, cfg.delta[d], a, exact ? "exact" : "monte_carlo", tails[d], ses[d], r,
                         mdp_target(data.sigma, cfg.delta[d])});
    }
  };

  if (exact) {
    parallel_for(grid.size(), cfg.workers, [&](std::size_t k) {
      const double a = scaling(grid[k]);
      std::vector<double> tails, ses;
      for (double delta : cfg.delta) {
        tails.push_back(exact_tail_probability(graph, data.rho, grid[k], delta * a));
        ses.push_back(0.0);
      }
      fill(k, tails, ses);
    });
  } else {
    const auto phi = detail::realization(cfg, graph, data);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto batch = batch_endpoints(graph, phi, data.rho, scaling, grid[k], cfg.samples,
                                         derive_seed(cfg.seed, k), cfg.workers, cfg.start);
      const double a   = scaling(grid[k]);
      std::vector<double> tails, ses;
      for (double delta : cfg.delta) {
        const double t = delta * a * (1.0 - boundary_slack);
        std::int64_t hits = 0;
        for (std::int64_t i = 0; i < cfg.samples; ++i) { hits += batch.xi_bar.col(i).norm() >= t ? 1 : 0; }
        const double p = static_cast<double>(hits) / static_cast<double>(cfg.samples);
        tails.push_back(p);
        ses.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.samples)));
      }
      fill(k, tails, ses);
    }
  }

  io::CsvWriter csv({"n", "delta", "a_n", "mode", "tail", "stderr", "log_tail", "r_n", "target", "rel_error"});
  json metrics = json::array();
  for (const auto & per_n : rows) {
    for (const auto & row : per_n) {
      const double rel = std::abs(row.r - row.target) / std::abs(row.target);
      csv.cell(row.n).cell(row.delta).cell(row.a).cell(row.mode).cell(row.tail).cell(row.stderr_tail)
          .cell(std::log(row.tail)).cell(row.r).cell(row.target).cell(rel).end_row();
      metrics.push_back({{"n", row.n}, {"delta", row.delta}, {"r_n", row.r}, {"target", row.target},
                         {"rel_error", rel}});
    }
  }
  RunResult result;
  detail::save(csv, out / "mdp.csv", result);
  result.metrics = {{"mode", exact ? "exact" : "monte_carlo"}, {"rows", metrics}};
  detail::write_summary(cfg, "mdp", out, result);
  return result;
}

// ---------------------------------------------------------------------------
// lil
// ---------------------------------------------------------------------------

struct LilTrajectory
{
  /// max of |Xi-bar_n| / b_n over n_min <= n <= n_max.
  double dense_max{0.0};
  std::vector<std::int64_t> n;
  /// tau_{1/b_n}(phi(xi-bar_n)) at the recorded times.
  std::vector<GroupElement> points;
};

/// Geometric grid n_min * 2^k <= n_max.
inline std::vector<std::int64_t> geometric_grid(std::int64_t n_min, std::int64_t n_max)
{
  std::vector<std::int64_t> out;
  for (std::int64_t n = n_min; n <= n_max; n *= 2) { out.push_back(n); }
  return out;
}

inline LilTrajectory lil_trajectory(const VoltageGraph & graph, const Realization & phi, const Vector & rho,
                                    const std::vector<std::int64_t> & grid, std::int64_t n_min,
                                    std::int64_t n_max, std::uint64_t seed, std::uint64_t index, int start)
{
  const auto & alg    = graph.algebra();
  const auto scaling  = ScalingSequence::lil();
  auto b2             = [](std::int64_t n) {
    const double x = static_cast<double>(n);
    return x * std::log(std::log(x));
  };
  const std::int64_t end = std::max(n_max, grid.empty() ? n_max : grid.back());
  Walker walker(graph, phi, Philox4x32(seed, index), start);
  LilTrajectory out;
  Vector xi(alg.first_dim());
  double best2 = 0.0, floor2 = 0.0;
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= end; ++n) {
    walker.step();
    if (n >= n_min && n <= n_max) {
      // b_n grows, so b at the start of a block bounds it from below.
      if (n == n_min || (n & 4095) == 0) { floor2 = b2(n); }
      walker.first_layer_into(xi);
      xi -= static_cast<double>(n) * rho;
      const double s2 = xi.squaredNorm();
      if (s2 > best2 * floor2) { best2 = std::max(best2, s2 / b2(n)); }
    }
    if (next < grid.size() && grid[next] == n) {
      const auto xi_bar = bch_product(alg, walker.xi(), drift_compensator(alg, n, rho));
      out.n.push_back(n);
      out.points.push_back(dilate_tau(alg, 1.0 / scaling(n), phi_map(alg, xi_bar)));
      ++next;
    }
  }
  out.dense_max = std::sqrt(best2);
  return out;
}

inline RunResult run_lil(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  const auto graph = cfg.graph();
  const auto data  = analyze(graph);
  const auto phi   = detail::realization(cfg, graph, data);
  const auto & alg = graph.algebra();
  const auto forms = QuadraticForms::from(data);
  const auto grid  = cfg.n_grid.empty() ? geometric_grid(cfg.n_min, cfg.n_max) : cfg.n_grid;
  if (grid.front() < 16) { throw ScalingDomain("lil scaling needs n >= 16"); }

  std::vector<LilTrajectory> traj(cfg.trajectories);
  parallel_for(static_cast<std::size_t>(cfg.trajectories), cfg.workers, [&](std::size_t t) {
    traj[t] = lil_trajectory(graph, phi, data.rho, grid, cfg.n_min, cfg.n_max, cfg.seed, t, cfg.start);
  });

  struct Point
  {
    std::size_t t, k;
  };
  std::vector<Point> points;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    for (std::size_t k = 0; k < traj[t].points.size(); ++k) { points.push_back({t, k}); }
  }
  RateOptions opt;
  opt.knots    = std::max(cfg.knots, minimum_knots(alg));
  opt.restarts = cfg.restarts;
  opt.seed     = cfg.seed;
  std::vector<RateBound> bounds(points.size());
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    bounds[i] = limit_rate(alg, forms, traj[points[i].t].points[points[i].k], opt);
  });

  const auto scaling = ScalingSequence::lil();
  io::CsvWriter csv(detail::concat(detail::concat({"trajectory", "n", "b_n"}, detail::coordinate_header("z", alg.dim())),
                                   {"rate_bound", "within"}));
  std::int64_t within = 0, infeasible = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto & tr   = traj[points[i].t];
    const auto n      = tr.n[points[i].k];
    const bool inside = bounds[i].feasible && bounds[i].value <= cfg.level + cfg.level_tol;
    within += inside ? 1 : 0;
    infeasible += bounds[i].feasible ? 0 : 1;
    csv.cell(static_cast<std::int64_t>(points[i].t)).cell(n).cell(scaling(n)).cells(tr.points[points[i].k].log)
        .cell(bounds[i].value).cell(inside ? 1 : 0).end_row();
  }
  io::CsvWriter sup({"trajectory", "dense_max"});
  std::vector<double> maxima;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    sup.cell(static_cast<std::int64_t>(t)).cell(traj[t].dense_max).end_row();
    maxima.push_back(traj[t].dense_max);
  }
  std::vector<double> sorted = maxima;
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double m : maxima) { mean += m; }
  mean /= static_cast<double>(maxima.size());

  RunResult result;
  detail::save(csv, out / "lil.csv", result);
  detail::save(sup, out / "lil_sup.csv", result);
  result.metrics = {{"points", points.size()},
                    {"within", within},
                    {"fraction_within", static_cast<double>(within) / static_cast<double>(points.size())},
                    {"infeasible", infeasible},
                    {"level", cfg.level},
                    {"tol", cfg.level_tol},
                    {"n_min", cfg.n_min},
                    {"n_max", cfg.n_max},
                    {"dense_max", maxima},
                    {"median_dense_max", detail::quantile(sorted, 0.5)},
                    {"mean_dense_max", mean},
                    {"max_dense_max", sorted.back()}};
  detail::write_summary(cfg, "lil", out, result);
  return result;
}

// ---------------------------------------------------------------------------
// rate
// ---------------------------------------------------------------------------

inline RunResult run_rate(const ExperimentConfig & cfg, const fs::path & out)
{
  fs::create_directories(out);
  json source;
  if (!cfg.albanese_file.empty()) { source = io::read_json_file(cfg.albanese_file); }
  const auto & rate = cfg.raw.contains("rate") ? cfg.raw.at("rate") : json::object();

  std::optional<StratifiedAlgebra> alg;
  if (cfg.raw.contains("algebra")) {
    alg = io::algebra_from_json(cfg.raw.at("algebra"), "/algebra");
  } else if (source.contains("algebra")) {
    alg = io::algebra_from_json(source.at("algebra"), "/algebra");
  } else {
    throw ConfigError("rate needs an algebra, inline or in the albanese file");
  }
  Matrix sigma;
  if (rate.contains("sigma")) {
    sigma = io::matrix_from_json(rate.at("sigma"), "/rate/sigma");
  } else if (source.contains("sigma")) {
    sigma = io::matrix_from_json(source.at("sigma"), "/sigma");
  } else {
    throw ConfigError("rate needs sigma, inline or from an albanese file");
  }
  const auto forms = QuadraticForms::from_sigma(sigma);
  if (static_cast<int>(cfg.target.size()) != alg->dim()) {
    throw DimensionMismatch("target must have " + std::to_string(alg->dim()) + " coordinates");
  }
  RateOptions opt;
  opt.knots    = cfg.knots;
  opt.restarts = cfg.restarts;
  opt.seed     = cfg.seed;
  opt.workers  = cfg.workers;
  const GroupElement g{io::to_vector(cfg.target)};
  const auto bound = cfg.limit ? limit_rate(*alg, forms, g, opt) : endpoint_rate(*alg, forms, g, opt);

  RunResult result;
  json report{{"value", bound.feasible ? json(bound.value) : json(nullptr)},
              {"feasible", bound.feasible},
              {"constraint_violation", bound.feasible ? json(bound.constraint_violation) : json(nullptr)},
              {"knots", bound.knots},
              {"restarts_used", bound.restarts_used}};
  io::write_text(out / "rate.json", report.dump(2) + "\n");
  result.files.push_back(out / "rate.json");
  if (bound.path) {
    io::CsvWriter csv(detail::concat({"t"}, detail::coordinate_header("h", bound.path->dim())));
    for (int k = 0; k <= bound.path->segments(); ++k) {
      csv.cell(bound.path->knots()[k]).cells(bound.path->values()[k]).end_row();
    }
    detail::save(csv, out / "rate_path.csv", result);
  }
  result.metrics = report;
  detail::write_summary(cfg, "rate", out, result);
  return result;
}

inline const std::vector<std::string> & experiment_names()
{
  static const std::vector<std::string> names{"albanese", "lln", "clt", "mdp", "lil", "rate"};
  return names;
}

inline RunResult run(const std::string & name, const ExperimentConfig & cfg, const fs::path & out)
{
  if (name == "albanese") { return run_albanese(cfg, out); }
  if (name == "lln") { return run_lln(cfg, out); }
  if (name == "clt") { return run_clt(cfg, out); }
  if (name == "mdp") { return run_mdp(cfg, out); }
  if (name == "lil") { return run_lil(cfg, out); }
  if (name == "rate") { return run_rate(cfg, out); }
  throw InvalidArgument("unknown experiment '" + name + "'");
}

}  // namespace nilwalk::experiments

#endif  // NILWALK__EXPERIMENTS_HPP_
