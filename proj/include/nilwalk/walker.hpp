#ifndef NILWALK__WALKER_HPP_
#define NILWALK__WALKER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "quotient_graph.hpp"
#include "random.hpp"
#include "realization.hpp"

namespace nilwalk {

/**
 * @brief Scaling sequence a_n for the moderate deviation window
 * sqrt(n) << a_n << n.
 */
class ScalingSequence
{
public:
  enum class Kind { power, lil, custom };

  /// a_n = n^theta with 1/2 < theta < 1.
  static ScalingSequence power(double theta)
  {
    if (!(theta > 0.5 && theta < 1.0)) {
      throw InvalidArgument("power scaling needs 1/2 < theta < 1, got " + std::to_string(theta));
    }
    return ScalingSequence(Kind::power, theta, 1,
                           [theta](std::int64_t n) { return std::pow(static_cast<double>(n), theta); });
  }

  /// b_n = sqrt(n log log n), defined from n = 16 on.
  static ScalingSequence lil()
  {
    return ScalingSequence(Kind::lil, 0.0, 16, [](std::int64_t n) {
      const double x = static_cast<double>(n);
      return std::sqrt(x * std::log(std::log(x)));
    });
  }

  static ScalingSequence custom(std::function<double(std::int64_t)> fn, std::int64_t min_n = 1)
  {
    return ScalingSequence(Kind::custom, 0.0, min_n, std::move(fn));
  }

  Kind kind() const { return kind_; }
  double theta() const { return theta_; }
  std::int64_t min_n() const { return min_n_; }

  double operator()(std::int64_t n) const
  {
    if (n < min_n_) {
      throw ScalingDomain("scaling sequence is defined for n >= " + std::to_string(min_n_)
                          + ", got n = " + std::to_string(n));
    }
    return fn_(n);
  }

  /// Numerical check on n = min_n * 2^k, k < probes: a_n positive and
  /// increasing, a_n / sqrt(n) increasing, a_n / n decreasing.
  bool satisfies_window(int probes = 40) const
  {
    double prev = 0.0, prev_lo = 0.0, prev_hi = 0.0;
    std::int64_t n = std::max<std::int64_t>(min_n_, 2);
    for (int k = 0; k < probes; ++k, n *= 2) {
      const double a  = (*this)(n);
      const double lo = a / std::sqrt(static_cast<double>(n));
      const double hi = a / static_cast<double>(n);
      if (!(a > 0.0) || (k > 0 && (a <= prev || lo <= prev_lo || hi >= prev_hi))) { return false; }
      prev    = a;
      prev_lo = lo;
      prev_hi = hi;
    }
    return true;
  }

private:
  ScalingSequence(Kind kind, double theta, std::int64_t min_n, std::function<double(std::int64_t)> fn)
      : kind_(kind), theta_(theta), min_n_(min_n), fn_(std::move(fn))
  {}

  Kind kind_;
  double theta_;
  std::int64_t min_n_;
  std::function<double(std::int64_t)> fn_;
};

/**
 * @brief Markov chain on the quotient graph lifted to the covering.
 *
 * The state is (quotient vertex, deck element). Traversing e multiplies the
 * deck element on the right by gamma(e); the realized position is
 * xi = deck * position(vertex). Edges at each vertex are drawn from a
 * cumulative table in increasing edge-index order, one uniform per step.
 */
class Walker
{
public:
  Walker(const VoltageGraph & graph, const Realization & phi, Philox4x32 rng, int start = 0)
      : graph_(&graph),
        phi_(&phi),
        rng_(rng),
        bch_(graph.algebra()),
        vertex_(start),
        deck_(AlgebraVector::Zero(graph.algebra().dim())),
        positions_trivial_(phi.is_trivial())
  {
    if (start < 0 || start >= graph.vertex_count()) {
      throw InvalidArgument("start vertex out of range");
    }
    if (static_cast<int>(phi.positions.size()) != graph.vertex_count()) {
      throw DimensionMismatch("realization size does not match the graph");
    }
    cumulative_.resize(graph.vertex_count());
    for (int v = 0; v < graph.vertex_count(); ++v) {
      double acc = 0.0;
      for (int e : graph.out_edges(v)) {
        acc += graph.edge(e).probability;
        cumulative_[v].push_back(acc);
      }
    }
  }

  /// Advances one step; returns the traversed edge.
  int step()
  {
    const auto & out = graph_->out_edges(vertex_);
    const auto & cum = cumulative_[vertex_];
    const double u   = rng_.uniform();
    std::size_t pick = 0;
    while (pick + 1 < cum.size() && u >= cum[pick]) { ++pick; }
    const int e       = out[pick];
    const auto & edge = graph_->edge(e);
    bch_.right_multiply(deck_, edge.voltage.log);
    vertex_ = edge.terminus;
    ++time_;
    return e;
  }

  void advance(std::int64_t count)
  {
    for (std::int64_t k = 0; k < count; ++k) { step(); }
  }

  int vertex() const { return vertex_; }
  std::int64_t time() const { return time_; }
  const AlgebraVector & deck() const { return deck_; }

  /// xi = deck * position(vertex).
  GroupElement xi()
  {
    if (positions_trivial_) { return {deck_}; }
    GroupElement out{AlgebraVector(deck_.size())};
    bch_.product_into(deck_, phi_->positions[vertex_].log, out.log);
    return out;
  }

  /// Xi = log(xi)|_1, computed without the full product (the first layer of
  /// a product is the sum of first layers).
  void first_layer_into(Vector & out) const
  {
    const int d1 = graph_->algebra().first_dim();
    out          = deck_.head(d1) + phi_->positions[vertex_].log.head(d1);
  }

private:
  const VoltageGraph * graph_;
  const Realization * phi_;
  Philox4x32 rng_;
  BchEvaluator bch_;
  int vertex_;
  AlgebraVector deck_;
  std::int64_t time_{0};
  bool positions_trivial_;
  std::vector<std::vector<double>> cumulative_;
};

/// exp(-n rho) embedded in the full algebra.
inline GroupElement drift_compensator(const StratifiedAlgebra & alg, std::int64_t n, const Vector & rho)
{
  return {alg.embed_first_layer(-(static_cast<double>(n) * rho))};
}

/// Sampled trajectory with the data needed for the scaled path processes.
struct WalkPath
{
  std::int64_t n{0};
  std::vector<int> vertices;
  std::vector<int> edges;
  /// Deck element gamma after n steps.
  GroupElement deck;
  /// xi_n = Phi(w_n).
  GroupElement xi;
  /// Centered endpoint xi_n * exp(-n rho).
  GroupElement xi_bar;
  Vector rho;
  /// Xi_k = log(xi_k)|_1, one column per k = 0..n.
  Matrix Xi;
  /// Xi_n - n rho.
  Vector Xi_bar;
  /// W-bar_k = Xi_k - Xi_{k-1} - rho, one column per k = 1..n.
  Matrix increments;
};

inline WalkPath sample_path(const VoltageGraph & graph, const Realization & phi, const Vector & rho,
                            std::int64_t n, std::uint64_t seed, int start = 0)
{
  if (n < 0) { throw InvalidArgument("n must be nonnegative"); }
  const auto & alg = graph.algebra();
  const int d1     = alg.first_dim();
  if (rho.size() != d1) { throw DimensionMismatch("rho must have the first-layer dimension"); }
  Walker walker(graph, phi, Philox4x32(seed, 0), start);
  WalkPath path;
  path.n   = n;
  path.rho = rho;
  path.vertices.reserve(n + 1);
  path.edges.reserve(n);
  path.Xi.resize(d1, n + 1);
  path.increments.resize(d1, n);
  path.vertices.push_back(walker.vertex());
  Vector current(d1);
  walker.first_layer_into(current);
  path.Xi.col(0) = current;
  for (std::int64_t k = 1; k <= n; ++k) {
    path.edges.push_back(walker.step());
    path.vertices.push_back(walker.vertex());
    walker.first_layer_into(current);
    path.Xi.col(k)             = current;
    path.increments.col(k - 1) = (path.Xi.col(k) - path.Xi.col(k - 1)) - rho;
  }
  path.deck   = {walker.deck()};
  path.xi     = walker.xi();
  path.xi_bar = bch_product(alg, path.xi, drift_compensator(alg, n, rho));
  path.Xi_bar = path.xi_bar.log.head(d1);
  return path;
}

/// Z^(n) evaluated on [0, 1]: piecewise-linear interpolation of the partial
/// sums of W-bar_k / a_n.
struct InterpolatedPath
{
  std::int64_t n{0};
  double a{1.0};
  /// (W-bar_1 + ... + W-bar_k) / a_n for k = 0..n.
  Matrix knots;
  /// W-bar_k / a_n for k = 1..n.
  Matrix slopes;
  /// Xi-bar_n / a_n.
  Vector endpoint;

  Vector value(double t) const
  {
    if (!(t >= 0.0 && t <= 1.0)) { throw InvalidArgument("time must lie in [0, 1]"); }
    if (t == 1.0 || n == 0) { return t == 1.0 ? endpoint : Vector(knots.col(0)); }
    const double nt = t * static_cast<double>(n);
    auto k          = static_cast<std::int64_t>(std::floor(nt));
    if (k >= n) { return endpoint; }
    return knots.col(k) + (nt - static_cast<double>(k)) * slopes.col(k);
  }
};

inline InterpolatedPath interpolate(const WalkPath & path, const ScalingSequence & scaling)
{
  const double a   = scaling(path.n);
  const double inv = 1.0 / a;
  const auto d1    = path.Xi_bar.size();
  InterpolatedPath z;
  z.n = path.n;
  z.a = a;
  z.knots.resize(d1, path.n + 1);
  z.slopes = path.increments * inv;
  Vector sum = Vector::Zero(d1);
  z.knots.col(0) = sum;
  for (std::int64_t k = 1; k <= path.n; ++k) {
    sum += path.increments.col(k - 1);
    z.knots.col(k) = sum * inv;
  }
  z.endpoint = path.Xi_bar * inv;
  return z;
}

/// tau_{1/a_n}(phi(xi_n exp(-n rho))).
inline GroupElement scaled_endpoint(const StratifiedAlgebra & alg, const WalkPath & path,
                                    const ScalingSequence & scaling)
{
  const double a = scaling(path.n);
  return dilate_tau(alg, 1.0 / a, phi_map(alg, path.xi_bar));
}

struct EndpointBatch
{
  std::int64_t n{0};
  /// Scaled endpoints tau_{1/a_n}(phi(xi-bar_n)), one per sample.
  std::vector<GroupElement> endpoints;
  /// Raw Xi-bar_n, one column per sample.
  Matrix xi_bar;
};

/// Sample i uses stream (seed, i); sample 0 coincides with sample_path(seed).
inline EndpointBatch batch_endpoints(const VoltageGraph & graph, const Realization & phi,
                                     const Vector & rho, const ScalingSequence & scaling,
                                     std::int64_t n, std::int64_t samples, std::uint64_t seed,
                                     int workers = 1, int start = 0)
{
  if (samples < 1) { throw InvalidArgument("samples must be >= 1"); }
  const auto & alg  = graph.algebra();
  const int d1      = alg.first_dim();
  const double a    = scaling(n);
  const auto shift  = drift_compensator(alg, n, rho);
  EndpointBatch out;
  out.n = n;
  out.endpoints.resize(samples);
  out.xi_bar.resize(d1, samples);
  parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t i) {
    Walker walker(graph, phi, Philox4x32(seed, i), start);
    walker.advance(n);
    const auto xi_bar = bch_product(alg, walker.xi(), shift);
    out.xi_bar.col(static_cast<Eigen::Index>(i)) = xi_bar.log.head(d1);
    out.endpoints[i] = dilate_tau(alg, 1.0 / a, phi_map(alg, xi_bar));
  });
  return out;
}

}  // namespace nilwalk

#endif  // NILWALK__WALKER_HPP_
