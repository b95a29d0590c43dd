#ifndef NILWALK__LATTICE_ORACLE_HPP_
#define NILWALK__LATTICE_ORACLE_HPP_

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "quotient_graph.hpp"

namespace nilwalk {

/// Law of one step of a single-vertex abelian walk with integer voltages.
struct LatticeStepLaw
{
  int dim{1};
  std::vector<std::pair<std::array<int, 2>, double>> atoms;

  int reach() const
  {
    int r = 0;
    for (const auto & [x, p] : atoms) { r = std::max({r, std::abs(x[0]), std::abs(x[1])}); }
    return r;
  }
};

inline LatticeStepLaw lattice_step_law(const VoltageGraph & graph)
{
  const auto & alg = graph.algebra();
  if (!alg.is_abelian() || alg.dim() != alg.first_dim()) {
    throw OracleUnavailable("exact enumeration needs an abelian algebra");
  }
  if (graph.vertex_count() != 1) { throw OracleUnavailable("exact enumeration needs a single-vertex quotient"); }
  if (alg.dim() > 2) { throw OracleUnavailable("exact enumeration is limited to dimensions 1 and 2"); }
  std::map<std::array<int, 2>, double> merged;
  for (const auto & edge : graph.edges()) {
    std::array<int, 2> x{0, 0};
    for (int i = 0; i < alg.dim(); ++i) {
      const double c = edge.voltage.log[i];
      const double r = std::round(c);
      if (std::abs(c - r) > 1e-12) { throw OracleUnavailable("voltages must be integer vectors"); }
      x[i] = static_cast<int>(r);
    }
    merged[x] += edge.probability;
  }
  LatticeStepLaw law;
  law.dim = alg.dim();
  law.atoms.assign(merged.begin(), merged.end());
  return law;
}

/**
 * @brief Exact law of S_n on Z^d (d = 1, 2) by repeated convolution with the
 * step law. The array covers the box [-R n, R n]^d, R the step reach.
 */
class ExactLatticeDistribution
{
public:
  explicit ExactLatticeDistribution(LatticeStepLaw law) : law_(std::move(law)), reach_(std::max(1, law_.reach()))
  {
    probs_.assign(1, 1.0);
  }

  int dim() const { return law_.dim; }
  std::int64_t steps() const { return n_; }
  /// Coordinates run over [-radius, radius].
  std::int64_t radius() const { return reach_ * n_; }
  std::int64_t width() const { return 2 * radius() + 1; }
  const std::vector<double> & probabilities() const { return probs_; }

  void step()
  {
    const std::int64_t w_old = width();
    const std::int64_t r_old = radius();
    ++n_;
    const std::int64_t w = width();
    const std::int64_t r = radius();
    std::vector<double> next(law_.dim == 1 ? w : w * w, 0.0);
    if (law_.dim == 1) {
      for (const auto & [x, p] : law_.atoms) {
        const std::int64_t shift = x[0] + r - r_old;
        for (std::int64_t i = 0; i < w_old; ++i) { next[i + shift] += p * probs_[i]; }
      }
    } else {
      for (const auto & [x, p] : law_.atoms) {
        const std::int64_t sx = x[0] + r - r_old;
        const std::int64_t sy = x[1] + r - r_old;
        for (std::int64_t i = 0; i < w_old; ++i) {
          const double * src = &probs_[i * w_old];
          double * dst       = &next[(i + sx) * w + sy];
          for (std::int64_t j = 0; j < w_old; ++j) { dst[j] += p * src[j]; }
        }
      }
    }
    probs_.swap(next);
  }

  void advance(std::int64_t count)
  {
    for (std::int64_t k = 0; k < count; ++k) { step(); }
  }

  double probability(std::int64_t x, std::int64_t y = 0) const
  {
    const std::int64_t r = radius();
    if (std::abs(x) > r || std::abs(y) > r) { return 0.0; }
    if (law_.dim == 1) { return probs_[x + r]; }
    return probs_[(x + r) * width() + (y + r)];
  }

  double total() const
  {
    double s = 0.0;
    for (double p : probs_) { s += p; }
    return s;
  }

  /// P(|S_n - center| >= threshold), Euclidean norm.
  double tail(double threshold, const std::array<double, 2> & center = {0.0, 0.0}) const
  {
    const std::int64_t r = radius();
    double out           = 0.0;
    if (law_.dim == 1) {
      for (std::int64_t x = -r; x <= r; ++x) {
        if (std::abs(static_cast<double>(x) - center[0]) >= threshold) { out += probs_[x + r]; }
      }
      return out;
    }
    for (std::int64_t x = -r; x <= r; ++x) {
      for (std::int64_t y = -r; y <= r; ++y) {
        if (std::hypot(static_cast<double>(x) - center[0], static_cast<double>(y) - center[1]) >= threshold) {
          out += probs_[(x + r) * width() + (y + r)];
        }
      }
    }
    return out;
  }

private:
  LatticeStepLaw law_;
  int reach_;
  std::int64_t n_{0};
  std::vector<double> probs_;
};

/// Relative slack applied to tail thresholds so that lattice points on the
/// sphere |x| = delta a_n count as outside.
inline constexpr double boundary_slack = 1e-12;

namespace detail {

/// Sum of a 1D array over the complement of [lo, hi], accumulated from the
/// outer ends inward so that tiny tails keep full relative precision.
struct TwoSidedSums
{
  std::vector<double> left;   // left[i] = sum of p[0..i]
  std::vector<double> right;  // right[i] = sum of p[i..]

  explicit TwoSidedSums(const std::vector<double> & p) : left(p.size()), right(p.size())
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) { left[i] = (acc += p[i]); }
    acc = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) { right[i] = (acc += p[i]); }
  }

  double outside(std::int64_t lo, std::int64_t hi) const
  {
    const auto n = static_cast<std::int64_t>(left.size());
    if (lo > hi) { return right[0]; }
    double s = 0.0;
    if (lo > 0) { s += left[std::min(lo, n) - 1]; }
    if (hi + 1 < n) { s += right[std::max<std::int64_t>(hi + 1, 0)]; }
    return s;
  }
};

}  // namespace detail

/**
 * Tail P(|S_n - center| >= threshold) for a 2D step law that factors as a
 * product measure in coordinates (u, v) = M (x, y). Supported M: identity and
 * (x + y, x - y). Returns nullopt when the law does not factor.
 */
inline std::optional<double> factorized_tail_2d(const LatticeStepLaw & law, std::int64_t n, double threshold,
                                                const std::array<double, 2> & center = {0.0, 0.0})
{
  if (law.dim != 2) { return std::nullopt; }
  const std::array<Eigen::Matrix2i, 2> maps{Eigen::Matrix2i::Identity(), (Eigen::Matrix2i() << 1, 1, 1, -1).finished()};
  for (const auto & M : maps) {
    std::map<int, double> pu, pv;
    std::map<std::pair<int, int>, double> joint;
    for (const auto & [x, p] : law.atoms) {
      const int u = M(0, 0) * x[0] + M(0, 1) * x[1];
      const int v = M(1, 0) * x[0] + M(1, 1) * x[1];
      pu[u] += p;
      pv[v] += p;
      joint[{u, v}] += p;
    }
    bool product = true;
    for (const auto & [u, a] : pu) {
      for (const auto & [v, b] : pv) {
        const auto it   = joint.find({u, v});
        const double pj = it == joint.end() ? 0.0 : it->second;
        if (std::abs(pj - a * b) > 1e-15) { product = false; }
      }
    }
    if (!product) { continue; }

    auto marginal = [n](const std::map<int, double> & law1) {
      LatticeStepLaw l;
      l.dim = 1;
      for (const auto & [u, p] : law1) { l.atoms.push_back({{u, 0}, p}); }
      ExactLatticeDistribution dist(l);
      dist.advance(n);
      return dist;
    };
    const auto U = marginal(pu);
    const auto V = marginal(pv);
    const detail::TwoSidedSums vs(V.probabilities());
    const Eigen::Matrix2d Minv = M.cast<double>().inverse();
    const Eigen::Vector2d c(center[0], center[1]);
    const Eigen::Vector2d q     = Minv.col(1);
    const double t2             = threshold * threshold;
    const std::int64_t ru       = U.radius();
    const std::int64_t rv       = V.radius();
    double out                  = 0.0;
    for (std::int64_t u = -ru; u <= ru; ++u) {
      const double pu_u = U.probability(u);
      if (pu_u == 0.0) { continue; }
      const Eigen::Vector2d p = Minv.col(0) * static_cast<double>(u) - c;
      auto norm2              = [&](std::int64_t v) { return (p + q * static_cast<double>(v)).squaredNorm(); };
      // Inside set {v : |p + v q| < threshold} is an interval.
      const double qq   = q.squaredNorm();
      const double pq   = p.dot(q);
      const double disc = pq * pq - qq * (p.squaredNorm() - t2);
      std::int64_t lo = 1, hi = 0;
      if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        lo             = static_cast<std::int64_t>(std::ceil((-pq - s) / qq));
        hi             = static_cast<std::int64_t>(std::floor((-pq + s) / qq));
        while (lo <= hi && norm2(lo) >= t2) { ++lo; }
        while (norm2(lo - 1) < t2) { --lo; }
        while (hi >= lo && norm2(hi) >= t2) { --hi; }
        while (norm2(hi + 1) < t2) { ++hi; }
      }
      out += pu_u * vs.outside(lo + rv, hi + rv);
    }
    return out;
  }
  return std::nullopt;
}

/**
 * Exact P(|S_n - n rho| >= delta a_n) for an abelian single-vertex preset of
 * dimension 1 or 2. Sites on the boundary sphere count as outside.
 */
inline double exact_tail_probability(const VoltageGraph & graph, const Vector & rho, std::int64_t n,
                                     double threshold)
{
  const auto law = lattice_step_law(graph);
  const double t = threshold * (1.0 - boundary_slack);
  std::array<double, 2> center{0.0, 0.0};
  for (int i = 0; i < law.dim; ++i) { center[i] = static_cast<double>(n) * rho[i]; }
  if (law.dim == 2) {
    if (auto fast = factorized_tail_2d(law, n, t, center)) { return *fast; }
    if (n > 400) { throw OracleUnavailable("2D step law does not factor and n is too large for direct enumeration"); }
  }
  ExactLatticeDistribution dist(law);
  dist.advance(n);
  return dist.tail(t, center);
}

}  // namespace nilwalk

#endif  // NILWALK__LATTICE_ORACLE_HPP_
