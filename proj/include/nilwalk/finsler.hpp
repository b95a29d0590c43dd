#ifndef NILWALK__FINSLER_HPP_
#define NILWALK__FINSLER_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "algebra.hpp"
#include "optimize.hpp"
#include "random.hpp"

namespace nilwalk {

struct FinslerOptions
{
  int restarts       = 4;
  std::uint64_t seed = 0;
  MinimizeOptions minimize{};
};

namespace detail {

struct FinslerSolution
{
  std::vector<AlgebraVector> segments;
  double length{std::numeric_limits<double>::infinity()};
};

inline double segment_length(const StratifiedAlgebra & alg, const std::vector<AlgebraVector> & v)
{
  double total = 0.0;
  for (const auto & s : v) { total += g_norm(alg, s); }
  return total;
}

/// Closes a path of free segments so that the product hits `target` exactly.
inline std::vector<AlgebraVector> close_path(const StratifiedAlgebra & alg, BchEvaluator & bch,
                                             const Eigen::VectorXd & free, int segments,
                                             const AlgebraVector & target)
{
  const int dim = alg.dim();
  std::vector<AlgebraVector> v;
  v.reserve(segments);
  AlgebraVector acc = AlgebraVector::Zero(dim);
  for (int k = 0; k + 1 < segments; ++k) {
    v.emplace_back(free.segment(k * dim, dim));
    bch.right_multiply(acc, v.back());
  }
  AlgebraVector last(dim);
  bch.product_into(-acc, target, last);
  v.push_back(std::move(last));
  return v;
}

inline FinslerSolution finsler_search(const StratifiedAlgebra & alg, const AlgebraVector & target,
                                      int segments, const FinslerOptions & opt)
{
  const int dim = alg.dim();
  BchEvaluator bch(alg);
  FinslerSolution best;
  best.segments.assign(segments, target / segments);
  best.length = segment_length(alg, best.segments);
  if (segments == 1) { return best; }

  constexpr double smoothing = 1e-10;
  auto objective             = [&](const Eigen::VectorXd & free) {
    const auto v = close_path(alg, bch, free, segments, target);
    double total = 0.0;
    for (const auto & s : v) {
      for (int k = 1; k <= alg.step(); ++k) {
        total += std::sqrt(alg.layer(s, k).squaredNorm() + smoothing * smoothing);
      }
    }
    return total;
  };

  auto consider = [&](const std::vector<AlgebraVector> & v) {
    const double len = segment_length(alg, v);
    if (!std::isfinite(len)) { throw OptimizerFailure("non-finite path length"); }
    if (len < best.length) {
      best.length   = len;
      best.segments = v;
    }
  };

  // Paths with segments/2 pieces embed into this family by halving each piece.
  if (segments % 2 == 0) {
    const auto coarse = finsler_search(alg, target, segments / 2, opt);
    std::vector<AlgebraVector> refined;
    for (const auto & s : coarse.segments) {
      refined.push_back(0.5 * s);
      refined.push_back(0.5 * s);
    }
    consider(refined);
  }

  const double scale = std::max(g_norm(alg, target), 1e-3) / segments;
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Eigen::VectorXd x0((segments - 1) * dim);
    for (int k = 0; k + 1 < segments; ++k) { x0.segment(k * dim, dim) = target / segments; }
    if (r > 0) {
      Philox4x32 rng(opt.seed, static_cast<std::uint64_t>(r));
      for (Eigen::Index i = 0; i < x0.size(); ++i) { x0[i] += scale * standard_normal(rng); }
    }
    const auto res = minimize_bfgs(objective, x0, opt.minimize);
    consider(close_path(alg, bch, res.x, segments, target));
  }
  return best;
}

}  // namespace detail

/**
 * Upper bound on the left-invariant Finsler distance d_Fin(x, y) induced by
 * ||.||_g, obtained by minimizing the length of paths made of `segments`
 * constant-velocity pieces from x to y. The last piece is solved for, so
 * every candidate reaches y exactly. Non-increasing when `segments` doubles.
 */
inline double finsler_distance(const StratifiedAlgebra & alg, const GroupElement & x,
                               const GroupElement & y, int segments,
                               const FinslerOptions & opt = {})
{
  if (segments < 1) { throw InvalidArgument("segments must be >= 1"); }
  alg.check_vector(x.log, "x");
  alg.check_vector(y.log, "y");
  const AlgebraVector target = bch_product(alg, group_inverse(alg, x), y).log;
  if (target.squaredNorm() == 0.0) { return 0.0; }
  return detail::finsler_search(alg, target, segments, opt).length;
}

}  // namespace nilwalk

#endif  // NILWALK__FINSLER_HPP_
