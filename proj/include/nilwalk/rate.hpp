#ifndef NILWALK__RATE_HPP_
#define NILWALK__RATE_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "albanese.hpp"
#include "algebra.hpp"
#include "optimize.hpp"
#include "random.hpp"

namespace nilwalk {

/// Sigma and Sigma^-1, the data of alpha and its conjugate alpha*.
struct QuadraticForms
{
  Matrix sigma;
  Matrix sigma_inv;

  static QuadraticForms from(const AlbaneseData & data) { return {data.sigma, data.sigma_inv}; }

  static QuadraticForms from_sigma(const Matrix & sigma)
  {
    if (sigma.rows() != sigma.cols()) { throw DimensionMismatch("Sigma must be square"); }
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) { throw SingularSigma("Sigma is not positive definite"); }
    return {sigma, llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()))};
  }

  int dim() const { return static_cast<int>(sigma.rows()); }
};

namespace detail {
inline void check_first_layer(const QuadraticForms & forms, const Vector & v)
{
  if (v.size() != forms.dim()) {
    throw DimensionMismatch("first-layer vector has length " + std::to_string(v.size())
                            + ", expected " + std::to_string(forms.dim()));
  }
}
}  // namespace detail

/// alpha(chi) = 1/2 <Sigma chi, chi>.
inline double alpha(const QuadraticForms & forms, const Vector & chi)
{
  detail::check_first_layer(forms, chi);
  return 0.5 * chi.dot(forms.sigma * chi);
}

/// alpha*(lambda) = 1/2 <Sigma^-1 lambda, lambda>, the Fenchel-Legendre
/// conjugate of alpha.
inline double alpha_star(const QuadraticForms & forms, const Vector & lam)
{
  detail::check_first_layer(forms, lam);
  return 0.5 * lam.dot(forms.sigma_inv * lam);
}

/// alpha*_i(t) = alpha*(t X_i), the section along the i-th basis direction.
inline double alpha_star_section(const QuadraticForms & forms, int i, double t)
{
  return 0.5 * t * t * forms.sigma_inv(i, i);
}

/**
 * @brief Piecewise-linear path h : [0, 1] -> g(1) with h(0) = 0, given by its
 * values at knots 0 = t_0 < ... < t_K = 1.
 */
class PiecewisePath
{
public:
  PiecewisePath(std::vector<double> knots, std::vector<Vector> values)
      : knots_(std::move(knots)), values_(std::move(values))
  {
    if (knots_.size() < 2 || knots_.size() != values_.size()) {
      throw InvalidArgument("a path needs matching knots and values, at least two of each");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0) {
      throw InvalidArgument("knots must start at 0 and end at 1");
    }
    for (std::size_t k = 1; k < knots_.size(); ++k) {
      if (!(knots_[k] > knots_[k - 1])) { throw NonIncreasingTimes("knots must be strictly increasing"); }
      if (values_[k].size() != values_[0].size()) { throw DimensionMismatch("path values differ in length"); }
    }
    if (values_[0].squaredNorm() != 0.0) { throw InvalidArgument("paths start at h(0) = 0"); }
  }

  /// Path with K uniform segments carrying the given increments.
  static PiecewisePath from_increments(const std::vector<Vector> & increments)
  {
    const auto K = increments.size();
    if (K == 0) { throw InvalidArgument("at least one increment is required"); }
    std::vector<double> knots(K + 1);
    std::vector<Vector> values;
    values.reserve(K + 1);
    values.push_back(Vector::Zero(increments[0].size()));
    for (std::size_t k = 0; k <= K; ++k) { knots[k] = static_cast<double>(k) / static_cast<double>(K); }
    knots[K] = 1.0;
    for (const auto & d : increments) { values.push_back(values.back() + d); }
    return {knots, values};
  }

  /// h(t) = t v.
  static PiecewisePath linear(const Vector & v) { return {{0.0, 1.0}, {Vector::Zero(v.size()), v}}; }

  int segments() const { return static_cast<int>(knots_.size()) - 1; }
  int dim() const { return static_cast<int>(values_[0].size()); }
  const std::vector<double> & knots() const { return knots_; }
  const std::vector<Vector> & values() const { return values_; }
  Vector increment(int k) const { return values_[k + 1] - values_[k]; }
  const Vector & endpoint() const { return values_.back(); }

  /// Same path with an extra knot at t (on an existing segment).
  PiecewisePath with_knot(double t) const
  {
    if (!(t > 0.0 && t < 1.0)) { throw InvalidArgument("new knot must lie in (0, 1)"); }
    std::vector<double> knots;
    std::vector<Vector> values;
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      if (k > 0 && t > knots_[k - 1] && t < knots_[k]) {
        const double s = (t - knots_[k - 1]) / (knots_[k] - knots_[k - 1]);
        knots.push_back(t);
        values.push_back(values_[k - 1] + s * (values_[k] - values_[k - 1]));
      }
      knots.push_back(knots_[k]);
      values.push_back(values_[k]);
    }
    return {knots, values};
  }

private:
  std::vector<double> knots_;
  std::vector<Vector> values_;
};

/// I'(h) = integral of alpha*(h'(t)) dt, exact on piecewise-linear paths.
inline double path_rate(const QuadraticForms & forms, const PiecewisePath & h)
{
  double total    = 0.0;
  const auto & t  = h.knots();
  const auto & hv = h.values();
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double dt = t[k] - t[k - 1];
    total += dt * alpha_star(forms, (hv[k] - hv[k - 1]) / dt);
  }
  return total;
}

/// I_j(lambda) for times 0 < t_1 < ... < t_J <= 1, lambda_0 = 0 at t_0 = 0.
inline double finite_dim_rate(const QuadraticForms & forms, const std::vector<double> & times,
                              const std::vector<Vector> & lams)
{
  if (times.empty() || times.size() != lams.size()) {
    throw InvalidArgument("times and values must be non-empty and of equal length");
  }
  double prev_t = 0.0;
  Vector prev   = Vector::Zero(forms.dim());
  double total  = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > prev_t) || times[k] > 1.0) {
      throw NonIncreasingTimes("times must be strictly increasing in (0, 1]");
    }
    const double dt = times[k] - prev_t;
    total += dt * alpha_star(forms, (lams[k] - prev) / dt);
    prev_t = times[k];
    prev   = lams[k];
  }
  return total;
}

/**
 * Development F(h): endpoint of the left-invariant ODE driven by h'. For a
 * piecewise-linear h this is the ordered product of exp(increment_k).
 */
inline GroupElement develop(const StratifiedAlgebra & alg, const PiecewisePath & h,
                            Product product = Product::original)
{
  if (h.dim() != alg.first_dim()) { throw DimensionMismatch("path dimension differs from d1"); }
  BchEvaluator bch(alg, product);
  AlgebraVector acc = AlgebraVector::Zero(alg.dim());
  for (int k = 0; k < h.segments(); ++k) { bch.right_multiply(acc, alg.embed_first_layer(h.increment(k))); }
  return {acc};
}

struct RateOptions
{
  /// Number of uniform segments of the candidate paths.
  int knots          = 8;
  int restarts       = 8;
  std::uint64_t seed = 0;
  Product product    = Product::original;
  int workers        = 1;
  MinimizeOptions minimize{400, 1e-10, 1e-6, 1e-12};
};

struct RateBound
{
  double value{std::numeric_limits<double>::infinity()};
  double constraint_violation{std::numeric_limits<double>::infinity()};
  bool feasible{false};
  int knots{0};
  int restarts_used{0};
  std::optional<PiecewisePath> path;
};

inline constexpr double feasibility_tolerance = 1e-8;

/// Smallest segment count accepted by endpoint_rate for this algebra.
inline int minimum_knots(const StratifiedAlgebra & alg) { return std::max(1, alg.step()); }

namespace detail {

class RateProblem
{
public:
  RateProblem(const StratifiedAlgebra & alg, const QuadraticForms & forms, const AlgebraVector & target,
              int segments, Product product)
      : alg_(alg), forms_(forms), target_(target), segments_(segments), product_(product),
        d1_(alg.first_dim()), bch_(alg, product)
  {}

  int variables() const { return (segments_ - 1) * d1_; }

  std::vector<Vector> increments(const Vector & x) const
  {
    std::vector<Vector> out;
    Vector rest = target_.head(d1_);
    for (int k = 0; k + 1 < segments_; ++k) {
      out.emplace_back(x.segment(k * d1_, d1_));
      rest -= out.back();
    }
    out.push_back(rest);
    return out;
  }

  double energy(const Vector & x) const
  {
    double total = 0.0;
    for (const auto & d : increments(x)) { total += segments_ * alpha_star(forms_, d); }
    return total;
  }

  /// Higher-layer mismatch of the development with the target.
  Vector residual(const Vector & x)
  {
    AlgebraVector acc = AlgebraVector::Zero(alg_.dim());
    AlgebraVector step = AlgebraVector::Zero(alg_.dim());
    for (const auto & d : increments(x)) {
      step.head(d1_) = d;
      bch_.right_multiply(acc, step);
    }
    return (acc - target_).tail(alg_.dim() - d1_);
  }

  Vector straight_start() const
  {
    Vector x(variables());
    for (int k = 0; k + 1 < segments_; ++k) { x.segment(k * d1_, d1_) = target_.head(d1_) / segments_; }
    return x;
  }

  /// Homogeneous size of the target, |v| + sum_k |layer k|^(1/k).
  double target_size() const
  {
    double s = target_.head(d1_).norm();
    for (int k = 2; k <= alg_.step(); ++k) { s += std::pow(alg_.layer(target_, k).norm(), 1.0 / k); }
    return s;
  }

  double perturbation_scale() const { return std::max(target_size(), 1e-3) / segments_; }

  /**
   * Quadratic-penalty schedule, weights 1, 10, ..., 1e8. The objective is
   * E(x) / E0 + mu * sum_k |residual_k|^2 / s^(2k), with s the target size
   * and E0 the energy at the start, so that it is invariant under dilations.
   */
  Vector minimize_penalized(Vector x, const MinimizeOptions & opt)
  {
    if (variables() == 0) { return x; }
    const double s = std::max(target_size(), 1e-150);
    Vector weight(alg_.dim() - d1_);
    for (int i = d1_; i < alg_.dim(); ++i) { weight[i - d1_] = std::pow(s, -alg_.layer_of(i)); }
    double e0 = energy(x);
    if (!(e0 > 0.0)) { e0 = s * s * forms_.sigma_inv.norm(); }
    for (double mu = 1.0; mu <= 1e8 * 1.5; mu *= 10.0) {
      auto objective = [&](const Vector & y) {
        return energy(y) / e0 + mu * residual(y).cwiseProduct(weight).squaredNorm();
      };
      x = minimize_bfgs(objective, x, opt).x;
    }
    return x;
  }

  /// Minimum-norm Gauss-Newton steps onto {residual = 0}.
  Vector polish(Vector x)
  {
    const int m = alg_.dim() - d1_;
    const int n = variables();
    if (m == 0 || n == 0) { return x; }
    constexpr double h = 1e-7;
    Vector r           = residual(x);
    for (int it = 0; it < 60 && r.norm() > 1e-15 * (1.0 + target_.norm()); ++it) {
      Matrix J(m, n);
      Vector probe = x;
      for (int j = 0; j < n; ++j) {
        probe[j]       = x[j] + h;
        const Vector p = residual(probe);
        probe[j]       = x[j] - h;
        const Vector q = residual(probe);
        probe[j]       = x[j];
        J.col(j)       = (p - q) / (2.0 * h);
      }
      const Vector dx = -Eigen::CompleteOrthogonalDecomposition<Matrix>(J).solve(r);
      double step     = 1.0;
      bool improved   = false;
      for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
        const Vector trial = x + step * dx;
        const Vector rt    = residual(trial);
        if (rt.allFinite() && rt.norm() < r.norm()) {
          x        = trial;
          r        = rt;
          improved = true;
          break;
        }
      }
      if (!improved) { break; }
    }
    return x;
  }

  PiecewisePath path(const Vector & x) const { return PiecewisePath::from_increments(increments(x)); }

private:
  const StratifiedAlgebra & alg_;
  const QuadraticForms & forms_;
  AlgebraVector target_;
  int segments_;
  Product product_;
  int d1_;
  BchEvaluator bch_;
};

inline double violation(const StratifiedAlgebra & alg, const PiecewisePath & h, const AlgebraVector & target,
                        Product product)
{
  return (develop(alg, h, product).log - target).norm();
}

inline RateBound rate_search(const StratifiedAlgebra & alg, const QuadraticForms & forms,
                             const AlgebraVector & target, int segments, const RateOptions & opt)
{
  RateBound best;
  best.knots         = segments;
  best.restarts_used = std::max(1, opt.restarts);

  auto consider = [&](const PiecewisePath & h) {
    const double viol = violation(alg, h, target, opt.product);
    if (!(viol <= feasibility_tolerance)) { return; }
    const double value = path_rate(forms, h);
    if (!best.feasible || value < best.value) {
      best.value                = value;
      best.constraint_violation = viol;
      best.feasible             = true;
      best.path                 = h;
    }
  };

  // Without higher layers the constraint is h(1) = target and the straight
  // line is optimal by Jensen's inequality.
  if (alg.dim() == alg.first_dim()) {
    std::vector<Vector> inc(segments, target / segments);
    consider(PiecewisePath::from_increments(inc));
    return best;
  }

  // Uniform paths with segments/2 pieces are uniform paths with `segments`
  // pieces after halving each increment, so the bound never gets worse
  // when the knot count doubles.
  if (segments % 2 == 0 && segments / 2 >= minimum_knots(alg)) {
    const auto coarse = rate_search(alg, forms, target, segments / 2, opt);
    if (coarse.path) {
      std::vector<Vector> inc;
      for (int k = 0; k < coarse.path->segments(); ++k) {
        const Vector half = 0.5 * coarse.path->increment(k);
        inc.push_back(half);
        inc.push_back(half);
      }
      consider(PiecewisePath::from_increments(inc));
    }
  }

  const int restarts = std::max(1, opt.restarts);
  std::vector<std::optional<PiecewisePath>> found(restarts + 1);
  auto optimize_from = [&](RateProblem & problem, Vector x) -> std::optional<PiecewisePath> {
    x = problem.polish(x);
    x = problem.minimize_penalized(x, opt.minimize);
    x = problem.polish(x);
    if (!x.allFinite()) { return std::nullopt; }
    return problem.path(x);
  };
  parallel_for(static_cast<std::size_t>(restarts), opt.workers, [&](std::size_t r) {
    RateProblem problem(alg, forms, target, segments, opt.product);
    Vector x = problem.straight_start();
    if (r > 0) {
      Philox4x32 rng(opt.seed, static_cast<std::uint64_t>(r));
      const double s = problem.perturbation_scale();
      for (Eigen::Index i = 0; i < x.size(); ++i) { x[i] += s * standard_normal(rng); }
    }
    found[r] = optimize_from(problem, x);
  });
  if (best.path) {
    // Continue from the refined coarse solution.
    RateProblem problem(alg, forms, target, segments, opt.product);
    Vector x(problem.variables());
    for (int k = 0; k + 1 < segments; ++k) { x.segment(k * alg.first_dim(), alg.first_dim()) = best.path->increment(k); }
    found[restarts] = optimize_from(problem, x);
  }
  for (const auto & h : found) {
    if (h) { consider(*h); }
  }
  return best;
}

}  // namespace detail

/**
 * Upper bound on I(g) = inf { I'(h) : F(h) = g } over piecewise-linear paths
 * with `opt.knots` uniform segments. Candidates come from a quadratic-penalty
 * schedule (weights 1 .. 1e8) followed by a Gauss-Newton feasibility polish,
 * from the straight line and `opt.restarts - 1` seeded perturbations of it.
 * The first layer of the constraint is built into the parametrization, so
 * every candidate ends at the right first-layer point exactly.
 *
 * When no candidate reaches g within 1e-8 the result has feasible == false
 * and value == +inf.
 */
inline RateBound endpoint_rate(const StratifiedAlgebra & alg, const QuadraticForms & forms,
                               const GroupElement & g, const RateOptions & opt = {})
{
  alg.check_vector(g.log, "target");
  if (forms.dim() != alg.first_dim()) { throw DimensionMismatch("forms do not match the first layer"); }
  if (opt.knots < minimum_knots(alg)) {
    throw InvalidArgument("at least " + std::to_string(minimum_knots(alg)) + " segments are needed for step "
                          + std::to_string(alg.step()));
  }
  if (alg.step() > StratifiedAlgebra::max_supported_step) {
    throw UnsupportedStep("step " + std::to_string(alg.step()) + " is not supported");
  }
  if (g.log.squaredNorm() == 0.0) {
    RateBound zero;
    zero.value                = 0.0;
    zero.constraint_violation = 0.0;
    zero.feasible             = true;
    zero.knots                = opt.knots;
    zero.restarts_used        = 0;
    zero.path = PiecewisePath::from_increments(std::vector<Vector>(opt.knots, Vector::Zero(alg.first_dim())));
    return zero;
  }
  return detail::rate_search(alg, forms, g.log, opt.knots, opt);
}

/// I_inf(g) = I(phi^-1(g)), developed with the limit-group product.
inline RateBound limit_rate(const StratifiedAlgebra & alg, const QuadraticForms & forms,
                            const GroupElement & g_inf, RateOptions opt = {})
{
  opt.product = Product::limit;
  return endpoint_rate(alg, forms, phi_inverse(alg, g_inf), opt);
}

/**
 * Membership in the sublevel set {I_inf <= level}. Because limit_rate is an
 * upper bound, `true` is always correct up to `tol`; `false` may be wrong
 * when the optimizer misses the infimum.
 */
inline bool lil_ball_contains(const StratifiedAlgebra & alg, const QuadraticForms & forms,
                              const GroupElement & g, double level, double tol,
                              const RateOptions & opt = {})
{
  if (!(level > 0.0)) { throw InvalidArgument("level must be positive"); }
  const auto bound = limit_rate(alg, forms, g, opt);
  return bound.feasible && bound.value <= level + tol;
}

}  // namespace nilwalk

#endif  // NILWALK__RATE_HPP_
