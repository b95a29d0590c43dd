#ifndef NILWALK__OPTIMIZE_HPP_
#define NILWALK__OPTIMIZE_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>

#include "error.hpp"

namespace nilwalk {

struct MinimizeOptions
{
  int max_iterations        = 400;
  double gradient_tolerance = 1e-10;
  double fd_step            = 1e-6;
  /// Stop once an accepted step lowers f by at most this fraction of
  /// max(|f|, 1). Zero disables the test.
  double value_tolerance = 0.0;
};

struct MinimizeResult
{
  Eigen::VectorXd x;
  double value{0.0};
  int iterations{0};
};

/// Central finite-difference gradient.
template<class F>
Eigen::VectorXd fd_gradient(F & f, const Eigen::VectorXd & x, double h)
{
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i]        = x[i] + h;
    const double fp = f(probe);
    probe[i]        = x[i] - h;
    const double fm = f(probe);
    probe[i]        = x[i];
    g[i]            = (fp - fm) / (2.0 * h);
  }
  return g;
}

/**
 * Quasi-Newton (BFGS, inverse-Hessian form) minimization with Armijo
 * backtracking and finite-difference gradients. Non-finite trial values are
 * rejected by the line search; a non-finite value at the start point throws
 * OptimizerFailure.
 */
template<class F>
MinimizeResult minimize_bfgs(F && f, Eigen::VectorXd x, const MinimizeOptions & opt = {})
{
  const Eigen::Index n = x.size();
  double fx            = f(x);
  if (!std::isfinite(fx)) { throw OptimizerFailure("objective is not finite at the start point"); }
  MinimizeResult result{x, fx, 0};
  if (n == 0) { return result; }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh        = true;
  Eigen::VectorXd g = fd_gradient(f, x, opt.fd_step);

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (!g.allFinite()) { throw OptimizerFailure("gradient is not finite"); }
    if (g.norm() <= opt.gradient_tolerance * (1.0 + std::abs(fx))) { break; }

    Eigen::VectorXd d = -H * g;
    double slope      = g.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      fresh = true;
      d     = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    Eigen::VectorXd trial;
    double ft     = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      trial = x + step * d;
      ft    = f(trial);
      if (std::isfinite(ft) && ft <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (fresh) { break; }
      H.setIdentity();
      fresh = true;
      continue;
    }

    const Eigen::VectorXd g_new = fd_gradient(f, trial, opt.fd_step);
    const Eigen::VectorXd s     = trial - x;
    const Eigen::VectorXd y     = g_new - g;
    const double sy             = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (fresh) {
        H *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho        = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += rho * rho * (sy + y.dot(Hy)) * (s * s.transpose())
         - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    const double drop  = fx - ft;
    const bool stalled = (std::abs(drop) <= 1e-16 * (1.0 + std::abs(fx)) && step < 1e-12)
                      || drop <= opt.value_tolerance * std::max(std::abs(fx), 1.0);
    x                  = std::move(trial);
    fx                 = ft;
    g                  = g_new;
    if (stalled) { break; }
  }
  result.x          = std::move(x);
  result.value      = fx;
  result.iterations = it;
  return result;
}

}  // namespace nilwalk

#endif  // NILWALK__OPTIMIZE_HPP_
