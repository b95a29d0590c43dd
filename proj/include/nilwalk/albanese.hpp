#ifndef NILWALK__ALBANESE_HPP_
#define NILWALK__ALBANESE_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "quotient_graph.hpp"
#include "random.hpp"
#include "realization.hpp"
#include "walker.hpp"

namespace nilwalk {

/// Asymptotic direction rho = sum_e m~(e) log(gamma(e))|_1.
inline Vector asymptotic_direction(const VoltageGraph & graph, const InvariantMeasure & meas)
{
  const int d1 = graph.algebra().first_dim();
  Vector rho   = Vector::Zero(d1);
  for (int e = 0; e < graph.edge_count(); ++e) {
    rho += meas.edge[e] * graph.edge(e).voltage.log.head(d1);
  }
  return rho;
}

/// Same quantity computed through an arbitrary periodic realization,
/// sum_e m~(e) w(e). The vertex terms cancel by stationarity.
inline Vector asymptotic_direction(const VoltageGraph & graph, const InvariantMeasure & meas,
                                   const Realization & phi)
{
  const auto form = first_layer_form(graph, phi);
  return form.w.transpose() * meas.edge;
}

/// max over vertices x of || sum_{e in E_x} p(e) w(e) - rho ||.
inline double harmonicity_residual(const VoltageGraph & graph, const Realization & phi,
                                   const Vector & rho)
{
  const auto form = first_layer_form(graph, phi);
  double worst    = 0.0;
  for (int v = 0; v < graph.vertex_count(); ++v) {
    Vector mean = -rho;
    for (int e : graph.out_edges(v)) { mean += graph.edge(e).probability * form.w.row(e).transpose(); }
    worst = std::max(worst, mean.norm());
  }
  return worst;
}

inline constexpr double harmonicity_tolerance = 1e-10;

/**
 * Modified harmonic realization: first-layer positions phi_1 with
 * sum_{e in E_x} p(e) w(e) = rho at every vertex, gauge phi_1(base) = 0.
 * Higher-layer coordinates of the positions are zero.
 */
inline Realization modified_harmonic_realization(const VoltageGraph & graph,
                                                 const InvariantMeasure & /*meas*/,
                                                 const Vector & rho, int base = 0)
{
  const auto & alg = graph.algebra();
  const int d1     = alg.first_dim();
  const int nv     = graph.vertex_count();
  if (rho.size() != d1) { throw DimensionMismatch("rho must have the first-layer dimension"); }
  if (base < 0 || base >= nv) { throw InvalidArgument("base vertex out of range"); }

  Realization phi = Realization::trivial(graph);
  if (nv > 1) {
    // (P - I) phi = rho - sum_e p(e) gamma_1(e), row x; column `base` removed.
    Matrix L   = graph.transition_matrix() - Matrix::Identity(nv, nv);
    Matrix rhs = rho.transpose().replicate(nv, 1);
    for (int e = 0; e < graph.edge_count(); ++e) {
      const auto & edge = graph.edge(e);
      rhs.row(edge.origin) -= edge.probability * edge.voltage.log.head(d1).transpose();
    }
    Matrix A(nv, nv - 1);
    for (int v = 0, c = 0; v < nv; ++v) {
      if (v != base) { A.col(c++) = L.col(v); }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    if (qr.rank() < nv - 1) { throw SingularSystem("modified Laplacian is singular after gauge fixing"); }
    const Matrix sol = qr.solve(rhs);
    for (int v = 0, c = 0; v < nv; ++v) {
      if (v == base) { continue; }
      phi.positions[v].log.head(d1) = sol.row(c++).transpose();
    }
  }
  if (harmonicity_residual(graph, phi, rho) > harmonicity_tolerance) {
    throw SingularSystem("harmonicity equations are inconsistent");
  }
  return phi;
}

/// Psi(v) = phi_1(v) - phi0_1(v), one row per quotient vertex.
inline Matrix corrector(const Realization & phi, const Realization & phi0, int d1)
{
  if (phi.positions.size() != phi0.positions.size()) {
    throw DimensionMismatch("realizations cover different vertex sets");
  }
  return phi.first_layer(d1) - phi0.first_layer(d1);
}

struct AlbaneseData
{
  Vector rho;
  Matrix sigma;
  Matrix sigma_inv;
  Realization harmonic;
  double residual{0.0};
};

/**
 * Sigma_ij = sum_e m~(e) w0_i(e) w0_j(e) - rho_i rho_j, with w0 the
 * first-layer increments of the harmonic realization. Sigma^-1 is the Gram
 * matrix of the first-layer basis in the Albanese metric.
 */
inline AlbaneseData albanese_matrix(const VoltageGraph & graph, const InvariantMeasure & meas,
                                    const Realization & phi0, const Vector & rho)
{
  const auto w0 = first_layer_form(graph, phi0).w;
  Matrix sigma  = w0.transpose() * meas.edge.asDiagonal() * w0 - rho * rho.transpose();
  sigma         = 0.5 * (sigma + sigma.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const double top = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw SingularSigma("Sigma is not positive definite; the first-layer voltages do not span g(1)");
  }
  Matrix inv = sigma.inverse();
  inv        = 0.5 * (inv + inv.transpose()).eval();
  return {rho, sigma, inv, phi0, harmonicity_residual(graph, phi0, rho)};
}

/// validate -> invariant measure -> rho -> harmonic realization -> Sigma.
inline AlbaneseData analyze(const VoltageGraph & graph)
{
  validate(graph);
  const auto meas = invariant_measure(graph);
  const auto rho  = asymptotic_direction(graph, meas);
  const auto phi0 = modified_harmonic_realization(graph, meas, rho);
  return albanese_matrix(graph, meas, phi0, rho);
}

struct CovarianceEstimate
{
  /// (1/N) mean over samples of Xi-bar_N Xi-bar_N^T.
  Matrix mean;
  /// Per-entry standard error of `mean`.
  Matrix standard_error;
};

/**
 * Monte Carlo estimate of (1/N) E[Xi-bar_N (x) Xi-bar_N] under realization
 * `phi`. Sample s uses stream (seed, s); per-sample products are reduced in
 * sample order, so the result does not depend on `workers`.
 */
inline CovarianceEstimate clt_covariance_oracle(const VoltageGraph & graph,
                                                const InvariantMeasure & meas,
                                                const Realization & phi, std::int64_t N,
                                                std::int64_t S, std::uint64_t seed,
                                                int workers = 1, int start = 0)
{
  if (N < 1 || S < 1) { throw InvalidArgument("N and S must be >= 1"); }
  const int d1     = graph.algebra().first_dim();
  const Vector rho = asymptotic_direction(graph, meas);
  Matrix endpoints(d1, S);
  parallel_for(static_cast<std::size_t>(S), workers, [&](std::size_t s) {
    Walker walker(graph, phi, Philox4x32(seed, s), start);
    walker.advance(N);
    Vector xi(d1);
    walker.first_layer_into(xi);
    endpoints.col(static_cast<Eigen::Index>(s)) = xi - static_cast<double>(N) * rho;
  });

  CovarianceEstimate est{Matrix::Zero(d1, d1), Matrix::Zero(d1, d1)};
  Matrix second = Matrix::Zero(d1, d1);
  const double invN = 1.0 / static_cast<double>(N);
  for (std::int64_t s = 0; s < S; ++s) {
    const Matrix prod = endpoints.col(s) * endpoints.col(s).transpose() * invN;
    est.mean += prod;
    second += prod.cwiseProduct(prod);
  }
  const double count = static_cast<double>(S);
  est.mean /= count;
  if (S > 1) {
    const Matrix var = ((second / count) - est.mean.cwiseProduct(est.mean)) * (count / (count - 1.0));
    est.standard_error = (var.cwiseMax(0.0) / count).cwiseSqrt();
  }
  return est;
}

}  // namespace nilwalk

#endif  // NILWALK__ALBANESE_HPP_
