#ifndef NILWALK_TESTS__ORACLES_HPP_
#define NILWALK_TESTS__ORACLES_HPP_

// Independent reference computations used by the test suite.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "nilwalk/algebra.hpp"

namespace oracle {

using nilwalk::AlgebraVector;
using nilwalk::Matrix;
using nilwalk::Vector;

/**
 * Strictly upper-triangular n x n matrices. Basis E_ij (i < j) ordered by
 * layer j - i, then by i; step n - 1.
 */
struct UpperTriangular
{
  int n;
  std::vector<std::pair<int, int>> basis;

  explicit UpperTriangular(int size) : n(size)
  {
    for (int layer = 1; layer < n; ++layer) {
      for (int i = 0; i + layer < n; ++i) { basis.emplace_back(i, i + layer); }
    }
  }

  int index(int i, int j) const
  {
    for (std::size_t a = 0; a < basis.size(); ++a) {
      if (basis[a] == std::make_pair(i, j)) { return static_cast<int>(a); }
    }
    return -1;
  }

  /// [E_ij, E_kl] = delta_jk E_il - delta_li E_kj.
  nilwalk::StratifiedAlgebra algebra() const
  {
    std::vector<int> dims;
    for (int layer = 1; layer < n; ++layer) { dims.push_back(n - layer); }
    std::vector<nilwalk::BracketEntry> entries;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = a + 1; b < basis.size(); ++b) {
        const auto [i, j] = basis[a];
        const auto [k, l] = basis[b];
        if (j == k) { entries.push_back({static_cast<int>(a), static_cast<int>(b), index(i, l), 1.0}); }
        if (l == i) { entries.push_back({static_cast<int>(a), static_cast<int>(b), index(k, j), -1.0}); }
      }
    }
    return nilwalk::StratifiedAlgebra(dims, entries);
  }

  Matrix to_matrix(const AlgebraVector & z) const
  {
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t a = 0; a < basis.size(); ++a) { m(basis[a].first, basis[a].second) = z[a]; }
    return m;
  }

  AlgebraVector from_matrix(const Matrix & m) const
  {
    AlgebraVector z(basis.size());
    for (std::size_t a = 0; a < basis.size(); ++a) { z[a] = m(basis[a].first, basis[a].second); }
    return z;
  }

  /// Finite exponential series (A^n = 0).
  Matrix exp(const Matrix & a) const
  {
    Matrix out  = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < n; ++k) {
      term = term * a / static_cast<double>(k);
      out += term;
    }
    return out;
  }

  /// log(I + N) = N - N^2/2 + N^3/3 - ...
  Matrix log(const Matrix & u) const
  {
    const Matrix N = u - Matrix::Identity(n, n);
    Matrix out     = Matrix::Zero(n, n);
    Matrix power   = Matrix::Identity(n, n);
    for (int k = 1; k < n; ++k) {
      power = power * N;
      out += ((k % 2) ? 1.0 : -1.0) * power / static_cast<double>(k);
    }
    return out;
  }

  /// log(exp(a) exp(b)) computed with matrices.
  AlgebraVector product(const AlgebraVector & a, const AlgebraVector & b) const
  {
    return from_matrix(log(exp(to_matrix(a)) * exp(to_matrix(b))));
  }
};

/// Heisenberg group as 3 x 3 unipotent matrices, X = E_01, Y = E_12, Z = E_02.
inline AlgebraVector heisenberg_product(const AlgebraVector & a, const AlgebraVector & b)
{
  return UpperTriangular(3).product(a, b);
}

/**
 * Minimal energy int |h'|^2 dt of a horizontal curve from the identity to
 * (v, z) in the Heisenberg group with [X, Y] = Z. Minimizers are circular
 * arcs: with turning angle theta and length L, the chord is
 * L sin(theta/2) / (theta/2) and the enclosed area L^2 (theta - sin theta) /
 * (2 theta^2). Solved for theta by bisection.
 */
inline double heisenberg_energy(double r, double z)
{
  z = std::abs(z);
  if (z == 0.0) { return r * r; }
  if (r == 0.0) { return 4.0 * std::numbers::pi * z; }
  auto ratio = [](double t) { return (t - std::sin(t)) / (8.0 * std::pow(std::sin(t / 2.0), 2)); };
  double lo = 1e-9, hi = 2.0 * std::numbers::pi - 1e-12;
  const double want = z / (r * r);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) < want ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  const double L = r * (t / 2.0) / std::sin(t / 2.0);
  return L * L;
}

inline Vector random_vector(std::mt19937_64 & gen, int n, double scale = 1.0)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) { v[i] = u(gen); }
  return v;
}

}  // namespace oracle

#endif  // NILWALK_TESTS__ORACLES_HPP_
