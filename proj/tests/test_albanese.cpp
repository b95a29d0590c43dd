#include <gtest/gtest.h>

#include <random>

#include "nilwalk/albanese.hpp"
#include "oracles.hpp"

using namespace nilwalk;

namespace {

std::vector<VoltageGraph> all_presets()
{
  return {presets::zd_lattice(2), presets::z1_biased(0.75), presets::hexagonal(), presets::heisenberg_cayley(),
          presets::z1_subdivided()};
}

VoltageGraph drifted_z2()
{
  return presets::single_vertex_lattice({{0.4, 0.1}, {0.25, 0.25}});
}

/// Three vertices on a triangle, covering Z with a biased kernel.
VoltageGraph triangle()
{
  auto alg = StratifiedAlgebra::abelian(1);
  std::vector<Edge> edges;
  presets::add_edge_pair(edges, 0, 1, 0.6, 0.3, Vector{{0.0}});
  presets::add_edge_pair(edges, 1, 2, 0.7, 0.5, Vector{{0.0}});
  presets::add_edge_pair(edges, 2, 0, 0.5, 0.4, Vector{{1.0}});
  return {alg, 3, edges};
}

Realization random_realization(const VoltageGraph & g, std::mt19937_64 & gen)
{
  Realization phi = Realization::trivial(g);
  for (auto & p : phi.positions) { p.log = oracle::random_vector(gen, g.algebra().dim(), 3.0); }
  return phi;
}

}  // namespace

TEST(AsymptoticDirection, Examples)
{
  auto dir = [](const VoltageGraph & g) { return asymptotic_direction(g, invariant_measure(g)); };
  EXPECT_NEAR(dir(presets::z1_biased(0.75))[0], 0.5, 1e-15);
  EXPECT_EQ(dir(presets::heisenberg_cayley()), Vector::Zero(2));
  const Vector r = dir(drifted_z2());
  EXPECT_NEAR(r[0], 0.3, 1e-15);
  EXPECT_NEAR(r[1], 0.0, 1e-15);
}

TEST(AsymptoticDirection, RealizationIndependent)
{
  std::mt19937_64 gen(7);
  auto graphs = all_presets();
  graphs.push_back(triangle());
  for (const auto & g : graphs) {
    const auto m   = invariant_measure(g);
    const Vector r = asymptotic_direction(g, m);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector s = asymptotic_direction(g, m, random_realization(g, gen));
      EXPECT_LE((r - s).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(AsymptoticDirection, TriangleMatchesCycleFlow)
{
  // Net flow through the single cycle: m(0) p(0->1) - m(1) p(1->0).
  const auto g = triangle();
  const auto m = invariant_measure(g);
  const double flow = m.vertex[0] * 0.6 - m.vertex[1] * 0.3;
  EXPECT_NEAR(asymptotic_direction(g, m)[0], flow, 1e-14);
}

TEST(HarmonicRealization, Examples)
{
  for (const auto & g : {presets::zd_lattice(2), presets::heisenberg_cayley(), presets::z1_biased(0.75)}) {
    const auto data = analyze(g);
    EXPECT_TRUE(data.harmonic.is_trivial());
  }
  const auto sub = analyze(presets::z1_subdivided());
  EXPECT_EQ(sub.harmonic.positions[0].log[0], 0.0);
  EXPECT_NEAR(sub.harmonic.positions[1].log[0], 0.5, 1e-15);
  EXPECT_LE(analyze(presets::hexagonal()).residual, 1e-10);
}

TEST(HarmonicRealization, ResidualOnAllPresets)
{
  auto graphs = all_presets();
  graphs.push_back(triangle());
  for (const auto & g : graphs) {
    const auto data = analyze(g);
    EXPECT_LE(data.residual, 1e-10);
    for (const auto & p : data.harmonic.positions) {
      EXPECT_EQ(p.log.tail(g.algebra().dim() - g.algebra().first_dim()).squaredNorm(), 0.0);
    }
    EXPECT_EQ(data.harmonic.positions[0].log.squaredNorm(), 0.0);
  }
}

TEST(HarmonicRealization, BaseOutOfRange)
{
  const auto g = presets::hexagonal();
  EXPECT_THROW(modified_harmonic_realization(g, invariant_measure(g), Vector::Zero(2), 2), InvalidArgument);
  EXPECT_THROW(modified_harmonic_realization(g, invariant_measure(g), Vector::Zero(3)), DimensionMismatch);
}

TEST(FirstLayerForm, AntisymmetricAndHolonomy)
{
  std::mt19937_64 gen(11);
  auto graphs = all_presets();
  graphs.push_back(triangle());
  for (const auto & g : graphs) {
    const int d1     = g.algebra().first_dim();
    const auto basis = cycle_basis(g);
    const auto phi   = random_realization(g, gen);
    const Matrix w   = first_layer_form(g, phi).w;
    for (int e = 0; e < g.edge_count(); ++e) {
      EXPECT_LE((w.row(e) + w.row(g.edge(e).inverse)).cwiseAbs().maxCoeff(), 1e-13);
    }
    for (const auto & cycle : basis.cycles) {
      Vector along = Vector::Zero(d1);
      Vector hol   = Vector::Zero(d1);
      for (int e = 0; e < g.edge_count(); ++e) {
        along += 0.5 * cycle[e] * w.row(e).transpose();
        hol += 0.5 * cycle[e] * g.edge(e).voltage.log.head(d1);
      }
      EXPECT_LE((along - hol).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Corrector, Examples)
{
  const auto g    = presets::z1_subdivided();
  const auto data = analyze(g);
  EXPECT_EQ(corrector(data.harmonic, data.harmonic, 1).cwiseAbs().maxCoeff(), 0.0);
  const Matrix psi = corrector(Realization::trivial(g), data.harmonic, 1);
  EXPECT_EQ(psi(0, 0), 0.0);
  EXPECT_NEAR(psi(1, 0), -0.5, 1e-15);
  const auto lat = analyze(presets::zd_lattice(2));
  EXPECT_EQ(corrector(Realization::trivial(presets::zd_lattice(2)), lat.harmonic, 2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Corrector, StationaryDifferencesVanish)
{
  std::mt19937_64 gen(3);
  for (const auto & g : {presets::hexagonal(), presets::z1_subdivided(), triangle()}) {
    const auto m     = invariant_measure(g);
    const auto data  = analyze(g);
    const int d1     = g.algebra().first_dim();
    const Matrix psi = corrector(random_realization(g, gen), data.harmonic, d1);
    Vector total     = Vector::Zero(d1);
    for (int e = 0; e < g.edge_count(); ++e) {
      total += m.edge[e] * (psi.row(g.edge(e).terminus) - psi.row(g.edge(e).origin)).transpose();
    }
    EXPECT_LE(total.cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(AlbaneseMatrix, Examples)
{
  for (int d = 1; d <= 4; ++d) {
    const auto data = analyze(presets::zd_lattice(d));
    EXPECT_LE((data.sigma - Matrix::Identity(d, d) / d).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_NEAR(analyze(presets::z1_biased(0.75)).sigma(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(analyze(presets::z1_subdivided()).sigma(0, 0), 0.25, 1e-15);
  const auto heis = analyze(presets::heisenberg_cayley());
  EXPECT_LE((heis.sigma - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((heis.sigma_inv - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AlbaneseMatrix, BiasedFamily)
{
  for (double q : {0.1, 0.3, 0.5, 0.9}) {
    EXPECT_NEAR(analyze(presets::z1_biased(q)).sigma(0, 0), 4.0 * q * (1.0 - q), 1e-14);
  }
}

TEST(AlbaneseMatrix, HexagonalByHand)
{
  // The translations (1,0), (0,1), (-1,-1) sum to zero, so the harmonic
  // realization is trivial and Sigma = (1/3) sum t t^T.
  const auto data = analyze(presets::hexagonal());
  Matrix direct = Matrix::Zero(2, 2);
  for (const Vector & t : {Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}, Vector{{-1.0, -1.0}}}) {
    direct += t * t.transpose() / 3.0;
  }
  EXPECT_LE((data.sigma - direct).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AlbaneseMatrix, InverseAndSymmetry)
{
  auto graphs = all_presets();
  graphs.push_back(triangle());
  graphs.push_back(drifted_z2());
  for (const auto & g : graphs) {
    const auto data = analyze(g);
    const int d1    = g.algebra().first_dim();
    EXPECT_EQ(data.sigma, data.sigma.transpose());
    EXPECT_LE((data.sigma * data.sigma_inv - Matrix::Identity(d1, d1)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(data.sigma).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(AlbaneseMatrix, GaugeAndOrderingInvariance)
{
  const auto g    = triangle();
  const auto m    = invariant_measure(g);
  const auto data = analyze(g);
  Realization shifted = data.harmonic;
  for (auto & p : shifted.positions) { p.log[0] += 2.5; }
  const auto again = albanese_matrix(g, m, shifted, data.rho);
  EXPECT_EQ(first_layer_form(g, shifted).w, first_layer_form(g, data.harmonic).w);
  EXPECT_EQ(again.sigma, data.sigma);

  const auto other = modified_harmonic_realization(g, m, data.rho, 2);
  EXPECT_LE((albanese_matrix(g, m, other, data.rho).sigma - data.sigma).cwiseAbs().maxCoeff(), 1e-12);

  std::vector<Edge> edges = g.edges();
  std::vector<int> perm{2, 0, 1};
  for (auto & e : edges) {
    e.origin   = perm[e.origin];
    e.terminus = perm[e.terminus];
  }
  const auto relabeled = analyze(VoltageGraph(g.algebra(), 3, edges));
  EXPECT_LE((relabeled.sigma - data.sigma).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((relabeled.rho - data.rho).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AlbaneseMatrix, NonSurjectiveVoltagesAreSingular)
{
  auto alg = StratifiedAlgebra::abelian(2);
  std::vector<Edge> edges;
  presets::add_edge_pair(edges, 0, 0, 0.5, 0.5, Vector{{1.0, 0.0}});
  EXPECT_THROW(analyze(VoltageGraph(alg, 1, edges)), SingularSigma);
}

TEST(CltOracle, SingleStepVariance)
{
  const auto g   = presets::zd_lattice(1);
  const auto est = clt_covariance_oracle(g, invariant_measure(g), Realization::trivial(g), 1, 50, 1);
  EXPECT_EQ(est.mean(0, 0), 1.0);
  EXPECT_THROW(clt_covariance_oracle(g, invariant_measure(g), Realization::trivial(g), 0, 5, 1), InvalidArgument);
}

TEST(CltOracle, MatchesSigmaOnLatticeAndHeisenberg)
{
  for (const auto & g : {presets::zd_lattice(2), presets::heisenberg_cayley()}) {
    const auto data = analyze(g);
    const auto est  = clt_covariance_oracle(g, invariant_measure(g), data.harmonic, 10000, 10000, 2024);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        EXPECT_LE(std::abs(est.mean(i, j) - data.sigma(i, j)), 3.0 * est.standard_error(i, j))
            << i << "," << j;
      }
    }
  }
}

TEST(CltOracle, MatchesSigmaOnAllPresets)
{
  auto graphs = all_presets();
  graphs.push_back(triangle());
  for (const auto & g : graphs) {
    const auto data = analyze(g);
    const int d1    = g.algebra().first_dim();
    const auto est  = clt_covariance_oracle(g, invariant_measure(g), data.harmonic, 10000, 2000, 99);
    for (int i = 0; i < d1; ++i) {
      for (int j = 0; j < d1; ++j) {
        EXPECT_LE(std::abs(est.mean(i, j) - data.sigma(i, j)), 3.0 * est.standard_error(i, j) + 1e-3);
      }
    }
  }
}

TEST(CltOracle, WorkerCountDoesNotMatter)
{
  const auto g = presets::hexagonal();
  const auto m = invariant_measure(g);
  const auto d = analyze(g);
  const auto a = clt_covariance_oracle(g, m, d.harmonic, 200, 300, 5, 1);
  const auto b = clt_covariance_oracle(g, m, d.harmonic, 200, 300, 5, 8);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(CltOracle, ExpectedNormGrowsLikeRootN)
{
  // E|Xi-bar_n| / sqrt(n) stays below 2 * max edge increment.
  for (const auto & g : {presets::z1_biased(0.75), presets::hexagonal(), presets::heisenberg_cayley()}) {
    const auto data = analyze(g);
    const Matrix w  = first_layer_form(g, data.harmonic).w;
    double cmax     = 0.0;
    for (int e = 0; e < g.edge_count(); ++e) { cmax = std::max(cmax, w.row(e).norm()); }
    for (std::int64_t n : {100, 1000, 10000}) {
      const auto batch =
          batch_endpoints(g, data.harmonic, data.rho, ScalingSequence::power(0.75), n, 400, 17);
      const double mean_norm = batch.xi_bar.colwise().norm().mean();
      EXPECT_LE(mean_norm / std::sqrt(static_cast<double>(n)), 2.0 * cmax);
      EXPECT_LE(batch.xi_bar.colwise().norm().maxCoeff(), cmax * static_cast<double>(n) * 2.0);
    }
  }
}
