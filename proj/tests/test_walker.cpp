#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "nilwalk/albanese.hpp"
#include "nilwalk/walker.hpp"
#include "oracles.hpp"

using namespace nilwalk;

namespace {

struct Analyzed
{
  VoltageGraph graph;
  AlbaneseData data;

  explicit Analyzed(VoltageGraph g) : graph(std::move(g)), data(analyze(graph)) {}
};

}  // namespace

TEST(Philox, KnownAnswers)
{
  using Block = std::array<std::uint32_t, 4>;
  EXPECT_EQ(Philox4x32::permute({0, 0, 0, 0}, {0, 0}),
            (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::permute({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreDistinctAndReproducible)
{
  Philox4x32 a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs_stream |= x != c();
    differs_seed |= x != d();
  }
  EXPECT_TRUE(differs_stream);
  EXPECT_TRUE(differs_seed);
  EXPECT_EQ(a.block(), 4u);
}

TEST(Philox, UniformMoments)
{
  Philox4x32 rng(1, 2);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n, 1.0 / 3.0, 0.005);
}

TEST(ParallelFor, PropagatesExceptions)
{
  EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) {
                 if (i == 37) { throw InvalidArgument("boom"); }
               }),
               InvalidArgument);
}

TEST(Scaling, Kinds)
{
  const auto p = ScalingSequence::power(0.75);
  EXPECT_DOUBLE_EQ(p(16), 8.0);
  EXPECT_TRUE(p.satisfies_window());
  const auto b = ScalingSequence::lil();
  EXPECT_THROW(b(15), ScalingDomain);
  EXPECT_DOUBLE_EQ(b(100), std::sqrt(100.0 * std::log(std::log(100.0))));
  EXPECT_TRUE(b.satisfies_window());
  EXPECT_THROW(ScalingSequence::power(0.5), InvalidArgument);
  EXPECT_THROW(ScalingSequence::power(1.0), InvalidArgument);
  EXPECT_FALSE(ScalingSequence::custom([](std::int64_t n) { return std::sqrt(static_cast<double>(n)); })
                   .satisfies_window());
  EXPECT_FALSE(
      ScalingSequence::custom([](std::int64_t n) { return static_cast<double>(n); }).satisfies_window());
}

TEST(SamplePath, ZeroSteps)
{
  Analyzed s(presets::heisenberg_cayley());
  const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 0, 5);
  EXPECT_EQ(path.xi.log.squaredNorm(), 0.0);
  EXPECT_EQ(path.Xi_bar.squaredNorm(), 0.0);
  EXPECT_EQ(path.vertices, std::vector<int>{0});
  EXPECT_THROW(sample_path(s.graph, s.data.harmonic, s.data.rho, -1, 5), InvalidArgument);
}

TEST(SamplePath, LatticeCountsSignedSteps)
{
  Analyzed s(presets::zd_lattice(1));
  const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 10, 123);
  // Replay the uniforms: edge 0 (+1) when u < 1/2.
  Philox4x32 rng(123, 0);
  double expected = 0.0;
  for (int k = 0; k < 10; ++k) {
    const bool plus = rng.uniform() < 0.5;
    EXPECT_EQ(path.edges[k], plus ? 0 : 1);
    expected += plus ? 1.0 : -1.0;
  }
  EXPECT_EQ(path.xi.log[0], expected);
}

TEST(SamplePath, HeisenbergMatchesMatrixProduct)
{
  Analyzed s(presets::heisenberg_cayley());
  oracle::UpperTriangular mats(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 300, seed);
    Matrix product  = Matrix::Identity(3, 3);
    double x = 0.0, y = 0.0, area = 0.0;
    for (int e : path.edges) {
      const auto & step = s.graph.edge(e).voltage.log;
      product           = product * mats.exp(mats.to_matrix(step));
      area += 0.5 * (x * step[1] - y * step[0]);
      x += step[0];
      y += step[1];
    }
    const AlgebraVector ref = mats.from_matrix(mats.log(product));
    EXPECT_LE((path.xi.log - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(path.xi.log[0], x);
    EXPECT_EQ(path.xi.log[1], y);
    EXPECT_NEAR(path.xi.log[2], area, 1e-12);
  }
}

TEST(SamplePath, DeckFoldAgreesWithIncrementalProduct)
{
  auto alg = oracle::UpperTriangular(4).algebra();
  std::vector<Edge> edges;
  presets::add_edge_pair(edges, 0, 1, 0.5, 0.4, alg.embed_first_layer(Vector{{1.0, 0.0, 0.0}}));
  presets::add_edge_pair(edges, 1, 0, 0.4, 0.3, alg.embed_first_layer(Vector{{0.0, 1.0, 0.0}}));
  presets::add_edge_pair(edges, 0, 0, 0.1, 0.1, alg.embed_first_layer(Vector{{0.0, 0.0, 1.0}}));
  presets::add_edge_pair(edges, 1, 1, 0.1, 0.1, alg.embed_first_layer(Vector{{1.0, -1.0, 1.0}}));
  VoltageGraph g(alg, 2, edges);
  validate(g);
  const auto data = analyze(g);
  const auto path = sample_path(g, data.harmonic, data.rho, 200, 9);
  GroupElement fold = GroupElement::identity(alg.dim());
  for (int e : path.edges) { fold = bch_product(alg, fold, g.edge(e).voltage); }
  EXPECT_LE((fold.log - path.deck.log).cwiseAbs().maxCoeff(), 1e-12);
  const auto xi = bch_product(alg, fold, data.harmonic.positions[path.vertices.back()]);
  EXPECT_LE((xi.log - path.xi.log).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SamplePath, IncrementIdentities)
{
  Analyzed s(presets::z1_subdivided());
  const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 500, 3);
  EXPECT_LE((path.increments.rowwise().sum() - path.Xi_bar).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(path.increments.cwiseAbs().maxCoeff(), 0.5 + 1e-15);
  EXPECT_EQ(path.Xi.col(500), path.xi.log.head(1));
}

TEST(SamplePath, DriftIsRemoved)
{
  Analyzed s(presets::z1_biased(0.75));
  const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 1000, 4);
  EXPECT_NEAR(path.Xi_bar[0], path.xi.log[0] - 500.0, 1e-12);
}

TEST(SamplePath, LawOfLargeNumbers)
{
  Analyzed s(presets::z1_biased(0.75));
  const std::int64_t n = 1000000;
  const auto batch = batch_endpoints(s.graph, s.data.harmonic, s.data.rho, ScalingSequence::power(0.75), n, 20, 77);
  for (int i = 0; i < 20; ++i) {
    EXPECT_LE(std::abs(batch.xi_bar(0, i) / static_cast<double>(n)), 5.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(SamplePath, StepFrequenciesMatchKernel)
{
  std::vector<Edge> edges;
  auto alg = StratifiedAlgebra::abelian(1);
  presets::add_edge_pair(edges, 0, 1, 0.6, 0.3, Vector{{0.0}});
  presets::add_edge_pair(edges, 1, 2, 0.7, 0.5, Vector{{0.0}});
  presets::add_edge_pair(edges, 2, 0, 0.5, 0.4, Vector{{1.0}});
  Analyzed s(VoltageGraph(alg, 3, edges));
  Walker walker(s.graph, s.data.harmonic, Philox4x32(8, 0));
  std::vector<double> visits(3, 0.0), taken(s.graph.edge_count(), 0.0);
  for (int k = 0; k < 1000000; ++k) {
    visits[walker.vertex()] += 1.0;
    taken[walker.step()] += 1.0;
  }
  for (int e = 0; e < s.graph.edge_count(); ++e) {
    const double p  = s.graph.edge(e).probability;
    const double nv = visits[s.graph.edge(e).origin];
    EXPECT_LE(std::abs(taken[e] / nv - p), 4.0 * std::sqrt(p * (1.0 - p) / nv));
  }
}

TEST(Interpolate, Values)
{
  Analyzed s(presets::hexagonal());
  const auto path  = sample_path(s.graph, s.data.harmonic, s.data.rho, 64, 2);
  const auto scale = ScalingSequence::power(0.75);
  const auto z     = interpolate(path, scale);
  const double a   = scale(64);
  EXPECT_EQ(z.value(0.0), Vector::Zero(2));
  EXPECT_EQ(z.value(1.0), path.Xi_bar / a);
  Vector partial = Vector::Zero(2);
  for (int k = 1; k <= 64; ++k) {
    partial += path.increments.col(k - 1);
    EXPECT_LE((z.value(k / 64.0) - partial / a).cwiseAbs().maxCoeff(), 1e-12);
  }
  const Vector mid = z.value(10.5 / 64.0);
  EXPECT_LE((mid - 0.5 * (z.value(10.0 / 64.0) + z.value(11.0 / 64.0))).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(z.value(1.5), InvalidArgument);

  const auto one = sample_path(s.graph, s.data.harmonic, s.data.rho, 1, 2);
  const auto z1  = interpolate(one, scale);
  EXPECT_LE((z1.value(0.5) - 0.5 * one.increments.col(0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(interpolate(one, ScalingSequence::lil()), ScalingDomain);
}

TEST(ScaledEndpoint, FirstLayerMatchesInterpolation)
{
  for (const auto & g : {presets::z1_biased(0.75), presets::hexagonal(), presets::heisenberg_cayley()}) {
    Analyzed s(g);
    const int d1 = g.algebra().first_dim();
    for (const auto & scale : {ScalingSequence::power(0.75), ScalingSequence::lil()}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto path = sample_path(s.graph, s.data.harmonic, s.data.rho, 400, seed);
        const auto end  = scaled_endpoint(g.algebra(), path, scale);
        EXPECT_EQ(Vector(end.log.head(d1)), interpolate(path, scale).endpoint);
      }
    }
  }
}

TEST(ScaledEndpoint, HeisenbergAreaScaling)
{
  Analyzed s(presets::heisenberg_cayley());
  const auto scale = ScalingSequence::power(0.75);
  const auto path  = sample_path(s.graph, s.data.harmonic, s.data.rho, 1000, 12);
  const auto end   = scaled_endpoint(s.graph.algebra(), path, scale);
  EXPECT_NEAR(end.log[2], path.xi.log[2] / std::pow(1000.0, 1.5), 1e-15);
  EXPECT_NEAR(end.log[0], path.xi.log[0] / std::pow(1000.0, 0.75), 1e-15);
}

TEST(ScaledEndpoint, AbelianIsDivision)
{
  Analyzed s(presets::z1_biased(0.6));
  const auto scale = ScalingSequence::lil();
  const auto path  = sample_path(s.graph, s.data.harmonic, s.data.rho, 300, 1);
  EXPECT_NEAR(scaled_endpoint(s.graph.algebra(), path, scale).log[0], path.Xi_bar[0] / scale(300), 1e-15);
}

TEST(BatchEndpoints, SingleSampleMatchesPath)
{
  Analyzed s(presets::heisenberg_cayley());
  const auto scale = ScalingSequence::power(0.8);
  const auto batch = batch_endpoints(s.graph, s.data.harmonic, s.data.rho, scale, 250, 1, 31);
  const auto path  = sample_path(s.graph, s.data.harmonic, s.data.rho, 250, 31);
  EXPECT_EQ(batch.endpoints[0].log, scaled_endpoint(s.graph.algebra(), path, scale).log);
  EXPECT_EQ(Vector(batch.xi_bar.col(0)), path.Xi_bar);
  EXPECT_THROW(batch_endpoints(s.graph, s.data.harmonic, s.data.rho, scale, 10, 0, 31), InvalidArgument);
}

TEST(BatchEndpoints, SymmetricMeanIsZero)
{
  for (const auto & g : {presets::zd_lattice(2), presets::hexagonal(), presets::heisenberg_cayley()}) {
    Analyzed s(g);
    const auto batch =
        batch_endpoints(s.graph, s.data.harmonic, s.data.rho, ScalingSequence::power(0.75), 1000, 2000, 6);
    for (int i = 0; i < g.algebra().first_dim(); ++i) {
      const Eigen::ArrayXd row = batch.xi_bar.row(i).transpose().array();
      const double mean        = row.mean();
      const double se          = std::sqrt((row - mean).square().sum() / (row.size() - 1) / row.size());
      EXPECT_LE(std::abs(mean), 3.0 * se);
    }
  }
}

TEST(BatchEndpoints, WorkerCountDoesNotMatter)
{
  Analyzed s(presets::heisenberg_cayley());
  const auto scale = ScalingSequence::power(0.75);
  const auto a     = batch_endpoints(s.graph, s.data.harmonic, s.data.rho, scale, 500, 64, 13, 1);
  const auto b     = batch_endpoints(s.graph, s.data.harmonic, s.data.rho, scale, 500, 64, 13, 8);
  EXPECT_EQ(a.xi_bar, b.xi_bar);
  for (int i = 0; i < 64; ++i) { EXPECT_EQ(a.endpoints[i].log, b.endpoints[i].log); }
}
