#ifndef NILWALK__QUOTIENT_GRAPH_HPP_
#define NILWALK__QUOTIENT_GRAPH_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"

namespace nilwalk {

/// Oriented edge of the quotient graph with its covering data.
struct Edge
{
  int origin;
  int terminus;
  int inverse;
  double probability;
  GroupElement voltage;
};

/**
 * @brief Finite quotient graph X0 with a transition kernel and group-valued
 * voltages describing the covering.
 *
 * Edges are an oriented list with explicit inverse indices. The constructor
 * only checks that indices and voltage lengths are in range; semantic
 * invariants are checked by validate().
 */
class VoltageGraph
{
public:
  VoltageGraph(StratifiedAlgebra algebra, int vertex_count, std::vector<Edge> edges)
      : algebra_(std::move(algebra)), vertex_count_(vertex_count), edges_(std::move(edges))
  {
    if (vertex_count_ <= 0) { throw InvalidArgument("graph needs at least one vertex"); }
    out_edges_.resize(vertex_count_);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto & edge = edges_[e];
      if (edge.origin < 0 || edge.origin >= vertex_count_ || edge.terminus < 0
          || edge.terminus >= vertex_count_) {
        throw InvalidArgument("edge " + std::to_string(e) + " has an endpoint out of range");
      }
      if (edge.inverse < 0 || edge.inverse >= static_cast<int>(edges_.size())) {
        throw InvolutionViolation("edge " + std::to_string(e) + " has no valid inverse index");
      }
      algebra_.check_vector(edge.voltage.log, "voltage");
      out_edges_[edge.origin].push_back(static_cast<int>(e));
    }
  }

  const StratifiedAlgebra & algebra() const { return algebra_; }
  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge> & edges() const { return edges_; }
  const Edge & edge(int e) const { return edges_.at(e); }

  /// Edges leaving `v`, in increasing index order.
  const std::vector<int> & out_edges(int v) const { return out_edges_.at(v); }

  /// Vertex transition matrix P(x, y) = sum of p(e) over edges x -> y.
  Matrix transition_matrix() const
  {
    Matrix P = Matrix::Zero(vertex_count_, vertex_count_);
    for (const auto & e : edges_) { P(e.origin, e.terminus) += e.probability; }
    return P;
  }

private:
  StratifiedAlgebra algebra_;
  int vertex_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_edges_;
};

inline constexpr double stochasticity_tolerance = 1e-12;

/**
 * Checks row-stochasticity (with p > 0), the inverse-edge involution,
 * gamma(inverse e) = gamma(e)^-1 and strong connectivity, in that order.
 * Throws the matching error naming the offending vertex or edge.
 */
inline void validate(const VoltageGraph & graph)
{
  const auto & edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double p = edges[e].probability;
    if (!(p > 0.0 && p <= 1.0)) {
      throw StochasticityViolation("edge " + std::to_string(e) + " has probability "
                                   + std::to_string(p) + " outside (0, 1]");
    }
  }
  for (int v = 0; v < graph.vertex_count(); ++v) {
    double sum = 0.0;
    for (int e : graph.out_edges(v)) { sum += edges[e].probability; }
    if (std::abs(sum - 1.0) > stochasticity_tolerance) {
      throw StochasticityViolation("probabilities at vertex " + std::to_string(v) + " sum to "
                                   + std::to_string(sum));
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto & edge = edges[e];
    const auto & inv  = edges[edge.inverse];
    if (edge.inverse == static_cast<int>(e) || inv.inverse != static_cast<int>(e)
        || inv.origin != edge.terminus || inv.terminus != edge.origin) {
      throw InvolutionViolation("edge " + std::to_string(e) + " and its inverse "
                                + std::to_string(edge.inverse) + " do not form a reversed pair");
    }
    const double defect = (edge.voltage.log + inv.voltage.log).cwiseAbs().maxCoeff();
    if (defect > 1e-12) {
      throw VoltageInverseViolation("voltage of edge " + std::to_string(edge.inverse)
                                    + " is not the inverse of the voltage of edge "
                                    + std::to_string(e));
    }
  }
  // Every edge has a reverse, so strong connectivity reduces to reachability
  // from vertex 0.
  std::vector<char> seen(graph.vertex_count(), 0);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int e : graph.out_edges(v)) {
      const int t = edges[e].terminus;
      if (!seen[t]) {
        seen[t] = 1;
        queue.push(t);
      }
    }
  }
  for (int v = 0; v < graph.vertex_count(); ++v) {
    if (!seen[v]) {
      throw NotStronglyConnected("vertex " + std::to_string(v) + " is not reachable from vertex 0");
    }
  }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace presets {

/// Appends the pair (o -> t with voltage z, t -> o with voltage -z).
inline void add_edge_pair(std::vector<Edge> & edges, int o, int t, double p_forward,
                          double p_backward, const AlgebraVector & z)
{
  const int e = static_cast<int>(edges.size());
  edges.push_back({o, t, e + 1, p_forward, {z}});
  edges.push_back({t, o, e, p_backward, {-z}});
}

/// Single vertex with d loop pairs carrying the unit vectors of Z^d.
inline VoltageGraph zd_lattice(int d)
{
  if (d < 1) { throw InvalidArgument("zd_lattice needs d >= 1"); }
  auto alg = StratifiedAlgebra::abelian(d);
  std::vector<Edge> edges;
  const double p = 1.0 / (2.0 * d);
  for (int i = 0; i < d; ++i) {
    add_edge_pair(edges, 0, 0, p, p, AlgebraVector::Unit(d, i));
  }
  return {alg, 1, edges};
}

/// Single vertex on Z with loop pairs (+1 with prob forward[i], -1 with
/// prob backward[i]) along each coordinate axis i.
inline VoltageGraph single_vertex_lattice(const std::vector<std::pair<double, double>> & axes)
{
  const int d = static_cast<int>(axes.size());
  if (d < 1) { throw InvalidArgument("single_vertex_lattice needs at least one axis"); }
  auto alg = StratifiedAlgebra::abelian(d);
  std::vector<Edge> edges;
  for (int i = 0; i < d; ++i) {
    add_edge_pair(edges, 0, 0, axes[i].first, axes[i].second, AlgebraVector::Unit(d, i));
  }
  return {alg, 1, edges};
}

/// Biased nearest-neighbour walk on Z: +1 with probability q.
inline VoltageGraph z1_biased(double q) { return single_vertex_lattice({{q, 1.0 - q}}); }

/// Honeycomb lattice: two vertices joined by three edge pairs with
/// translations (1,0), (0,1), (-1,-1).
inline VoltageGraph hexagonal()
{
  auto alg = StratifiedAlgebra::abelian(2);
  std::vector<Edge> edges;
  const double p = 1.0 / 3.0;
  add_edge_pair(edges, 0, 1, p, p, Vector{{1.0, 0.0}});
  add_edge_pair(edges, 0, 1, p, p, Vector{{0.0, 1.0}});
  add_edge_pair(edges, 0, 1, p, p, Vector{{-1.0, -1.0}});
  return {alg, 2, edges};
}

/// Simple random walk on the Cayley graph of H3(Z) with generators
/// exp(+-X), exp(+-Y).
inline VoltageGraph heisenberg_cayley()
{
  auto alg = StratifiedAlgebra::heisenberg();
  std::vector<Edge> edges;
  add_edge_pair(edges, 0, 0, 0.25, 0.25, Vector{{1.0, 0.0, 0.0}});
  add_edge_pair(edges, 0, 0, 0.25, 0.25, Vector{{0.0, 1.0, 0.0}});
  return {alg, 1, edges};
}

/// Z seen as a period-2 line A B A B ...: A -> B inside a cell (trivial
/// voltage) and B -> A into the next cell (voltage +1), p = 1/2 throughout.
inline VoltageGraph z1_subdivided()
{
  auto alg = StratifiedAlgebra::abelian(1);
  std::vector<Edge> edges;
  add_edge_pair(edges, 0, 1, 0.5, 0.5, Vector{{0.0}});
  add_edge_pair(edges, 1, 0, 0.5, 0.5, Vector{{1.0}});
  return {alg, 2, edges};
}

/// Names accepted by by_name(); parameters: zd_lattice {d}, z1_biased {q}.
inline VoltageGraph by_name(const std::string & name, const std::map<std::string, double> & params)
{
  auto param = [&](const std::string & key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "zd_lattice") { return zd_lattice(static_cast<int>(param("d", 1))); }
  if (name == "z1_srw") { return zd_lattice(1); }
  if (name == "z1_biased") { return z1_biased(param("q", 0.75)); }
  if (name == "hexagonal") { return hexagonal(); }
  if (name == "heisenberg_cayley") { return heisenberg_cayley(); }
  if (name == "z1_subdivided") { return z1_subdivided(); }
  throw InvalidArgument("unknown preset '" + name + "'");
}

}  // namespace presets

// ---------------------------------------------------------------------------
// Invariant measure and homology
// ---------------------------------------------------------------------------

struct InvariantMeasure
{
  /// m(x), positive, sums to 1.
  Vector vertex;
  /// m~(e) = p(e) m(o(e)).
  Vector edge;
};

/// Vertex count above which the stationary distribution is found by power
/// iteration instead of a dense solve.
inline constexpr int dense_solve_limit = 512;

inline InvariantMeasure invariant_measure(const VoltageGraph & graph)
{
  const int n    = graph.vertex_count();
  const Matrix P = graph.transition_matrix();
  Vector m;
  if (n <= dense_solve_limit) {
    Matrix A = P.transpose() - Matrix::Identity(n, n);
    A.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b[n - 1] = 1.0;
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.rank() < n) { throw SingularSystem("stationary equations are rank deficient"); }
    m = lu.solve(b);
  } else {
    // Lazy chain avoids periodicity.
    m = Vector::Constant(n, 1.0 / n);
    for (int it = 0; it < 1000000; ++it) {
      Vector next = 0.5 * (m + P.transpose() * m);
      next /= next.sum();
      const double diff = (next - m).cwiseAbs().maxCoeff();
      m                 = std::move(next);
      if (diff <= 1e-14) { break; }
    }
  }
  if (!m.allFinite() || m.minCoeff() <= 0.0) {
    throw SingularSystem("stationary distribution is not strictly positive");
  }
  m /= m.sum();
  Vector mt(graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto & edge = graph.edge(e);
    mt[e]             = edge.probability * m[edge.origin];
  }
  return {m, mt};
}

/// Real 1-chain stored per oriented edge with coeff(inverse e) = -coeff(e).
struct OneChain
{
  Vector coeff;

  /// Net flux per vertex: sum over edge pairs of coeff(e) (t(e) - o(e)).
  Vector boundary(const VoltageGraph & graph) const
  {
    Vector b = Vector::Zero(graph.vertex_count());
    for (int e = 0; e < graph.edge_count(); ++e) {
      const auto & edge = graph.edge(e);
      // Each pair is visited twice with opposite orientation and sign.
      b[edge.terminus] += 0.5 * coeff[e];
      b[edge.origin] -= 0.5 * coeff[e];
    }
    return b;
  }

  /// Pairing with a 1-form given per oriented edge (rows of `form`).
  Vector pair(const Matrix & form) const { return 0.5 * (form.transpose() * coeff); }
};

/// gamma_p = sum_e m~(e) e, as the antisymmetric chain m~(e) - m~(inverse e).
inline OneChain homological_direction(const VoltageGraph & graph, const InvariantMeasure & meas)
{
  OneChain c{Vector(graph.edge_count())};
  for (int e = 0; e < graph.edge_count(); ++e) {
    c.coeff[e] = meas.edge[e] - meas.edge[graph.edge(e).inverse];
  }
  return c;
}

inline constexpr double symmetry_tolerance = 1e-14;

/// m-symmetry: m~(e) = m~(inverse e) for every edge.
inline bool is_symmetric(const VoltageGraph & graph, const InvariantMeasure & meas)
{
  double worst = 0.0;
  for (int e = 0; e < graph.edge_count(); ++e) {
    worst = std::max(worst, std::abs(meas.edge[e] - meas.edge[graph.edge(e).inverse]));
  }
  return worst <= symmetry_tolerance;
}

struct HomologyBasis
{
  /// Tree edges, one oriented edge per tree pair (pointing away from the root).
  std::vector<int> spanning_tree;
  /// Integer coefficient per oriented edge, antisymmetric under reversal.
  std::vector<std::vector<int>> cycles;
  /// The non-tree edge that generates each cycle.
  std::vector<int> generators;

  int rank() const { return static_cast<int>(cycles.size()); }
};

/**
 * Fundamental cycles of a BFS spanning tree rooted at vertex 0; vertices and
 * edges are explored in increasing index order. Each non-tree edge pair
 * (represented by its lower index) yields the cycle e + path(t(e) -> o(e)).
 */
inline HomologyBasis cycle_basis(const VoltageGraph & graph)
{
  const int nv = graph.vertex_count();
  const int ne = graph.edge_count();
  std::vector<int> parent_edge(nv, -1);  // edge from parent into v
  std::vector<int> depth(nv, -1);
  std::vector<char> in_tree(ne, 0);
  HomologyBasis basis;

  std::queue<int> queue;
  queue.push(0);
  depth[0] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int e : graph.out_edges(v)) {
      const int t = graph.edge(e).terminus;
      if (depth[t] < 0) {
        depth[t]       = depth[v] + 1;
        parent_edge[t] = e;
        in_tree[e] = in_tree[graph.edge(e).inverse] = 1;
        basis.spanning_tree.push_back(e);
        queue.push(t);
      }
    }
  }

  for (int e = 0; e < ne; ++e) {
    const int inv = graph.edge(e).inverse;
    if (in_tree[e] || inv < e) { continue; }
    std::vector<int> cycle(ne, 0);
    auto add = [&](int edge, int sign) {
      cycle[edge] += sign;
      cycle[graph.edge(edge).inverse] -= sign;
    };
    add(e, 1);
    // Walk both endpoints up to their common ancestor: the tree path from
    // t(e) to o(e) is (t -> lca) followed by (lca -> o).
    int a = graph.edge(e).terminus;
    int b = graph.edge(e).origin;
    while (a != b) {
      if (depth[a] >= depth[b]) {
        add(parent_edge[a], -1);  // traverse parent edge backwards, toward the root
        a = graph.edge(parent_edge[a]).origin;
      } else {
        add(parent_edge[b], 1);  // traverse parent edge forwards, away from the root
        b = graph.edge(parent_edge[b]).origin;
      }
    }
    basis.cycles.push_back(std::move(cycle));
    basis.generators.push_back(e);
  }
  return basis;
}

}  // namespace nilwalk

#endif  // NILWALK__QUOTIENT_GRAPH_HPP_
