#ifndef NILWALK__REALIZATION_HPP_
#define NILWALK__REALIZATION_HPP_

#include <vector>

#include "algebra.hpp"
#include "quotient_graph.hpp"

namespace nilwalk {

/**
 * Periodic realization of the covering graph, given by the position of one
 * lift of each quotient vertex. Other lifts are placed equivariantly:
 * the lift reached with deck element g sits at g * position(v).
 */
struct Realization
{
  std::vector<GroupElement> positions;

  /// Every vertex at the identity (the naive realization).
  static Realization trivial(const VoltageGraph & graph)
  {
    return {std::vector<GroupElement>(graph.vertex_count(),
                                      GroupElement::identity(graph.algebra().dim()))};
  }

  /// First-layer coordinates phi_1(v), one row per vertex.
  Matrix first_layer(int d1) const
  {
    Matrix out(static_cast<Eigen::Index>(positions.size()), d1);
    for (std::size_t v = 0; v < positions.size(); ++v) {
      out.row(static_cast<Eigen::Index>(v)) = positions[v].log.head(d1).transpose();
    }
    return out;
  }

  bool is_trivial() const
  {
    for (const auto & p : positions) {
      if (p.log.squaredNorm() != 0.0) { return false; }
    }
    return true;
  }
};

/// First-layer increments w(e) = log(gamma(e))|_1 + phi_1(t(e)) - phi_1(o(e)),
/// one row per oriented edge.
struct FirstLayerForm
{
  Matrix w;
};

inline FirstLayerForm first_layer_form(const VoltageGraph & graph, const Realization & phi)
{
  const int d1 = graph.algebra().first_dim();
  if (static_cast<int>(phi.positions.size()) != graph.vertex_count()) {
    throw DimensionMismatch("realization has " + std::to_string(phi.positions.size())
                            + " positions for " + std::to_string(graph.vertex_count())
                            + " vertices");
  }
  const Matrix pos = phi.first_layer(d1);
  Matrix w(graph.edge_count(), d1);
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto & edge = graph.edge(e);
    w.row(e) = edge.voltage.log.head(d1).transpose() + pos.row(edge.terminus) - pos.row(edge.origin);
  }
  return {w};
}

}  // namespace nilwalk

#endif  // NILWALK__REALIZATION_HPP_
