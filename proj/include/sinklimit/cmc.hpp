#pragma once

#include <vector>

#include "eps_chain.hpp"
#include "game.hpp"
#include "response_graph.hpp"

namespace sinklimit {

// Unit coefficient on every tie edge.
inline constexpr double kTieCoefficient = 1.0;

// Chain over pure profiles: a strict improvement u -> v by player i gets
// probability (U_i(v) - U_i(u)) / Z_u, with Z_u the total improvement
// available at u; each tie becomes an eps edge in both directions. Nodes with
// Z_u = 0 keep only eps edges and an implicit self-loop that is never stored.
inline EpsilonMC build_cmc(const ResponseGraph& graph) {
  EpsilonMC mc(graph.num_nodes);
  std::vector<double> total(graph.num_nodes, 0.0);
  for (const auto& e : graph.regular_edges) total[e.from] += e.improvement;
  for (const auto& e : graph.regular_edges) mc.add_regular(e.from, e.to, e.improvement / total[e.from]);
  for (const auto& e : graph.tie_edges) {
    mc.add_eps(e.from, e.to, kTieCoefficient);
    mc.add_eps(e.to, e.from, kTieCoefficient);
  }
  return mc;
}

inline EpsilonMC build_cmc(const Game& game, double tie_tolerance = 0.0) {
  return build_cmc(build_response_graph(game, tie_tolerance));
}

}  // namespace sinklimit
