#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "game.hpp"
#include "scc.hpp"

namespace sinklimit {

struct RegularEdge {
  ProfileId from;
  ProfileId to;
  std::size_t player;
  double improvement;  // U_player(to) - U_player(from) > 0
};

// One per unordered pair per deviating player; traversable both ways.
struct TieEdge {
  ProfileId from;  // from < to
  ProfileId to;
  std::size_t player;
};

// The better-or-equal response graph: every unilateral deviation that does
// not hurt the deviator.
struct ResponseGraph {
  std::size_t num_nodes = 0;
  std::vector<RegularEdge> regular_edges;
  std::vector<TieEdge> tie_edges;

  Adjacency adjacency() const {
    Adjacency adj(num_nodes);
    for (const auto& e : regular_edges) adj[e.from].push_back(e.to);
    for (const auto& e : tie_edges) {
      adj[e.from].push_back(e.to);
      adj[e.to].push_back(e.from);
    }
    return adj;
  }
};

// Same transitive closure as ResponseGraph, at most two out-edges per node
// per line.
struct ReducedGraph {
  std::size_t num_nodes = 0;
  std::size_t num_lines = 0;
  Adjacency out;

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& o : out) n += o.size();
    return n;
  }
};

using SinkList = std::vector<std::vector<ProfileId>>;

namespace detail {

// Indifference classes along one line. Members are sorted by utility (stable
// in strategy index); consecutive values within `tol` share a class. With
// tol == 0 this is exact equality. Returns (sorted order, class per position).
struct LineClasses {
  std::vector<std::size_t> order;  // positions into the line, ascending utility
  std::vector<std::size_t> cls;    // class of order[k], nondecreasing
};

inline LineClasses classify_line(std::span<const double> values, double tol) {
  LineClasses lc;
  lc.order.resize(values.size());
  std::iota(lc.order.begin(), lc.order.end(), std::size_t{0});
  std::stable_sort(lc.order.begin(), lc.order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  lc.cls.resize(values.size());
  std::size_t c = 0;
  for (std::size_t k = 0; k < lc.order.size(); ++k) {
    if (k > 0 && values[lc.order[k]] - values[lc.order[k - 1]] > tol) ++c;
    lc.cls[k] = c;
  }
  return lc;
}

inline SinkList sinks_of(const Adjacency& adj) {
  auto scc = strongly_connected_components(adj);
  SinkList out;
  for (auto c : sink_components(adj, scc)) out.push_back(scc.members[c]);
  return out;  // already ordered by smallest member
}

}  // namespace detail

inline ResponseGraph build_response_graph(const Game& game, double tie_tolerance = 0.0) {
  ResponseGraph g;
  g.num_nodes = game.num_profiles();
  std::vector<double> values;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    game.for_each_line(i, [&](std::span<const ProfileId> line) {
      values.resize(line.size());
      for (std::size_t a = 0; a < line.size(); ++a) values[a] = game.utility(i, line[a]);
      auto lc = detail::classify_line(values, tie_tolerance);
      std::vector<std::size_t> cls(line.size());
      for (std::size_t k = 0; k < line.size(); ++k) cls[lc.order[k]] = lc.cls[k];
      for (std::size_t a = 0; a < line.size(); ++a) {
        for (std::size_t b = 0; b < line.size(); ++b) {
          if (a == b) continue;
          if (cls[b] > cls[a]) {
            g.regular_edges.push_back({line[a], line[b], i, values[b] - values[a]});
          } else if (cls[b] == cls[a] && a < b) {
            g.tie_edges.push_back({line[a], line[b], i});
          }
        }
      }
    });
  }
  return g;
}

// Per line: sort by utility; every node links to the next one up, and the
// last node of each indifference class of size >= 2 also links back to the
// first node of its class, closing the class into a cycle.
inline ReducedGraph build_reduced_response_graph(const Game& game, double tie_tolerance = 0.0) {
  ReducedGraph g;
  g.num_nodes = game.num_profiles();
  g.out.resize(g.num_nodes);
  std::vector<double> values;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    game.for_each_line(i, [&](std::span<const ProfileId> line) {
      ++g.num_lines;
      values.resize(line.size());
      for (std::size_t a = 0; a < line.size(); ++a) values[a] = game.utility(i, line[a]);
      auto lc = detail::classify_line(values, tie_tolerance);
      const std::size_t k = line.size();
      std::size_t class_start = 0;
      for (std::size_t pos = 0; pos < k; ++pos) {
        if (pos > 0 && lc.cls[pos] != lc.cls[pos - 1]) class_start = pos;
        const ProfileId node = line[lc.order[pos]];
        if (pos + 1 < k) g.out[node].push_back(line[lc.order[pos + 1]]);
        const bool last_of_class = pos + 1 == k || lc.cls[pos + 1] != lc.cls[pos];
        if (last_of_class && class_start != pos) g.out[node].push_back(line[lc.order[class_start]]);
      }
    });
  }
  return g;
}

inline SinkList sink_equilibria(const ResponseGraph& graph) { return detail::sinks_of(graph.adjacency()); }
inline SinkList sink_equilibria(const ReducedGraph& graph) { return detail::sinks_of(graph.out); }

// Near-linear path: reduced graph.
inline SinkList sink_equilibria(const Game& game, double tie_tolerance = 0.0) {
  return sink_equilibria(build_reduced_response_graph(game, tie_tolerance));
}

}  // namespace sinklimit
