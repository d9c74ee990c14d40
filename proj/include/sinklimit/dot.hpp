#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "cmc.hpp"
#include "game.hpp"
#include "limit.hpp"
#include "response_graph.hpp"

namespace sinklimit {

// Cycled by sink index so reruns color identically.
inline constexpr std::array<const char*, 12> kSinkPalette = {
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#ffff33",
    "#a65628", "#f781bf", "#999999", "#66c2a5", "#fc8d62", "#8da0cb"};

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// Better-response graph in DOT. Sink nodes are filled with their sink color;
// with a hitting matrix, every other node is drawn as a wedged pie of its
// hitting probabilities. Regular edges carry their chain weight, ties show as
// a pair of "0.00" edges.
inline std::string export_dot(const Game& game, const HittingMatrix* hitting = nullptr, double tie_tolerance = 0.0) {
  const auto graph = build_response_graph(game, tie_tolerance);
  const auto sinks = hitting ? hitting->sinks : sink_equilibria(game, tie_tolerance);
  if (hitting && (hitting->num_profiles != game.num_profiles() || hitting->probs.size() !=
                                                                      game.num_profiles() * hitting->sinks.size()))
    throw InputError("hitting matrix has " + std::to_string(hitting->num_profiles) + " rows, game has " +
                     std::to_string(game.num_profiles()) + " profiles");
  const auto sink_of = [&] {
    std::vector<std::ptrdiff_t> s(game.num_profiles(), -1);
    for (std::size_t k = 0; k < sinks.size(); ++k)
      for (auto v : sinks[k]) {
        if (v >= game.num_profiles()) throw InputError("sink member out of range");
        s[v] = static_cast<std::ptrdiff_t>(k);
      }
    return s;
  }();

  std::ostringstream os;
  os << "digraph better_response {\n";
  os << "  node [shape=circle, fontsize=10];\n";
  for (ProfileId v = 0; v < game.num_profiles(); ++v) {
    os << "  n" << v << " [label=\"" << game.profile_label(v) << "\"";
    if (sink_of[v] >= 0) {
      os << ", style=filled, fillcolor=\"" << kSinkPalette[sink_of[v] % kSinkPalette.size()] << "\"";
    } else if (hitting) {
      std::string wedges;
      for (std::size_t k = 0; k < sinks.size(); ++k) {
        // Truncated so the fractions never sum past 1.
        const double f = std::floor(hitting->at(v, k) * 1e4) / 1e4;
        if (f <= 0.0) continue;
        if (!wedges.empty()) wedges += ':';
        wedges += std::string(kSinkPalette[k % kSinkPalette.size()]) + ";" + detail::fixed(f, 4);
      }
      if (!wedges.empty()) os << ", style=wedged, fillcolor=\"" << wedges << "\"";
    }
    os << "];\n";
  }
  const auto cmc = build_cmc(graph);
  for (ProfileId v = 0; v < game.num_profiles(); ++v)
    for (const auto& [w, p] : cmc.regular_out(v))
      os << "  n" << v << " -> n" << w << " [label=\"" << detail::fixed(p, 2) << "\"];\n";
  for (const auto& e : graph.tie_edges) {
    os << "  n" << e.from << " -> n" << e.to << " [label=\"0.00\", style=dashed];\n";
    os << "  n" << e.to << " -> n" << e.from << " [label=\"0.00\", style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace sinklimit
