#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace sinklimit {

using Adjacency = std::vector<std::vector<std::size_t>>;

// Strongly connected components of a directed graph. Components are numbered
// by their smallest member and each member list is sorted ascending.
struct SccDecomposition {
  std::vector<std::size_t> component;             // node -> component id
  std::vector<std::vector<std::size_t>> members;  // component id -> nodes

  std::size_t size() const { return members.size(); }
};

// Iterative Tarjan; no recursion so deep chains do not blow the stack.
inline SccDecomposition strongly_connected_components(const Adjacency& adj) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = adj.size();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
  std::vector<std::vector<std::size_t>> found;
  std::size_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge < adj[v].size()) {
        const std::size_t w = adj[v][edge++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        std::vector<std::size_t> c;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          c.push_back(w);
        } while (w != done);
        std::sort(c.begin(), c.end());
        found.push_back(std::move(c));
      }
    }
  }

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  SccDecomposition out;
  out.component.assign(n, 0);
  for (std::size_t c = 0; c < found.size(); ++c)
    for (auto v : found[c]) out.component[v] = c;
  out.members = std::move(found);
  return out;
}

// Components with no edge leaving them.
inline std::vector<std::size_t> sink_components(const Adjacency& adj, const SccDecomposition& scc) {
  std::vector<char> leaves(scc.size(), 0);
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (auto w : adj[v])
      if (scc.component[w] != scc.component[v]) leaves[scc.component[v]] = 1;
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < scc.size(); ++c)
    if (!leaves[c]) out.push_back(c);
  return out;
}

}  // namespace sinklimit
