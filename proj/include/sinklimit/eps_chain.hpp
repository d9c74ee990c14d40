#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sinklimit {

using NodeId = std::size_t;
using EdgeMap = std::map<NodeId, double>;

// A Markov chain with two edge classes: regular edges carrying a fixed
// probability, and epsilon edges whose probability is coefficient * eps for a
// symbolic eps -> 0. Epsilon mass rides on top of the regular weights and
// does not take part in their normalization.
//
// Node ids are the original ids (ProfileIds for a game chain) and are never
// renumbered. Contracting a set of nodes keeps its smallest id alive as the
// representative; a union-find maps every original id to its current node.
class EpsilonMC {
 public:
  EpsilonMC() = default;
  explicit EpsilonMC(std::size_t num_nodes)
      : alive_(num_nodes, 1),
        absorbing_(num_nodes, 0),
        parent_(num_nodes),
        reg_out_(num_nodes),
        reg_in_(num_nodes),
        eps_out_(num_nodes),
        eps_in_(num_nodes),
        mark_(num_nodes, 0),
        num_alive_(num_nodes) {
    for (NodeId v = 0; v < num_nodes; ++v) parent_[v] = v;
  }

  std::size_t capacity() const { return alive_.size(); }
  std::size_t num_nodes() const { return num_alive_; }
  bool alive(NodeId v) const { return v < alive_.size() && alive_[v]; }
  bool absorbing(NodeId v) const { return absorbing_[v] != 0; }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(num_alive_);
    for (NodeId v = 0; v < alive_.size(); ++v)
      if (alive_[v]) out.push_back(v);
    return out;
  }

  std::vector<NodeId> absorbing_nodes() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < alive_.size(); ++v)
      if (alive_[v] && absorbing_[v]) out.push_back(v);
    return out;
  }

  const EdgeMap& regular_out(NodeId v) const { return reg_out_[v]; }
  const EdgeMap& regular_in(NodeId v) const { return reg_in_[v]; }
  const EdgeMap& eps_out(NodeId v) const { return eps_out_[v]; }
  const EdgeMap& eps_in(NodeId v) const { return eps_in_[v]; }

  std::size_t num_regular_edges() const { return count(reg_out_); }
  std::size_t num_eps_edges() const { return count(eps_out_); }

  // Parallel edges of the same class merge; self-loops are dropped.
  void add_regular(NodeId from, NodeId to, double weight) { add(reg_out_, reg_in_, from, to, weight); }
  void add_eps(NodeId from, NodeId to, double coefficient) { add(eps_out_, eps_in_, from, to, coefficient); }

  void set_absorbing(NodeId v) {
    require_alive(v);
    if (!reg_out_[v].empty() || !eps_out_[v].empty())
      throw InvariantError("node " + std::to_string(v) + " has out-edges and cannot be absorbing");
    absorbing_[v] = 1;
  }

  // Current node holding original id `original`.
  NodeId find(NodeId original) const {
    NodeId v = original;
    while (parent_[v] != v) v = parent_[v];
    return v;
  }

  // Flattens every union-find path so later lookups are one hop.
  void compress_origins() {
    for (NodeId v = 0; v < parent_.size(); ++v) parent_[v] = find(v);
  }

  // Merges `members` into one node (the smallest id). Internal edges vanish,
  // edges from outside into any member are redirected to the representative
  // and merged per class, and every out-edge of the members is removed: the
  // caller installs the new node's out-edges afterwards.
  NodeId contract(std::span<const NodeId> members) {
    if (members.empty()) throw InvariantError("contract: empty member set");
    std::vector<NodeId> set(members.begin(), members.end());
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    for (auto x : set) require_alive(x);
    const NodeId rep = set.front();
    for (auto x : set) mark_[x] = 1;

    EdgeMap ext_reg, ext_eps;
    for (auto x : set) {
      for (const auto& [w, wt] : reg_in_[x])
        if (!mark_[w]) ext_reg[w] += wt;
      for (const auto& [w, c] : eps_in_[x])
        if (!mark_[w]) ext_eps[w] += c;
    }
    for (auto x : set) {
      detach(reg_out_, reg_in_, x);
      detach(eps_out_, eps_in_, x);
    }
    for (auto x : set) {
      mark_[x] = 0;
      absorbing_[x] = 0;
      if (x != rep) {
        alive_[x] = 0;
        parent_[x] = rep;
        --num_alive_;
      }
    }
    for (const auto& [w, wt] : ext_reg) add_regular(w, rep, wt);
    for (const auto& [w, c] : ext_eps) add_eps(w, rep, c);
    return rep;
  }

  void remove_eps_edges() {
    for (auto& m : eps_out_) m.clear();
    for (auto& m : eps_in_) m.clear();
  }

  // Throws InvariantError on the first broken structural invariant.
  void check_invariants(double tol = 1e-12) const {
    for (NodeId v = 0; v < alive_.size(); ++v) {
      if (!alive_[v]) {
        if (!reg_out_[v].empty() || !reg_in_[v].empty() || !eps_out_[v].empty() || !eps_in_[v].empty())
          fail("dead node " + std::to_string(v) + " still has edges");
        continue;
      }
      if (absorbing_[v] && (!reg_out_[v].empty() || !eps_out_[v].empty()))
        fail("absorbing node " + std::to_string(v) + " has out-edges");
      double sum = 0.0;
      for (const auto& [w, wt] : reg_out_[v]) {
        if (w == v) fail("self-loop at " + std::to_string(v));
        if (!alive_[w]) fail("edge into dead node " + std::to_string(w));
        if (!(wt > 0.0)) fail("non-positive regular weight at " + std::to_string(v));
        auto it = reg_in_[w].find(v);
        if (it == reg_in_[w].end() || it->second != wt) fail("in/out maps disagree at " + std::to_string(v));
        sum += wt;
      }
      for (const auto& [w, c] : eps_out_[v]) {
        if (w == v) fail("self-loop at " + std::to_string(v));
        if (!alive_[w]) fail("eps edge into dead node " + std::to_string(w));
        if (!(c > 0.0)) fail("non-positive eps coefficient at " + std::to_string(v));
      }
      if (!reg_out_[v].empty() && std::abs(sum - 1.0) > tol)
        fail("regular out-weights of node " + std::to_string(v) + " sum to " + std::to_string(sum));
    }
  }

 private:
  static std::size_t count(const std::vector<EdgeMap>& maps) {
    std::size_t n = 0;
    for (const auto& m : maps) n += m.size();
    return n;
  }

  [[noreturn]] static void fail(const std::string& what) { throw InvariantError("EpsilonMC: " + what); }

  void require_alive(NodeId v) const {
    if (!alive(v)) fail("node " + std::to_string(v) + " is not a live node");
  }

  void add(std::vector<EdgeMap>& out, std::vector<EdgeMap>& in, NodeId from, NodeId to, double w) {
    require_alive(from);
    require_alive(to);
    if (!(w > 0.0) || !std::isfinite(w)) fail("edge weight must be positive and finite");
    if (from == to) return;
    if (absorbing_[from]) fail("edge out of absorbing node " + std::to_string(from));
    out[from][to] += w;
    in[to][from] += w;
  }

  static void detach(std::vector<EdgeMap>& out, std::vector<EdgeMap>& in, NodeId x) {
    for (const auto& [t, _] : out[x]) in[t].erase(x);
    out[x].clear();
    for (const auto& [s, _] : in[x]) out[s].erase(x);
    in[x].clear();
  }

  std::vector<char> alive_;
  std::vector<char> absorbing_;
  std::vector<NodeId> parent_;
  std::vector<EdgeMap> reg_out_, reg_in_, eps_out_, eps_in_;
  std::vector<char> mark_;
  std::size_t num_alive_ = 0;
};

}  // namespace sinklimit
