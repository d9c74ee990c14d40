#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmc.hpp"
#include "eps_chain.hpp"
#include "errors.hpp"
#include "game.hpp"
#include "response_graph.hpp"
#include "scc.hpp"
#include "solver.hpp"

namespace sinklimit {

enum class ComponentKind { kOrdinary, kPseudosink, kSink };

// Components of the live nodes of an EpsilonMC under regular edges only.
struct SccPartition {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<std::size_t> component;          // NodeId -> component, kNone for dead nodes
  std::vector<std::vector<NodeId>> members;    // sorted, components ordered by smallest member
  std::vector<ComponentKind> kind;

  std::size_t size() const { return members.size(); }

  std::vector<std::size_t> pseudosinks() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < kind.size(); ++c)
      if (kind[c] == ComponentKind::kPseudosink) out.push_back(c);
    return out;
  }
};

// Minimum number of eps edges on a path to an absorbing node.
struct OrderLabels {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<std::size_t> order;  // NodeId -> order, kNone for dead nodes
  std::size_t max_order = 0;
};

struct CollapseTrace {
  std::size_t initial_max_order = 0;
  std::vector<std::size_t> max_order_after_round;
  std::vector<std::size_t> pseudosinks_per_round;

  std::size_t rounds() const { return max_order_after_round.size(); }
};

// Limit (eps -> 0) absorption probabilities for every original node.
struct HittingMatrix {
  std::size_t num_profiles = 0;
  SinkList sinks;
  std::vector<double> probs;  // row-major, num_profiles x sinks.size()
  CollapseTrace trace;

  std::size_t num_sinks() const { return sinks.size(); }
  double at(ProfileId profile, std::size_t sink) const { return probs[profile * sinks.size() + sink]; }
  std::span<const double> row(ProfileId profile) const {
    return {probs.data() + profile * sinks.size(), sinks.size()};
  }
};

// Collapses each sink component into one absorbing node.
inline EpsilonMC from_cmc(EpsilonMC mc, const SinkList& sinks) {
  for (const auto& sink : sinks) {
    if (sink.empty()) throw InvariantError("from_cmc: empty sink");
    std::vector<char> in_sink(mc.capacity(), 0);
    for (auto v : sink) {
      if (!mc.alive(v)) throw InvariantError("from_cmc: sink member " + std::to_string(v) + " is not live");
      in_sink[v] = 1;
    }
    for (auto v : sink) {
      for (const auto& [w, _] : mc.regular_out(v))
        if (!in_sink[w])
          throw InvariantError("from_cmc: sink containing " + std::to_string(sink.front()) +
                               " has a regular edge leaving to " + std::to_string(w));
      for (const auto& [w, _] : mc.eps_out(v))
        if (!in_sink[w])
          throw InvariantError("from_cmc: sink containing " + std::to_string(sink.front()) +
                               " has an eps edge leaving to " + std::to_string(w));
    }
    mc.set_absorbing(mc.contract(sink));
  }
  mc.compress_origins();
  return mc;
}

// rSCCs: components under regular edges. A component with no regular edge
// leaving it but at least one eps edge leaving it is a pseudosink; with no
// edge of either class leaving it, a sink.
inline SccPartition rsccs(const EpsilonMC& mc) {
  const auto nodes = mc.nodes();
  std::vector<std::size_t> index(mc.capacity(), SccPartition::kNone);
  for (std::size_t r = 0; r < nodes.size(); ++r) index[nodes[r]] = r;
  Adjacency adj(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r)
    for (const auto& [w, _] : mc.regular_out(nodes[r])) adj[r].push_back(index[w]);
  const auto scc = strongly_connected_components(adj);

  SccPartition part;
  part.component.assign(mc.capacity(), SccPartition::kNone);
  part.members.resize(scc.size());
  for (std::size_t c = 0; c < scc.size(); ++c)
    for (auto r : scc.members[c]) {
      part.members[c].push_back(nodes[r]);
      part.component[nodes[r]] = c;
    }
  part.kind.assign(scc.size(), ComponentKind::kOrdinary);
  for (std::size_t c = 0; c < scc.size(); ++c) {
    bool reg_exit = false, eps_exit = false;
    for (auto v : part.members[c]) {
      for (const auto& [w, _] : mc.regular_out(v)) reg_exit |= part.component[w] != c;
      for (const auto& [w, _] : mc.eps_out(v)) eps_exit |= part.component[w] != c;
    }
    if (!reg_exit) part.kind[c] = eps_exit ? ComponentKind::kPseudosink : ComponentKind::kSink;
  }
  return part;
}

// 0-1 BFS from the absorbing nodes over reversed edges; regular edges cost 0,
// eps edges cost 1.
inline OrderLabels node_orders(const EpsilonMC& mc) {
  OrderLabels out;
  out.order.assign(mc.capacity(), OrderLabels::kNone);
  std::deque<NodeId> dq;
  for (auto a : mc.absorbing_nodes()) {
    out.order[a] = 0;
    dq.push_back(a);
  }
  while (!dq.empty()) {
    const NodeId v = dq.front();
    dq.pop_front();
    const std::size_t d = out.order[v];
    for (const auto& [u, _] : mc.regular_in(v)) {
      if (out.order[u] > d) {
        out.order[u] = d;
        dq.push_front(u);
      }
    }
    for (const auto& [u, _] : mc.eps_in(v)) {
      if (out.order[u] > d + 1) {
        out.order[u] = d + 1;
        dq.push_back(u);
      }
    }
  }
  for (auto v : mc.nodes()) {
    if (out.order[v] == OrderLabels::kNone)
      throw InvariantError("node_orders: node " + std::to_string(v) + " cannot reach an absorbing node");
    out.max_order = std::max(out.max_order, out.order[v]);
  }
  return out;
}

// Regular-edge sub-chain of `members`, rows renormalized within the set.
inline StochasticMatrix internal_regular_chain(const EpsilonMC& mc, std::span<const NodeId> members) {
  StochasticMatrix chain(members.size());
  auto local = [&](NodeId v) -> std::size_t {
    auto it = std::lower_bound(members.begin(), members.end(), v);
    return (it != members.end() && *it == v) ? static_cast<std::size_t>(it - members.begin())
                                             : SccPartition::kNone;
  };
  for (std::size_t r = 0; r < members.size(); ++r) {
    double sum = 0.0;
    for (const auto& [w, p] : mc.regular_out(members[r]))
      if (local(w) != SccPartition::kNone) sum += p;
    if (sum == 0.0) {
      chain.add(r, r, 1.0);
      continue;
    }
    for (const auto& [w, p] : mc.regular_out(members[r])) {
      auto l = local(w);
      if (l != SccPartition::kNone) chain.add(r, l, p / sum);
    }
  }
  return chain;
}

inline std::vector<double> pseudosink_stationary(const EpsilonMC& mc, std::span<const NodeId> members,
                                                 const SolverOptions& opts = {}) {
  if (members.size() == 1) return {1.0};
  return stationary_distribution(internal_regular_chain(mc, members), opts);
}

struct PseudosinkCollapse {
  std::vector<NodeId> members;  // sorted
  std::vector<double> pi;       // stationary vector over members
};

// Replaces each pseudosink by one node whose regular out-edges go to every
// exit target y with probability sum_{(x,y)} c * pi[x] / sum_{(x',y')} c' * pi[x'],
// the ratio taken over the pseudosink's outgoing eps edges. Each pseudosink's
// exit weights are computed before any contraction of the batch.
inline EpsilonMC collapse_pseudosinks(EpsilonMC mc, const std::vector<PseudosinkCollapse>& batch) {
  std::vector<EdgeMap> exits(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& [members, pi] = batch[b];
    if (members.empty() || pi.size() != members.size())
      throw InvariantError("collapse_pseudosink: stationary vector size mismatch");
    double pi_sum = 0.0;
    for (auto x : pi) {
      if (!(x >= 0.0)) throw InvariantError("collapse_pseudosink: negative stationary mass");
      pi_sum += x;
    }
    if (std::abs(pi_sum - 1.0) > 1e-9) throw InvariantError("collapse_pseudosink: stationary vector not normalized");
    auto inside = [&](NodeId v) { return std::binary_search(members.begin(), members.end(), v); };
    double total = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const NodeId x = members[k];
      if (!mc.alive(x)) throw InvariantError("collapse_pseudosink: member " + std::to_string(x) + " is not live");
      for (const auto& [y, _] : mc.regular_out(x))
        if (!inside(y))
          throw InvariantError("collapse_pseudosink: component containing " + std::to_string(members.front()) +
                               " has a regular exit; not a pseudosink");
      for (const auto& [y, c] : mc.eps_out(x)) {
        if (inside(y)) continue;
        exits[b][y] += c * pi[k];
        total += c * pi[k];
      }
    }
    if (!(total > 0.0))
      throw InvariantError("collapse_pseudosink: component containing " + std::to_string(members.front()) +
                           " has no eps exit");
    for (auto& [_, w] : exits[b]) w /= total;
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const NodeId rep = mc.contract(batch[b].members);
    // Targets may have been merged by an earlier collapse in this batch.
    EdgeMap merged;
    for (const auto& [y, w] : exits[b]) merged[mc.find(y)] += w;
    for (const auto& [y, w] : merged) mc.add_regular(rep, y, w);
  }
  mc.compress_origins();
  return mc;
}

inline EpsilonMC collapse_pseudosink(EpsilonMC mc, std::span<const NodeId> members, std::vector<double> pi) {
  std::vector<PseudosinkCollapse> batch(1);
  batch[0].members.assign(members.begin(), members.end());
  batch[0].pi = std::move(pi);
  return collapse_pseudosinks(std::move(mc), batch);
}

// Drops every eps edge. Only valid once every node has a regular path to
// absorption; regular weights are already normalized, so they stay as is.
inline EpsilonMC delete_epsilon_edges(EpsilonMC mc) {
  const auto orders = node_orders(mc);
  if (orders.max_order != 0)
    throw InvariantError("delete_epsilon_edges: max order is " + std::to_string(orders.max_order) + ", expected 0");
  mc.remove_eps_edges();
  return mc;
}

// Ordinary absorbing chain over the live nodes (index r = mc.nodes()[r]);
// eps edges are ignored.
inline StochasticMatrix regular_chain(const EpsilonMC& mc) {
  const auto nodes = mc.nodes();
  std::vector<std::size_t> index(mc.capacity(), 0);
  for (std::size_t r = 0; r < nodes.size(); ++r) index[nodes[r]] = r;
  StochasticMatrix chain(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    if (mc.absorbing(nodes[r])) {
      chain.set_absorbing(r);
      continue;
    }
    for (const auto& [w, p] : mc.regular_out(nodes[r])) chain.add(r, index[w], p);
  }
  return chain;
}

// Maps an absorption result over mc's live nodes back to every original id,
// with columns in the order of `sinks`.
inline HittingMatrix expand_to_origins(const EpsilonMC& mc, const AbsorptionResult& result, const SinkList& sinks) {
  const auto nodes = mc.nodes();
  std::vector<std::size_t> index(mc.capacity(), 0);
  for (std::size_t r = 0; r < nodes.size(); ++r) index[nodes[r]] = r;
  std::vector<std::size_t> column(result.absorbing.size(), SccPartition::kNone);
  for (std::size_t k = 0; k < sinks.size(); ++k) {
    const std::size_t r = index[mc.find(sinks[k].front())];
    auto it = std::lower_bound(result.absorbing.begin(), result.absorbing.end(), r);
    if (it == result.absorbing.end() || *it != r)
      throw InvariantError("expand_to_origins: sink " + std::to_string(k) + " is not absorbing");
    column[it - result.absorbing.begin()] = k;
  }
  for (auto c : column)
    if (c == SccPartition::kNone) throw InvariantError("expand_to_origins: absorbing node without a sink");

  HittingMatrix hm;
  hm.num_profiles = mc.capacity();
  hm.sinks = sinks;
  hm.probs.assign(hm.num_profiles * sinks.size(), 0.0);
  for (NodeId v = 0; v < mc.capacity(); ++v) {
    const auto row = result.row_of(index[mc.find(v)]);
    for (std::size_t a = 0; a < row.size(); ++a) hm.probs[v * sinks.size() + column[a]] = row[a];
  }
  return hm;
}

struct RoundInfo {
  std::size_t round = 0;
  std::size_t max_order_before = 0;
  std::size_t max_order_after = 0;
  std::size_t pseudosinks = 0;
};

struct LimitOptions {
  SolverOptions solver;
  double tie_tolerance = 0.0;
  bool check_invariants = false;
  // Called with the chain before each collapse round (for instrumentation).
  std::function<void(const EpsilonMC&, const SccPartition&)> before_round;
  std::function<void(const RoundInfo&)> after_round;
};

// Collapse loop: while some node needs an eps edge to reach absorption,
// collapse every current pseudosink; then drop the remaining eps edges and
// solve the ordinary absorbing chain. `mc` must have its sinks absorbing.
inline HittingMatrix limit_hitting_from_collapsed(EpsilonMC mc, const SinkList& sinks, const LimitOptions& opts = {}) {
  auto orders = node_orders(mc);
  CollapseTrace trace;
  trace.initial_max_order = orders.max_order;
  while (orders.max_order > 0) {
    const std::size_t round = trace.rounds() + 1;
    if (round > trace.initial_max_order + 1)
      throw InvariantError("collapse loop exceeded initial max order + 1 rounds");
    const auto part = rsccs(mc);
    const auto pseudo = part.pseudosinks();
    if (pseudo.empty())
      throw InvariantError("no pseudosink found at max order " + std::to_string(orders.max_order));
    if (opts.before_round) opts.before_round(mc, part);
    std::vector<PseudosinkCollapse> batch;
    batch.reserve(pseudo.size());
    for (auto c : pseudo) batch.push_back({part.members[c], pseudosink_stationary(mc, part.members[c], opts.solver)});
    mc = collapse_pseudosinks(std::move(mc), batch);
    if (opts.check_invariants) mc.check_invariants(1e-9);
    auto next = node_orders(mc);
    if (next.max_order >= orders.max_order)
      throw InvariantError("max order did not decrease: " + std::to_string(orders.max_order) + " -> " +
                           std::to_string(next.max_order));
    trace.max_order_after_round.push_back(next.max_order);
    trace.pseudosinks_per_round.push_back(pseudo.size());
    if (opts.after_round) opts.after_round({round, orders.max_order, next.max_order, pseudo.size()});
    orders = std::move(next);
  }
  mc = delete_epsilon_edges(std::move(mc));
  auto result = absorption_probabilities(regular_chain(mc), opts.solver);
  auto hm = expand_to_origins(mc, result, sinks);
  hm.trace = std::move(trace);
  return hm;
}

inline HittingMatrix limit_hitting_probabilities(const EpsilonMC& cmc, const SinkList& sinks,
                                                 const LimitOptions& opts = {}) {
  return limit_hitting_from_collapsed(from_cmc(cmc, sinks), sinks, opts);
}

inline HittingMatrix limit_hitting_probabilities(const Game& game, const LimitOptions& opts = {}) {
  const auto sinks = sink_equilibria(game, opts.tie_tolerance);
  return limit_hitting_probabilities(build_cmc(game, opts.tie_tolerance), sinks, opts);
}

// Hitting probabilities at a fixed concrete eps, same layout as the limit.
inline HittingMatrix oracle_hitting_matrix(const Game& game, double eps, const LimitOptions& opts = {}) {
  const auto sinks = sink_equilibria(game, opts.tie_tolerance);
  const auto mc = from_cmc(build_cmc(game, opts.tie_tolerance), sinks);
  return expand_to_origins(mc, oracle_hitting_at_epsilon(mc, eps, opts.solver), sinks);
}

}  // namespace sinklimit
