#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "game.hpp"
#include "limit.hpp"
#include "response_graph.hpp"
#include "rng.hpp"

namespace sinklimit {

// One probability vector per player.
struct MixedProfile {
  std::vector<std::vector<double>> probs;

  std::size_t num_players() const { return probs.size(); }
  std::span<const double> player(std::size_t i) const { return probs[i]; }

  std::vector<std::size_t> support(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < probs[i].size(); ++a)
      if (probs[i][a] > 0.0) out.push_back(a);
    return out;
  }

  static MixedProfile vertex(const Game& game, ProfileId profile) {
    MixedProfile x;
    const auto s = game.decode(profile);
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      x.probs.emplace_back(game.num_strategies(i), 0.0);
      x.probs[i][s[i]] = 1.0;
    }
    return x;
  }

  static MixedProfile uniform(const Game& game) {
    MixedProfile x;
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      const auto s = game.num_strategies(i);
      x.probs.emplace_back(s, 1.0 / static_cast<double>(s));
    }
    return x;
  }

  void validate(const Game& game, double tol = 1e-9) const {
    if (probs.size() != game.num_players()) throw InputError("mixed profile has wrong player count");
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i].size() != game.num_strategies(i))
        throw InputError("mixed profile: player " + std::to_string(i) + " has wrong strategy count");
      double sum = 0.0;
      for (double p : probs[i]) {
        if (!(p >= 0.0)) throw InputError("mixed profile: negative probability for player " + std::to_string(i));
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol)
        throw InputError("mixed profile: player " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }

  friend bool operator==(const MixedProfile&, const MixedProfile&) = default;
};

enum class BestResponseMode {
  kSupportRestricted,  // argmax over the current support
  kGlobalProjected,    // global argmax, zeroed if it is extinct
};

struct ReplicatorParams {
  double eta = 0.01;
  double delta = 0.005;
  double extinction_floor = 1e-9;
  std::size_t max_steps = 100'000;
  std::size_t window = 50;
  double proximity = 0.05;  // inf-norm radius around a vertex
  BestResponseMode br_mode = BestResponseMode::kSupportRestricted;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(eta > 0.0)) throw InputError("eta must be positive");
    if (!(delta > 0.0)) throw InputError("delta must be positive");
    if (!(extinction_floor >= 0.0)) throw InputError("extinction floor must be non-negative");
    if (window < 1) throw InputError("window must be at least 1");
  }
};

// Expected utility of each pure strategy of `player` against the others' mix.
inline std::vector<double> expected_utilities(const Game& game, const MixedProfile& x, std::size_t player) {
  const std::size_t p = game.num_players();
  std::vector<std::vector<std::size_t>> supports(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (j == player) {
      supports[j] = {0};
    } else {
      supports[j] = x.support(j);
      if (supports[j].empty()) throw InputError("player " + std::to_string(j) + " has empty support");
    }
  }
  std::vector<double> u(game.num_strategies(player), 0.0);
  std::vector<std::size_t> digit(p, 0);
  const auto stride = game.stride(player);
  while (true) {
    double w = 1.0;
    ProfileId base = 0;
    for (std::size_t j = 0; j < p; ++j) {
      if (j == player) continue;
      const std::size_t a = supports[j][digit[j]];
      w *= x.probs[j][a];
      base += a * game.stride(j);
    }
    for (std::size_t a = 0; a < u.size(); ++a) u[a] += w * game.utility(player, base + a * stride);
    std::size_t j = 0;
    for (; j < p; ++j) {
      if (++digit[j] < supports[j].size()) break;
      digit[j] = 0;
    }
    if (j == p) break;
  }
  return u;
}

// Unit vector on the best response, restricted to the support of x_player
// (or the global best response zeroed off-support). Near-ties within 1e-12
// relative go to the lowest index.
inline std::vector<double> best_response_vector(const Game& game, const MixedProfile& x, std::size_t player,
                                                BestResponseMode mode = BestResponseMode::kSupportRestricted) {
  const auto support = x.support(player);
  if (support.empty()) throw InputError("player " + std::to_string(player) + " has empty support");
  const auto u = expected_utilities(game, x, player);
  std::vector<std::size_t> candidates;
  if (mode == BestResponseMode::kSupportRestricted) {
    candidates = support;
  } else {
    candidates.resize(u.size());
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  }
  double best = -std::numeric_limits<double>::infinity();
  for (auto a : candidates) best = std::max(best, u[a]);
  const double slack = 1e-12 * (1.0 + std::abs(best));
  std::size_t arg = candidates.front();
  for (auto a : candidates)
    if (u[a] >= best - slack) {
      arg = a;
      break;
    }
  std::vector<double> br(u.size(), 0.0);
  if (x.probs[player][arg] > 0.0) br[arg] = 1.0;
  return br;
}

namespace detail {

// Euclidean projection of v onto the probability simplex (sort and threshold).
inline std::vector<double> simplex_projection(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - theta, 0.0);
  return out;
}

}  // namespace detail

// Projects v (restricted to `support`) onto the simplex over those
// coordinates; off-support entries become exactly 0. Entries at or below
// `floor` go extinct and the rest is projected again, so the support only
// shrinks. If everything would go extinct, returns the vertex at the largest
// supported coordinate.
inline std::vector<double> project_to_simplex(std::span<const double> v, std::span<const std::size_t> support,
                                              double floor = 0.0) {
  if (support.empty()) throw InputError("project_to_simplex: empty support");
  std::vector<std::size_t> active(support.begin(), support.end());
  std::vector<double> current(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.0);
  while (true) {
    std::vector<double> sub(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) sub[k] = current[active[k]];
    const auto proj = detail::simplex_projection(sub);
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<std::size_t> survivors;
    for (std::size_t k = 0; k < active.size(); ++k) {
      out[active[k]] = proj[k];
      if (proj[k] > floor) survivors.push_back(active[k]);
    }
    if (survivors.empty()) {
      std::size_t arg = support.front();
      for (auto a : support)
        if (v[a] > v[arg]) arg = a;
      std::fill(out.begin(), out.end(), 0.0);
      out[arg] = 1.0;
      return out;
    }
    if (survivors.size() == active.size()) return out;
    active = std::move(survivors);
    current = out;
  }
}

// x' = project(x + eta * BR_x + noise), noise N(0, delta) on the support only,
// all players updated from the same x.
inline MixedProfile noisy_replicator_step(const Game& game, const MixedProfile& x, const ReplicatorParams& params,
                                          Rng& rng) {
  std::normal_distribution<double> noise(0.0, params.delta);
  std::vector<std::vector<double>> br(game.num_players());
  for (std::size_t i = 0; i < game.num_players(); ++i) br[i] = best_response_vector(game, x, i, params.br_mode);
  MixedProfile next;
  next.probs.resize(game.num_players());
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    const auto support = x.support(i);
    std::vector<double> y(x.probs[i].size(), 0.0);
    for (auto a : support) y[a] = x.probs[i][a] + params.eta * br[i][a] + noise(rng);
    next.probs[i] = project_to_simplex(y, support, params.extinction_floor);
  }
  return next;
}

// Per-player argmax, ties to the lowest index.
inline ProfileId nearest_profile(const Game& game, const MixedProfile& x) {
  ProfileId id = 0;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    const auto& p = x.probs[i];
    const auto a = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    id += a * game.stride(i);
  }
  return id;
}

inline double vertex_distance(const Game& game, const MixedProfile& x, ProfileId profile) {
  double d = 0.0;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    const auto a = game.strategy_of(profile, i);
    for (std::size_t b = 0; b < x.probs[i].size(); ++b)
      d = std::max(d, std::abs(x.probs[i][b] - (a == b ? 1.0 : 0.0)));
  }
  return d;
}

// Profile -> sink index, or -1 outside every sink.
inline std::vector<std::ptrdiff_t> sink_lookup(std::size_t num_profiles, const SinkList& sinks) {
  std::vector<std::ptrdiff_t> out(num_profiles, -1);
  for (std::size_t k = 0; k < sinks.size(); ++k)
    for (auto v : sinks[k]) out[v] = static_cast<std::ptrdiff_t>(k);
  return out;
}

struct SimulationOutcome {
  std::optional<std::size_t> sink;  // empty: did not converge
  std::size_t steps = 0;
};

// Runs the dynamics until the nearest pure profile stays inside one sink for
// `window` consecutive steps and came within `proximity` of its vertex at
// least once in that window.
inline SimulationOutcome simulate_to_sink(const Game& game, MixedProfile x, const std::vector<std::ptrdiff_t>& sink_of,
                                          const ReplicatorParams& params, Rng& rng) {
  std::ptrdiff_t run_sink = -1;
  std::size_t run_len = 0;
  std::optional<std::size_t> last_near;
  for (std::size_t step = 1; step <= params.max_steps; ++step) {
    x = noisy_replicator_step(game, x, params, rng);
    const ProfileId p = nearest_profile(game, x);
    const std::ptrdiff_t s = sink_of[p];
    if (s < 0) {
      run_sink = -1;
      run_len = 0;
      last_near.reset();
      bool frozen = true;
      for (std::size_t i = 0; i < x.num_players() && frozen; ++i) frozen = x.support(i).size() == 1;
      if (frozen) return {std::nullopt, step};  // pure and outside every sink: can never move
      continue;
    }
    if (s != run_sink) {
      run_sink = s;
      run_len = 0;
      last_near.reset();
    }
    ++run_len;
    if (vertex_distance(game, x, p) < params.proximity) last_near = step;
    if (run_len >= params.window && last_near && *last_near + params.window > step)
      return {static_cast<std::size_t>(s), step};
  }
  return {std::nullopt, params.max_steps};
}

inline SimulationOutcome simulate_to_sink(const Game& game, MixedProfile x, const SinkList& sinks,
                                          const ReplicatorParams& params, Rng& rng) {
  return simulate_to_sink(game, std::move(x), sink_lookup(game.num_profiles(), sinks), params, rng);
}

struct PriorSpec {
  enum class Kind { kDirichlet, kPoint };
  Kind kind = Kind::kDirichlet;
  double alpha = 1.0;  // Dirichlet(1) is uniform on each simplex
  MixedProfile point;

  static PriorSpec uniform() { return {}; }
  static PriorSpec dirichlet(double alpha) { return {Kind::kDirichlet, alpha, {}}; }
  static PriorSpec point_mass(MixedProfile x) { return {Kind::kPoint, 1.0, std::move(x)}; }
  // Mostly on a vertex, with `tail` mass spread uniformly over the rest.
  static PriorSpec near_vertex(const Game& game, ProfileId profile, double tail) {
    auto x = MixedProfile::vertex(game, profile);
    for (auto& p : x.probs) {
      const double s = static_cast<double>(p.size());
      for (auto& q : p) q = q * (1.0 - tail) + tail / s;
    }
    return point_mass(std::move(x));
  }
};

inline MixedProfile sample_prior(const Game& game, const PriorSpec& prior, Rng& rng) {
  if (prior.kind == PriorSpec::Kind::kPoint) return prior.point;
  if (!(prior.alpha > 0.0)) throw InputError("dirichlet alpha must be positive");
  MixedProfile x;
  x.probs.resize(game.num_players());
  std::gamma_distribution<double> gamma(prior.alpha, 1.0);
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    auto& p = x.probs[i];
    p.resize(game.num_strategies(i));
    double sum = 0.0;
    for (auto& q : p) {
      // alpha == 1: exponential draws from the portable uniform source.
      q = prior.alpha == 1.0 ? -std::log1p(-uniform01(rng)) : gamma(rng);
      sum += q;
    }
    if (!(sum > 0.0)) {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
      continue;
    }
    for (auto& q : p) q /= sum;
  }
  return x;
}

struct EstimateOptions {
  ReplicatorParams params;
  std::size_t runs_per_sample = 40;
  std::size_t samples_per_batch = 10;
  std::size_t max_samples = 5000;
  std::size_t min_checkpoints = 2;
  double tv_tol = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: SINKLIMIT_THREADS, else hardware concurrency
};

struct LimitDistribution {
  SinkList sinks;
  std::vector<double> probs;   // per sink
  double nonconverged = 0.0;   // probs + nonconverged sum to 1
  std::size_t samples = 0;
  std::size_t runs = 0;
  std::size_t nonconverged_runs = 0;
  std::vector<double> tv_trace;        // TV between successive checkpoints
  std::vector<double> ex_post_tv_trace;  // TV of each checkpoint against the final average
  bool converged = true;
};

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return 0.5 * s;
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SINKLIMIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Samples starting points from the prior, runs the dynamics several times
// from each, and averages the outcomes until successive checkpoints are
// within tv_tol of each other. Every run draws from its own stream derived
// from (seed, sample, run), and results are merged in run order, so the
// answer does not depend on the thread count.
inline LimitDistribution estimate_limit_distribution(const Game& game, const PriorSpec& prior,
                                                     const EstimateOptions& opts, const SinkList& sinks) {
  opts.params.validate();
  if (!(opts.tv_tol > 0.0)) throw InputError("tv tolerance must be positive");
  if (opts.runs_per_sample == 0 || opts.samples_per_batch == 0) throw InputError("empty batch");
  if (prior.kind == PriorSpec::Kind::kPoint) prior.point.validate(game);
  const auto sink_of = sink_lookup(game.num_profiles(), sinks);
  const std::size_t k = sinks.size();
  const unsigned threads = resolve_threads(opts.threads);

  LimitDistribution out;
  out.sinks = sinks;
  std::vector<std::uint64_t> counts(k + 1, 0);  // last bucket: not converged
  std::vector<std::vector<double>> checkpoints;
  auto average = [&] {
    std::vector<double> avg(k + 1);
    const double total = static_cast<double>(out.runs);
    for (std::size_t c = 0; c <= k; ++c) avg[c] = static_cast<double>(counts[c]) / total;
    return avg;
  };

  bool done = false;
  while (!done) {
    const std::size_t first = out.samples;
    const std::size_t batch = std::min(opts.samples_per_batch, opts.max_samples - first);
    if (batch == 0) break;
    const std::size_t tasks = batch * opts.runs_per_sample;
    std::vector<MixedProfile> starts(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      Rng rng(derive_seed(opts.seed, {first + b, ~std::uint64_t{0}}));
      starts[b] = sample_prior(game, prior, rng);
    }
    std::vector<std::size_t> outcome(tasks, k);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t t = next++; t < tasks; t = next++) {
        const std::size_t b = t / opts.runs_per_sample;
        const std::size_t r = t % opts.runs_per_sample;
        Rng rng(derive_seed(opts.seed, {first + b, r}));
        const auto res = simulate_to_sink(game, starts[b], sink_of, opts.params, rng);
        outcome[t] = res.sink ? *res.sink : k;
      }
    };
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    for (auto o : outcome) ++counts[o];
    out.samples += batch;
    out.runs += tasks;

    checkpoints.push_back(average());
    if (checkpoints.size() >= 2) {
      const double tv = total_variation(checkpoints.back(), checkpoints[checkpoints.size() - 2]);
      out.tv_trace.push_back(tv);
      if (tv < opts.tv_tol && checkpoints.size() >= opts.min_checkpoints) done = true;
    }
    if (!done && out.samples >= opts.max_samples) {
      out.converged = false;
      done = true;
    }
  }

  const auto final_avg = average();
  for (const auto& c : checkpoints) out.ex_post_tv_trace.push_back(total_variation(c, final_avg));
  out.probs.assign(final_avg.begin(), final_avg.begin() + static_cast<std::ptrdiff_t>(k));
  out.nonconverged = final_avg[k];
  out.nonconverged_runs = counts[k];
  return out;
}

inline LimitDistribution estimate_limit_distribution(const Game& game, const PriorSpec& prior,
                                                     const EstimateOptions& opts) {
  return estimate_limit_distribution(game, prior, opts, sink_equilibria(game));
}

// Exact answer for a prior supported on pure profiles: the prior-weighted
// average of the limit hitting rows.
inline LimitDistribution exact_limit_distribution(const HittingMatrix& hitting, std::span<const double> pure_prior) {
  if (pure_prior.size() != hitting.num_profiles)
    throw InputError("pure prior has " + std::to_string(pure_prior.size()) + " weights, game has " +
                     std::to_string(hitting.num_profiles) + " profiles");
  double sum = 0.0;
  for (double w : pure_prior) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("pure prior weights must be non-negative and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("pure prior weights sum to " + std::to_string(sum) + ", not 1");
  LimitDistribution out;
  out.sinks = hitting.sinks;
  out.probs.assign(hitting.num_sinks(), 0.0);
  for (ProfileId v = 0; v < hitting.num_profiles; ++v) {
    if (pure_prior[v] == 0.0) continue;
    const auto row = hitting.row(v);
    for (std::size_t s = 0; s < row.size(); ++s) out.probs[s] += pure_prior[v] * row[s];
  }
  return out;
}

inline LimitDistribution exact_limit_distribution(const Game& game, std::span<const double> pure_prior,
                                                  const LimitOptions& opts = {}) {
  if (pure_prior.size() != game.num_profiles())
    throw InputError("pure prior has " + std::to_string(pure_prior.size()) + " weights, game has " +
                     std::to_string(game.num_profiles()) + " profiles");
  return exact_limit_distribution(limit_hitting_probabilities(game, opts), pure_prior);
}

}  // namespace sinklimit
