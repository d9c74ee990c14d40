#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace sinklimit {

// Index of a pure strategy profile. Mixed radix with player 0 as the least
// significant digit: id = s_0 + n_0 * (s_1 + n_1 * (s_2 + ...)).
using ProfileId = std::size_t;

// A finite normal-form game. Utilities are stored per player as a flat
// tensor indexed by ProfileId. Immutable after construction.
class Game {
 public:
  Game(std::vector<std::size_t> strategy_counts, std::vector<std::vector<double>> utilities)
      : counts_(std::move(strategy_counts)), utilities_(std::move(utilities)) {
    if (counts_.empty()) throw InputError("field 'strategies': game needs at least one player");
    strides_.resize(counts_.size());
    std::size_t n = 1;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] == 0)
        throw InputError("field 'strategies[" + std::to_string(i) + "]': strategy count must be positive");
      strides_[i] = n;
      if (n > (std::size_t{1} << 40) / counts_[i])
        throw InputError("field 'strategies': profile count overflows");
      n *= counts_[i];
    }
    num_profiles_ = n;
    if (utilities_.size() != counts_.size())
      throw InputError("field 'utilities': expected " + std::to_string(counts_.size()) +
                       " player tensors, got " + std::to_string(utilities_.size()));
    for (std::size_t i = 0; i < utilities_.size(); ++i) {
      if (utilities_[i].size() != n)
        throw InputError("field 'utilities[" + std::to_string(i) + "]': expected " + std::to_string(n) +
                         " entries, got " + std::to_string(utilities_[i].size()));
      for (std::size_t v = 0; v < n; ++v)
        if (!std::isfinite(utilities_[i][v]))
          throw InputError("field 'utilities[" + std::to_string(i) + "][" + std::to_string(v) +
                           "]': utility must be finite");
    }
  }

  std::size_t num_players() const { return counts_.size(); }
  std::size_t num_profiles() const { return num_profiles_; }
  std::size_t num_strategies(std::size_t player) const { return counts_[player]; }
  const std::vector<std::size_t>& strategy_counts() const { return counts_; }
  std::size_t stride(std::size_t player) const { return strides_[player]; }

  double utility(std::size_t player, ProfileId profile) const { return utilities_[player][profile]; }
  std::span<const double> utilities(std::size_t player) const { return utilities_[player]; }

  ProfileId encode(std::span<const std::size_t> strategies) const {
    if (strategies.size() != counts_.size())
      throw InputError("profile has " + std::to_string(strategies.size()) + " entries, game has " +
                       std::to_string(counts_.size()) + " players");
    ProfileId id = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (strategies[i] >= counts_[i])
        throw InputError("strategy " + std::to_string(strategies[i]) + " out of range for player " +
                         std::to_string(i) + " (has " + std::to_string(counts_[i]) + ")");
      id += strategies[i] * strides_[i];
    }
    return id;
  }
  ProfileId encode(std::initializer_list<std::size_t> strategies) const {
    return encode(std::span<const std::size_t>(strategies.begin(), strategies.size()));
  }

  std::vector<std::size_t> decode(ProfileId profile) const {
    if (profile >= num_profiles_)
      throw InputError("profile id " + std::to_string(profile) + " out of range");
    std::vector<std::size_t> out(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      out[i] = profile % counts_[i];
      profile /= counts_[i];
    }
    return out;
  }

  std::size_t strategy_of(ProfileId profile, std::size_t player) const {
    return (profile / strides_[player]) % counts_[player];
  }

  // Profile reached when `player` switches to `strategy`, everyone else fixed.
  ProfileId deviate(ProfileId profile, std::size_t player, std::size_t strategy) const {
    return profile - strategy_of(profile, player) * strides_[player] + strategy * strides_[player];
  }

  // Calls f(members) for every line of `player`: the profiles that share all
  // opponents' strategies, ordered by the player's strategy index.
  template <typename F>
  void for_each_line(std::size_t player, F&& f) const {
    const std::size_t s = counts_[player];
    const std::size_t st = strides_[player];
    std::vector<ProfileId> members(s);
    for (std::size_t hi = 0; hi < num_profiles_; hi += st * s) {
      for (std::size_t lo = 0; lo < st; ++lo) {
        for (std::size_t a = 0; a < s; ++a) members[a] = hi + lo + a * st;
        f(std::span<const ProfileId>(members));
      }
    }
  }

  // 1-based tuple rendering, e.g. "(3,1)".
  std::string profile_label(ProfileId profile) const {
    std::string out = "(";
    auto s = decode(profile);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(s[i] + 1);
    }
    return out + ")";
  }

  friend bool operator==(const Game&, const Game&) = default;

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::vector<double>> utilities_;
  std::vector<std::size_t> strides_;
  std::size_t num_profiles_ = 0;
};

struct UtilityDistribution {
  enum class Kind { kContinuous, kInteger };
  Kind kind = Kind::kContinuous;
  // Integer mode draws uniformly from {0, ..., max_value}.
  std::uint32_t max_value = 2;

  static UtilityDistribution continuous() { return {}; }
  static UtilityDistribution integer(std::uint32_t k) { return {Kind::kInteger, k}; }
};

// Deterministic in (seed, counts, dist) on every platform.
inline Game random_game(std::uint64_t seed, std::vector<std::size_t> counts,
                        UtilityDistribution dist = UtilityDistribution::continuous()) {
  std::size_t n = 1;
  for (auto c : counts) {
    if (c == 0) throw InputError("strategy counts must be positive");
    n *= c;
  }
  if (counts.empty()) throw InputError("random game needs at least one player");
  Rng rng(splitmix64(seed));
  std::vector<std::vector<double>> utils(counts.size(), std::vector<double>(n));
  for (auto& tensor : utils) {
    for (auto& u : tensor) {
      if (dist.kind == UtilityDistribution::Kind::kContinuous) {
        u = uniform01(rng);
      } else {
        u = std::floor(uniform01(rng) * (static_cast<double>(dist.max_value) + 1.0));
      }
    }
  }
  return Game(std::move(counts), std::move(utils));
}

inline Game random_game(std::uint64_t seed, std::size_t players, std::size_t strategies,
                        UtilityDistribution dist = UtilityDistribution::continuous()) {
  return random_game(seed, std::vector<std::size_t>(players, strategies), dist);
}

}  // namespace sinklimit
