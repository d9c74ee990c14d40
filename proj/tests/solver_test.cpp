#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sinklimit/cmc.hpp"
#include "sinklimit/limit.hpp"
#include "sinklimit/solver.hpp"
#include "random_chains.hpp"
#include "test_games.hpp"

namespace sinklimit {
namespace {

using testing::at;
using testing::tie_game;

// Random irreducible chain: a Hamiltonian cycle plus random chords.
StochasticMatrix random_irreducible(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    w[i][(i + 1) % n] = 0.1 + uniform01(rng);
    for (int k = 0; k < 2; ++k) w[i][rng() % n] += uniform01(rng);
  }
  StochasticMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : w[i]) s += x;
    double placed = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (w[i][j] > 0.0) last = j;
    for (std::size_t j = 0; j < n; ++j) {
      if (w[i][j] == 0.0) continue;
      const double p = j == last ? 1.0 - placed : w[i][j] / s;
      m.add(i, j, p);
      placed += p;
    }
  }
  return m;
}

// Random absorbing chain: `absorbing` sinks at the end, every transient node
// links forward towards them plus random back edges.
StochasticMatrix random_absorbing(std::size_t transient, std::size_t absorbing, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = transient + absorbing;
  StochasticMatrix m(n);
  for (std::size_t a = transient; a < n; ++a) m.set_absorbing(a);
  for (std::size_t i = 0; i < transient; ++i) {
    std::vector<std::pair<std::size_t, double>> row;
    row.emplace_back(i + 1 < transient ? i + 1 : transient + rng() % absorbing, 0.2 + uniform01(rng));
    for (int k = 0; k < 3; ++k) row.emplace_back(rng() % n, uniform01(rng));
    double s = 0.0;
    for (auto& [_, w] : row) s += w;
    double placed = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double p = k + 1 == row.size() ? 1.0 - placed : row[k].second / s;
      m.add(i, row[k].first, p);
      placed += p;
    }
  }
  return m;
}

double stationary_residual(const StochasticMatrix& m, const std::vector<double>& pi) {
  std::vector<double> moved(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (const auto& [j, p] : m.row(i)) moved[j] += pi[i] * p;
  double r = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) r = std::max(r, std::abs(moved[i] - pi[i]));
  return r;
}

TEST(Stationary, SingleNode) {
  StochasticMatrix m(1);
  m.add(0, 0, 1.0);
  EXPECT_EQ(stationary_distribution(m), std::vector<double>{1.0});
}

TEST(Stationary, PeriodicTwoCycle) {
  StochasticMatrix m(2);
  m.add(0, 1, 1.0);
  m.add(1, 0, 1.0);
  const auto pi = stationary_distribution(m);
  EXPECT_NEAR(pi[0], 0.5, 1e-15);
  EXPECT_NEAR(pi[1], 0.5, 1e-15);
}

TEST(Stationary, PeriodicThreeCycle) {
  StochasticMatrix m(3);
  m.add(0, 1, 1.0);
  m.add(1, 2, 1.0);
  m.add(2, 0, 1.0);
  const auto pi = stationary_distribution(m);
  for (double x : pi) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(Stationary, NotStronglyConnectedThrows) {
  StochasticMatrix m(2);
  m.add(0, 1, 1.0);
  m.add(1, 1, 1.0);
  EXPECT_THROW(stationary_distribution(m), NumericalError);
}

TEST(Stationary, ResidualAndNormalizationOnRandomChains) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = random_irreducible(2 + seed % 40, seed);
    const auto pi = stationary_distribution(m);
    double sum = 0.0;
    for (double x : pi) {
      EXPECT_GT(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LT(stationary_residual(m, pi), 1e-10);
  }
}

TEST(Stationary, SparsePathAgreesWithDense) {
  const auto m = random_irreducible(700, 5);
  SolverOptions dense;
  dense.method = SolveMethod::kDense;
  const auto a = stationary_distribution(m, dense);
  const auto b = stationary_distribution(m);  // above the dense limit
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Absorption, DirectEdge) {
  StochasticMatrix m(2);
  m.add(0, 1, 1.0);
  m.set_absorbing(1);
  const auto r = absorption_probabilities(m);
  ASSERT_EQ(r.transient.size(), 1u);
  EXPECT_EQ(r.at(0, 0), 1.0);
}

TEST(Absorption, SplitBetweenTwoAbsorbers) {
  StochasticMatrix m(3);
  m.add(0, 1, 0.3);
  m.add(0, 2, 0.7);
  m.set_absorbing(1);
  m.set_absorbing(2);
  const auto r = absorption_probabilities(m);
  EXPECT_NEAR(r.at(0, 0), 0.3, 1e-15);
  EXPECT_NEAR(r.at(0, 1), 0.7, 1e-15);
}

// Gambler's ruin: absorbers 0 and 4, fair steps from 1, 2, 3.
StochasticMatrix gamblers_ruin() {
  StochasticMatrix m(5);
  m.set_absorbing(0);
  m.set_absorbing(4);
  for (std::size_t i = 1; i <= 3; ++i) {
    m.add(i, i - 1, 0.5);
    m.add(i, i + 1, 0.5);
  }
  return m;
}

// Sum over all paths of length <= depth that end at `target`.
double path_sum(const StochasticMatrix& m, std::size_t start, std::size_t target, int depth) {
  std::vector<double> mass(m.size(), 0.0);
  mass[start] = 1.0;
  double hit = 0.0;
  for (int t = 0; t < depth; ++t) {
    std::vector<double> next(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (mass[i] == 0.0 || m.absorbing(i)) continue;
      for (const auto& [j, p] : m.row(i)) next[j] += mass[i] * p;
    }
    hit += next[target];
    next[target] = 0.0;
    mass = next;
  }
  return hit;
}

TEST(Absorption, GamblersRuinMatchesPathSummation) {
  const auto m = gamblers_ruin();
  const double expected[] = {0.25, 0.5, 0.75};
  for (std::size_t i = 1; i <= 3; ++i) {
    const double brute = path_sum(m, i, 4, 60);
    EXPECT_NEAR(brute, expected[i - 1], 1e-8);
  }
  const auto r = absorption_probabilities(m);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.at(i, 1), expected[i], 1e-14);
    EXPECT_NEAR(r.at(i, 0) + r.at(i, 1), 1.0, 1e-14);
  }
}

TEST(Absorption, UnreachableNodeIsReported) {
  StochasticMatrix m(3);
  m.add(0, 2, 1.0);
  m.add(1, 1, 1.0);
  m.set_absorbing(2);
  try {
    absorption_probabilities(m);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("node 1"), std::string::npos);
  }
}

TEST(Absorption, AllMethodsAgreeAndSatisfyFirstStep) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_absorbing(60, 3, seed);
    SolverOptions o;
    o.method = SolveMethod::kDense;
    const auto dense = absorption_probabilities(m, o);
    o.method = SolveMethod::kSparseDirect;
    const auto sparse = absorption_probabilities(m, o);
    o.method = SolveMethod::kGaussSeidel;
    const auto gs = absorption_probabilities(m, o);
    EXPECT_LT(dense.residual, 1e-9);
    for (std::size_t k = 0; k < dense.h.size(); ++k) {
      EXPECT_NEAR(dense.h[k], sparse.h[k], 1e-12);
      EXPECT_NEAR(dense.h[k], gs.h[k], 1e-10);
    }
    for (std::size_t r = 0; r < dense.transient.size(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < dense.absorbing.size(); ++c) s += dense.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Absorption, GaussSeidelSweepCapIsAnError) {
  SolverOptions o;
  o.method = SolveMethod::kGaussSeidel;
  o.max_sweeps = 2;
  EXPECT_THROW(absorption_probabilities(gamblers_ruin(), o), NumericalError);
}

TEST(Absorption, LargeChainUsesSparsePath) {
  const auto m = random_absorbing(3000, 4, 11);
  const auto r = absorption_probabilities(m);
  EXPECT_LT(r.residual, 1e-9);
  for (std::size_t row = 0; row < r.transient.size(); row += 97) {
    double s = 0.0;
    for (std::size_t c = 0; c < r.absorbing.size(); ++c) s += r.at(row, c);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Oracle, NoEpsEdgesMatchesPlainSolve) {
  EpsilonMC mc(3);
  mc.add_regular(0, 1, 0.4);
  mc.add_regular(0, 2, 0.6);
  mc.set_absorbing(1);
  mc.set_absorbing(2);
  const auto plain = absorption_probabilities(regular_chain(mc));
  for (double eps : {1e-2, 1e-5, 1e-9}) {
    const auto o = oracle_hitting_at_epsilon(mc, eps);
    EXPECT_EQ(o.h, plain.h);
  }
}

TEST(Oracle, TieGameCornerGoesToTopLeft) {
  const auto g = tie_game();
  const auto sinks = sink_equilibria(g);
  const auto hm = oracle_hitting_matrix(g, 1e-8);
  ASSERT_EQ(sinks[0], std::vector<ProfileId>{at(g, 1, 1)});
  EXPECT_GE(hm.at(at(g, 3, 3), 0), 1.0 - 1e-6);
  EXPECT_LE(hm.at(at(g, 3, 3), 0), 1.0);
}

TEST(Oracle, TooLargeEpsThrows) {
  EpsilonMC mc(3);
  mc.add_eps(0, 1, 1.0);
  mc.add_eps(0, 2, 1.0);
  mc.set_absorbing(1);
  mc.set_absorbing(2);
  EXPECT_THROW(oracle_hitting_at_epsilon(mc, 0.6), NumericalError);
  EXPECT_NO_THROW(oracle_hitting_at_epsilon(mc, 0.4));
}

double max_abs_diff(const HittingMatrix& a, const HittingMatrix& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.probs.size(); ++k) d = std::max(d, std::abs(a.probs[k] - b.probs[k]));
  return d;
}

TEST(Oracle, CauchyConvergenceOnRandomChains) {
  std::size_t checked = 0, ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto chain = testing::random_eps_chain(seed);
    if (!chain) continue;
    const auto sinks = testing::absorbing_sinks(*chain);
    auto solve = [&](double eps) { return expand_to_origins(*chain, oracle_hitting_at_epsilon(*chain, eps), sinks); };
    const auto big = solve(1e-2), mid = solve(1e-4), small = solve(1e-6);
    const double far = max_abs_diff(big, mid);
    const double near = max_abs_diff(mid, small);
    if (far < 1e-12) continue;  // no eps dependence at all
    ++checked;
    if (near < far) ++ok;
  }
  EXPECT_GT(checked, 50u);
  EXPECT_EQ(ok, checked);
}

TEST(Absorption, StateReductionAgreesWithDense) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_absorbing(80, 3, 100 + seed);
    SolverOptions o;
    o.method = SolveMethod::kDense;
    const auto dense = absorption_probabilities(m, o);
    o.method = SolveMethod::kStateReduction;
    const auto gth = absorption_probabilities(m, o);
    for (std::size_t k = 0; k < dense.h.size(); ++k) EXPECT_NEAR(dense.h[k], gth.h[k], 1e-12);
  }
}

// A regular 2-cycle that leaks eps^2-sized mass: LU on I - Q loses most
// digits, elimination does not.
TEST(Absorption, StateReductionKeepsTinyExits) {
  const double tiny = 1e-14;
  StochasticMatrix m(4);
  m.add(0, 1, 1.0 - tiny);
  m.add(0, 2, tiny);
  m.add(1, 0, 1.0 - 3 * tiny);
  m.add(1, 3, 3 * tiny);
  m.set_absorbing(2);
  m.set_absorbing(3);
  SolverOptions o;
  o.method = SolveMethod::kStateReduction;
  const auto r = absorption_probabilities(m, o);
  // Exact: from 0, leave at 0 first with tiny / (1 - (1-tiny)(1-3 tiny)).
  const double to2 = tiny / (tiny + (1 - tiny) * 3 * tiny);
  EXPECT_NEAR(r.at(0, 0), to2, 1e-12);
}

}  // namespace
}  // namespace sinklimit
