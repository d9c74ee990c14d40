#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "eps_chain.hpp"
#include "errors.hpp"
#include "scc.hpp"

namespace sinklimit {

// Sparse row-major transition matrix over nodes 0..n-1. Absorbing rows are
// empty; every other row is a probability distribution (self-loops allowed).
class StochasticMatrix {
 public:
  explicit StochasticMatrix(std::size_t n) : rows_(n), absorbing_(n, 0) {}

  std::size_t size() const { return rows_.size(); }

  void add(std::size_t from, std::size_t to, double p) {
    if (from >= size() || to >= size()) throw InputError("StochasticMatrix: index out of range");
    if (p < 0.0 || !std::isfinite(p)) throw InputError("StochasticMatrix: negative or non-finite entry");
    if (p == 0.0) return;
    rows_[from][to] += p;
  }

  void set_absorbing(std::size_t i) { absorbing_[i] = 1; }
  bool absorbing(std::size_t i) const { return absorbing_[i] != 0; }
  const std::map<std::size_t, double>& row(std::size_t i) const { return rows_[i]; }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (const auto& [_, p] : rows_[i]) s += p;
    return s;
  }

  void validate(double tol = 1e-12) const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (absorbing(i)) {
        if (!rows_[i].empty()) throw InputError("absorbing row " + std::to_string(i) + " has entries");
        continue;
      }
      if (std::abs(row_sum(i) - 1.0) > tol)
        throw InputError("row " + std::to_string(i) + " sums to " + std::to_string(row_sum(i)));
    }
  }

  Adjacency adjacency() const {
    Adjacency adj(size());
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& [j, _] : rows_[i]) adj[i].push_back(j);
    return adj;
  }

 private:
  std::vector<std::map<std::size_t, double>> rows_;
  std::vector<char> absorbing_;
};

// kStateReduction eliminates transient nodes one by one without subtractions
// (GTH style); slow on large chains but accurate when exits carry tiny mass.
enum class SolveMethod { kAuto, kDense, kSparseDirect, kGaussSeidel, kStateReduction };

struct SolverOptions {
  SolveMethod method = SolveMethod::kAuto;
  std::size_t dense_stationary_limit = 512;
  std::size_t dense_absorption_limit = 2048;
  std::size_t max_sweeps = 1'000'000;
  double iterative_tolerance = 1e-12;
  double residual_limit = 1e-9;
};

// Hitting probabilities of an absorbing chain: h[r][k] is the probability
// that transient node transient[r] is absorbed at absorbing[k].
struct AbsorptionResult {
  std::vector<std::size_t> transient;
  std::vector<std::size_t> absorbing;
  std::vector<double> h;  // row-major, transient.size() x absorbing.size()
  double residual = 0.0;  // ||(I - Q) H - R||_inf before clamping

  double at(std::size_t row, std::size_t col) const { return h[row * absorbing.size() + col]; }

  // Distribution over `absorbing` for any node of the chain.
  std::vector<double> row_of(std::size_t node) const {
    std::vector<double> out(absorbing.size(), 0.0);
    auto a = std::lower_bound(absorbing.begin(), absorbing.end(), node);
    if (a != absorbing.end() && *a == node) {
      out[a - absorbing.begin()] = 1.0;
      return out;
    }
    auto t = std::lower_bound(transient.begin(), transient.end(), node);
    if (t == transient.end() || *t != node) throw InputError("node " + std::to_string(node) + " not in chain");
    const std::size_t r = t - transient.begin();
    for (std::size_t k = 0; k < absorbing.size(); ++k) out[k] = at(r, k);
    return out;
  }
};

// Unique stationary vector of an irreducible chain, from the balance
// equations with one row swapped for the normalization constraint. Exact for
// periodic chains.
inline std::vector<double> stationary_distribution(const StochasticMatrix& chain,
                                                   const SolverOptions& opts = {}) {
  const std::size_t n = chain.size();
  if (n == 0) throw InputError("stationary_distribution: empty chain");
  chain.validate();
  if (n == 1) return {1.0};
  if (strongly_connected_components(chain.adjacency()).size() != 1)
    throw NumericalError("stationary_distribution: chain is not strongly connected");

  // A pi = b with A = T^T - I, last row replaced by ones.
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd pi;
  const bool dense = opts.method == SolveMethod::kDense ||
                     (opts.method == SolveMethod::kAuto && n <= opts.dense_stationary_limit);
  if (dense) {
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [j, p] : chain.row(i)) a(j, i) += p;
    a.row(n - 1).setOnes();
    pi = a.partialPivLu().solve(b);
  } else {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != n - 1) trip.emplace_back(i, i, -1.0);
      for (const auto& [j, p] : chain.row(i))
        if (j != n - 1) trip.emplace_back(j, i, p);
    }
    for (std::size_t i = 0; i < n; ++i) trip.emplace_back(n - 1, i, 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericalError("stationary_distribution: sparse factorization failed");
    pi = lu.solve(b);
  }

  std::vector<double> out(pi.data(), pi.data() + n);
  std::vector<double> moved(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, p] : chain.row(i)) moved[j] += out[i] * p;
  double residual = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual = std::max(residual, std::abs(moved[i] - out[i]));
    sum += out[i];
  }
  if (!(residual < 1e-10) || !(std::abs(sum - 1.0) < 1e-12))
    throw NumericalError("stationary_distribution: residual " + std::to_string(residual) + " too large");
  for (auto& x : out) {
    if (x < -1e-12) throw NumericalError("stationary_distribution: negative mass");
    x = std::max(x, 0.0);
  }
  return out;
}

namespace detail {

// Gauss-Seidel on (I - Q) H = R, one column at a time.
inline void gauss_seidel(const std::vector<std::vector<std::pair<std::size_t, double>>>& q,
                         const std::vector<double>& diag, const Eigen::MatrixXd& r, Eigen::MatrixXd& h,
                         const SolverOptions& opts) {
  const std::size_t m = q.size();
  h = Eigen::MatrixXd::Zero(m, r.cols());
  for (Eigen::Index c = 0; c < r.cols(); ++c) {
    bool converged = false;
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      double change = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double acc = r(i, c);
        for (const auto& [j, p] : q[i]) acc += p * h(j, c);
        const double next = acc / diag[i];
        change = std::max(change, std::abs(next - h(i, c)));
        h(i, c) = next;
      }
      if (change < opts.iterative_tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NumericalError("absorption_probabilities: Gauss-Seidel did not converge in " +
                           std::to_string(opts.max_sweeps) + " sweeps");
  }
}

// Eliminates transient nodes in index order, rerouting each one's mass
// through its predecessors, then back-substitutes in reverse. Row masses are
// renormalized by sums, never by 1 - p, so nothing cancels.
inline void state_reduction(const std::vector<std::vector<std::pair<std::size_t, double>>>& q,
                            const Eigen::MatrixXd& r, Eigen::MatrixXd& h) {
  const std::size_t m = q.size();
  const auto k = r.cols();
  std::vector<std::map<std::size_t, double>> out(m);
  std::vector<std::map<std::size_t, char>> preds(m);
  Eigen::MatrixXd abs = r;
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& [j, p] : q[i]) {
      out[i][j] += p;
      preds[j][i] = 1;
    }
  for (std::size_t e = 0; e < m; ++e) {
    double s = abs.row(e).sum();
    for (const auto& [_, p] : out[e]) s += p;
    if (!(s > 0.0)) throw NumericalError("state reduction: node lost every exit");
    for (auto& [_, p] : out[e]) p /= s;
    abs.row(e) /= s;
    for (const auto& [j, _] : out[e]) preds[j].erase(e);
    for (const auto& [i, _] : preds[e]) {
      const double p = out[i][e];
      out[i].erase(e);
      for (const auto& [j, w] : out[e]) {
        if (j == i) continue;  // becomes a self-loop, dropped by the next renormalization
        out[i][j] += p * w;
        preds[j][i] = 1;
      }
      abs.row(i) += p * abs.row(e);
    }
    preds[e].clear();
  }
  h = Eigen::MatrixXd::Zero(m, k);
  for (std::size_t e = m; e-- > 0;) {
    h.row(e) = abs.row(e);
    for (const auto& [j, w] : out[e]) h.row(e) += w * h.row(j);
  }
}

}  // namespace detail

// Solves (I - Q) H = R for the absorbing chain, the minimal non-negative
// solution of the first-step equations.
inline AbsorptionResult absorption_probabilities(const StochasticMatrix& chain, const SolverOptions& opts = {}) {
  chain.validate();
  const std::size_t n = chain.size();
  AbsorptionResult res;
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& bucket = chain.absorbing(i) ? res.absorbing : res.transient;
    pos[i] = bucket.size();
    bucket.push_back(i);
  }
  const std::size_t m = res.transient.size();
  const std::size_t k = res.absorbing.size();
  if (m == 0) return res;

  // Every transient node must reach an absorbing one.
  {
    Adjacency rev(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [j, _] : chain.row(i)) rev[j].push_back(i);
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue(res.absorbing.begin(), res.absorbing.end());
    for (auto a : res.absorbing) seen[a] = 1;
    while (!queue.empty()) {
      auto v = queue.front();
      queue.pop_front();
      for (auto u : rev[v])
        if (!seen[u]) {
          seen[u] = 1;
          queue.push_back(u);
        }
    }
    for (auto t : res.transient)
      if (!seen[t])
        throw NumericalError("absorption_probabilities: node " + std::to_string(t) +
                             " has no path to an absorbing node");
  }

  // Rows are divided by their off-diagonal mass (1 - Q_ii, summed rather than
  // subtracted) so self-loops fold away and every row has unit diagonal.
  std::vector<std::vector<std::pair<std::size_t, double>>> q(m);
  std::vector<double> diag(m, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, k);
  for (std::size_t row = 0; row < m; ++row) {
    const std::size_t i = res.transient[row];
    double scale = 0.0;
    for (const auto& [j, p] : chain.row(i)) {
      if (j != i) scale += p;
    }
    for (const auto& [j, p] : chain.row(i)) {
      if (j == i) continue;
      if (chain.absorbing(j))
        r(row, pos[j]) += p / scale;
      else
        q[row].emplace_back(pos[j], p / scale);
    }
  }

  Eigen::MatrixXd h;
  SolveMethod method = opts.method;
  if (method == SolveMethod::kAuto)
    method = m <= opts.dense_absorption_limit ? SolveMethod::kDense : SolveMethod::kSparseDirect;
  if (method == SolveMethod::kDense) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& [j, p] : q[i]) a(i, j) -= p;
    h = a.partialPivLu().solve(r);
  } else if (method == SolveMethod::kSparseDirect) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < m; ++i) {
      trip.emplace_back(i, i, 1.0);
      for (const auto& [j, p] : q[i]) trip.emplace_back(i, j, -p);
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success) {
      h = lu.solve(r);
    } else {
      detail::gauss_seidel(q, diag, r, h, opts);
    }
  } else if (method == SolveMethod::kStateReduction) {
    detail::state_reduction(q, r, h);
  } else {
    detail::gauss_seidel(q, diag, r, h, opts);
  }

  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double lhs = h(i, c) - r(i, c);
      for (const auto& [j, p] : q[i]) lhs -= p * h(j, c);
      residual = std::max(residual, std::abs(lhs));
    }
  }
  res.residual = residual;
  if (!(residual < opts.residual_limit))
    throw NumericalError("absorption_probabilities: residual " + std::to_string(residual) + " exceeds limit");

  res.h.resize(m * k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < k; ++c) res.h[i * k + c] = std::clamp(h(i, c), 0.0, 1.0);
  return res;
}

// Instantiates the symbolic eps of `mc` at a concrete value and solves the
// resulting ordinary chain. Each node's eps edges get c * eps and its regular
// weights are scaled by (1 - sum c * eps); whatever mass is left becomes a
// self-loop. Matrix index r corresponds to mc.nodes()[r]. Solved by state
// reduction unless opts asks otherwise, since exits of order k carry eps^k.
inline AbsorptionResult oracle_hitting_at_epsilon(const EpsilonMC& mc, double eps, const SolverOptions& opts = {}) {
  if (!(eps > 0.0)) throw InputError("oracle eps must be positive");
  const auto nodes = mc.nodes();
  std::vector<std::size_t> index(mc.capacity(), 0);
  for (std::size_t r = 0; r < nodes.size(); ++r) index[nodes[r]] = r;
  StochasticMatrix chain(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const NodeId v = nodes[r];
    if (mc.absorbing(v)) {
      chain.set_absorbing(r);
      continue;
    }
    double eps_mass = 0.0;
    for (const auto& [_, c] : mc.eps_out(v)) eps_mass += c * eps;
    if (eps_mass >= 1.0)
      throw NumericalError("oracle eps " + std::to_string(eps) + " too large at node " + std::to_string(v));
    double reg_sum = 0.0;
    for (const auto& [_, w] : mc.regular_out(v)) reg_sum += w;
    const double scale = reg_sum > 0.0 ? (1.0 - eps_mass) / reg_sum : 0.0;
    double placed = 0.0;
    for (const auto& [w, p] : mc.regular_out(v)) {
      chain.add(r, index[w], p * scale);
      placed += p * scale;
    }
    for (const auto& [w, c] : mc.eps_out(v)) {
      chain.add(r, index[w], c * eps);
      placed += c * eps;
    }
    if (1.0 - placed > 0.0) chain.add(r, r, 1.0 - placed);
  }
  SolverOptions o = opts;
  if (o.method == SolveMethod::kAuto) o.method = SolveMethod::kStateReduction;
  return absorption_probabilities(chain, o);
}

}  // namespace sinklimit
