#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the code under test beyond plain data accessors.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "smjp/analysis.hpp"
#include "smjp/core.hpp"
#include "smjp/ctmc.hpp"
#include "smjp/rng.hpp"
#include "smjp/switching_hmm.hpp"

namespace oracle {

using smjp::Matrix;
using smjp::Vector;

struct Enumerated {
  double log_likelihood = 0.0;
  Matrix gamma;            // T x N
  std::vector<Matrix> xi;  // T-1 slices
};

/// Sums over all N^T latent paths of the grid.
inline Enumerated enumerate_paths(const smjp::SwitchingSMJP& model, const smjp::TimeGrid& grid) {
  const int n = model.n_states();
  const auto t_len = static_cast<int>(grid.size());
  auto emit = [&](int t, int s) {
    const int o = grid.observations[static_cast<std::size_t>(t)];
    if (o == smjp::kNullObservation) return 1.0;
    const int slot = model.per_action_emission() ? grid.actions[static_cast<std::size_t>(t == 0 ? 0 : t - 1)] : 0;
    return model.emission_slot(slot)(s, o);
  };
  Enumerated out;
  out.gamma = Matrix::Zero(t_len, n);
  out.xi.assign(static_cast<std::size_t>(std::max(0, t_len - 1)), Matrix::Zero(n, n));
  std::vector<int> path(static_cast<std::size_t>(t_len), 0);
  double total = 0.0;
  for (;;) {
    double p = model.initial()(path[0]) * emit(0, path[0]);
    for (int t = 1; t < t_len && p > 0.0; ++t) {
      const int from = path[static_cast<std::size_t>(t - 1)], to = path[static_cast<std::size_t>(t)];
      // No jump can happen at an observation time.
      const double step = grid.tags[static_cast<std::size_t>(t)] == smjp::GridTag::Virtual
                              ? model.chain(grid.actions[static_cast<std::size_t>(t - 1)])(from, to)
                              : (from == to ? 1.0 : 0.0);
      p *= step * emit(t, to);
    }
    total += p;
    for (int t = 0; t < t_len; ++t) {
      out.gamma(t, path[static_cast<std::size_t>(t)]) += p;
      if (t + 1 < t_len) out.xi[static_cast<std::size_t>(t)](path[static_cast<std::size_t>(t)], path[static_cast<std::size_t>(t + 1)]) += p;
    }
    int pos = 0;
    while (pos < t_len && ++path[static_cast<std::size_t>(pos)] == n) path[static_cast<std::size_t>(pos++)] = 0;
    if (pos == t_len) break;
  }
  out.log_likelihood = std::log(total);
  out.gamma /= total;
  for (auto& x : out.xi) x /= total;
  return out;
}

/// Grid with given observations/actions and no virtual points.
inline smjp::TimeGrid make_grid(const std::vector<int>& observations, const std::vector<int>& actions) {
  smjp::TimeGrid g;
  for (std::size_t t = 0; t < observations.size(); ++t)
    g.push(static_cast<double>(t + 1), observations[t] == smjp::kNullObservation ? smjp::GridTag::Virtual : smjp::GridTag::Event,
           observations[t], actions[t]);
  for (std::size_t t = 0; t < g.size(); ++t)
    if (g.tags[t] == smjp::GridTag::Event) g.event_positions.push_back(t);
  return g;
}

/// Random generator with off-diagonal rates in (0, scale); some entries zeroed.
inline Matrix random_rates(int n, smjp::Rng& rng, double scale = 2.0, double zero_prob = 0.2) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() >= zero_prob) a(i, j) = scale * rng.uniform_open();
    a(i, i) = -a.row(i).sum();
  }
  return a;
}

inline Matrix random_stochastic(int rows, int cols, smjp::Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const auto row = rng.dirichlet_flat(static_cast<std::size_t>(cols));
    for (int j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

/// Poisson-weighted power series sum_n Pois(n; omega t) B^n, summed until the
/// remaining Poisson tail is below 1e-15.
inline Matrix poisson_power_sum(const Matrix& b, double omega, double t) {
  const double mu = omega * t;
  const Eigen::Index n = b.rows();
  Matrix power = Matrix::Identity(n, n);
  Matrix sum = Matrix::Zero(n, n);
  double log_w = -mu, cumulative = 0.0;
  for (int k = 0; k < 100000; ++k) {
    if (k > 0) {
      power = power * b;
      log_w += std::log(mu) - std::log(static_cast<double>(k));
    }
    const double w = std::exp(log_w);
    sum += w * power;
    cumulative += w;
    if (k > mu && 1.0 - cumulative < 1e-15) break;
  }
  return sum;
}

/// Closed form for the symmetric two-state chain with rate r.
inline Matrix two_state_exp(double r, double t) {
  const double e = std::exp(-2.0 * r * t);
  Matrix m(2, 2);
  m << (1 + e) / 2, (1 - e) / 2, (1 - e) / 2, (1 + e) / 2;
  return m;
}

/// Minimum information loss over every onto (row, column) assignment.
inline double brute_force_cocluster(const Matrix& joint, int kr, int kc) {
  const Matrix p = joint / joint.sum();
  const double mi = smjp::mutual_information(p);
  auto assignments = [](int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    for (;;) {
      std::vector<bool> used(static_cast<std::size_t>(k), false);
      for (int x : a) used[static_cast<std::size_t>(x)] = true;
      bool onto = true;
      for (bool u : used) onto = onto && u;
      if (onto) out.push_back(a);
      int pos = 0;
      while (pos < n && ++a[static_cast<std::size_t>(pos)] == k) a[static_cast<std::size_t>(pos++)] = 0;
      if (pos == n) break;
    }
    return out;
  };
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : assignments(static_cast<int>(p.rows()), kr))
    for (const auto& c : assignments(static_cast<int>(p.cols()), kc))
      best = std::min(best, mi - smjp::mutual_information(smjp::cluster_joint(p, r, kr, c, kc)));
  return best;
}

/// Whether two labelings describe the same partition.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

/// Row-stochastic operator with two planted communities: unnormalized
/// within-community weights around p_in, across around p_out.
inline Matrix planted_operator(const std::vector<int>& membership, double p_in, double p_out, smjp::Rng& rng) {
  const auto n = static_cast<Eigen::Index>(membership.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool same = membership[static_cast<std::size_t>(i)] == membership[static_cast<std::size_t>(j)];
      m(i, j) = (same ? p_in : p_out) * (0.5 + rng.uniform());
    }
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

/// Conditional entropy (nats per symbol) of the next symbol given the previous
/// `order` symbols, estimated from k-gram counts.
inline double block_entropy_rate(const std::vector<int>& symbols, int alphabet, int order) {
  std::vector<double> context(static_cast<std::size_t>(std::pow(alphabet, order)), 0.0);
  std::vector<double> joint(context.size() * static_cast<std::size_t>(alphabet), 0.0);
  double total = 0.0;
  for (std::size_t t = static_cast<std::size_t>(order); t < symbols.size(); ++t) {
    std::size_t c = 0;
    for (int k = order; k >= 1; --k) c = c * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(symbols[t - static_cast<std::size_t>(k)]);
    context[c] += 1.0;
    joint[c * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(symbols[t])] += 1.0;
    total += 1.0;
  }
  double h = 0.0;
  for (std::size_t c = 0; c < context.size(); ++c)
    for (int o = 0; o < alphabet; ++o) {
      const double n = joint[c * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(o)];
      if (n > 0.0) h -= n / total * std::log(n / context[c]);
    }
  return h;
}

}  // namespace oracle
