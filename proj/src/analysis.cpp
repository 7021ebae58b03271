#include "smjp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace smjp {

// ---------------------------------------------------------------------------
// Correspondence

CorrespondenceMatrix state_correspondence(const Matrix& smjp_gamma, const Matrix& agent_posterior) {
  if (smjp_gamma.rows() != agent_posterior.rows())
    throw Error(ErrorCode::GridMisalignment, "posteriors cover " + std::to_string(smjp_gamma.rows()) + " and " +
                                                 std::to_string(agent_posterior.rows()) + " time points");
  if (smjp_gamma.rows() == 0) throw Error(ErrorCode::GridMisalignment, "posteriors are empty");
  if (!smjp_gamma.allFinite() || !agent_posterior.allFinite())
    throw Error(ErrorCode::NonFinite, "posteriors contain non-finite entries");
  if ((smjp_gamma.array() < 0.0).any() || (agent_posterior.array() < 0.0).any())
    throw Error(ErrorCode::InvalidProbability, "posteriors contain negative entries");

  CorrespondenceMatrix out;
  out.joint = smjp_gamma.transpose() * agent_posterior / static_cast<double>(smjp_gamma.rows());
  const double total = out.joint.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateJoint, "correspondence has no mass");
  out.joint /= total;
  out.row_marginal = out.joint.rowwise().sum();
  out.col_marginal = out.joint.colwise().sum().transpose();
  out.conditional = Matrix::Zero(out.joint.rows(), out.joint.cols());
  out.empty_rows.assign(static_cast<std::size_t>(out.joint.rows()), false);
  for (Eigen::Index s = 0; s < out.joint.rows(); ++s) {
    if (out.row_marginal(s) > 0.0) out.conditional.row(s) = out.joint.row(s) / out.row_marginal(s);
    else out.empty_rows[static_cast<std::size_t>(s)] = true;
  }
  return out;
}

Matrix one_hot(std::span<const int> labels, int n) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] < 0 || labels[t] >= n) throw Error(ErrorCode::InvalidState, "label out of range");
    out(static_cast<Eigen::Index>(t), labels[t]) = 1.0;
  }
  return out;
}

Matrix event_posteriors(const ForwardBackwardResult& posterior, const TimeGrid& grid) {
  Matrix out(static_cast<Eigen::Index>(grid.event_positions.size()), posterior.gamma.cols());
  for (std::size_t e = 0; e < grid.event_positions.size(); ++e) {
    const auto t = static_cast<Eigen::Index>(grid.event_positions[e]);
    if (t >= posterior.gamma.rows()) throw Error(ErrorCode::GridMisalignment, "posterior shorter than grid");
    out.row(static_cast<Eigen::Index>(e)) = posterior.gamma.row(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Co-clustering

double mutual_information(const Matrix& joint) {
  const Vector pr = joint.rowwise().sum();
  const Vector pc = joint.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i)
    for (Eigen::Index j = 0; j < joint.cols(); ++j) {
      const double p = joint(i, j);
      if (p > 0.0) mi += p * std::log(p / (pr(i) * pc(j)));
    }
  return mi;
}

Matrix cluster_joint(const Matrix& joint, std::span<const int> rows, int k_rows, std::span<const int> cols, int k_cols) {
  Matrix out = Matrix::Zero(k_rows, k_cols);
  for (Eigen::Index i = 0; i < joint.rows(); ++i)
    for (Eigen::Index j = 0; j < joint.cols(); ++j)
      out(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]) += joint(i, j);
  return out;
}

namespace {

void check_joint(const Matrix& joint) {
  if (joint.size() == 0) throw Error(ErrorCode::DegenerateJoint, "joint is empty");
  if (!joint.allFinite() || (joint.array() < 0.0).any())
    throw Error(ErrorCode::DegenerateJoint, "joint must be finite and non-negative");
  if (!(joint.sum() > 0.0)) throw Error(ErrorCode::DegenerateJoint, "joint has no mass");
}

class CoclusterRun {
 public:
  CoclusterRun(const Matrix& joint, int k_rows, int k_cols)
      : p_(joint / joint.sum()), pt_(p_.transpose()), k_rows_(k_rows), k_cols_(k_cols) {
    pr_ = p_.rowwise().sum();
    pc_ = p_.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < p_.rows(); ++i)
      (pr_(i) > 0.0 ? active_rows_ : idle_rows_).push_back(static_cast<int>(i));
    for (Eigen::Index j = 0; j < p_.cols(); ++j)
      (pc_(j) > 0.0 ? active_cols_ : idle_cols_).push_back(static_cast<int>(j));
    mi_ = mutual_information(p_);
  }

  CoClustering solve(Rng rng) {
    rows_ = random_onto(active_rows_, static_cast<std::size_t>(p_.rows()), k_rows_, rng);
    cols_ = random_onto(active_cols_, static_cast<std::size_t>(p_.cols()), k_cols_, rng);
    CoClustering out;
    double loss = current_loss();
    out.loss_trace.push_back(loss);
    for (int round = 0; round < 100; ++round) {
      for (int sweep = 0; sweep < 500; ++sweep) {
        bool changed = update(p_, pr_, rows_, k_rows_, cols_, k_cols_, active_rows_);
        changed = update(pt_, pc_, cols_, k_cols_, rows_, k_rows_, active_cols_) || changed;
        const double next = current_loss();
        out.loss_trace.push_back(next);
        const bool improved = next < loss - 1e-14;
        loss = next;
        if (!changed || !improved) break;
      }
      bool moved = single_moves(p_, rows_, k_rows_, cols_, k_cols_, active_rows_);
      moved = single_moves(pt_, cols_, k_cols_, rows_, k_rows_, active_cols_) || moved;
      if (!moved) break;
      loss = current_loss();
      out.loss_trace.push_back(loss);
    }
    place_idle(idle_rows_, rows_, k_rows_);
    place_idle(idle_cols_, cols_, k_cols_);
    out.row_assignment = rows_;
    out.col_assignment = cols_;
    out.n_row_clusters = k_rows_;
    out.n_col_clusters = k_cols_;
    out.mutual_information_loss = current_loss();
    return out;
  }

 private:
  static std::vector<int> random_onto(const std::vector<int>& active, std::size_t n, int k, Rng& rng) {
    std::vector<int> assign(n, 0);
    std::vector<int> order = active;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t i = 0; i < order.size(); ++i)
      assign[static_cast<std::size_t>(order[i])] =
          i < static_cast<std::size_t>(k) ? static_cast<int>(i) : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    return assign;
  }

  // Idle (zero-mass) elements fill clusters no active element uses, one each in
  // index order; the rest join cluster 0. They carry no mass, so the loss is
  // unaffected.
  static void place_idle(const std::vector<int>& idle, std::vector<int>& assign, int k) {
    if (idle.empty()) return;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    std::vector<bool> is_idle(assign.size(), false);
    for (int i : idle) is_idle[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < assign.size(); ++i)
      if (!is_idle[i]) used[static_cast<std::size_t>(assign[i])] = true;
    int next = 0;
    for (int i : idle) {
      while (next < k && used[static_cast<std::size_t>(next)]) ++next;
      assign[static_cast<std::size_t>(i)] = next < k ? next++ : 0;
    }
  }

  double current_loss() const { return mi_ - mutual_information(cluster_joint(p_, rows_, k_rows_, cols_, k_cols_)); }

  // Reassigns every active row of `p` to the cluster minimizing
  // KL(p(y | x) || q(y | x^)), q(y | x^) = p(y^ | x^) p(y | y^). Returns whether
  // anything moved.
  static bool update(const Matrix& p, const Vector& marginal, std::vector<int>& assign, int k,
                     const std::vector<int>& other, int k_other, const std::vector<int>& active) {
    const Matrix cj = cluster_joint(p, assign, k, other, k_other);
    const Vector cluster_mass = cj.rowwise().sum();
    Vector other_col_mass = Vector::Zero(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) other_col_mass(j) = p.col(j).sum();
    Vector other_cluster_mass = cj.colwise().sum().transpose();

    // log q(y | x^) per cluster and column.
    Matrix log_q = Matrix::Constant(k, p.cols(), -std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
      if (!(cluster_mass(c) > 0.0)) continue;
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const int oc = other[static_cast<std::size_t>(j)];
        const double q = cj(c, oc) / cluster_mass(c) * (other_cluster_mass(oc) > 0.0 ? other_col_mass(j) / other_cluster_mass(oc) : 0.0);
        if (q > 0.0) log_q(c, j) = std::log(q);
      }
    }
    // cost(x, c) = -sum_y p(x, y) log q(y | c); differs from the KL by a term
    // constant in c.
    std::vector<int> next = assign;
    std::vector<double> own_cost(assign.size(), 0.0);
    for (int x : active) {
      const auto xi = static_cast<std::size_t>(x);
      auto cost = [&](int c) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
          const double pxy = p(x, j);
          if (pxy > 0.0) s -= pxy * log_q(c, j);
        }
        return s;
      };
      int best = assign[xi];
      double best_cost = cost(best);
      for (int c = 0; c < k; ++c) {
        if (c == assign[xi]) continue;
        const double v = cost(c);
        if (v < best_cost - 1e-15 * std::max(1.0, std::abs(best_cost))) {
          best = c;
          best_cost = v;
        }
      }
      next[xi] = best;
      own_cost[xi] = marginal(x) > 0.0 ? best_cost / marginal(x) : 0.0;
    }

    // Empty clusters take the worst-fitting element of a cluster with at least
    // two members; splitting a cluster never lowers I(X^;Y^).
    for (int c = 0; c < k; ++c) {
      std::vector<int> sizes(static_cast<std::size_t>(k), 0);
      for (int x : active) ++sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(x)])];
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      int donor = -1;
      for (int x : active) {
        const auto xi = static_cast<std::size_t>(x);
        if (sizes[static_cast<std::size_t>(next[xi])] < 2) continue;
        if (donor < 0 || own_cost[xi] > own_cost[static_cast<std::size_t>(donor)]) donor = x;
      }
      if (donor < 0) break;
      next[static_cast<std::size_t>(donor)] = c;
    }
    const bool changed = next != assign;
    assign = std::move(next);
    return changed;
  }

  // Moves single rows of `p` to whichever cluster most raises I(X^;Y^), one at a
  // time, until no move helps. Batch updates can stall where one move still pays.
  static bool single_moves(const Matrix& p, std::vector<int>& assign, int k, const std::vector<int>& other,
                           int k_other, const std::vector<int>& active) {
    Matrix cj = cluster_joint(p, assign, k, other, k_other);
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int x : active) ++sizes[static_cast<std::size_t>(assign[static_cast<std::size_t>(x)])];
    double current = mutual_information(cj);
    bool any = false;
    for (int pass = 0; pass < 100; ++pass) {
      bool moved = false;
      for (int x : active) {
        const auto xi = static_cast<std::size_t>(x);
        const int from = assign[xi];
        if (sizes[static_cast<std::size_t>(from)] < 2) continue;
        Vector row = Vector::Zero(k_other);
        for (Eigen::Index j = 0; j < p.cols(); ++j) row(other[static_cast<std::size_t>(j)]) += p(x, j);
        int best = from;
        double best_mi = current;
        for (int c = 0; c < k; ++c) {
          if (c == from) continue;
          Matrix trial = cj;
          trial.row(from) -= row.transpose();
          trial.row(c) += row.transpose();
          const double mi = mutual_information(trial.cwiseMax(0.0));
          if (mi > best_mi + 1e-14) {
            best = c;
            best_mi = mi;
          }
        }
        if (best == from) continue;
        cj.row(from) -= row.transpose();
        cj.row(best) += row.transpose();
        --sizes[static_cast<std::size_t>(from)];
        ++sizes[static_cast<std::size_t>(best)];
        assign[xi] = best;
        current = best_mi;
        moved = any = true;
      }
      if (!moved) break;
    }
    return any;
  }

  Matrix p_, pt_;
  Vector pr_, pc_;
  int k_rows_, k_cols_;
  std::vector<int> active_rows_, idle_rows_, active_cols_, idle_cols_;
  std::vector<int> rows_, cols_;
  double mi_ = 0.0;
};

}  // namespace

CoClustering cocluster(const Matrix& joint, int k_rows, int k_cols, std::uint64_t seed, int restarts, unsigned threads) {
  check_joint(joint);
  if (k_rows < 1 || k_rows > joint.rows() || k_cols < 1 || k_cols > joint.cols())
    throw Error(ErrorCode::InvalidConfig, "cluster counts must lie in [1, dimension]");
  if (restarts < 1) throw Error(ErrorCode::InvalidConfig, "restarts must be >= 1");
  const Rng root(seed);
  auto runs = detail::parallel_map(static_cast<std::size_t>(restarts), threads, [&](std::size_t r) {
    CoclusterRun run(joint, k_rows, k_cols);
    CoClustering c = run.solve(root.split(r));
    c.restart = static_cast<int>(r);
    return c;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].mutual_information_loss < runs[best].mutual_information_loss) best = r;
  return runs[best];
}

Matrix cocluster_lift(const Matrix& joint, const CoClustering& clustering) {
  const Matrix cj = cluster_joint(joint / joint.sum(), clustering.row_assignment, clustering.n_row_clusters,
                                  clustering.col_assignment, clustering.n_col_clusters);
  const Vector pr = cj.rowwise().sum();
  const Vector pc = cj.colwise().sum().transpose();
  Matrix lift = Matrix::Zero(cj.rows(), cj.cols());
  for (Eigen::Index r = 0; r < cj.rows(); ++r)
    for (Eigen::Index c = 0; c < cj.cols(); ++c)
      if (pr(r) > 0.0 && pc(c) > 0.0) lift(r, c) = cj(r, c) / (pr(r) * pc(c));
  return lift;
}

CoclusterSurface select_cocluster_sizes(const Matrix& joint, const std::vector<int>& row_sizes,
                                        const std::vector<int>& col_sizes, std::uint64_t seed, double slack,
                                        int restarts, unsigned threads) {
  if (row_sizes.empty() || col_sizes.empty()) throw Error(ErrorCode::InvalidConfig, "size ranges must be nonempty");
  if (!(slack >= 0.0)) throw Error(ErrorCode::InvalidConfig, "slack must be non-negative");
  CoclusterSurface out;
  out.row_sizes = row_sizes;
  out.col_sizes = col_sizes;
  const auto nr = row_sizes.size(), nc = col_sizes.size();
  const auto losses = detail::parallel_map(nr * nc, threads, [&](std::size_t idx) {
    const int kr = row_sizes[idx / nc], kc = col_sizes[idx % nc];
    return cocluster(joint, kr, kc, Rng(seed).split(static_cast<std::uint64_t>(kr)).split(static_cast<std::uint64_t>(kc))(),
                     restarts)
        .mutual_information_loss;
  });
  out.loss = Matrix(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t idx = 0; idx < losses.size(); ++idx)
    out.loss(static_cast<Eigen::Index>(idx / nc), static_cast<Eigen::Index>(idx % nc)) = losses[idx];
  const double lo = out.loss.minCoeff(), hi = out.loss.maxCoeff();
  const double cutoff = lo + slack * (hi - lo) + 1e-12;
  int best_sum = std::numeric_limits<int>::max();
  for (std::size_t a = 0; a < nr; ++a)
    for (std::size_t b = 0; b < nc; ++b) {
      if (out.loss(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > cutoff) continue;
      const int kr = row_sizes[a], kc = col_sizes[b];
      if (kr + kc < best_sum || (kr + kc == best_sum && kr < out.chosen_rows)) {
        best_sum = kr + kc;
        out.chosen_rows = kr;
        out.chosen_cols = kc;
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Joint operators and modularity

namespace {

Matrix action_operator(const SwitchingSMJP& model, int k, const OperatorOptions& options) {
  if (k < 0 || k >= model.n_actions()) throw Error(ErrorCode::InvalidAction, "action " + std::to_string(k) + " out of range");
  if (!options.use_exponential) return model.chain(k).probs();
  return matrix_exponential(model.generator(k), options.tau).probs();
}

std::vector<int> canonical_labels(const std::vector<int>& raw) {
  std::vector<int> map(raw.size() + 1, -1);
  std::vector<int> out(raw.size());
  int next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& m = map[static_cast<std::size_t>(raw[i])];
    if (m < 0) m = next++;
    out[i] = m;
  }
  return out;
}

}  // namespace

JointOperator joint_operator(const SwitchingSMJP& model, int i, int j, const OperatorOptions& options) {
  if (options.use_exponential && !(options.tau >= 0.0)) throw Error(ErrorCode::NegativeTime, "tau must be non-negative");
  JointOperator out;
  out.i = i;
  out.j = j;
  out.matrix = action_operator(model, i, options) * action_operator(model, j, options);
  return out;
}

std::vector<JointOperator> all_joint_operators(const SwitchingSMJP& model, const OperatorOptions& options,
                                               const SubgraphOptions& subgraph) {
  std::vector<JointOperator> out;
  for (int i = 0; i < model.n_actions(); ++i)
    for (int j = 0; j < model.n_actions(); ++j) {
      JointOperator op = joint_operator(model, i, j, options);
      try {
        op.subgraphs = extract_subgraphs(op.matrix, subgraph);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGraph) throw;
      }
      out.push_back(std::move(op));
    }
  return out;
}

double modularity(const Matrix& weights, std::span<const int> partition) {
  const double two_m = weights.sum();
  if (!(two_m > 0.0)) return 0.0;
  const Vector degree = weights.rowwise().sum();
  const int k = partition.empty() ? 0 : *std::max_element(partition.begin(), partition.end()) + 1;
  Vector inner = Vector::Zero(k), total = Vector::Zero(k);
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const int ci = partition[static_cast<std::size_t>(i)];
    total(ci) += degree(i);
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
      if (partition[static_cast<std::size_t>(j)] == ci) inner(ci) += weights(i, j);
  }
  return (inner.array() / two_m - (total.array() / two_m).square()).sum();
}

Matrix operator_graph(const Matrix& op, double threshold) {
  if (op.rows() != op.cols()) throw Error(ErrorCode::NotSquare, "operator must be square");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0, 1)");
  Matrix w = (op + op.transpose()) / 2.0;
  w = (w.array() < threshold).select(0.0, w);
  return w;
}

SubgraphResult extract_subgraphs(const Matrix& op, const SubgraphOptions& options) {
  if (!op.allFinite()) throw Error(ErrorCode::NonFinite, "operator has non-finite entries");
  if (!(options.persistence_frac > 0.0 && options.persistence_frac <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "persistence_frac must lie in (0, 1]");
  const Matrix w = operator_graph(op, options.threshold);
  const double two_m = w.sum();
  if (!(two_m > 0.0)) throw Error(ErrorCode::EmptyGraph, "no edges survive the threshold");
  const auto n = static_cast<int>(w.rows());
  const Vector degree = w.rowwise().sum();

  // Greedy agglomeration on community-level weights.
  std::vector<int> community(static_cast<std::size_t>(n));
  std::iota(community.begin(), community.end(), 0);
  Matrix e = w / two_m;
  Vector a = degree / two_m;
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  for (;;) {
    double best_gain = 1e-14;
    int ba = -1, bb = -1;
    for (int x = 0; x < n; ++x) {
      if (!alive[static_cast<std::size_t>(x)]) continue;
      for (int y = x + 1; y < n; ++y) {
        if (!alive[static_cast<std::size_t>(y)] || e(x, y) <= 0.0) continue;
        const double gain = 2.0 * (e(x, y) - a(x) * a(y));
        if (gain > best_gain) {
          best_gain = gain;
          ba = x;
          bb = y;
        }
      }
    }
    if (ba < 0) break;
    e(ba, ba) += e(bb, bb) + 2.0 * e(ba, bb);
    for (int z = 0; z < n; ++z) {
      if (z == ba || z == bb) continue;
      e(ba, z) += e(bb, z);
      e(z, ba) = e(ba, z);
    }
    a(ba) += a(bb);
    alive[static_cast<std::size_t>(bb)] = false;
    for (int& c : community)
      if (c == bb) c = ba;
  }

  if (options.local_moves) {
    Vector total = Vector::Zero(n);
    for (int i = 0; i < n; ++i) total(community[static_cast<std::size_t>(i)]) += degree(i);
    for (int pass = 0; pass < 100; ++pass) {
      bool moved = false;
      for (int i = 0; i < n; ++i) {
        const int from = community[static_cast<std::size_t>(i)];
        Vector link = Vector::Zero(n);  // weight from i to each community, excluding itself
        for (int j = 0; j < n; ++j)
          if (j != i) link(community[static_cast<std::size_t>(j)]) += w(i, j);
        const double ki = degree(i);
        // Gain of placing i (currently removed) into community c, up to a constant.
        auto gain = [&](int c) {
          const double tot = total(c) - (c == from ? ki : 0.0);
          return 2.0 * link(c) / two_m - 2.0 * ki * tot / (two_m * two_m);
        };
        int best = from;
        double best_gain = gain(from);
        for (int c = 0; c < n; ++c) {
          if (c == from || link(c) <= 0.0) continue;
          const double g = gain(c);
          if (g > best_gain + 1e-14) {
            best_gain = g;
            best = c;
          }
        }
        if (best != from) {
          total(from) -= ki;
          total(best) += ki;
          community[static_cast<std::size_t>(i)] = best;
          moved = true;
        }
      }
      if (!moved) break;
    }
  }

  SubgraphResult out;
  out.partition = canonical_labels(community);
  const int k = *std::max_element(out.partition.begin(), out.partition.end()) + 1;
  out.communities.assign(static_cast<std::size_t>(k), {});
  for (int i = 0; i < n; ++i) out.communities[static_cast<std::size_t>(out.partition[static_cast<std::size_t>(i)])].push_back(i);
  for (const auto& members : out.communities) {
    double internal = 0.0, row_total = 0.0;
    for (int i : members) {
      row_total += op.row(i).sum();
      for (int j : members) internal += op(i, j);
    }
    const double frac = row_total > 0.0 ? internal / row_total : 0.0;
    out.internal_fraction.push_back(frac);
    if (frac >= options.persistence_frac) out.persistent.push_back(members);
  }
  out.modularity = modularity(w, out.partition);
  const std::vector<int> one(static_cast<std::size_t>(n), 0);
  out.trivial_modularity = modularity(w, one);
  return out;
}

// ---------------------------------------------------------------------------
// Intervals

bool IntervalFilter::matches(const Event& e) const {
  return std::find(actions.begin(), actions.end(), e.action) != actions.end() ||
         std::find(observations.begin(), observations.end(), e.observation) != observations.end();
}

IntervalStats interval_stats(const EventSequence& seq, const IntervalFilter& filter, double bin_width) {
  std::vector<double> intervals;
  double last = 0.0;
  bool seen = false;
  for (const Event& e : seq.events) {
    if (!filter.matches(e)) continue;
    if (seen) intervals.push_back(e.time - last);
    last = e.time;
    seen = true;
  }
  return interval_stats(std::move(intervals), bin_width);
}

IntervalStats interval_stats(std::vector<double> intervals, double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidConfig, "bin width must be positive");
  if (intervals.size() < 10)
    throw Error(ErrorCode::TooFewEvents, "need at least 10 intervals, have " + std::to_string(intervals.size()));
  IntervalStats out;
  out.intervals = std::move(intervals);
  const double m = mean(out.intervals);
  if (!(m > 0.0)) throw Error(ErrorCode::TooFewEvents, "intervals have zero mean");
  out.rate = 1.0 / m;
  const auto n = static_cast<double>(out.intervals.size());
  out.exp_loglik = n * std::log(out.rate) - out.rate * m * n;
  out.ks = ks_test_exponential(out.intervals, out.rate);
  out.histogram.bin_width = bin_width;
  const double top = *std::max_element(out.intervals.begin(), out.intervals.end());
  out.histogram.counts.assign(static_cast<std::size_t>(std::floor(top / bin_width)) + 1, 0);
  for (double x : out.intervals) ++out.histogram.counts[static_cast<std::size_t>(std::floor(x / bin_width))];
  return out;
}

}  // namespace smjp
