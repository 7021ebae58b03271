#pragma once

// Post-fit interpretation: latent-state correspondence, information-theoretic
// co-clustering, joint action operators with modularity communities, and
// inter-event interval statistics.

#include <cstdint>
#include <span>
#include <vector>

#include "smjp/core.hpp"
#include "smjp/events.hpp"
#include "smjp/stats.hpp"
#include "smjp/switching_hmm.hpp"

namespace smjp {

struct CorrespondenceMatrix {
  Matrix joint;          // |S| x |Z|, sums to one
  Vector row_marginal;   // p(s)
  Vector col_marginal;   // p(Z)
  Matrix conditional;    // P(Z | s); rows of zero mass are left at zero
  std::vector<bool> empty_rows;
};

/// joint = (1/T) sum_t gamma_t agent_t^T. Rows of both inputs are per-time
/// posteriors. Throws GridMisalignment when the row counts differ.
CorrespondenceMatrix state_correspondence(const Matrix& smjp_gamma, const Matrix& agent_posterior);

/// T x n indicator matrix of integer labels.
Matrix one_hot(std::span<const int> labels, int n);

/// Rows of a forward-backward posterior at the grid's event points.
Matrix event_posteriors(const ForwardBackwardResult& posterior, const TimeGrid& grid);

/// I(X;Y) in nats of a joint distribution.
double mutual_information(const Matrix& joint);

/// Joint distribution of (row cluster, column cluster).
Matrix cluster_joint(const Matrix& joint, std::span<const int> rows, int k_rows, std::span<const int> cols, int k_cols);

struct CoClustering {
  std::vector<int> row_assignment;
  std::vector<int> col_assignment;
  int n_row_clusters = 0;
  int n_col_clusters = 0;
  double mutual_information_loss = 0.0;  // I(S;Z) - I(S^;Z^)
  std::vector<double> loss_trace;        // per alternating sweep of the winning restart
  int restart = 0;
};

/// Alternating row/column reassignment minimizing the information loss, best of
/// `restarts` random starts. Zero-mass rows and columns do not take part; they
/// fill clusters left empty as singletons, otherwise join cluster 0.
CoClustering cocluster(const Matrix& joint, int k_rows, int k_cols, std::uint64_t seed, int restarts = 20,
                       unsigned threads = 1);

/// Per-cluster-pair lift p(r, c) / (p(r) p(c)); 1 everywhere under independence.
Matrix cocluster_lift(const Matrix& joint, const CoClustering& clustering);

struct CoclusterSurface {
  std::vector<int> row_sizes;
  std::vector<int> col_sizes;
  Matrix loss;  // row_sizes x col_sizes
  int chosen_rows = 0;
  int chosen_cols = 0;
};

/// Loss over the size grid. The choice is the smallest k_rows + k_cols whose loss
/// is within `slack` of the loss range above the minimum; ties go to fewer rows.
CoclusterSurface select_cocluster_sizes(const Matrix& joint, const std::vector<int>& row_sizes,
                                        const std::vector<int>& col_sizes, std::uint64_t seed, double slack = 0.05,
                                        int restarts = 20, unsigned threads = 1);

struct OperatorOptions {
  bool use_exponential = false;  // T_i = exp(A^i tau) instead of B^i
  double tau = 1.0;
};

struct SubgraphOptions {
  double threshold = 0.05;
  double persistence_frac = 0.7;
  bool local_moves = true;
};

struct SubgraphResult {
  std::vector<int> partition;               // community id per state, numbered by first member
  std::vector<std::vector<int>> communities;
  std::vector<std::vector<int>> persistent;
  std::vector<double> internal_fraction;    // per community
  double modularity = 0.0;
  double trivial_modularity = 0.0;          // all states in one community
};

struct JointOperator {
  int i = 0;
  int j = 0;
  Matrix matrix;  // T_i T_j
  SubgraphResult subgraphs;
};

/// T_ji = T_i T_j. Throws InvalidAction.
JointOperator joint_operator(const SwitchingSMJP& model, int i, int j, const OperatorOptions& options = {});

/// Every ordered pair (i, j), i-major.
std::vector<JointOperator> all_joint_operators(const SwitchingSMJP& model, const OperatorOptions& options = {},
                                               const SubgraphOptions& subgraph = {});

/// Newman modularity of a partition of a symmetric weighted graph.
double modularity(const Matrix& weights, std::span<const int> partition);

/// Symmetrized, thresholded weighted graph of an operator.
Matrix operator_graph(const Matrix& op, double threshold);

/// Greedy agglomerative modularity maximization, then single-node moves.
/// Throws EmptyGraph when thresholding removes every edge.
SubgraphResult extract_subgraphs(const Matrix& op, const SubgraphOptions& options = {});

struct IntervalFilter {
  std::vector<int> actions;       // events whose action is listed match
  std::vector<int> observations;  // events whose observation is listed match
  bool matches(const Event& e) const;
};

struct Histogram {
  double bin_width = 1.0;
  std::vector<std::size_t> counts;  // bin b covers [b w, (b+1) w)
};

struct IntervalStats {
  std::vector<double> intervals;
  double rate = 0.0;            // exponential MLE
  double exp_loglik = 0.0;
  KsResult ks;
  Histogram histogram;
};

/// Intervals between consecutive matching events. Throws TooFewEvents below 10.
IntervalStats interval_stats(const EventSequence& seq, const IntervalFilter& filter, double bin_width = 1.0);

IntervalStats interval_stats(std::vector<double> intervals, double bin_width = 1.0);

}  // namespace smjp
