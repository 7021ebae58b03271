#include "doctest.h"
#include "oracles.hpp"
#include "smjp/analysis.hpp"
#include "smjp/foraging.hpp"

using namespace smjp;

namespace {

// Block-diagonal joint whose blocks are rank one, so the block clustering is lossless.
Matrix block_joint(const std::vector<int>& rows, const std::vector<int>& cols, Rng& rng) {
  Vector r(static_cast<Eigen::Index>(rows.size())), c(static_cast<Eigen::Index>(cols.size()));
  for (auto& x : r) x = 0.5 + rng.uniform();
  for (auto& x : c) x = 0.5 + rng.uniform();
  Matrix m = Matrix::Zero(r.size(), c.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (rows[i] == cols[j])
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r(static_cast<Eigen::Index>(i)) * c(static_cast<Eigen::Index>(j));
  return m / m.sum();
}

SwitchingSMJP chain_model(const std::vector<Matrix>& chains) {
  const auto n = static_cast<std::size_t>(chains.front().rows());
  std::vector<StochasticMatrix> b;
  for (const auto& c : chains) b.push_back(StochasticMatrix::validated(c));
  return SwitchingSMJP::from_chains(Alphabet::numbered(AlphabetKind::State, n, "s"),
                                    Alphabet::numbered(AlphabetKind::Action, chains.size(), "a"),
                                    Alphabet::numbered(AlphabetKind::Observation, 1, "o"), b,
                                    {StochasticMatrix::validated(Matrix::Ones(static_cast<Eigen::Index>(n), 1))},
                                    Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)), 1.0);
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("correspondence of identical one-hot streams is diagonal") {
    const std::vector<int> labels{0, 1, 2, 2, 1, 0, 0, 2};
    const Matrix h = one_hot(labels, 3);
    const CorrespondenceMatrix c = state_correspondence(h, h);
    CHECK((c.conditional - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(c.joint(0, 0) == doctest::Approx(3.0 / 8.0));
    CHECK(c.joint(0, 1) == 0.0);
    CHECK(c.joint.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("single time point gives one outer product") {
    Matrix g(1, 2), a(1, 3);
    g << 0.25, 0.75;
    a << 0.5, 0.3, 0.2;
    const CorrespondenceMatrix c = state_correspondence(g, a);
    CHECK(c.joint == g.transpose() * a);
    CHECK_THROWS_WITH_AS(state_correspondence(Matrix::Constant(2, 2, 0.5), a), doctest::Contains("GridMisalignment"), Error);
  }

  TEST_CASE("independent streams give a product joint and matching marginals") {
    Rng rng(1);
    const int t_len = 20000;
    std::vector<int> s, z;
    for (int t = 0; t < t_len; ++t) {
      s.push_back(static_cast<int>(rng.uniform_index(3)));
      z.push_back(static_cast<int>(rng.uniform_index(4)));
    }
    const CorrespondenceMatrix c = state_correspondence(one_hot(s, 3), one_hot(z, 4));
    const double p = 1.0 / 12.0, sd = std::sqrt(p * (1 - p) / t_len);
    CHECK((c.joint.array() - p).abs().maxCoeff() < 3.5 * sd);

    // Marginals equal the time-averaged posteriors.
    Matrix g(50, 3), a(50, 4);
    for (int t = 0; t < 50; ++t) {
      g.row(t) = oracle::random_stochastic(1, 3, rng);
      a.row(t) = oracle::random_stochastic(1, 4, rng);
    }
    const CorrespondenceMatrix d = state_correspondence(g, a);
    CHECK((d.row_marginal - g.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((d.col_marginal - a.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((d.conditional.rowwise().sum()).array() - 1.0).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("zero-mass rows are flagged") {
    const std::vector<int> s{0, 0, 2}, z{1, 0, 1};
    const CorrespondenceMatrix c = state_correspondence(one_hot(s, 3), one_hot(z, 2));
    CHECK(c.empty_rows == std::vector<bool>{false, true, false});
    CHECK(c.conditional.row(1).sum() == 0.0);
  }

  TEST_CASE("mutual information") {
    CHECK(mutual_information(Matrix::Constant(3, 3, 1.0 / 9.0)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(mutual_information(Matrix::Identity(4, 4) / 4.0) == doctest::Approx(std::log(4.0)));
  }

  TEST_CASE("block-diagonal joints are recovered exactly") {
    Rng rng(2);
    const std::vector<int> rows{0, 1, 0, 2, 1, 2}, cols{2, 0, 1, 0, 2};
    const Matrix joint = block_joint(rows, cols, rng);
    const CoClustering cc = cocluster(joint, 3, 3, 7);
    CHECK(oracle::same_partition(cc.row_assignment, rows));
    CHECK(oracle::same_partition(cc.col_assignment, cols));
    CHECK(std::abs(cc.mutual_information_loss) < 1e-10);
    const Matrix lift = cocluster_lift(joint, cc);
    const Matrix cj = cluster_joint(joint, cc.row_assignment, 3, cc.col_assignment, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double expected = cj(a, b) / (cj.row(a).sum() * cj.col(b).sum());
        CHECK(lift(a, b) == doctest::Approx(expected));
        if (cj(a, b) > 0.0) CHECK(lift(a, b) > 1.0);
      }
  }

  TEST_CASE("identity clustering loses nothing") {
    Rng rng(3);
    const Matrix joint = oracle::random_stochastic(4, 5, rng) / 4.0;
    const CoClustering cc = cocluster(joint, 4, 5, 1);
    CHECK(std::abs(cc.mutual_information_loss) < 1e-12);
  }

  TEST_CASE("co-clustering matches exhaustive search and never increases its loss") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const int rows = 4 + trial % 2, cols = 4 + (trial / 2) % 2;
      const Matrix joint = oracle::random_stochastic(rows, cols, rng) / rows;
      const CoClustering cc = cocluster(joint, 2, 2, static_cast<std::uint64_t>(trial));
      CHECK(cc.mutual_information_loss == doctest::Approx(oracle::brute_force_cocluster(joint, 2, 2)).epsilon(1e-9));
      for (std::size_t i = 1; i < cc.loss_trace.size(); ++i) CHECK(cc.loss_trace[i] <= cc.loss_trace[i - 1] + 1e-14);
      const Matrix cj = cluster_joint(joint, cc.row_assignment, 2, cc.col_assignment, 2);
      CHECK(cc.mutual_information_loss == doctest::Approx(mutual_information(joint) - mutual_information(cj)).epsilon(1e-12));
    }
  }

  TEST_CASE("co-clustering is deterministic under a seed and handles empty rows") {
    Rng rng(5);
    Matrix joint = oracle::random_stochastic(6, 5, rng);
    joint.row(2).setZero();
    joint /= joint.sum();
    const CoClustering a = cocluster(joint, 3, 2, 11), b = cocluster(joint, 3, 2, 11);
    CHECK(a.row_assignment == b.row_assignment);
    CHECK(a.col_assignment == b.col_assignment);
    CHECK(a.mutual_information_loss == b.mutual_information_loss);
    CHECK(a.row_assignment[2] >= 0);
    CHECK_THROWS_AS(cocluster(Matrix::Zero(3, 3), 2, 2, 1), Error);
    CHECK_THROWS_AS(cocluster(joint, 7, 2, 1), Error);
  }

  TEST_CASE("cluster-size surface") {
    Rng rng(6);
    const Matrix identity = Matrix::Identity(5, 5) / 5.0;
    const CoclusterSurface s = select_cocluster_sizes(identity, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 3);
    CHECK(s.chosen_rows == 5);
    CHECK(s.chosen_cols == 5);

    const Matrix blocks = block_joint({0, 0, 1, 1, 2, 2}, {0, 1, 2, 0, 1, 2}, rng);
    const CoclusterSurface b = select_cocluster_sizes(blocks, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 3);
    CHECK(b.chosen_rows == 3);
    CHECK(b.chosen_cols == 3);

    const Matrix random = oracle::random_stochastic(5, 6, rng) / 5.0;
    const CoclusterSurface r = select_cocluster_sizes(random, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5, 6}, 3);
    for (Eigen::Index i = 0; i < r.loss.rows(); ++i)
      for (Eigen::Index j = 0; j < r.loss.cols(); ++j) {
        if (i > 0) CHECK(r.loss(i, j) <= r.loss(i - 1, j) + 1e-12);
        if (j > 0) CHECK(r.loss(i, j) <= r.loss(i, j - 1) + 1e-12);
      }
  }

  TEST_CASE("joint operators") {
    Matrix perm_a(3, 3), perm_b(3, 3);
    perm_a << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    perm_b << 1, 0, 0, 0, 0, 1, 0, 1, 0;
    const SwitchingSMJP perms = chain_model({Matrix::Identity(3, 3), perm_a, perm_b});
    CHECK(joint_operator(perms, 0, 0).matrix == Matrix::Identity(3, 3));
    CHECK(joint_operator(perms, 1, 2).matrix == perm_a * perm_b);
    CHECK(joint_operator(perms, 2, 1).matrix == perm_b * perm_a);
    CHECK_THROWS_WITH_AS(joint_operator(perms, 0, 3), doctest::Contains("InvalidAction"), Error);

    Rng rng(7);
    const SwitchingSMJP random = chain_model({oracle::random_stochastic(6, 6, rng), oracle::random_stochastic(6, 6, rng)});
    const auto all = all_joint_operators(random);
    CHECK(all.size() == 4);
    for (const auto& op : all) {
      CHECK((op.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK((op.matrix - random.chain(op.i).probs() * random.chain(op.j).probs()).cwiseAbs().maxCoeff() < 1e-15);
    }
    CHECK((all[1].i == 0 && all[1].j == 1));

    OperatorOptions ex;
    ex.use_exponential = true;
    ex.tau = 0.0;
    CHECK((joint_operator(random, 0, 1, ex).matrix - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("subgraphs of block and identity operators") {
    Matrix block = Matrix::Zero(6, 6);
    block.topLeftCorner(3, 3).setConstant(1.0 / 3.0);
    block.bottomRightCorner(3, 3).setConstant(1.0 / 3.0);
    const SubgraphResult b = extract_subgraphs(block);
    CHECK(b.partition == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(b.persistent.size() == 2);
    CHECK(b.modularity == doctest::Approx(0.5));
    CHECK(b.modularity >= b.trivial_modularity);

    const SubgraphResult id = extract_subgraphs(Matrix::Identity(4, 4));
    CHECK(id.communities.size() == 4);
    CHECK(id.persistent.size() == 4);

    CHECK_THROWS_WITH_AS(extract_subgraphs(Matrix::Constant(4, 4, 0.25), {0.5, 0.7, true}), doctest::Contains("EmptyGraph"),
                         Error);
  }

  TEST_CASE("planted communities are recovered") {
    Rng rng(8);
    int hits = 0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> membership;
      for (int i = 0; i < 10; ++i) membership.push_back(rng.uniform() < 0.5 ? 0 : 1);
      membership[0] = 0;
      membership[1] = 1;
      const Matrix op = oracle::planted_operator(membership, 0.4, 0.02, rng);
      const SubgraphResult r = extract_subgraphs(op);
      hits += oracle::same_partition(r.partition, membership);
      CHECK(r.modularity >= r.trivial_modularity);
      CHECK(r.modularity == doctest::Approx(modularity(operator_graph(op, 0.05), r.partition)));
    }
    CHECK(hits >= 19);
  }

  TEST_CASE("modularity") {
    Matrix w = Matrix::Zero(4, 4);
    w(0, 1) = w(1, 0) = w(2, 3) = w(3, 2) = 1.0;
    const std::vector<int> good{0, 0, 1, 1}, one{0, 0, 0, 0};
    CHECK(modularity(w, good) == doctest::Approx(0.5));
    CHECK(modularity(w, one) == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("interval statistics") {
    Rng rng(9);
    std::vector<double> exp_sample;
    for (int i = 0; i < 10000; ++i) exp_sample.push_back(rng.exponential(2.0));
    const IntervalStats e = interval_stats(exp_sample, 0.5);
    CHECK(e.rate == doctest::Approx(2.0).epsilon(0.05));
    CHECK(e.ks.p_value > 0.05);
    double ll = 0.0;
    for (double x : exp_sample) ll += std::log(e.rate) - e.rate * x;
    CHECK(e.exp_loglik == doctest::Approx(ll).epsilon(1e-12));
    std::size_t binned = 0;
    for (auto c : e.histogram.counts) binned += c;
    CHECK(binned == exp_sample.size());

    const IntervalStats c = interval_stats(std::vector<double>(50, 1.0));
    CHECK(c.ks.p_value < 1e-6);
    CHECK(c.histogram.counts.size() == 2);
    CHECK(c.histogram.counts[1] == 50);

    CHECK_THROWS_WITH_AS(interval_stats(std::vector<double>(9, 1.0)), doctest::Contains("TooFewEvents"), Error);

    EventSequence seq;
    seq.observations = Alphabet::numbered(AlphabetKind::Observation, 2, "o");
    seq.actions = Alphabet::numbered(AlphabetKind::Action, 2, "a");
    for (int i = 0; i < 33; ++i) seq.events.push_back({static_cast<double>(i), 0, i % 3 == 0 ? 1 : 0});
    IntervalFilter f;
    f.actions = {1};
    const IntervalStats s = interval_stats(seq, f);
    CHECK(s.intervals.size() == 10);
    for (double x : s.intervals) CHECK(x == 3.0);
  }
}
