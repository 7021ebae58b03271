#pragma once

// Dense numeric types shared by every module: rate generators, row-stochastic
// matrices, symbol alphabets, the matrix exponential, and log-space products.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smjp/error.hpp"

namespace smjp {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

namespace tolerance {
inline constexpr double generator_row_sum = 1e-9;
inline constexpr double stochastic_row_sum = 1e-10;
inline constexpr double clamp_negative = 1e-12;
}  // namespace tolerance

/// Continuous-time Markov chain rate matrix: non-negative off-diagonals and
/// rows summing to zero. Only constructed through validation.
template <typename Scalar>
class BasicGenerator {
 public:
  using MatrixType = DenseMatrix<Scalar>;

  static BasicGenerator zero(Eigen::Index n) { return BasicGenerator(MatrixType::Zero(n, n)); }

  template <typename Derived>
  static BasicGenerator validated(const Eigen::MatrixBase<Derived>& rates);

  const MatrixType& rates() const { return rates_; }
  Eigen::Index size() const { return rates_.rows(); }
  Scalar exit_rate(Eigen::Index s) const { return -rates_(s, s); }
  Scalar max_exit_rate() const { return size() == 0 ? Scalar(0) : (-rates_.diagonal()).maxCoeff(); }

 private:
  explicit BasicGenerator(MatrixType rates) : rates_(std::move(rates)) {}

  MatrixType rates_;
};

/// Row-stochastic matrix (transition kernels, emission matrices).
template <typename Scalar>
class BasicStochastic {
 public:
  using MatrixType = DenseMatrix<Scalar>;

  static BasicStochastic identity(Eigen::Index n) { return BasicStochastic(MatrixType::Identity(n, n)); }

  /// Entries in [-1e-12, 0) are clamped to zero; rows must sum to one within `row_tol`.
  template <typename Derived>
  static BasicStochastic validated(const Eigen::MatrixBase<Derived>& probs,
                                   Scalar row_tol = Scalar(tolerance::stochastic_row_sum));

  const MatrixType& probs() const { return probs_; }
  Eigen::Index rows() const { return probs_.rows(); }
  Eigen::Index cols() const { return probs_.cols(); }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return probs_(i, j); }

 private:
  explicit BasicStochastic(MatrixType probs) : probs_(std::move(probs)) {}

  MatrixType probs_;
};

using GeneratorMatrix = BasicGenerator<double>;
using StochasticMatrix = BasicStochastic<double>;

template <typename Scalar>
template <typename Derived>
BasicGenerator<Scalar> BasicGenerator<Scalar>::validated(const Eigen::MatrixBase<Derived>& rates) {
  if (rates.rows() != rates.cols() || rates.rows() == 0)
    throw Error(ErrorCode::NotSquare, "generator must be a non-empty square matrix");
  if (!rates.allFinite()) throw Error(ErrorCode::NonFinite, "generator has non-finite entries");
  MatrixType out = rates.template cast<Scalar>();
  const Eigen::Index n = out.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && out(i, j) < Scalar(0))
        throw Error(ErrorCode::NegativeOffDiagonal,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
    }
    const Scalar residual = out.row(i).sum();
    if (!(std::abs(residual) < Scalar(tolerance::generator_row_sum)))
      throw Error(ErrorCode::RowSumNonzero,
                  "row " + std::to_string(i) + " sums to " + std::to_string(double(residual)));
    out(i, i) = Scalar(0);
    out(i, i) = -out.row(i).sum();
  }
  return BasicGenerator(std::move(out));
}

template <typename Scalar>
template <typename Derived>
BasicStochastic<Scalar> BasicStochastic<Scalar>::validated(const Eigen::MatrixBase<Derived>& probs,
                                                           Scalar row_tol) {
  if (probs.size() == 0) throw Error(ErrorCode::NotStochastic, "empty matrix");
  if (!probs.allFinite()) throw Error(ErrorCode::NonFinite, "stochastic matrix has non-finite entries");
  MatrixType out = probs.template cast<Scalar>();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      Scalar& p = out(i, j);
      if (p < Scalar(0)) {
        if (p < -Scalar(tolerance::clamp_negative))
          throw Error(ErrorCode::NotStochastic,
                      "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
        p = Scalar(0);
      }
      if (p > Scalar(1) + row_tol)
        throw Error(ErrorCode::NotStochastic, "entry exceeds one");
    }
    const Scalar sum = out.row(i).sum();
    if (!(std::abs(sum - Scalar(1)) <= row_tol))
      throw Error(ErrorCode::NotStochastic,
                  "row " + std::to_string(i) + " sums to " + std::to_string(double(sum)));
  }
  return BasicStochastic(std::move(out));
}

template <typename Derived>
BasicGenerator<typename Derived::Scalar> validate_generator(const Eigen::MatrixBase<Derived>& rates) {
  return BasicGenerator<typename Derived::Scalar>::validated(rates);
}

/// Elementwise std::exp. Eigen's vectorized exp returns ~1e-308 instead of 0 for -inf.
template <typename Derived>
auto exp_of(const Eigen::ArrayBase<Derived>& a) {
  return a.unaryExpr([](typename Derived::Scalar x) { return std::exp(x); });
}

/// exp(M) by scaling and squaring around a truncated Taylor core.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using M = DenseMatrix<Scalar>;
  const Eigen::Index n = m.rows();
  if (m.rows() != m.cols()) throw Error(ErrorCode::NotSquare, "expm needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, "expm argument is not finite");

  const Scalar norm = n == 0 ? Scalar(0) : m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > Scalar(0.5)) squarings = static_cast<int>(std::ceil(std::log2(norm / Scalar(0.5))));
  const M scaled = m / std::ldexp(Scalar(1), squarings);

  M sum = M::Identity(n, n);
  M term = M::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int k = 1; k <= 40; ++k) {
    term = (term * scaled) / Scalar(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= eps * eps) break;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

/// Transition matrix P_t = exp(A t) of a generator.
template <typename Scalar>
BasicStochastic<Scalar> matrix_exponential(const BasicGenerator<Scalar>& generator, Scalar t) {
  if (!(t >= Scalar(0))) throw Error(ErrorCode::NegativeTime, "time must be non-negative");
  return BasicStochastic<Scalar>::validated(expm(generator.rates() * t), Scalar(1e-9));
}

/// log(exp(log_vec)^T * P), computed without leaving log space. Zero-probability
/// entries of `log_vec` are -inf.
template <typename DerivedV, typename Scalar>
DenseVector<Scalar> log_domain_dot(const Eigen::MatrixBase<DerivedV>& log_vec,
                                   const BasicStochastic<Scalar>& matrix) {
  const auto& p = matrix.probs();
  if (log_vec.size() != p.rows())
    throw Error(ErrorCode::DimensionMismatch, "vector length does not match matrix rows");
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  DenseVector<Scalar> out(p.cols());
  const Scalar shift = log_vec.size() == 0 ? neg_inf : log_vec.maxCoeff();
  if (shift == neg_inf) {
    out.setConstant(neg_inf);
    return out;
  }
  const DenseVector<Scalar> weights = exp_of(log_vec.array() - shift).matrix();
  const DenseVector<Scalar> lin = p.transpose() * weights;
  for (Eigen::Index j = 0; j < out.size(); ++j)
    out(j) = lin(j) > Scalar(0) ? shift + std::log(lin(j)) : neg_inf;
  return out;
}

/// log(sum(exp(x))) over a dense expression.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  if (x.size() == 0) return neg_inf;
  const Scalar shift = x.maxCoeff();
  if (shift == neg_inf || !std::isfinite(shift)) return shift;
  return shift + std::log(exp_of(x.array() - shift).sum());
}

enum class AlphabetKind { State, Action, Observation };

/// Ordered list of distinct symbol names with an index lookup.
class Alphabet {
 public:
  Alphabet() = default;
  Alphabet(AlphabetKind kind, std::vector<std::string> labels);

  /// Labels "<prefix>0", "<prefix>1", ...
  static Alphabet numbered(AlphabetKind kind, std::size_t n, const std::string& prefix);

  AlphabetKind kind() const { return kind_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  /// Throws UnknownSymbol.
  int index_of(const std::string& label) const;
  bool contains(const std::string& label) const { return lookup_.count(label) != 0; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.kind_ == b.kind_ && a.labels_ == b.labels_;
  }

 private:
  AlphabetKind kind_ = AlphabetKind::State;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> lookup_;
};

}  // namespace smjp
