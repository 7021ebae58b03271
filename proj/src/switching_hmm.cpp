#include "smjp/switching_hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "parallel.hpp"

namespace smjp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector log_of(const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(i) > 0.0 ? std::log(v(i)) : kNegInf;
  return out;
}

void check_grid(const SwitchingSMJP& model, const TimeGrid& grid) {
  const std::size_t t_len = grid.size();
  if (grid.observations.size() != t_len || grid.actions.size() != t_len || grid.tags.size() != t_len)
    throw Error(ErrorCode::InconsistentShapes, "grid label arrays differ in length");
  for (std::size_t t = 0; t < t_len; ++t) {
    const int a = grid.actions[t];
    const int o = grid.observations[t];
    if (a < 0 || a >= model.n_actions())
      throw Error(ErrorCode::InvalidAction, "grid step " + std::to_string(t) + " has action outside the model");
    if (o != kNullObservation && (o < 0 || o >= model.n_observations()))
      throw Error(ErrorCode::UnknownSymbol, "grid step " + std::to_string(t) + " has observation outside the model");
  }
}

/// Only virtual points are jump opportunities; stepping onto an event carries the state over.
bool jumps_into(const TimeGrid& grid, std::size_t t) { return grid.tags[t] == GridTag::Virtual; }

/// Likelihood of the observation at step t under each state (1 at virtual points).
void emission_factor(const SwitchingSMJP& model, const TimeGrid& grid, std::size_t t, Vector& out) {
  const int o = grid.observations[t];
  if (o == kNullObservation) {
    out.setOnes(model.n_states());
    return;
  }
  out = model.emission_slot(model.emission_slot_at(grid, t)).probs().col(o);
}

[[noreturn]] void zero_probability(std::size_t t) {
  throw Error(ErrorCode::ZeroProbabilityObservation,
              "observation at grid step " + std::to_string(t) + " has probability zero under every reachable state");
}

/// Scaled forward pass; alpha_hat is stored column-per-step (N x T).
double scaled_forward(const SwitchingSMJP& model, const TimeGrid& grid, Matrix* alpha_hat, Vector* log_c) {
  const std::size_t t_len = grid.size();
  const Eigen::Index n = model.n_states();
  Vector a(n), e(n), next(n);
  double ll = 0.0;
  emission_factor(model, grid, 0, e);
  a = model.initial().cwiseProduct(e);
  for (std::size_t t = 0;; ++t) {
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c)) zero_probability(t);
    a /= c;
    ll += std::log(c);
    if (alpha_hat) alpha_hat->col(static_cast<Eigen::Index>(t)) = a;
    if (log_c) (*log_c)(static_cast<Eigen::Index>(t)) = std::log(c);
    if (t + 1 == t_len) break;
    emission_factor(model, grid, t + 1, e);
    if (jumps_into(grid, t + 1)) {
      next.noalias() = model.chain(grid.actions[t]).probs().transpose() * a;
      a = next.cwiseProduct(e);
    } else {
      a = a.cwiseProduct(e);
    }
  }
  return ll;
}

}  // namespace

// ---------------------------------------------------------------------------
// SwitchingSMJP

SwitchingSMJP::SwitchingSMJP(Alphabet states, Alphabet actions, Alphabet observations,
                             std::vector<GeneratorMatrix> generators, std::vector<StochasticMatrix> emissions,
                             Vector initial, double omega, std::vector<Mask> masks)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      observations_(std::move(observations)),
      generators_(std::move(generators)),
      emissions_(std::move(emissions)),
      initial_(std::move(initial)),
      omega_(omega),
      masks_(std::move(masks)) {
  const Eigen::Index n = n_states();
  if (masks_.empty()) masks_.assign(actions_.size(), Mask::Constant(n, n, true));
  check_shapes();
  for (std::size_t k = 0; k < generators_.size(); ++k) {
    const Matrix& a = generators_[k].rates();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j && !masks_[k](i, j) && a(i, j) != 0.0)
          throw Error(ErrorCode::StructureViolation, "generator " + std::to_string(k) + " has rate on a masked entry");
  }
  chains_.reserve(generators_.size());
  for (const auto& g : generators_) chains_.push_back(uniformize(g, omega_));
}

SwitchingSMJP SwitchingSMJP::from_chains(Alphabet states, Alphabet actions, Alphabet observations,
                                         const std::vector<StochasticMatrix>& chains,
                                         std::vector<StochasticMatrix> emissions, Vector initial, double omega,
                                         std::vector<Mask> masks) {
  std::vector<GeneratorMatrix> generators;
  generators.reserve(chains.size());
  for (std::size_t k = 0; k < chains.size(); ++k)
    generators.push_back(update_generator(chains[k], omega, masks.empty() ? nullptr : &masks.at(k)));
  return SwitchingSMJP(std::move(states), std::move(actions), std::move(observations), std::move(generators),
                       std::move(emissions), std::move(initial), omega, std::move(masks));
}

void SwitchingSMJP::check_shapes() const {
  const auto n = static_cast<Eigen::Index>(states_.size());
  const std::size_t k = actions_.size();
  if (generators_.size() != k) throw Error(ErrorCode::InconsistentShapes, "need one generator per action");
  if (masks_.size() != k) throw Error(ErrorCode::InconsistentShapes, "need one mask per action");
  if (emissions_.size() != 1 && emissions_.size() != k)
    throw Error(ErrorCode::InconsistentShapes, "need one shared emission matrix or one per action");
  for (const auto& g : generators_)
    if (g.size() != n) throw Error(ErrorCode::InconsistentShapes, "generator size differs from state count");
  for (const auto& m : masks_)
    if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::InconsistentShapes, "mask size differs from state count");
  for (const auto& l : emissions_)
    if (l.rows() != n || l.cols() != static_cast<Eigen::Index>(observations_.size()))
      throw Error(ErrorCode::InconsistentShapes, "emission matrix must be states x observations");
  if (initial_.size() != n) throw Error(ErrorCode::InconsistentShapes, "initial distribution size differs");
  if ((initial_.array() < 0.0).any() || std::abs(initial_.sum() - 1.0) > 1e-10)
    throw Error(ErrorCode::NotStochastic, "initial distribution must be a probability vector");
  if (!(omega_ > 0.0) || !std::isfinite(omega_)) throw Error(ErrorCode::OmegaTooSmall, "omega must be positive");
}

int SwitchingSMJP::emission_slot_at(const TimeGrid& grid, std::size_t t) const {
  if (!per_action_emission()) return 0;
  return grid.actions[t == 0 ? 0 : t - 1];
}

void SwitchingSMJP::set_chain(int action, const StochasticMatrix& chain) {
  const auto k = static_cast<std::size_t>(action);
  GeneratorMatrix g = update_generator(chain, omega_, &masks_.at(k));
  chains_.at(k) = uniformize(g, omega_);
  generators_[k] = std::move(g);
}

void SwitchingSMJP::set_emission(int slot, StochasticMatrix emission) {
  if (emission.rows() != n_states() || emission.cols() != n_observations())
    throw Error(ErrorCode::InconsistentShapes, "emission matrix must be states x observations");
  emissions_.at(static_cast<std::size_t>(slot)) = std::move(emission);
}

void SwitchingSMJP::set_initial(const Vector& initial) {
  if (initial.size() != n_states()) throw Error(ErrorCode::InconsistentShapes, "initial distribution size differs");
  if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-10)
    throw Error(ErrorCode::NotStochastic, "initial distribution must be a probability vector");
  initial_ = initial;
}

void SwitchingSMJP::set_omega(double omega) {
  std::vector<StochasticMatrix> chains;
  chains.reserve(generators_.size());
  for (const auto& g : generators_) chains.push_back(uniformize(g, omega));
  chains_ = std::move(chains);
  omega_ = omega;
}

void SwitchingSMJP::rescale_omega(double floor) { set_omega(std::max(2.0 * max_exit_rate(), floor)); }

double SwitchingSMJP::max_exit_rate() const {
  double rate = 0.0;
  for (const auto& g : generators_) rate = std::max(rate, g.max_exit_rate());
  return rate;
}

SwitchingSMJP random_model(const Alphabet& states, const Alphabet& actions, const Alphabet& observations, double omega,
                           Rng& rng, bool per_action_emission) {
  const auto n = static_cast<Eigen::Index>(states.size());
  auto dirichlet_rows = [&rng](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto row = rng.dirichlet_flat(static_cast<std::size_t>(cols));
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return StochasticMatrix::validated(m);
  };
  std::vector<StochasticMatrix> chains;
  for (std::size_t k = 0; k < actions.size(); ++k) chains.push_back(dirichlet_rows(n, n));
  std::vector<StochasticMatrix> emissions;
  const std::size_t slots = per_action_emission ? actions.size() : 1;
  for (std::size_t k = 0; k < slots; ++k)
    emissions.push_back(dirichlet_rows(n, static_cast<Eigen::Index>(observations.size())));
  return SwitchingSMJP::from_chains(states, actions, observations, chains, std::move(emissions),
                                    Vector::Constant(n, 1.0 / static_cast<double>(n)), omega);
}

// ---------------------------------------------------------------------------
// Recursions

ForwardPass forward(const SwitchingSMJP& model, const TimeGrid& grid) {
  check_grid(model, grid);
  ForwardPass out;
  const auto t_len = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index n = model.n_states();
  out.log_alpha.resize(t_len, n);
  out.log_scaling.resize(t_len);
  if (t_len == 0) return out;
  Matrix alpha_hat(n, t_len);
  out.log_likelihood = scaled_forward(model, grid, &alpha_hat, &out.log_scaling);
  double cumulative = 0.0;
  for (Eigen::Index t = 0; t < t_len; ++t) {
    cumulative += out.log_scaling(t);
    out.log_alpha.row(t) = (log_of(alpha_hat.col(t)).array() + cumulative).transpose();
  }
  return out;
}

ForwardPass forward_log_domain(const SwitchingSMJP& model, const TimeGrid& grid) {
  check_grid(model, grid);
  ForwardPass out;
  const auto t_len = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index n = model.n_states();
  out.log_alpha.resize(t_len, n);
  if (t_len == 0) return out;
  Vector e(n);
  emission_factor(model, grid, 0, e);
  Vector la = log_of(model.initial()) + log_of(e);
  out.log_alpha.row(0) = la.transpose();
  for (Eigen::Index t = 0; t + 1 < t_len; ++t) {
    emission_factor(model, grid, static_cast<std::size_t>(t + 1), e);
    if (jumps_into(grid, static_cast<std::size_t>(t + 1)))
      la = log_domain_dot(la, model.chain(grid.actions[static_cast<std::size_t>(t)]));
    la += log_of(e);
    out.log_alpha.row(t + 1) = la.transpose();
  }
  out.log_likelihood = log_sum_exp(la);
  if (!std::isfinite(out.log_likelihood)) zero_probability(static_cast<std::size_t>(t_len - 1));
  return out;
}

Matrix backward(const SwitchingSMJP& model, const TimeGrid& grid) {
  check_grid(model, grid);
  const auto t_len = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index n = model.n_states();
  Matrix log_beta(t_len, n);
  if (t_len == 0) return log_beta;
  Vector b = Vector::Ones(n), e(n), w(n);
  log_beta.row(t_len - 1).setZero();
  double cumulative = 0.0;
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    emission_factor(model, grid, static_cast<std::size_t>(t + 1), e);
    w = e.cwiseProduct(b);
    if (jumps_into(grid, static_cast<std::size_t>(t + 1)))
      b.noalias() = model.chain(grid.actions[static_cast<std::size_t>(t)]).probs() * w;
    else
      b = w;
    const double d = b.maxCoeff();
    if (!(d > 0.0)) zero_probability(static_cast<std::size_t>(t + 1));
    b /= d;
    cumulative += std::log(d);
    log_beta.row(t) = (log_of(b).array() + cumulative).transpose();
  }
  return log_beta;
}

ForwardBackwardResult posterior_xi(const SwitchingSMJP& model, const Matrix& log_alpha, const Matrix& log_beta,
                                   const TimeGrid& grid) {
  check_grid(model, grid);
  const auto t_len = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index n = model.n_states();
  if (log_alpha.rows() != t_len || log_beta.rows() != t_len || log_alpha.cols() != n || log_beta.cols() != n)
    throw Error(ErrorCode::InconsistentShapes, "alpha/beta do not match the grid and model");

  ForwardBackwardResult out;
  out.log_alpha = log_alpha;
  out.log_beta = log_beta;
  out.gamma.resize(t_len, n);
  if (t_len == 0) return out;
  out.log_likelihood = log_sum_exp(log_alpha.row(t_len - 1));
  out.xi.reserve(static_cast<std::size_t>(t_len - 1));

  Vector e(n), va(n), vb(n);
  for (Eigen::Index t = 0; t + 1 < t_len; ++t) {
    emission_factor(model, grid, static_cast<std::size_t>(t + 1), e);
    const double ma = log_alpha.row(t).maxCoeff();
    const double mb = log_beta.row(t + 1).maxCoeff();
    va = exp_of(log_alpha.row(t).array() - ma).transpose();
    vb = exp_of(log_beta.row(t + 1).array() - mb).transpose() * e.array();
    Matrix xi = jumps_into(grid, static_cast<std::size_t>(t + 1))
                    ? Matrix(va.asDiagonal() * model.chain(grid.actions[static_cast<std::size_t>(t)]).probs() * vb.asDiagonal())
                    : Matrix(va.cwiseProduct(vb).asDiagonal());
    const double total = xi.sum();
    if (!(total > 0.0)) zero_probability(static_cast<std::size_t>(t + 1));
    xi /= total;
    out.gamma.row(t) = xi.rowwise().sum().transpose();
    out.xi.push_back(std::move(xi));
  }
  const Vector last = (log_alpha.row(t_len - 1) + log_beta.row(t_len - 1)).transpose();
  const double norm = log_sum_exp(last);
  out.gamma.row(t_len - 1) = exp_of(last.array() - norm).transpose();
  return out;
}

ForwardBackwardResult forward_backward(const SwitchingSMJP& model, const TimeGrid& grid) {
  ForwardPass fwd = forward(model, grid);
  ForwardBackwardResult out = posterior_xi(model, fwd.log_alpha, backward(model, grid), grid);
  out.log_likelihood = fwd.log_likelihood;
  out.per_step_scaling = std::move(fwd.log_scaling);
  return out;
}

// ---------------------------------------------------------------------------
// Sufficient statistics and M-step

SufficientStatistics::SufficientStatistics(const SwitchingSMJP& model)
    : transitions(static_cast<std::size_t>(model.n_actions()), Matrix::Zero(model.n_states(), model.n_states())),
      emissions(static_cast<std::size_t>(model.n_emission_slots()),
                Matrix::Zero(model.n_states(), model.n_observations())),
      initial(Vector::Zero(model.n_states())),
      steps_per_action(static_cast<std::size_t>(model.n_actions()), 0) {}

SufficientStatistics& SufficientStatistics::operator+=(const SufficientStatistics& other) {
  if (transitions.size() != other.transitions.size() || emissions.size() != other.emissions.size())
    throw Error(ErrorCode::InconsistentShapes, "cannot merge statistics of different models");
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    transitions[k] += other.transitions[k];
    steps_per_action[k] += other.steps_per_action[k];
  }
  for (std::size_t k = 0; k < emissions.size(); ++k) emissions[k] += other.emissions[k];
  initial += other.initial;
  log_likelihood += other.log_likelihood;
  n_grids += other.n_grids;
  return *this;
}

void accumulate_statistics(const SwitchingSMJP& model, const TimeGrid& grid, SufficientStatistics& stats) {
  check_grid(model, grid);
  const std::size_t t_len = grid.size();
  if (t_len == 0) return;
  const Eigen::Index n = model.n_states();
  Matrix alpha_hat(n, static_cast<Eigen::Index>(t_len));
  Vector log_c(static_cast<Eigen::Index>(t_len));
  stats.log_likelihood += scaled_forward(model, grid, &alpha_hat, &log_c);
  stats.n_grids += 1;

  Vector beta_hat = Vector::Ones(n), e(n), w(n), prev(n);
  auto add_emission = [&](std::size_t t, const Vector& gamma) {
    const int o = grid.observations[t];
    if (o != kNullObservation)
      stats.emissions[static_cast<std::size_t>(model.emission_slot_at(grid, t))].col(o) += gamma;
  };
  add_emission(t_len - 1, alpha_hat.col(static_cast<Eigen::Index>(t_len - 1)));
  Vector gamma(n);
  for (std::size_t t = t_len - 1; t-- > 0;) {
    const auto tc = static_cast<Eigen::Index>(t);
    emission_factor(model, grid, t + 1, e);
    w = e.cwiseProduct(beta_hat) / std::exp(log_c(tc + 1));
    if (jumps_into(grid, t + 1)) {
      const auto k = static_cast<std::size_t>(grid.actions[t]);
      const Matrix& b = model.chain(grid.actions[t]).probs();
      Matrix& acc = stats.transitions[k];
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) acc(i, j) += alpha_hat(i, tc) * b(i, j) * w(j);
      stats.steps_per_action[k] += 1;
      prev.noalias() = b * w;
      beta_hat = prev;
    } else {
      beta_hat = w;
    }
    gamma = alpha_hat.col(tc).cwiseProduct(beta_hat);
    add_emission(t, gamma);
    if (t == 0) stats.initial += gamma;
  }
  if (t_len == 1) stats.initial += alpha_hat.col(0);
}

SufficientStatistics statistics_from_posterior(const SwitchingSMJP& model, const ForwardBackwardResult& posterior,
                                               const TimeGrid& grid) {
  check_grid(model, grid);
  SufficientStatistics stats(model);
  const std::size_t t_len = grid.size();
  if (t_len == 0) return stats;
  if (posterior.gamma.rows() != static_cast<Eigen::Index>(t_len) || posterior.xi.size() + 1 != t_len)
    throw Error(ErrorCode::InconsistentShapes, "posterior does not match the grid");
  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    if (!jumps_into(grid, t + 1)) continue;
    const auto k = static_cast<std::size_t>(grid.actions[t]);
    stats.transitions[k] += posterior.xi[t];
    stats.steps_per_action[k] += 1;
  }
  for (std::size_t t = 0; t < t_len; ++t) {
    const int o = grid.observations[t];
    if (o != kNullObservation)
      stats.emissions[static_cast<std::size_t>(model.emission_slot_at(grid, t))].col(o) +=
          posterior.gamma.row(static_cast<Eigen::Index>(t)).transpose();
  }
  stats.initial = posterior.gamma.row(0).transpose();
  stats.log_likelihood = posterior.log_likelihood;
  stats.n_grids = 1;
  return stats;
}

MStepResult m_step(const SwitchingSMJP& model, const SufficientStatistics& stats, const MStepOptions& options) {
  if (stats.n_grids == 0) throw Error(ErrorCode::EmptyStatistics, "no grids contributed statistics");
  if (stats.transitions.size() != static_cast<std::size_t>(model.n_actions()) ||
      stats.emissions.size() != static_cast<std::size_t>(model.n_emission_slots()))
    throw Error(ErrorCode::InconsistentShapes, "statistics do not match the model");
  const Eigen::Index n = model.n_states();
  MStepResult out;
  for (int k = 0; k < model.n_actions(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const bool observed = stats.steps_per_action[ks] > 0;
    out.action_observed.push_back(observed);
    if (!observed) {
      out.chains.push_back(model.chain(k));
      continue;
    }
    Matrix b = model.chain(k).probs();
    const Matrix& counts = stats.transitions[ks];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double total = counts.row(i).sum();
      if (total > 0.0) b.row(i) = counts.row(i) / total;
    }
    out.chains.push_back(StochasticMatrix::validated(b));
  }
  for (int slot = 0; slot < model.n_emission_slots(); ++slot) {
    Matrix l = model.emission_slot(slot).probs();
    const Matrix counts = stats.emissions[static_cast<std::size_t>(slot)].array() + options.emission_floor;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double total = counts.row(i).sum();
      if (total > 0.0) l.row(i) = counts.row(i) / total;
    }
    out.emissions.push_back(StochasticMatrix::validated(l));
  }
  const double total = stats.initial.sum();
  out.initial = total > 0.0 ? Vector(stats.initial / total) : model.initial();
  return out;
}

void apply_m_step(SwitchingSMJP& model, const MStepResult& result) {
  for (int k = 0; k < model.n_actions(); ++k)
    if (result.action_observed.at(static_cast<std::size_t>(k))) model.set_chain(k, result.chains[static_cast<std::size_t>(k)]);
  for (int slot = 0; slot < model.n_emission_slots(); ++slot)
    model.set_emission(slot, result.emissions.at(static_cast<std::size_t>(slot)));
  model.set_initial(result.initial);
}

GeneratorMatrix update_generator(const StochasticMatrix& chain, double omega_old, const Mask* mask) {
  if (chain.rows() != chain.cols()) throw Error(ErrorCode::NotSquare, "chain must be square");
  if (!(omega_old > 0.0)) throw Error(ErrorCode::OmegaTooSmall, "omega must be positive");
  const Eigen::Index n = chain.rows();
  if (mask && (mask->rows() != n || mask->cols() != n))
    throw Error(ErrorCode::InconsistentShapes, "mask size differs from chain");
  Matrix a = (chain.probs() - Matrix::Identity(n, n)) * omega_old;
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mask && !(*mask)(i, j)) {
        if (chain(i, j) > kStructureTolerance)
          throw Error(ErrorCode::StructureViolation,
                      "masked entry (" + std::to_string(i) + "," + std::to_string(j) + ") carries probability " +
                          std::to_string(chain(i, j)));
        a(i, j) = 0.0;
      }
      off += a(i, j);
    }
    a(i, i) = -off;
  }
  return GeneratorMatrix::validated(a);
}

// ---------------------------------------------------------------------------
// Fitting

void FitConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(inner_iterations >= 0, "inner_iterations must be >= 0");
  require(inner_tol >= 0.0, "inner_tol must be >= 0");
  require(max_outer_iterations >= 1, "max_outer_iterations must be >= 1");
  require(tol > 0.0, "tol must be > 0");
  require(patience >= 1, "patience must be >= 1");
  require(grids_per_iteration >= 1, "grids_per_iteration must be >= 1");
  require(eval_grids >= 1, "eval_grids must be >= 1");
  require(heldout_fraction > 0.0 && heldout_fraction < 1.0, "heldout_fraction must lie in (0,1)");
  require(restarts >= 1, "restarts must be >= 1");
  require(omega_prior > 0.0, "omega_prior must be > 0");
  require(omega_floor > 0.0, "omega_floor must be > 0");
  require(omega_per_event >= 0.0, "omega_per_event must be >= 0");
  require(emission_floor >= 0.0, "emission_floor must be >= 0");
  require(plateau_eps >= 0.0 && plateau_abs >= 0.0, "plateau tolerances must be >= 0");
}

std::uint64_t heldout_seed(const FitConfig& config) { return Rng(config.seed).derive("heldout")(); }

namespace {

double forward_loglik(const SwitchingSMJP& model, const TimeGrid& grid) {
  check_grid(model, grid);
  if (grid.size() == 0) return 0.0;
  return scaled_forward(model, grid, nullptr, nullptr);
}

double safe_heldout(const SwitchingSMJP& model, const std::vector<EventSequence>& heldout, const FitConfig& config) {
  try {
    return held_out_loglik(model, heldout, config.eval_grids, heldout_seed(config), config.omega_per_event);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ZeroProbabilityObservation) return kNegInf;
    throw;
  }
}

}  // namespace

double held_out_loglik(const SwitchingSMJP& model, const std::vector<EventSequence>& sequences, int eval_grids,
                       std::uint64_t seed, double omega_per_event) {
  if (sequences.empty()) throw Error(ErrorCode::InvalidConfig, "held-out evaluation needs at least one sequence");
  if (eval_grids < 1) throw Error(ErrorCode::InvalidConfig, "eval_grids must be >= 1");
  const Rng root(seed);
  double total = 0.0;
  for (const EventSequence& seq : sequences) {
    if (seq.empty()) continue;
    const Rng base = root.split(seq.digest());
    SwitchingSMJP dense = model;
    if (omega_per_event > 0.0 && seq.size() >= 2 && seq.duration() > 0.0) {
      const double floor = omega_per_event * static_cast<double>(seq.size() - 1) / seq.duration();
      if (floor > model.omega()) dense.set_omega(floor);
    }
    double acc = 0.0;
    for (int g = 0; g < eval_grids; ++g) {
      Rng rng = base.split(static_cast<std::uint64_t>(g));
      acc += forward_loglik(dense, build_time_grid(seq, dense.omega(), rng));
    }
    total += acc / eval_grids;
  }
  return total;
}

double event_rate(const std::vector<EventSequence>& sequences) {
  double events = 0.0, duration = 0.0;
  for (const auto& s : sequences) {
    if (s.size() < 2) continue;
    events += static_cast<double>(s.size() - 1);
    duration += s.duration();
  }
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "sequences span no time");
  return events / duration;
}

FitReport fit(const SwitchingSMJP& init, const std::vector<EventSequence>& train,
              const std::vector<EventSequence>& heldout, const FitConfig& config) {
  config.validate();
  if (train.empty()) throw Error(ErrorCode::InvalidConfig, "fit needs at least one training sequence");

  FitReport report{init, {}, {}, {}, 0.0, 0, false, {}};
  SwitchingSMJP model = init;
  double best = safe_heldout(model, heldout, config);
  report.heldout_trace.push_back(best);
  report.heldout_ll = best;
  report.action_unobserved.assign(static_cast<std::size_t>(init.n_actions()), false);
  if (config.inner_iterations == 0) {
    report.converged = true;
    return report;
  }

  const Rng grid_root = Rng(config.seed).derive("grids").split(config.stream);
  const MStepOptions m_options{config.emission_floor};
  const auto n_grids = train.size() * static_cast<std::size_t>(config.grids_per_iteration);
  double previous = best;
  int stable = 0;
  double omega_floor = config.omega_floor;
  if (config.omega_per_event > 0.0) {
    double events = 0.0, duration = 0.0;
    for (const auto& s : train)
      if (s.size() >= 2) {
        events += static_cast<double>(s.size() - 1);
        duration += s.duration();
      }
    if (duration > 0.0) omega_floor = std::max(omega_floor, config.omega_per_event * events / duration);
  }

  for (int outer = 1; outer <= config.max_outer_iterations; ++outer) {
    const Rng outer_rng = grid_root.split(static_cast<std::uint64_t>(outer));
    std::vector<TimeGrid> grids;
    grids.reserve(n_grids);
    for (std::size_t i = 0; i < train.size(); ++i)
      for (int g = 0; g < config.grids_per_iteration; ++g) {
        Rng rng = outer_rng.split(i).split(static_cast<std::uint64_t>(g));
        grids.push_back(build_time_grid(train[i], model.omega(), rng));
      }

    std::vector<double> inner;
    std::vector<bool> observed(static_cast<std::size_t>(model.n_actions()), true);
    for (int pass = 0; pass < config.inner_iterations; ++pass) {
      auto partial = detail::parallel_map(grids.size(), config.threads, [&](std::size_t g) {
        SufficientStatistics s(model);
        accumulate_statistics(model, grids[g], s);
        return s;
      });
      SufficientStatistics stats(model);
      for (const auto& s : partial) stats += s;
      const double ll = stats.log_likelihood / config.grids_per_iteration;
      if (!std::isfinite(ll))
        throw Error(ErrorCode::NonFiniteLikelihood, "training log-likelihood is " + std::to_string(ll) +
                                                        " at outer iteration " + std::to_string(outer) + ", pass " +
                                                        std::to_string(pass));
      const bool settled =
          !inner.empty() && std::abs(ll - inner.back()) <= config.inner_tol * std::max(1.0, std::abs(ll));
      inner.push_back(ll);
      if (settled) break;
      const MStepResult m = m_step(model, stats, m_options);
      for (std::size_t k = 0; k < observed.size(); ++k) observed[k] = m.action_observed[k];
      apply_m_step(model, m);
    }
    for (std::size_t k = 0; k < observed.size(); ++k) report.action_unobserved[k] = !observed[k];

    model.rescale_omega(omega_floor);
    const double score = safe_heldout(model, heldout, config);
    spdlog::debug("outer {} train ll {:.6f} held-out ll {:.6f} omega {:.6g}", outer, inner.back(), score,
                  model.omega());
    report.train_ll_trace.push_back(inner.back());
    report.inner_ll_traces.push_back(std::move(inner));
    report.heldout_trace.push_back(score);
    report.iterations = outer;

    if (!config.keep_best || score > best) {
      best = score;
      report.final_model = model;
      report.heldout_ll = score;
    }
    const double change = std::abs(score - previous) / std::max(std::abs(previous), 1e-300);
    stable = (std::isfinite(score) && change < config.tol) ? stable + 1 : 0;
    previous = score;
    if (stable >= config.patience) {
      report.converged = true;
      break;
    }
  }
  return report;
}

FitReport fit(const SwitchingSMJP& init, const std::vector<EventSequence>& sequences, const FitConfig& config) {
  config.validate();
  std::vector<EventSequence> train, heldout;
  for (const auto& s : sequences) {
    auto [a, b] = s.split_chronological(1.0 - config.heldout_fraction);
    train.push_back(std::move(a));
    heldout.push_back(std::move(b));
  }
  return fit(init, train, heldout, config);
}

FitReport fit_with_restarts(const std::vector<EventSequence>& sequences, int n_states, const FitConfig& config) {
  config.validate();
  if (sequences.empty()) throw Error(ErrorCode::InvalidConfig, "no sequences to fit");
  if (n_states < 1) throw Error(ErrorCode::InvalidConfig, "n_states must be >= 1");
  for (const auto& s : sequences)
    if (!(s.observations == sequences.front().observations) || !(s.actions == sequences.front().actions))
      throw Error(ErrorCode::InconsistentShapes, "sequences use different alphabets");

  std::vector<EventSequence> train, heldout;
  for (const auto& s : sequences) {
    auto [a, b] = s.split_chronological(1.0 - config.heldout_fraction);
    train.push_back(std::move(a));
    heldout.push_back(std::move(b));
  }
  const double omega0 = config.omega_prior * event_rate(train);
  const Alphabet states = Alphabet::numbered(AlphabetKind::State, static_cast<std::size_t>(n_states), "s");
  const Rng init_root = Rng(config.seed).derive("init").split(static_cast<std::uint64_t>(n_states));

  auto reports = detail::parallel_map(static_cast<std::size_t>(config.restarts), config.threads, [&](std::size_t r) {
    Rng rng = init_root.split(r);
    SwitchingSMJP init = random_model(states, sequences.front().actions, sequences.front().observations, omega0, rng,
                                      config.per_action_emission);
    FitConfig cfg = config;
    cfg.threads = 1;
    cfg.stream = config.stream * 1000003ULL + static_cast<std::uint64_t>(n_states) * 1009ULL + r;
    return fit(init, train, heldout, cfg);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < reports.size(); ++r)
    if (reports[r].heldout_ll > reports[best].heldout_ll) best = r;
  spdlog::debug("N={} best restart {} held-out ll {:.6f}", n_states, best, reports[best].heldout_ll);
  return std::move(reports[best]);
}

int choose_plateau(const std::vector<StateCountPoint>& curve, double plateau_eps, double plateau_abs) {
  double hi = kNegInf, lo = std::numeric_limits<double>::infinity();
  for (const auto& p : curve)
    if (p.ok && std::isfinite(p.heldout_ll)) {
      hi = std::max(hi, p.heldout_ll);
      lo = std::min(lo, p.heldout_ll);
    }
  if (!std::isfinite(hi)) throw Error(ErrorCode::NonFiniteLikelihood, "no state count produced a finite score");
  const double slack = std::max(plateau_eps * (hi - lo), plateau_abs * std::abs(hi));
  int chosen = 0;
  for (const auto& p : curve)
    if (p.ok && std::isfinite(p.heldout_ll) && p.heldout_ll >= hi - slack && (chosen == 0 || p.n_states < chosen))
      chosen = p.n_states;
  return chosen;
}

StateSelection select_num_states(const std::vector<EventSequence>& sequences, const std::vector<int>& n_range,
                                 const FitConfig& config) {
  if (n_range.empty()) throw Error(ErrorCode::InvalidConfig, "empty state-count range");
  if (!std::is_sorted(n_range.begin(), n_range.end()))
    throw Error(ErrorCode::InvalidConfig, "state-count range must be ascending");
  StateSelection out;
  for (int n : n_range) {
    StateCountPoint point;
    point.n_states = n;
    try {
      point.report = fit_with_restarts(sequences, n, config);
      point.heldout_ll = point.report->heldout_ll;
      point.ok = std::isfinite(point.heldout_ll);
      if (!point.ok) point.error = "non-finite held-out log-likelihood";
    } catch (const Error& e) {
      point.error = e.what();
    }
    out.curve.push_back(std::move(point));
  }
  out.chosen = choose_plateau(out.curve, config.plateau_eps, config.plateau_abs);
  return out;
}

}  // namespace smjp
