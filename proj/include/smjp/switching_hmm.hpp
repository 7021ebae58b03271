#pragma once

// Action-switched hidden Markov model over uniformized time grids, and the
// resample-grid / EM loop that learns per-action generators from event data.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smjp/core.hpp"
#include "smjp/ctmc.hpp"
#include "smjp/events.hpp"
#include "smjp/rng.hpp"

namespace smjp {

/// Switching semi-Markov jump process. Holds one generator per action and the
/// uniformization rate; the discrete chains B^k = I + A^k / omega are derived
/// and kept in sync by every mutator.
class SwitchingSMJP {
 public:
  /// `emissions` has either one shared matrix or one per action. Empty `masks`
  /// means every transition is allowed; otherwise masks[k](i,j) == false pins
  /// A^k(i,j) to zero.
  SwitchingSMJP(Alphabet states, Alphabet actions, Alphabet observations, std::vector<GeneratorMatrix> generators,
                std::vector<StochasticMatrix> emissions, Vector initial, double omega, std::vector<Mask> masks = {});

  /// Builds the generators from discrete chains via A^k = (B^k - I) omega.
  static SwitchingSMJP from_chains(Alphabet states, Alphabet actions, Alphabet observations,
                                   const std::vector<StochasticMatrix>& chains, std::vector<StochasticMatrix> emissions,
                                   Vector initial, double omega, std::vector<Mask> masks = {});

  int n_states() const { return static_cast<int>(states_.size()); }
  int n_actions() const { return static_cast<int>(actions_.size()); }
  int n_observations() const { return static_cast<int>(observations_.size()); }

  const Alphabet& states() const { return states_; }
  const Alphabet& actions() const { return actions_; }
  const Alphabet& observations() const { return observations_; }

  const GeneratorMatrix& generator(int action) const { return generators_.at(static_cast<std::size_t>(action)); }
  const StochasticMatrix& chain(int action) const { return chains_.at(static_cast<std::size_t>(action)); }
  const std::vector<GeneratorMatrix>& generators() const { return generators_; }
  const std::vector<StochasticMatrix>& chains() const { return chains_; }

  bool per_action_emission() const { return emissions_.size() > 1; }
  const std::vector<StochasticMatrix>& emissions() const { return emissions_; }
  const StochasticMatrix& emission_slot(int slot) const { return emissions_.at(static_cast<std::size_t>(slot)); }
  int n_emission_slots() const { return static_cast<int>(emissions_.size()); }
  /// Emission slot for grid step t: the action governing the step into t.
  int emission_slot_at(const TimeGrid& grid, std::size_t t) const;

  const Vector& initial() const { return initial_; }
  double omega() const { return omega_; }
  const std::vector<Mask>& masks() const { return masks_; }
  const Mask& mask(int action) const { return masks_.at(static_cast<std::size_t>(action)); }

  void set_chain(int action, const StochasticMatrix& chain);
  void set_emission(int slot, StochasticMatrix emission);
  void set_initial(const Vector& initial);
  /// Re-derives every chain for the new rate (generators unchanged).
  void set_omega(double omega);
  /// omega := max(2 * max_{k,s} |A^k_ss|, floor).
  void rescale_omega(double floor);

  double max_exit_rate() const;

  std::map<std::string, std::string> metadata;

 private:
  void check_shapes() const;

  Alphabet states_, actions_, observations_;
  std::vector<GeneratorMatrix> generators_;
  std::vector<StochasticMatrix> chains_;
  std::vector<StochasticMatrix> emissions_;
  Vector initial_;
  double omega_;
  std::vector<Mask> masks_;
};

/// Draws chains and emissions from flat Dirichlet rows; uniform initial distribution.
SwitchingSMJP random_model(const Alphabet& states, const Alphabet& actions, const Alphabet& observations, double omega,
                           Rng& rng, bool per_action_emission = false);

struct ForwardPass {
  Matrix log_alpha;  // T x N
  Vector log_scaling;  // log c_t, sums to the log-likelihood
  double log_likelihood = 0.0;
};

struct ForwardBackwardResult {
  Matrix log_alpha;
  Matrix log_beta;
  Matrix gamma;             // T x N
  std::vector<Matrix> xi;   // T-1 slices, N x N
  double log_likelihood = 0.0;
  Vector per_step_scaling;  // log c_t
};

/// Scaled-linear forward recursion. Throws ZeroProbabilityObservation.
ForwardPass forward(const SwitchingSMJP& model, const TimeGrid& grid);

/// Same recursion carried out entirely in log space.
ForwardPass forward_log_domain(const SwitchingSMJP& model, const TimeGrid& grid);

/// Log backward messages, log beta_T = 0.
Matrix backward(const SwitchingSMJP& model, const TimeGrid& grid);

ForwardBackwardResult posterior_xi(const SwitchingSMJP& model, const Matrix& log_alpha, const Matrix& log_beta,
                                   const TimeGrid& grid);

ForwardBackwardResult forward_backward(const SwitchingSMJP& model, const TimeGrid& grid);

/// Expected counts pooled over grids; merged by addition.
struct SufficientStatistics {
  SufficientStatistics() = default;
  explicit SufficientStatistics(const SwitchingSMJP& model);

  std::vector<Matrix> transitions;  // per action, expected i->j counts
  std::vector<Matrix> emissions;    // per emission slot, N x |O| expected counts
  Vector initial;
  std::vector<std::size_t> steps_per_action;  // grid steps attributed to each action
  double log_likelihood = 0.0;
  std::size_t n_grids = 0;

  SufficientStatistics& operator+=(const SufficientStatistics& other);
};

/// E-step for one grid: adds its expected counts and log-likelihood to `stats`.
void accumulate_statistics(const SwitchingSMJP& model, const TimeGrid& grid, SufficientStatistics& stats);

/// Builds the same statistics from a stored forward-backward result.
SufficientStatistics statistics_from_posterior(const SwitchingSMJP& model, const ForwardBackwardResult& posterior,
                                               const TimeGrid& grid);

struct MStepOptions {
  double emission_floor = 0.0;  // pseudo-count added to every emission cell
};

struct MStepResult {
  std::vector<StochasticMatrix> chains;
  std::vector<StochasticMatrix> emissions;
  Vector initial;
  std::vector<bool> action_observed;
};

/// B^k_ij = sum xi / sum gamma over steps with action k; L from event steps.
/// Rows without statistics keep their previous values.
MStepResult m_step(const SwitchingSMJP& model, const SufficientStatistics& stats, const MStepOptions& options = {});

void apply_m_step(SwitchingSMJP& model, const MStepResult& result);

/// Structural tolerance for probability mass on masked transitions.
inline constexpr double kStructureTolerance = 1e-6;

/// A = (B - I) * omega_old. Masked entries must carry at most kStructureTolerance
/// probability; they are zeroed and their mass folded into the diagonal.
GeneratorMatrix update_generator(const StochasticMatrix& chain, double omega_old, const Mask* mask = nullptr);

struct FitConfig {
  int inner_iterations = 50;
  double inner_tol = 1e-7;  // relative training log-likelihood change ending inner EM
  int max_outer_iterations = 200;
  double tol = 1e-4;  // relative held-out change
  int patience = 2;   // consecutive outer iterations below tol
  int grids_per_iteration = 1;
  int eval_grids = 5;
  double heldout_fraction = 0.2;
  int restarts = 5;
  double omega_prior = 1.0;  // initial omega, in units of the data event rate
  double omega_floor = 1e-6;
  double omega_per_event = 4.0;  // omega never drops below this many training events per second
  double emission_floor = 0.0;
  bool per_action_emission = false;
  bool keep_best = true;  // return the model with the best held-out score
  double plateau_eps = 0.01;  // fraction of the held-out range
  double plateau_abs = 1e-3;  // fraction of |max held-out|
  unsigned threads = 1;
  std::uint64_t seed = 0;    // held-out grids derive from this alone
  std::uint64_t stream = 0;  // training grids derive from (seed, stream)

  void validate() const;
};

/// Seed of the held-out evaluation grids used by fit() under `config`.
std::uint64_t heldout_seed(const FitConfig& config);

struct FitReport {
  SwitchingSMJP final_model;
  std::vector<double> train_ll_trace;                 // last inner pass of each outer iteration
  std::vector<std::vector<double>> inner_ll_traces;   // every inner pass
  std::vector<double> heldout_trace;                  // entry 0 is the initial model
  double heldout_ll = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<bool> action_unobserved;
};

/// Held-out log-likelihood: for each sequence, the forward log-likelihood
/// averaged over `eval_grids` grids, summed over sequences. Grid seeds depend on
/// (seed, sequence content, draw) only. Each sequence is evaluated at
/// omega >= omega_per_event times its own event rate.
double held_out_loglik(const SwitchingSMJP& model, const std::vector<EventSequence>& sequences, int eval_grids,
                       std::uint64_t seed, double omega_per_event = 0.0);

/// Alternates grid resampling, inner EM on fixed grids, and the generator/omega update.
FitReport fit(const SwitchingSMJP& init, const std::vector<EventSequence>& train,
              const std::vector<EventSequence>& heldout, const FitConfig& config);

/// Splits each sequence chronologically and fits.
FitReport fit(const SwitchingSMJP& init, const std::vector<EventSequence>& sequences, const FitConfig& config);

/// Events per second pooled over sequences.
double event_rate(const std::vector<EventSequence>& sequences);

/// Random restarts for an N-state model; best held-out score wins.
FitReport fit_with_restarts(const std::vector<EventSequence>& sequences, int n_states, const FitConfig& config);

struct StateCountPoint {
  int n_states = 0;
  double heldout_ll = 0.0;
  bool ok = false;
  std::string error;
  std::optional<FitReport> report;
};

struct StateSelection {
  std::vector<StateCountPoint> curve;
  int chosen = 0;
};

/// Smallest N whose held-out score is within tolerance of the best.
int choose_plateau(const std::vector<StateCountPoint>& curve, double plateau_eps, double plateau_abs);

StateSelection select_num_states(const std::vector<EventSequence>& sequences, const std::vector<int>& n_range,
                                 const FitConfig& config);

}  // namespace smjp
