#pragma once

// Ground-truth data: the two-box foraging world, a belief-MDP agent solved by
// value iteration, and the toy switching-model generator.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "smjp/core.hpp"
#include "smjp/ctmc.hpp"
#include "smjp/events.hpp"
#include "smjp/rng.hpp"
#include "smjp/switching_hmm.hpp"

namespace smjp {

struct WorldConfig {
  std::array<double, 2> box_means{10.0, 30.0};  // mean seconds until food reappears
  double press_cost = 0.1;
  double switch_cost = 0.5;
  double reward_value = 1.0;
  double travel_time = 2.0;    // seconds spent moving between boxes
  double decision_tick = 0.5;  // seconds between decisions at a box

  void validate() const;
};

enum class BoxAction { Wait, Press };
enum class BoxOutcome { None, Reward, NoReward };

/// Posterior probability that a box holds food after `dt` seconds. A press
/// empties the box either way (a rewarded press restarts its timer), after which
/// availability accrues at the exponential hazard 1/mean.
double belief_update(double belief, BoxAction action, BoxOutcome outcome, double mean_interval, double dt);

/// How a continuous belief is placed on the grid.
enum class BinMapping {
  Nearest,  // all mass on the closest grid point
  Linear,   // split between the two bracketing points, preserving the mean
};

struct BeliefGridConfig {
  int m_bins = 10;
  double diffusion_eps = 0.05;
  double discount = 0.99;  // per decision tick
  BinMapping mapping = BinMapping::Linear;

  void validate() const;
};

/// Agent decision; argmax ties resolve toward the lower value.
enum class AgentAction : int { Stay = 0, Press = 1, Move = 2 };
inline constexpr int kAgentActions = 3;

struct AgentStateIndex {
  int location = 0;
  std::array<int, 2> bins{0, 0};
};

struct BeliefMDP {
  WorldConfig world;
  BeliefGridConfig grid;
  std::vector<double> belief_values;  // grid point per bin, m / (M - 1)
  std::array<Matrix, kAgentActions> transition;  // p(b' | b, a), row-stochastic
  std::array<Vector, kAgentActions> reward;      // expected immediate reward
  std::array<double, kAgentActions> step_discount{};
  Vector values;
  std::vector<int> policy;
  std::vector<double> residuals;  // Bellman residual per sweep

  int n_states() const { return 2 * grid.m_bins * grid.m_bins; }
  int encode(const AgentStateIndex& s) const { return (s.location * grid.m_bins + s.bins[0]) * grid.m_bins + s.bins[1]; }
  AgentStateIndex decode(int state) const;
  /// P(reward | press) in a state: the belief grid value at the current box.
  double press_reward_probability(int state) const;
};

/// Distribution over bins for a continuous belief, including diffusion.
Vector belief_bin_distribution(double belief, const BeliefGridConfig& grid);

BeliefMDP build_belief_mdp(const WorldConfig& world, const BeliefGridConfig& grid);

/// Iterates the Bellman operator until the sup-norm residual drops below `tol`,
/// then stores values and the greedy policy in `mdp`. Throws NonConvergence.
void value_iteration(BeliefMDP& mdp, double tol = 1e-8, int max_sweeps = 100000);

/// Q-values of the current `mdp.values`.
std::array<Vector, kAgentActions> action_values(const BeliefMDP& mdp);

struct PolicySummary {
  std::array<int, kAgentActions> counts{};
  bool presses_everywhere = false;
  bool never_moves = false;
  bool nontrivial() const { return !presses_everywhere && !never_moves && counts[1] > 0; }
};

PolicySummary summarize_policy(const BeliefMDP& mdp, std::span<const int> policy);

// Observation and action symbols of simulated foraging sequences.
namespace foraging_symbols {
inline constexpr int kLoc1 = 0, kLoc2 = 1, kReward = 2, kNoReward = 3;
inline constexpr int kStay = 0, kMove = 1, kPress1 = 2, kPress2 = 3;
Alphabet observations();
Alphabet actions();
}  // namespace foraging_symbols

/// Agent state Z at one event: MDP state plus whether the event was a reward.
struct AgentTruth {
  double time = 0.0;
  int z = 0;  // 2 * mdp_state + rewarded
  int mdp_state = 0;
  int location = 0;
  bool rewarded = false;
  std::array<int, 2> bins{0, 0};
};

inline int agent_z_count(const BeliefMDP& mdp) { return 2 * mdp.n_states(); }

struct ForagingRun {
  EventSequence events;
  std::vector<AgentTruth> truth;  // one per event
  int rewards = 0;
  int presses = 0;
};

/// Runs the agent in the world for `horizon` seconds. The agent's belief lives on
/// the MDP grid and moves by sampling p(b' | b, a); the world's food timers are
/// sampled exactly.
ForagingRun simulate_agent(const BeliefMDP& mdp, std::span<const int> policy, double horizon, Rng& rng);

struct ToyConfig {
  int n_states = 5;
  int n_observations = 2;
  int n_actions = 2;
  double expected_length = 5000.0;  // expected number of events
  double event_rate = 1.0;          // observed events per second
  double rate_scale = 0.1;          // typical transition rate

  void validate() const;
};

struct ToyData {
  SwitchingSMJP model;
  EventSequence events;
  std::vector<int> states_at_events;
  LatentTrajectory path;  // uniformized path, virtual self-jumps included
};

/// Random ground-truth model for the toy experiment.
SwitchingSMJP toy_model(const ToyConfig& config, Rng& rng);

/// Samples from `model`: observed events arrive at `event_rate`, the chain takes a
/// B^k step at every event and every Poisson(omega) virtual time, and after each
/// emission the action becomes the observation index (mod K).
ToyData sample_toy(const SwitchingSMJP& model, double event_rate, double horizon, Rng& rng);

ToyData generate_toy(const ToyConfig& config, std::uint64_t seed);

}  // namespace smjp
