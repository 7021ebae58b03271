#pragma once

// Markov jump process sampling: Gillespie simulation, uniformization, and the
// Poisson-thinned time grids the switching HMM runs on.

#include <cstdint>
#include <vector>

#include "smjp/core.hpp"
#include "smjp/events.hpp"
#include "smjp/rng.hpp"

namespace smjp {

/// Piecewise-constant sample path: states[i] holds on [jump_times[i-1], jump_times[i]).
struct LatentTrajectory {
  int initial_state = 0;
  std::vector<double> jump_times;
  std::vector<int> states;
  double horizon = 0.0;
  bool from_uniformization = false;

  int state_at(double t) const;
};

enum class GridTag : std::uint8_t { Event, Virtual };

inline constexpr int kNullObservation = -1;

/// Ordered union of event times and virtual (Poisson) times. Virtual points carry
/// the null observation and inherit the action in force over their interval.
struct TimeGrid {
  std::vector<double> times;
  std::vector<GridTag> tags;
  std::vector<int> observations;  // kNullObservation at virtual points
  std::vector<int> actions;       // action governing the step t -> t+1
  std::vector<std::size_t> event_positions;  // grid index of each source event

  std::size_t size() const { return times.size(); }
  void push(double t, GridTag tag, int observation, int action);
};

/// Uniformization rate used throughout: twice the largest exit rate.
double default_omega(const GeneratorMatrix& generator);

LatentTrajectory gillespie_sample(const GeneratorMatrix& generator, int initial_state, double horizon, Rng& rng);

/// B = I + A / omega.
StochasticMatrix uniformize(const GeneratorMatrix& generator, double omega);

/// Poisson(omega) arrival times on the open interval (t_a, t_b), sorted.
std::vector<double> sample_virtual_times(double omega, double t_a, double t_b, Rng& rng);

/// Expected virtual points in one interval above which sampling is refused.
inline constexpr double kMaxExpectedVirtualPoints = 1e7;

TimeGrid build_time_grid(const EventSequence& sequence, double omega, Rng& rng);

/// Grid holding only the event times.
TimeGrid event_only_grid(const EventSequence& sequence);

}  // namespace smjp
