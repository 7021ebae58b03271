#include "smjp/ctmc.hpp"

#include <algorithm>
#include <cmath>

namespace smjp {

int LatentTrajectory::state_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return states[static_cast<std::size_t>(it - jump_times.begin())];
}

void TimeGrid::push(double t, GridTag tag, int observation, int action) {
  times.push_back(t);
  tags.push_back(tag);
  observations.push_back(observation);
  actions.push_back(action);
}

double default_omega(const GeneratorMatrix& generator) { return 2.0 * generator.max_exit_rate(); }

LatentTrajectory gillespie_sample(const GeneratorMatrix& generator, int initial_state, double horizon, Rng& rng) {
  const auto n = static_cast<int>(generator.size());
  if (initial_state < 0 || initial_state >= n) throw Error(ErrorCode::InvalidState, "initial state out of range");
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "horizon must be positive");

  LatentTrajectory path;
  path.initial_state = initial_state;
  path.horizon = horizon;
  path.states.push_back(initial_state);

  const Matrix& rates = generator.rates();
  std::vector<double> weights(static_cast<std::size_t>(n));
  int s = initial_state;
  double t = 0.0;
  for (;;) {
    const double exit = generator.exit_rate(s);
    if (exit <= 0.0) {
      if (std::isfinite(horizon)) break;
      throw Error(ErrorCode::AbsorbingStateLoop, "absorbing state " + std::to_string(s) + " with infinite horizon");
    }
    t += rng.exponential(exit);
    if (t >= horizon) break;
    for (int j = 0; j < n; ++j) weights[static_cast<std::size_t>(j)] = j == s ? 0.0 : rates(s, j);
    s = static_cast<int>(rng.categorical(weights));
    path.jump_times.push_back(t);
    path.states.push_back(s);
  }
  return path;
}

StochasticMatrix uniformize(const GeneratorMatrix& generator, double omega) {
  if (!(omega > 0.0) || omega < generator.max_exit_rate() * (1.0 - 1e-12))
    throw Error(ErrorCode::OmegaTooSmall, "omega " + std::to_string(omega) + " below max exit rate " +
                                              std::to_string(generator.max_exit_rate()));
  const Eigen::Index n = generator.size();
  Matrix b = Matrix::Identity(n, n) + generator.rates() / omega;
  // Row sums of A are exactly zero, so only the diagonal can pick up rounding.
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += b(i, j);
    b(i, i) = std::max(0.0, 1.0 - off);
  }
  return StochasticMatrix::validated(b);
}

std::vector<double> sample_virtual_times(double omega, double t_a, double t_b, Rng& rng) {
  if (!(t_b > t_a) || t_a < 0.0) throw Error(ErrorCode::EmptyInterval, "interval must satisfy t_b > t_a >= 0");
  if (!(omega > 0.0)) throw Error(ErrorCode::OmegaTooSmall, "omega must be positive");
  if (omega * (t_b - t_a) > kMaxExpectedVirtualPoints)
    throw Error(ErrorCode::TooManyVirtualPoints, "expected virtual points " + std::to_string(omega * (t_b - t_a)));
  std::vector<double> out;
  double t = t_a;
  for (;;) {
    t += rng.exponential(omega);
    if (t >= t_b) break;
    out.push_back(t);
  }
  return out;
}

TimeGrid build_time_grid(const EventSequence& sequence, double omega, Rng& rng) {
  const auto& events = sequence.events;
  for (std::size_t i = 1; i < events.size(); ++i)
    if (!(events[i].time > events[i - 1].time))
      throw Error(ErrorCode::NonMonotoneTimestamps, "event " + std::to_string(i) + " is not after its predecessor");

  TimeGrid grid;
  grid.event_positions.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    grid.event_positions.push_back(grid.size());
    grid.push(e.time, GridTag::Event, e.observation, e.action);
    if (i + 1 < events.size() && omega > 0.0) {
      const double start = e.time, stop = events[i + 1].time;
      if (omega * (stop - start) > kMaxExpectedVirtualPoints)
        throw Error(ErrorCode::TooManyVirtualPoints, "expected virtual points " + std::to_string(omega * (stop - start)));
      double t = start;
      for (;;) {
        t += rng.exponential(omega);
        if (t >= stop) break;
        grid.push(t, GridTag::Virtual, kNullObservation, e.action);
      }
    }
  }
  return grid;
}

TimeGrid event_only_grid(const EventSequence& sequence) {
  Rng unused(0);
  return build_time_grid(sequence, 0.0, unused);
}

}  // namespace smjp
