#include "smjp/foraging.hpp"

#include <algorithm>
#include <cmath>

namespace smjp {

void WorldConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(box_means[0] > 0.0 && box_means[1] > 0.0, "box means must be positive");
  require(press_cost >= 0.0 && switch_cost >= 0.0, "costs must be non-negative");
  require(reward_value > 0.0, "reward value must be positive");
  require(travel_time > 0.0 && decision_tick > 0.0, "travel time and decision tick must be positive");
}

void BeliefGridConfig::validate() const {
  if (m_bins < 2) throw Error(ErrorCode::InvalidConfig, "m_bins must be >= 2");
  if (!(diffusion_eps >= 0.0 && diffusion_eps <= 0.2)) throw Error(ErrorCode::InvalidConfig, "diffusion_eps must lie in [0, 0.2]");
  if (!(discount > 0.0 && discount < 1.0)) throw Error(ErrorCode::InvalidConfig, "discount must lie in (0, 1)");
}

namespace {

double accrue(double belief, double mean_interval, double dt) {
  return 1.0 - (1.0 - belief) * std::exp(-dt / mean_interval);
}

}  // namespace

double belief_update(double belief, BoxAction action, BoxOutcome outcome, double mean_interval, double dt) {
  if (!(belief >= 0.0 && belief <= 1.0)) throw Error(ErrorCode::InvalidProbability, "belief must lie in [0,1]");
  if (!(dt >= 0.0)) throw Error(ErrorCode::NegativeTime, "dt must be non-negative");
  if (!(mean_interval > 0.0)) throw Error(ErrorCode::InvalidConfig, "mean interval must be positive");
  if (action == BoxAction::Press) {
    if (outcome == BoxOutcome::None) throw Error(ErrorCode::InvalidConfig, "a press needs an outcome");
    return accrue(0.0, mean_interval, dt);
  }
  return accrue(belief, mean_interval, dt);
}

Vector belief_bin_distribution(double belief, const BeliefGridConfig& grid) {
  const int m = grid.m_bins;
  Vector placed = Vector::Zero(m);
  const double pos = std::clamp(belief, 0.0, 1.0) * (m - 1);
  if (grid.mapping == BinMapping::Nearest) {
    placed(static_cast<Eigen::Index>(std::lround(pos))) = 1.0;
  } else {
    const int lo = std::min(static_cast<int>(std::floor(pos)), m - 1);
    const double frac = pos - lo;
    placed(lo) += 1.0 - frac;
    if (lo + 1 < m) placed(lo + 1) += frac;
  }
  if (grid.diffusion_eps == 0.0) return placed;
  Vector out = Vector::Zero(m);
  const double half = grid.diffusion_eps / 2.0;
  for (int i = 0; i < m; ++i) {
    const double mass = placed(i);
    if (mass == 0.0) continue;
    double stay = mass;
    if (i > 0) {
      out(i - 1) += mass * half;
      stay -= mass * half;
    }
    if (i + 1 < m) {
      out(i + 1) += mass * half;
      stay -= mass * half;
    }
    out(i) += stay;
  }
  return out;
}

AgentStateIndex BeliefMDP::decode(int state) const {
  const int m = grid.m_bins;
  AgentStateIndex s;
  s.bins[1] = state % m;
  s.bins[0] = (state / m) % m;
  s.location = state / (m * m);
  return s;
}

double BeliefMDP::press_reward_probability(int state) const {
  const AgentStateIndex s = decode(state);
  return belief_values[static_cast<std::size_t>(s.bins[static_cast<std::size_t>(s.location)])];
}

BeliefMDP build_belief_mdp(const WorldConfig& world, const BeliefGridConfig& grid) {
  world.validate();
  grid.validate();
  BeliefMDP mdp;
  mdp.world = world;
  mdp.grid = grid;
  const int m = grid.m_bins;
  for (int i = 0; i < m; ++i) mdp.belief_values.push_back(static_cast<double>(i) / (m - 1));
  const int n = mdp.n_states();

  // Per-box next-bin distributions, indexed [box][current bin].
  auto box_kernel = [&](int box, bool pressed, double dt) {
    std::vector<Vector> rows;
    for (int b = 0; b < m; ++b) {
      const double next = belief_update(mdp.belief_values[static_cast<std::size_t>(b)],
                                        pressed ? BoxAction::Press : BoxAction::Wait,
                                        pressed ? BoxOutcome::NoReward : BoxOutcome::None,
                                        world.box_means[static_cast<std::size_t>(box)], dt);
      rows.push_back(belief_bin_distribution(next, grid));
    }
    return rows;
  };
  const double tick = world.decision_tick;
  const std::array<std::vector<Vector>, 2> wait_tick{box_kernel(0, false, tick), box_kernel(1, false, tick)};
  const std::array<std::vector<Vector>, 2> press_tick{box_kernel(0, true, tick), box_kernel(1, true, tick)};
  const std::array<std::vector<Vector>, 2> travel{box_kernel(0, false, world.travel_time),
                                                  box_kernel(1, false, world.travel_time)};

  for (auto& t : mdp.transition) t = Matrix::Zero(n, n);
  for (auto& r : mdp.reward) r = Vector::Zero(n);
  mdp.step_discount = {grid.discount, grid.discount, std::pow(grid.discount, world.travel_time / tick)};

  for (int s = 0; s < n; ++s) {
    const AgentStateIndex from = mdp.decode(s);
    for (int a = 0; a < kAgentActions; ++a) {
      const auto action = static_cast<AgentAction>(a);
      const int to_loc = action == AgentAction::Move ? 1 - from.location : from.location;
      std::array<const Vector*, 2> box{};
      for (int b = 0; b < 2; ++b) {
        const auto bb = static_cast<std::size_t>(b);
        const auto bin = static_cast<std::size_t>(from.bins[bb]);
        if (action == AgentAction::Move) box[bb] = &travel[bb][bin];
        else if (action == AgentAction::Press && b == from.location) box[bb] = &press_tick[bb][bin];
        else box[bb] = &wait_tick[bb][bin];
      }
      Matrix& kernel = mdp.transition[static_cast<std::size_t>(a)];
      for (int b0 = 0; b0 < m; ++b0) {
        const double p0 = (*box[0])(b0);
        if (p0 == 0.0) continue;
        for (int b1 = 0; b1 < m; ++b1) {
          const double p1 = (*box[1])(b1);
          if (p1 == 0.0) continue;
          kernel(s, mdp.encode({to_loc, {b0, b1}})) += p0 * p1;
        }
      }
      double r = 0.0;
      if (action == AgentAction::Press) r = world.reward_value * mdp.press_reward_probability(s) - world.press_cost;
      if (action == AgentAction::Move) r = -world.switch_cost;
      mdp.reward[static_cast<std::size_t>(a)](s) = r;
    }
  }
  for (const auto& kernel : mdp.transition)
    for (int s = 0; s < n; ++s)
      if (std::abs(kernel.row(s).sum() - 1.0) > 1e-10)
        throw Error(ErrorCode::NotStochastic, "belief kernel row " + std::to_string(s) + " does not sum to one");
  mdp.values = Vector::Zero(n);
  mdp.policy.assign(static_cast<std::size_t>(n), 0);
  return mdp;
}

std::array<Vector, kAgentActions> action_values(const BeliefMDP& mdp) {
  std::array<Vector, kAgentActions> q;
  for (std::size_t a = 0; a < q.size(); ++a)
    q[a] = mdp.reward[a] + mdp.step_discount[a] * (mdp.transition[a] * mdp.values);
  return q;
}

void value_iteration(BeliefMDP& mdp, double tol, int max_sweeps) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");
  const int n = mdp.n_states();
  mdp.residuals.clear();
  if (mdp.values.size() != n) mdp.values = Vector::Zero(n);
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const auto q = action_values(mdp);
    Vector next = q[0];
    for (std::size_t a = 1; a < q.size(); ++a) next = next.cwiseMax(q[a]);
    const double residual = (next - mdp.values).cwiseAbs().maxCoeff();
    mdp.values = std::move(next);
    mdp.residuals.push_back(residual);
    if (residual < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::NonConvergence, "value iteration did not converge");
  const auto q = action_values(mdp);
  mdp.policy.assign(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    int best = 0;
    for (int a = 1; a < kAgentActions; ++a)
      if (q[static_cast<std::size_t>(a)](s) > q[static_cast<std::size_t>(best)](s)) best = a;
    mdp.policy[static_cast<std::size_t>(s)] = best;
  }
}

PolicySummary summarize_policy(const BeliefMDP& mdp, std::span<const int> policy) {
  if (policy.size() != static_cast<std::size_t>(mdp.n_states()))
    throw Error(ErrorCode::InconsistentShapes, "policy size differs from MDP state count");
  PolicySummary out;
  for (int a : policy) {
    if (a < 0 || a >= kAgentActions) throw Error(ErrorCode::InvalidAction, "policy action out of range");
    ++out.counts[static_cast<std::size_t>(a)];
  }
  out.presses_everywhere = out.counts[1] == mdp.n_states();
  out.never_moves = out.counts[2] == 0;
  return out;
}

namespace foraging_symbols {
Alphabet observations() { return Alphabet(AlphabetKind::Observation, {"loc1", "loc2", "reward", "noreward"}); }
Alphabet actions() { return Alphabet(AlphabetKind::Action, {"stay", "move", "press1", "press2"}); }
}  // namespace foraging_symbols

ForagingRun simulate_agent(const BeliefMDP& mdp, std::span<const int> policy, double horizon, Rng& rng) {
  namespace sym = foraging_symbols;
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "horizon must be positive");
  summarize_policy(mdp, policy);
  const WorldConfig& world = mdp.world;

  ForagingRun run;
  run.events.id = "foraging";
  run.events.observations = sym::observations();
  run.events.actions = sym::actions();

  std::array<double, 2> food_at{rng.exponential(1.0 / world.box_means[0]), rng.exponential(1.0 / world.box_means[1])};
  int state = mdp.encode({0, {0, 0}});
  int observation = sym::kLoc1;
  bool rewarded = false;
  double t = 0.0;
  while (t < horizon) {
    const AgentStateIndex idx = mdp.decode(state);
    const auto action = static_cast<AgentAction>(policy[static_cast<std::size_t>(state)]);
    int symbol = sym::kStay;
    if (action == AgentAction::Move) symbol = sym::kMove;
    if (action == AgentAction::Press) symbol = idx.location == 0 ? sym::kPress1 : sym::kPress2;
    run.events.events.push_back({t, observation, symbol});
    run.truth.push_back({t, 2 * state + (rewarded ? 1 : 0), state, idx.location, rewarded, idx.bins});

    int next_location = idx.location;
    double dt = world.decision_tick;
    if (action == AgentAction::Press) {
      ++run.presses;
      auto& food = food_at[static_cast<std::size_t>(idx.location)];
      rewarded = food <= t;
      if (rewarded) {
        ++run.rewards;
        food = t + rng.exponential(1.0 / world.box_means[static_cast<std::size_t>(idx.location)]);
      }
      observation = rewarded ? sym::kReward : sym::kNoReward;
    } else {
      rewarded = false;
      if (action == AgentAction::Move) {
        next_location = 1 - idx.location;
        dt = world.travel_time;
      }
      observation = next_location == 0 ? sym::kLoc1 : sym::kLoc2;
    }
    const auto& kernel = mdp.transition[static_cast<std::size_t>(action)];
    state = static_cast<int>(rng.categorical(kernel.row(state)));
    t += dt;
  }
  return run;
}

void ToyConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(n_states >= 1, "toy n_states must be >= 1");
  require(n_observations >= 1, "toy n_observations must be >= 1");
  require(n_actions >= 1, "toy n_actions must be >= 1");
  require(expected_length >= 1.0, "toy expected_length must be >= 1");
  require(event_rate > 0.0, "toy event_rate must be positive");
  require(rate_scale > 0.0, "toy rate_scale must be positive");
}

SwitchingSMJP toy_model(const ToyConfig& config, Rng& rng) {
  config.validate();
  const int n = config.n_states;
  std::vector<GeneratorMatrix> generators;
  for (int k = 0; k < config.n_actions; ++k) {
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) a(i, j) = config.rate_scale * (0.1 + 0.9 * rng.uniform());
    for (int i = 0; i < n; ++i) a(i, i) = -a.row(i).sum();
    generators.push_back(GeneratorMatrix::validated(a));
  }
  // Two symbols: P(o=0 | s) evenly spaced over [0.1, 0.9] in a random order so
  // every state is distinguishable. Otherwise sharpened Dirichlet rows.
  Matrix l(n, config.n_observations);
  if (config.n_observations == 2) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)], order[rng.uniform_index(static_cast<std::size_t>(i + 1))]);
    for (int i = 0; i < n; ++i) {
      const double p = n == 1 ? 0.5 : 0.1 + 0.8 * order[static_cast<std::size_t>(i)] / (n - 1);
      l(i, 0) = p;
      l(i, 1) = 1.0 - p;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const auto row = rng.dirichlet_flat(static_cast<std::size_t>(config.n_observations));
      for (int o = 0; o < config.n_observations; ++o)
        l(i, o) = row[static_cast<std::size_t>(o)] * row[static_cast<std::size_t>(o)];
      l.row(i) /= l.row(i).sum();
    }
  }
  double max_exit = 0.0;
  for (const auto& g : generators) max_exit = std::max(max_exit, g.max_exit_rate());
  return SwitchingSMJP(Alphabet::numbered(AlphabetKind::State, static_cast<std::size_t>(n), "s"),
                       Alphabet::numbered(AlphabetKind::Action, static_cast<std::size_t>(config.n_actions), "a"),
                       Alphabet::numbered(AlphabetKind::Observation, static_cast<std::size_t>(config.n_observations), "o"),
                       std::move(generators), {StochasticMatrix::validated(l)}, Vector::Constant(n, 1.0 / n),
                       2.0 * max_exit > 0.0 ? 2.0 * max_exit : 1.0);
}

ToyData sample_toy(const SwitchingSMJP& model, double event_rate, double horizon, Rng& rng) {
  if (!(event_rate > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "event rate and horizon must be positive");
  const int k_count = model.n_actions();
  ToyData out{model, EventSequence{}, {}, LatentTrajectory{}};
  out.events.id = "toy";
  out.events.observations = model.observations();
  out.events.actions = model.actions();
  out.path.horizon = horizon;
  out.path.from_uniformization = true;

  int action = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k_count)));
  int state = static_cast<int>(rng.categorical(model.initial()));
  out.path.initial_state = state;
  out.path.states.push_back(state);

  const double omega = model.omega();
  double next_event = rng.exponential(event_rate);
  double next_virtual = rng.exponential(omega);
  for (;;) {
    const bool is_event = next_event <= next_virtual;
    const double t = is_event ? next_event : next_virtual;
    if (t >= horizon) break;
    if (is_event) {
      const int slot = model.per_action_emission() ? action : 0;
      const int o = static_cast<int>(rng.categorical(model.emission_slot(slot).probs().row(state)));
      action = o % k_count;
      out.events.events.push_back({t, o, action});
      out.states_at_events.push_back(state);
      next_event = t + rng.exponential(event_rate);
    } else {
      state = static_cast<int>(rng.categorical(model.chain(action).probs().row(state)));
      out.path.jump_times.push_back(t);
      out.path.states.push_back(state);
      next_virtual = t + rng.exponential(omega);
    }
  }
  return out;
}

ToyData generate_toy(const ToyConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng root(seed);
  Rng model_rng = root.derive("toy-model");
  Rng sample_rng = root.derive("toy-sample");
  const SwitchingSMJP model = toy_model(config, model_rng);
  return sample_toy(model, config.event_rate, config.expected_length / config.event_rate, sample_rng);
}

}  // namespace smjp
