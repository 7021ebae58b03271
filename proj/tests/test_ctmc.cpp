#include "doctest.h"
#include "oracles.hpp"
#include "smjp/ctmc.hpp"
#include "smjp/stats.hpp"

using namespace smjp;

namespace {

EventSequence two_events() {
  EventSequence s;
  s.events = {{1.0, 0, 0}, {2.0, 0, 0}};
  return s;
}

}  // namespace

TEST_SUITE("ctmc") {
  TEST_CASE("zero generator never jumps") {
    Rng rng(1);
    const auto path = gillespie_sample(GeneratorMatrix::zero(3), 2, 100.0, rng);
    CHECK(path.jump_times.empty());
    CHECK(path.states == std::vector<int>{2});
    CHECK(path.state_at(50.0) == 2);
  }

  TEST_CASE("two-state holding times are Exp(1)") {
    Matrix a(2, 2);
    a << -1, 1, 1, -1;
    Rng rng(7);
    const auto path = gillespie_sample(validate_generator(a), 0, 1e4, rng);
    std::vector<double> holds;
    for (std::size_t i = 1; i < path.jump_times.size(); ++i) holds.push_back(path.jump_times[i] - path.jump_times[i - 1]);
    CHECK(mean(holds) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(ks_test_exponential(holds, 1.0).p_value > 0.01);
    for (std::size_t i = 1; i < path.states.size(); ++i) CHECK(path.states[i] != path.states[i - 1]);
  }

  TEST_CASE("jump destinations follow the row rates") {
    Matrix a(3, 3);
    a << -3, 1, 2, 0.5, -1, 0.5, 4, 1, -5;
    Rng rng(11);
    const auto path = gillespie_sample(validate_generator(a), 0, 4e4, rng);
    Matrix counts = Matrix::Zero(3, 3);
    for (std::size_t i = 1; i < path.states.size(); ++i) counts(path.states[i - 1], path.states[i]) += 1;
    // Stationary jump rate is 66/28, so about 94k jumps.
    CHECK(path.jump_times.size() > 90000);
    for (int s = 0; s < 3; ++s) {
      const double n = counts.row(s).sum();
      for (int j = 0; j < 3; ++j) {
        if (j == s) continue;
        const double p = a(s, j) / -a(s, s);
        CHECK(std::abs(counts(s, j) - n * p) < 3.0 * std::sqrt(n * p * (1 - p)) + 1.0);
      }
    }
  }

  TEST_CASE("uniformize") {
    Matrix a(2, 2);
    a << -1, 1, 2, -2;
    const Matrix b = uniformize(validate_generator(a), 2.0).probs();
    Matrix expected(2, 2);
    expected << 0.5, 0.5, 1, 0;
    CHECK(b == expected);
    CHECK(uniformize(GeneratorMatrix::zero(3), 0.7).probs() == Matrix::Identity(3, 3));
    CHECK_THROWS_WITH_AS(uniformize(validate_generator(a), 1.5), doctest::Contains("OmegaTooSmall"), Error);
  }

  TEST_CASE("uniformized chain at a Poisson number of steps has law exp(At)") {
    Rng rng(5);
    const GeneratorMatrix g = validate_generator(oracle::random_rates(3, rng));
    const double omega = default_omega(g);
    const StochasticMatrix b = uniformize(g, omega);
    const double t = 1.3 / g.max_exit_rate();
    const Matrix p = matrix_exponential(g, t).probs();
    const int samples = 10000000;
    for (int s0 = 0; s0 < 3; ++s0) {
      Vector hist = Vector::Zero(3);
      for (int i = 0; i < samples; ++i) {
        int s = s0;
        double clock = rng.exponential(omega);
        while (clock < t) {
          s = static_cast<int>(rng.categorical(b.probs().row(s)));
          clock += rng.exponential(omega);
        }
        hist(s) += 1.0;
      }
      const double tv = 0.5 * (hist / samples - p.row(s0).transpose()).cwiseAbs().sum();
      CHECK(tv < 1e-3);
    }
  }

  TEST_CASE("virtual time counts are Poisson") {
    double total = 0.0;
    for (int seed = 0; seed < 1000; ++seed) {
      Rng rng(static_cast<std::uint64_t>(seed));
      const auto times = sample_virtual_times(10.0, 0.0, 100.0, rng);
      CHECK(std::is_sorted(times.begin(), times.end()));
      if (!times.empty()) CHECK((times.front() > 0.0 && times.back() < 100.0));
      total += static_cast<double>(times.size());
    }
    const double m = total / 1000.0;
    CHECK(m > 970.0);
    CHECK(m < 1030.0);
    Rng rng(1);
    CHECK_THROWS_WITH_AS(sample_virtual_times(1.0, 2.0, 2.0, rng), doctest::Contains("EmptyInterval"), Error);
  }

  TEST_CASE("time grid keeps every event exactly") {
    EventSequence seq = two_events();
    double total = 0.0;
    for (int seed = 0; seed < 2000; ++seed) {
      Rng rng(static_cast<std::uint64_t>(seed));
      const TimeGrid g = build_time_grid(seq, 5.0, rng);
      REQUIRE(g.event_positions.size() == 2);
      CHECK(g.times[g.event_positions[0]] == 1.0);
      CHECK(g.times[g.event_positions[1]] == 2.0);
      CHECK(g.event_positions[0] == 0);
      CHECK(g.event_positions[1] == g.size() - 1);
      for (std::size_t t = 1; t < g.size(); ++t) CHECK(g.times[t] > g.times[t - 1]);
      for (std::size_t t = 1; t + 1 < g.size(); ++t) {
        CHECK(g.tags[t] == GridTag::Virtual);
        CHECK(g.observations[t] == kNullObservation);
      }
      total += static_cast<double>(g.size() - 2);
    }
    CHECK(total / 2000 == doctest::Approx(5.0).epsilon(0.05));

    Rng rng(3);
    const TimeGrid bare = build_time_grid(seq, 1e-12, rng);
    CHECK(bare.times == std::vector<double>{1.0, 2.0});
    seq.events[1].time = 1.0;
    CHECK_THROWS_WITH_AS(build_time_grid(seq, 1.0, rng), doctest::Contains("NonMonotoneTimestamps"), Error);
  }

  TEST_CASE("virtual points inherit the action of their interval") {
    EventSequence seq;
    seq.actions = Alphabet::numbered(AlphabetKind::Action, 2, "a");
    seq.events = {{0.0, 0, 1}, {3.0, 0, 0}, {6.0, 0, 1}};
    Rng rng(9);
    const TimeGrid g = build_time_grid(seq, 4.0, rng);
    for (std::size_t t = 0; t < g.size(); ++t) {
      const int expected = g.times[t] < 3.0 ? 1 : (g.times[t] < 6.0 ? 0 : 1);
      CHECK(g.actions[t] == expected);
    }
  }

  TEST_CASE("too many virtual points is refused") {
    EventSequence seq;
    seq.events = {{0.0, 0, 0}, {1e9, 0, 0}};
    Rng rng(1);
    CHECK_THROWS_WITH_AS(build_time_grid(seq, 1.0, rng), doctest::Contains("TooManyVirtualPoints"), Error);
  }
}
