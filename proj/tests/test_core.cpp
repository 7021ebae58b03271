#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "oracles.hpp"
#include "smjp/core.hpp"

using namespace smjp;

TEST_SUITE("core") {
  TEST_CASE("validate_generator accepts rows summing to zero") {
    Matrix a(2, 2);
    a << -1, 1, 2, -2;
    const GeneratorMatrix g = validate_generator(a);
    CHECK(g.rates() == a);
    CHECK(g.max_exit_rate() == 2.0);
  }

  TEST_CASE("validate_generator rejects bad input") {
    Matrix a(2, 2);
    a << -1, 0.5, 1, -1;
    CHECK_THROWS_WITH_AS(validate_generator(a), doctest::Contains("RowSumNonzero"), Error);
    a << -1, 1, -1, 1;
    CHECK_THROWS_WITH_AS(validate_generator(a), doctest::Contains("NegativeOffDiagonal"), Error);
    a << -1, 1, std::nan(""), 0;
    CHECK_THROWS_WITH_AS(validate_generator(a), doctest::Contains("NonFinite"), Error);
    CHECK_THROWS_WITH_AS(validate_generator(Matrix::Zero(2, 3)), doctest::Contains("NotSquare"), Error);
  }

  TEST_CASE("validate_generator renormalizes tiny residuals and is idempotent") {
    Matrix a(2, 2);
    a << -1 + 1e-11, 1, 2, -2;
    const GeneratorMatrix g = validate_generator(a);
    CHECK(std::abs(g.rates().row(0).sum()) < 1e-15);
    const GeneratorMatrix again = validate_generator(g.rates());
    CHECK(again.rates() == g.rates());
  }

  TEST_CASE("matrix_exponential at t=0 is the identity") {
    Rng rng(1);
    const GeneratorMatrix g = validate_generator(oracle::random_rates(4, rng));
    CHECK(matrix_exponential(g, 0.0).probs() == Matrix::Identity(4, 4));
    CHECK_THROWS_AS(matrix_exponential(g, -1.0), Error);
  }

  TEST_CASE("matrix_exponential matches the two-state closed form") {
    for (double r : {0.1, 1.0, 7.5})
      for (double t : {0.01, 0.5, 3.0}) {
        Matrix a(2, 2);
        a << -r, r, r, -r;
        const Matrix p = matrix_exponential(validate_generator(a), t).probs();
        CHECK((p - oracle::two_state_exp(r, t)).cwiseAbs().maxCoeff() < 1e-12);
      }
  }

  TEST_CASE("matrix_exponential agrees with Eigen's MatrixFunctions and is a semigroup") {
    Rng rng(2);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 2 + trial % 5;
      const GeneratorMatrix g = validate_generator(oracle::random_rates(n, rng, 3.0));
      const double scale = std::max(g.max_exit_rate(), 1.0);
      const double t1 = 100.0 * rng.uniform() / scale, t2 = 100.0 * rng.uniform() / scale;
      const Matrix reference = (g.rates() * t1).exp();
      const Matrix p1 = matrix_exponential(g, t1).probs();
      CHECK((p1 - reference).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((p1.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
      CHECK(p1.minCoeff() >= 0.0);
      const Matrix p12 = p1 * matrix_exponential(g, t2).probs();
      CHECK((p12 - matrix_exponential(g, t1 + t2).probs()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("log_domain_dot") {
    const double ninf = -std::numeric_limits<double>::infinity();
    Vector lv(2);
    lv << 0.0, ninf;
    const Vector id = log_domain_dot(lv, StochasticMatrix::identity(2));
    CHECK(id(0) == 0.0);
    CHECK(id(1) == ninf);

    lv << std::log(0.5), std::log(0.5);
    Matrix half = Matrix::Constant(2, 2, 0.5);
    const Vector fixed = log_domain_dot(lv, StochasticMatrix::validated(half));
    CHECK(fixed(0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix b = oracle::random_stochastic(4, 4, rng);
      Vector v(4);
      for (int i = 0; i < 4; ++i) v(i) = rng.uniform_open();
      const Vector expected = (b.transpose() * v).array().log();
      const Vector got = log_domain_dot(v.array().log().matrix(), StochasticMatrix::validated(b));
      CHECK(((got - expected).array() / expected.array().abs().max(1.0)).abs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(log_domain_dot(Vector::Zero(3), StochasticMatrix::identity(2)), Error);
  }

  TEST_CASE("stochastic validation") {
    Matrix m(2, 2);
    m << 0.5, 0.5, 0.2, 0.7;
    CHECK_THROWS_WITH_AS(StochasticMatrix::validated(m), doctest::Contains("NotStochastic"), Error);
    m << 1.0 + 1e-13, -1e-13, 0.2, 0.8;
    const StochasticMatrix s = StochasticMatrix::validated(m);
    CHECK(s(0, 1) == 0.0);
  }

  TEST_CASE("alphabet") {
    const Alphabet a(AlphabetKind::Observation, {"loc1", "loc2", "reward"});
    CHECK(a.size() == 3);
    CHECK(a.index_of("loc2") == 1);
    CHECK(a.label(2) == "reward");
    CHECK_THROWS_WITH_AS(a.index_of("nope"), doctest::Contains("UnknownSymbol"), Error);
    CHECK_THROWS_AS(Alphabet(AlphabetKind::State, {}), Error);
    CHECK_THROWS_AS(Alphabet(AlphabetKind::State, {"a", "a"}), Error);
    CHECK_THROWS_AS(Alphabet(AlphabetKind::State, {"a,b"}), Error);
    CHECK(Alphabet::numbered(AlphabetKind::State, 3, "s").label(2) == "s2");
  }

  TEST_CASE("rng streams are reproducible and independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
    Rng c = Rng(42).split(1), d = Rng(42).split(2);
    CHECK(c() != d());
    CHECK(Rng(42).derive("x")() == Rng(42).derive("x")());
    Rng u(5);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) sum += u.uniform();
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  }
}
