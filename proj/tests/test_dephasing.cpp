#include <doctest.h>

#include <cmath>

#include "dekohere/dephasing.hpp"
#include "test_support.hpp"

using namespace dekohere;
using test::max_abs;

namespace {

DephasingModel qubit_model(DephasingKind kind) {
  Matrix h(2, 2);
  h << 0, 0, 0, 1;
  DephasingModel m;
  m.decomposition = spectral_decompose(h);
  m.kind = std::move(kind);
  return m;
}

}  // namespace

TEST_CASE("coherence_factor: diagonal entries are untouched") {
  const auto m = qubit_model(GlobalWhiteNoise{2.0});
  CHECK(coherence_factor(m, 0, 0, 1.7) == 1.0);
  CHECK(coherence_factor(m, 1, 1, 0.3) == 1.0);
}

TEST_CASE("coherence_factor: global white noise closed form") {
  const auto m = qubit_model(GlobalWhiteNoise{1.0});
  // e = (0,1), gamma = 1, t = 1 -> exp(-1/2)
  CHECK(coherence_factor(m, 0, 1, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(coherence_factor(m, 0, 1, 1.0) == doctest::Approx(0.606531).epsilon(1e-6));
}

TEST_CASE("coherence_factor: uncorrelated kicks decay faster for same-sign energies") {
  Matrix h(2, 2);
  h << 1, 0, 0, 2;
  DephasingModel uncorr;
  uncorr.decomposition = spectral_decompose(h);
  uncorr.kind = UncorrelatedKicks{1.0};
  DephasingModel global = uncorr;
  global.kind = GlobalWhiteNoise{1.0};
  const double fu = coherence_factor(uncorr, 0, 1, 1.0);
  const double fg = coherence_factor(global, 0, 1, 1.0);
  CHECK(fu == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
  CHECK(fg == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(fu < fg);
}

TEST_CASE("coherence_factor: negative time rejected") {
  const auto m = qubit_model(GlobalWhiteNoise{1.0});
  CHECK_THROWS_AS(coherence_factor(m, 0, 1, -0.1), validation_error);
}

TEST_CASE("factor ordering over randomized same-sign spectra") {
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 4;
    Matrix h = Matrix::Zero(d, d);
    std::mt19937_64 gen(trial);
    std::uniform_real_distribution<double> level(0.1, 3.0);
    for (int i = 0; i < d; ++i) h(i, i) = level(gen);
    DephasingModel uncorr;
    uncorr.decomposition = spectral_decompose(h);
    uncorr.kind = UncorrelatedKicks{0.7};
    DephasingModel global = uncorr;
    global.kind = GlobalWhiteNoise{0.7};
    for (int n = 0; n < uncorr.decomposition.levels(); ++n)
      for (int m = 0; m < uncorr.decomposition.levels(); ++m)
        CHECK(coherence_factor(uncorr, n, m, 0.9) <=
              coherence_factor(global, n, m, 0.9) + 1e-12);
  }
}

TEST_CASE("general kicks reproduce the white-noise closed forms") {
  Matrix h(2, 2);
  h << 0, 0, 0, 1;
  const auto sd = spectral_decompose(h);
  const RealVector e = sd.eigenvalues;

  SUBCASE("perfect correlation = global noise") {
    DephasingModel m;
    m.decomposition = sd;
    m.kind = GeneralKicks{[e](double, int k) { return e[k]; },
                          [](double, int, int) { return 1.0; }};
    const auto global = qubit_model(GlobalWhiteNoise{1.0});
    CHECK(coherence_factor(m, 0, 1, 1.3) ==
          doctest::Approx(coherence_factor(global, 0, 1, 1.3)).epsilon(1e-9));
  }
  SUBCASE("zero correlation = uncorrelated kicks") {
    DephasingModel m;
    m.decomposition = sd;
    m.kind = GeneralKicks{[e](double, int k) { return e[k]; },
                          [](double, int j, int k) { return j == k ? 1.0 : 0.0; }};
    const auto uncorr = qubit_model(UncorrelatedKicks{1.0});
    CHECK(coherence_factor(m, 0, 1, 0.8) ==
          doctest::Approx(coherence_factor(uncorr, 0, 1, 0.8)).epsilon(1e-9));
  }
  SUBCASE("invalid correlation rejected") {
    DephasingModel m;
    m.decomposition = sd;
    m.kind = GeneralKicks{[](double, int) { return 1.0; },
                          [](double, int, int) { return 1.5; }};
    CHECK_THROWS_AS(m.validate(), validation_error);
  }
}

TEST_CASE("evolve_dephasing") {
  Matrix h(2, 2);
  h << 0, 0, 0, 1;

  SUBCASE("gamma = 0 matches unitary conjugation") {
    const auto m = qubit_model(GlobalWhiteNoise{0.0});
    const auto rho0 = test::random_density(2, 5);
    const double t = 0.9;
    const auto got = evolve_dephasing(m, rho0, t);
    const Matrix u = matrix_exponential(h, -kI * t);
    CHECK(max_abs(got.entries - Matrix(u * rho0.entries * u.adjoint())) < 1e-12);
  }
  SUBCASE("eigenbasis-diagonal states are stationary") {
    const auto m = qubit_model(GlobalWhiteNoise{2.0});
    Matrix diag(2, 2);
    diag << 0.3, 0, 0, 0.7;
    const auto got = evolve_dephasing(m, DensityOperator::trusted(diag), 2.4);
    CHECK(max_abs(got.entries - diag) < 1e-13);
  }
  SUBCASE("plus state off-diagonal magnitude follows the closed form") {
    const auto m = qubit_model(GlobalWhiteNoise{1.0});
    const auto got = evolve_dephasing(m, test::plus_state(), 1.0);
    CHECK(std::abs(got.entries(0, 1)) ==
          doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch rejected") {
    const auto m = qubit_model(GlobalWhiteNoise{1.0});
    CHECK_THROWS_AS(evolve_dephasing(m, test::random_density(3, 1), 1.0),
                    validation_error);
  }
}

TEST_CASE("evolve_dephasing preserves trace, Hermiticity, positivity") {
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 3;
    DephasingModel m;
    m.decomposition = spectral_decompose(test::random_hermitian(d, 40 + trial));
    m.kind = (trial % 2) ? DephasingKind(GlobalWhiteNoise{0.5})
                         : DephasingKind(UncorrelatedKicks{0.5});
    const auto rho0 = test::random_density(d, 60 + trial);
    const auto rho = evolve_dephasing(m, rho0, 0.7);
    CHECK(std::abs(rho.entries.trace() - Complex{1.0, 0.0}) < 1e-12);
    CHECK(hermiticity_defect(rho.entries) < 1e-12);
    CHECK(rho.min_eigenvalue() > -1e-10);
    // diagonal entries in the eigenbasis stay constant
    for (int k = 0; k < m.decomposition.levels(); ++k) {
      const auto& p = m.decomposition.projectors[k];
      const Complex before = (p * rho0.entries).trace();
      const Complex after = (p * rho.entries).trace();
      CHECK(std::abs(before - after) < 1e-12);
    }
  }
}

TEST_CASE("semigroup property of markovian factors") {
  const auto m = qubit_model(GlobalWhiteNoise{1.3});
  const double f1 = coherence_factor(m, 0, 1, 0.4);
  const double f2 = coherence_factor(m, 0, 1, 0.6);
  const double f12 = coherence_factor(m, 0, 1, 1.0);
  CHECK(f12 == doctest::Approx(f1 * f2).epsilon(1e-12));
}

// --- two-particle model ------------------------------------------------------

namespace {

EnergyGrid2P simple_grid() {
  EnergyGrid2P g;
  g.cm_levels.resize(2);
  g.cm_levels << 0.0, 1.0;
  g.rel_levels.resize(2);
  g.rel_levels << 0.0, 0.5;
  g.amplitude = [](double, int) { return 0.0; };  // overwritten per test
  return g;
}

}  // namespace

TEST_CASE("two-particle: relative coherences keep full magnitude") {
  EnergyGrid2P g = simple_grid();
  g.amplitude = [](double, int cm) { return 1.0 + cm; };
  g.correlation = [](double, int j, int k) { return j == k ? 1.0 : 0.3; };
  CHECK(coherence_factor_2p(g, 0, 0, 2.0) == 1.0);
  CHECK(coherence_factor_2p(g, 1, 1, 2.0) == 1.0);

  const auto rho0 = test::random_density(4, 77);
  const auto rho = evolve_two_particle(g, rho0, 2.0);
  // same CM, different relative label: magnitude preserved
  const int a = g.index(0, 0), b = g.index(0, 1);
  CHECK(std::abs(rho.entries(a, b)) ==
        doctest::Approx(std::abs(rho0.entries(a, b))).epsilon(1e-12));
}

TEST_CASE("two-particle: common noise cancels entirely") {
  EnergyGrid2P g = simple_grid();
  g.amplitude = [](double, int) { return 2.0; };      // CM independent
  g.correlation = [](double, int, int) { return 1.0; };  // common Brownian
  const auto rho0 = test::random_density(4, 78);
  const auto rho = evolve_two_particle(g, rho0, 1.5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(rho.entries(i, j)) ==
            doctest::Approx(std::abs(rho0.entries(i, j))).epsilon(1e-11));
}

TEST_CASE("two-particle: uncorrelated CM-linear amplitude quadrature value") {
  EnergyGrid2P g = simple_grid();
  g.amplitude = [&](double, int cm) { return g.cm_levels[cm]; };  // 0 and 1
  g.correlation = [](double, int j, int k) { return j == k ? 1.0 : 0.0; };
  // <eta>_1 = int_0^1 (0 + 1 - 0) ds = 1 -> factor e^{ -1/2 }
  CHECK(coherence_factor_2p(g, 0, 1, 1.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("two-particle: trace conserved and phases correct") {
  EnergyGrid2P g = simple_grid();
  g.amplitude = [](double, int cm) { return 0.5 * (1 + cm); };
  g.correlation = [](double, int j, int k) { return j == k ? 1.0 : 0.5; };
  const auto rho0 = test::random_density(4, 79);
  const double t = 1.1;
  const auto rho = evolve_two_particle(g, rho0, t);
  CHECK(std::abs(rho.entries.trace() - Complex{1.0, 0.0}) < 1e-12);
  // cross-CM phase: e^{-i (E_T - E_T') t} with decay factor
  const int a = g.index(0, 0), b = g.index(1, 1);
  const double de = g.total_energy(0, 0) - g.total_energy(1, 1);
  const Complex expect = std::exp(-kI * de * t) * coherence_factor_2p(g, 0, 1, t) *
                         rho0.entries(a, b);
  CHECK(std::abs(rho.entries(a, b) - expect) < 1e-12);
}
