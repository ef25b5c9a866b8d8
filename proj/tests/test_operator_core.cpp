#include <doctest.h>

#include <cmath>

#include "dekohere/operator_core.hpp"
#include "test_support.hpp"

using namespace dekohere;
using test::max_abs;

TEST_CASE("spectral_decompose: diagonal sigma_z") {
  const auto sd = spectral_decompose(pauli::z());
  REQUIRE(sd.levels() == 2);
  CHECK(sd.eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(sd.eigenvalues[1] == doctest::Approx(1.0));
  Matrix p0(2, 2), p1(2, 2);
  p0 << 0, 0, 0, 1;  // eigenvalue -1
  p1 << 1, 0, 0, 0;  // eigenvalue +1
  CHECK(max_abs(sd.projectors[0] - p0) < 1e-14);
  CHECK(max_abs(sd.projectors[1] - p1) < 1e-14);
}

TEST_CASE("spectral_decompose: fully degenerate identity merges") {
  const auto sd = spectral_decompose(Matrix(Matrix::Identity(3, 3)), 1e-9);
  REQUIRE(sd.levels() == 1);
  CHECK(sd.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(sd.multiplicities[0] == 3);
  CHECK(max_abs(sd.projectors[0] - Matrix::Identity(3, 3)) < 1e-12);
}

TEST_CASE("spectral_decompose: sigma_x by hand") {
  const auto sd = spectral_decompose(pauli::x());
  REQUIRE(sd.levels() == 2);
  CHECK(sd.eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(sd.eigenvalues[1] == doctest::Approx(1.0));
  Matrix pm(2, 2), pp(2, 2);
  pm << 0.5, -0.5, -0.5, 0.5;
  pp << 0.5, 0.5, 0.5, 0.5;
  CHECK(max_abs(sd.projectors[0] - pm) < 1e-12);
  CHECK(max_abs(sd.projectors[1] - pp) < 1e-12);
}

TEST_CASE("spectral_decompose rejects non-Hermitian input") {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  CHECK_THROWS_AS(spectral_decompose(m), validation_error);
}

TEST_CASE("spectral decomposition properties on random Hermitian operators") {
  for (int d : {2, 3, 5, 8}) {
    const Matrix h = test::random_hermitian(d, 100 + d);
    const auto sd = spectral_decompose(h);
    // reconstruction
    CHECK(max_abs(sd.reconstruct() - h) < 1e-10);
    // completeness and orthogonality
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& p : sd.projectors) sum += p;
    CHECK(max_abs(sum - Matrix::Identity(d, d)) < 1e-10);
    for (int a = 0; a < sd.levels(); ++a)
      for (int b = 0; b < sd.levels(); ++b) {
        const Matrix prod = sd.projectors[a] * sd.projectors[b];
        CHECK(max_abs(prod - (a == b ? sd.projectors[a] : Matrix(Matrix::Zero(d, d)))) <
              1e-10);
      }
  }
}

TEST_CASE("matrix_exponential: zero matrix") {
  const Matrix z = Matrix::Zero(3, 3);
  CHECK(max_abs(matrix_exponential(z) - Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("matrix_exponential: Pauli closed form") {
  // exp(-i (pi/2) sx) = -i sx
  const Matrix got = matrix_exponential(pauli::x(), -kI * (std::numbers::pi / 2));
  CHECK(max_abs(got - Matrix(-kI * pauli::x())) < 1e-14);
}

TEST_CASE("matrix_exponential: nilpotent series truncates") {
  Matrix n(2, 2), expect(2, 2);
  n << 0, 1, 0, 0;
  expect << 1, 1, 0, 1;
  CHECK(max_abs(matrix_exponential(n) - expect) < 1e-14);
}

TEST_CASE("matrix_exponential rejects non-square input") {
  CHECK_THROWS_AS(matrix_exponential(Matrix(Matrix::Zero(2, 3))), validation_error);
}

TEST_CASE("unitarity of Hermitian exponentials") {
  for (int d : {2, 4, 7}) {
    const Matrix h = test::random_hermitian(d, 7 * d);
    for (double t : {0.1, 1.0, 10.0}) {
      const Matrix u = matrix_exponential(h, -kI * t);
      CHECK(max_abs(u * u.adjoint() - Matrix::Identity(d, d)) < 1e-12);
    }
  }
}

TEST_CASE("commutator_superop") {
  SUBCASE("identity gives the zero superoperator") {
    const auto s = commutator_superop(Matrix(Matrix::Identity(3, 3)));
    CHECK(max_abs(s.matrix) == 0.0);
  }
  SUBCASE("[sz, sx] = 2i sy") {
    const auto s = commutator_superop(pauli::z());
    CHECK(max_abs(s.apply(pauli::x()) - Matrix(2.0 * kI * pauli::y())) < 1e-14);
  }
  SUBCASE("[sz, sz] = 0") {
    const auto s = commutator_superop(pauli::z());
    CHECK(max_abs(s.apply(pauli::z())) < 1e-14);
  }
  SUBCASE("apply rejects mismatched dimension") {
    const auto s = commutator_superop(pauli::z());
    CHECK_THROWS_AS(s.apply(Matrix(Matrix::Zero(3, 3))), validation_error);
  }
}

TEST_CASE("sandwich_superop") {
  SUBCASE("identity pair is the identity map") {
    const auto s = sandwich_superop(pauli::identity(), pauli::identity());
    CHECK(max_abs(s.matrix - Matrix::Identity(4, 4)) == 0.0);
  }
  SUBCASE("sx . sy on the identity gives i sz") {
    const auto s = sandwich_superop(pauli::x(), pauli::y());
    CHECK(max_abs(s.apply(pauli::identity()) - Matrix(kI * pauli::z())) < 1e-14);
  }
  SUBCASE("sigma+ . sigma- maps the excited projector down") {
    const auto s = sandwich_superop(pauli::plus(), pauli::minus());
    Matrix excited(2, 2), expect(2, 2);
    excited << 0, 0, 0, 1;  // |1><1|
    expect << 1, 0, 0, 0;   // sigma+ |1><1| sigma- = |0><0|
    CHECK(max_abs(s.apply(excited) - expect) < 1e-14);
  }
}

TEST_CASE("superoperator faithfulness on a full operator basis") {
  const int d = 3;
  const Matrix l = test::random_hermitian(d, 11);
  const Matrix r = test::random_hermitian(d, 12);
  const auto s = sandwich_superop(l, r);
  const auto c = commutator_superop(l);
  Matrix eij = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      eij(i, j) = 1.0;
      CHECK(max_abs(s.apply(eij) - Matrix(l * eij * r)) < 1e-12);
      CHECK(max_abs(c.apply(eij) - Matrix(l * eij - eij * l)) < 1e-12);
      eij(i, j) = 0.0;
    }
}

TEST_CASE("choi_matrix conventions") {
  SUBCASE("identity map: 2|Phi+><Phi+|") {
    const auto id = Superoperator::identity(2);
    const Matrix c = choi_matrix(id);
    Matrix expect = Matrix::Zero(4, 4);
    expect(0, 0) = expect(0, 3) = expect(3, 0) = expect(3, 3) = 1.0;
    CHECK(max_abs(c - expect) < 1e-14);
  }
  SUBCASE("transpose map has eigenvalue -1") {
    // S(E_ij) = E_ji: column (i + d j) holds vec(E_ji)
    Matrix t = Matrix::Zero(4, 4);
    Matrix eij = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        eij(i, j) = 1.0;
        t.col(i + 2 * j) = vectorize(Matrix(eij.transpose()));
        eij(i, j) = 0.0;
      }
    const Matrix c = choi_matrix(Superoperator{2, t});
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(-1.0));
  }
  SUBCASE("completely depolarizing map: Choi = I/2") {
    Matrix t = Matrix::Zero(4, 4);
    const Matrix half = 0.5 * Matrix::Identity(2, 2);
    for (int i = 0; i < 2; ++i) t.col(i + 2 * i) = vectorize(half);
    const Matrix c = choi_matrix(Superoperator{2, t});
    CHECK(max_abs(c - Matrix(0.5 * Matrix::Identity(4, 4))) < 1e-14);
  }
  SUBCASE("Kraus maps have PSD Choi") {
    const int d = 3;
    const Matrix u = test::random_unitary(d, 55);
    // two-branch Kraus set from a projective split of a unitary
    Matrix p = Matrix::Zero(d, d);
    p(0, 0) = 1.0;
    const Matrix k1 = u * p;
    Matrix q = Matrix::Identity(d, d) - p;
    const Matrix k2 = u * q;
    const Superoperator s = sandwich_superop(k1, k1.adjoint()) +
                            sandwich_superop(k2, k2.adjoint());
    const Matrix c = choi_matrix(s);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("partial_trace") {
  SUBCASE("product state recovers the kept factor") {
    const auto a = test::random_density(2, 1);
    const auto b = test::random_density(3, 2);
    const Matrix rho = kronecker(a.entries, b.entries);
    CHECK(max_abs(partial_trace(rho, {2, 3}, {0}) - a.entries) < 1e-12);
    CHECK(max_abs(partial_trace(rho, {2, 3}, {1}) - b.entries) < 1e-12);
  }
  SUBCASE("Bell state reduces to I/2 on both sides") {
    Vector bell(4);
    bell << 1, 0, 0, 1;
    bell /= std::sqrt(2.0);
    const Matrix rho = bell * bell.adjoint();
    const Matrix half = 0.5 * Matrix::Identity(2, 2);
    CHECK(max_abs(partial_trace(rho, {2, 2}, {0}) - half) < 1e-14);
    CHECK(max_abs(partial_trace(rho, {2, 2}, {1}) - half) < 1e-14);
  }
  SUBCASE("tripartite diagonal product, keep the middle factor") {
    Matrix a(2, 2), b(2, 2), c(2, 2);
    a << 0.75, 0, 0, 0.25;
    b << 0.6, 0, 0, 0.4;
    c << 0.9, 0, 0, 0.1;
    const Matrix rho = kronecker(kronecker(a, b), c);
    CHECK(max_abs(partial_trace(rho, {2, 2, 2}, {1}) - b) < 1e-14);
  }
  SUBCASE("trace is preserved and composition order does not matter") {
    const auto rho = test::random_density(12, 3);
    const std::vector<int> dims{2, 3, 2};
    const Matrix keep0 = partial_trace(rho.entries, dims, {0});
    CHECK(std::abs(keep0.trace() - Complex{1.0, 0.0}) < 1e-12);
    // trace out factor 2 first, then factor 1; compare against direct keep {0}
    const Matrix step1 = partial_trace(rho.entries, dims, {0, 1});
    const Matrix step2 = partial_trace(step1, {2, 3}, {0});
    CHECK(max_abs(step2 - keep0) < 1e-12);
    // opposite order: factor 1 first
    const Matrix alt1 = partial_trace(rho.entries, dims, {0, 2});
    const Matrix alt2 = partial_trace(alt1, {2, 2}, {0});
    CHECK(max_abs(alt2 - keep0) < 1e-12);
  }
  SUBCASE("inconsistent dims rejected") {
    const auto rho = test::random_density(4, 9);
    CHECK_THROWS_AS(partial_trace(rho.entries, {2, 3}, {0}), validation_error);
  }
}

TEST_CASE("DensityOperator validation") {
  CHECK_THROWS_AS(DensityOperator::checked(Matrix(2.0 * Matrix::Identity(2, 2))),
                  validation_error);
  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityOperator::checked(neg), validation_error);
  CHECK_NOTHROW(DensityOperator::checked(Matrix(0.5 * Matrix::Identity(2, 2))));
}
