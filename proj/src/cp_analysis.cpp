#include "dekohere/cp_analysis.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "dekohere/rng.hpp"

namespace dekohere {

std::vector<Matrix> gell_mann_basis(int n) {
  if (n < 2) throw validation_error("gell_mann_basis: n must be >= 2");
  std::vector<Matrix> basis;
  basis.reserve(n * n - 1);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Matrix sym = Matrix::Zero(n, n);
      sym(j, k) = 1.0;
      sym(k, j) = 1.0;
      basis.push_back(std::move(sym));
      Matrix asym = Matrix::Zero(n, n);
      asym(j, k) = Complex{0.0, -1.0};
      asym(k, j) = Complex{0.0, 1.0};
      basis.push_back(std::move(asym));
    }
  for (int l = 1; l < n; ++l) {
    Matrix diag = Matrix::Zero(n, n);
    const double norm = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) diag(j, j) = norm;
    diag(l, l) = -l * norm;
    basis.push_back(std::move(diag));
  }
  return basis;
}

TripartiteCoefficients TripartiteCoefficients::zeros(int n_s, int n_1, int n_2) {
  TripartiteCoefficients c;
  c.n_s = n_s;
  c.n_1 = n_1;
  c.n_2 = n_2;
  const int as = n_s * n_s - 1, a1 = n_1 * n_1 - 1, a2 = n_2 * n_2 - 1;
  c.alpha = RealVector::Zero(as);
  c.beta = RealVector::Zero(a1);
  c.gamma = RealVector::Zero(a2);
  c.delta = RealMatrix::Zero(as, a1);
  c.eps = RealMatrix::Zero(as, a2);
  c.eta = RealMatrix::Zero(a1, a2);
  c.nu.assign(as, RealMatrix::Zero(a1, a2));
  return c;
}

void TripartiteCoefficients::validate_shapes() const {
  const int as = n_s * n_s - 1, a1 = n_1 * n_1 - 1, a2 = n_2 * n_2 - 1;
  if (alpha.size() != as || beta.size() != a1 || gamma.size() != a2)
    throw validation_error("TripartiteCoefficients: vector length mismatch");
  if (delta.rows() != as || delta.cols() != a1 || eps.rows() != as ||
      eps.cols() != a2 || eta.rows() != a1 || eta.cols() != a2)
    throw validation_error("TripartiteCoefficients: matrix shape mismatch");
  if (static_cast<int>(nu.size()) != as)
    throw validation_error("TripartiteCoefficients: nu must have Ns^2-1 slices");
  for (const auto& slice : nu)
    if (slice.rows() != a1 || slice.cols() != a2)
      throw validation_error("TripartiteCoefficients: nu slice shape mismatch");
}

bool TripartiteCoefficients::system_uncorrelated(double tol) const {
  if (alpha.cwiseAbs().maxCoeff() > tol) return false;
  if (delta.size() && delta.cwiseAbs().maxCoeff() > tol) return false;
  if (eps.size() && eps.cwiseAbs().maxCoeff() > tol) return false;
  for (const auto& slice : nu)
    if (slice.size() && slice.cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

namespace {

Matrix kron3(const Matrix& a, const Matrix& b, const Matrix& c) {
  return kronecker(kronecker(a, b), c);
}

}  // namespace

DensityOperator build_tripartite(const TripartiteCoefficients& coeffs, double psd_tol) {
  coeffs.validate_shapes();
  const auto ss = gell_mann_basis(coeffs.n_s);
  const auto s1 = gell_mann_basis(coeffs.n_1);
  const auto s2 = gell_mann_basis(coeffs.n_2);
  const Matrix is = Matrix::Identity(coeffs.n_s, coeffs.n_s);
  const Matrix i1 = Matrix::Identity(coeffs.n_1, coeffs.n_1);
  const Matrix i2 = Matrix::Identity(coeffs.n_2, coeffs.n_2);
  const long d = coeffs.total_dim();

  Matrix rho = Matrix::Identity(d, d);
  for (size_t i = 0; i < ss.size(); ++i)
    if (coeffs.alpha[i] != 0.0) rho += coeffs.alpha[i] * kron3(ss[i], i1, i2);
  for (size_t j = 0; j < s1.size(); ++j)
    if (coeffs.beta[j] != 0.0) rho += coeffs.beta[j] * kron3(is, s1[j], i2);
  for (size_t k = 0; k < s2.size(); ++k)
    if (coeffs.gamma[k] != 0.0) rho += coeffs.gamma[k] * kron3(is, i1, s2[k]);
  for (size_t i = 0; i < ss.size(); ++i) {
    for (size_t j = 0; j < s1.size(); ++j)
      if (coeffs.delta(i, j) != 0.0) rho += coeffs.delta(i, j) * kron3(ss[i], s1[j], i2);
    for (size_t k = 0; k < s2.size(); ++k)
      if (coeffs.eps(i, k) != 0.0) rho += coeffs.eps(i, k) * kron3(ss[i], i1, s2[k]);
  }
  for (size_t j = 0; j < s1.size(); ++j)
    for (size_t k = 0; k < s2.size(); ++k)
      if (coeffs.eta(j, k) != 0.0) rho += coeffs.eta(j, k) * kron3(is, s1[j], s2[k]);
  for (size_t i = 0; i < ss.size(); ++i)
    for (size_t j = 0; j < s1.size(); ++j)
      for (size_t k = 0; k < s2.size(); ++k)
        if (coeffs.nu[i](j, k) != 0.0)
          rho += coeffs.nu[i](j, k) * kron3(ss[i], s1[j], s2[k]);
  rho /= static_cast<double>(d);

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -psd_tol)
    throw validation_error("build_tripartite: coefficients give min eigenvalue " +
                           std::to_string(min_ev) + "; state not PSD");
  return DensityOperator::trusted(std::move(rho));
}

PrimedCoefficients primed_coefficients(const TripartiteCoefficients& coeffs) {
  coeffs.validate_shapes();
  const double norm = 1.0 / static_cast<double>(coeffs.total_dim());
  PrimedCoefficients p;
  p.delta = norm * (coeffs.delta - coeffs.alpha * coeffs.beta.transpose());
  p.eps = norm * (coeffs.eps - coeffs.alpha * coeffs.gamma.transpose());
  p.eta = norm * (coeffs.eta - coeffs.beta * coeffs.gamma.transpose());
  p.nu.reserve(coeffs.nu.size());
  for (size_t i = 0; i < coeffs.nu.size(); ++i)
    p.nu.push_back(norm * (coeffs.nu[i] -
                           coeffs.alpha[i] * coeffs.beta * coeffs.gamma.transpose()));
  return p;
}

Superoperator ReducedMap::total() const {
  const int d = linear.dim;
  Matrix t = linear.matrix;
  const Vector off = vectorize(offset);
  // Tr(X) reads the diagonal slots of vec(X)
  for (int i = 0; i < d; ++i) t.col(i + d * i) += off;
  return {d, std::move(t)};
}

ReducedMap reduced_map_tomography(const Matrix& u, const TripartiteCoefficients& coeffs) {
  coeffs.validate_shapes();
  if (!coeffs.system_uncorrelated())
    throw validation_error(
        "reduced_map_tomography: system-environment correlations present; "
        "the construction requires alpha, delta, eps, nu to vanish");
  const long d_total = coeffs.total_dim();
  if (u.rows() != d_total || u.cols() != d_total)
    throw validation_error("reduced_map_tomography: unitary dimension mismatch");
  if ((u * u.adjoint() - Matrix::Identity(d_total, d_total)).cwiseAbs().maxCoeff() > 1e-10)
    throw validation_error("reduced_map_tomography: input is not unitary");

  const auto s1 = gell_mann_basis(coeffs.n_1);
  const auto s2 = gell_mann_basis(coeffs.n_2);
  Matrix rho1 = Matrix::Identity(coeffs.n_1, coeffs.n_1);
  for (size_t j = 0; j < s1.size(); ++j) rho1 += coeffs.beta[j] * s1[j];
  rho1 /= coeffs.n_1;
  Matrix rho2 = Matrix::Identity(coeffs.n_2, coeffs.n_2);
  for (size_t k = 0; k < s2.size(); ++k) rho2 += coeffs.gamma[k] * s2[k];
  rho2 /= coeffs.n_2;

  const RealMatrix eta_p =
      (coeffs.eta - coeffs.beta * coeffs.gamma.transpose()) /
      static_cast<double>(coeffs.total_dim());
  Matrix g = Matrix::Zero(coeffs.n_1 * coeffs.n_2, coeffs.n_1 * coeffs.n_2);
  for (size_t j = 0; j < s1.size(); ++j)
    for (size_t k = 0; k < s2.size(); ++k)
      if (eta_p(j, k) != 0.0) g += eta_p(j, k) * kronecker(s1[j], s2[k]);

  const std::vector<int> dims{coeffs.n_s, coeffs.n_1, coeffs.n_2};
  const std::vector<int> keep{0};
  const Matrix is = Matrix::Identity(coeffs.n_s, coeffs.n_s);

  ReducedMap map;
  map.offset = partial_trace(Matrix(u * kronecker(is, g) * u.adjoint()), dims, keep);

  const int ds = coeffs.n_s;
  Matrix linear = Matrix::Zero(ds * ds, ds * ds);
  Matrix eij = Matrix::Zero(ds, ds);
  const Matrix env = kronecker(rho1, rho2);
  for (int i = 0; i < ds; ++i)
    for (int j = 0; j < ds; ++j) {
      eij(i, j) = 1.0;
      const Matrix out =
          partial_trace(Matrix(u * kronecker(eij, env) * u.adjoint()), dims, keep);
      linear.col(i + ds * j) = vectorize(out);
      eij(i, j) = 0.0;
    }
  map.linear = Superoperator{ds, std::move(linear)};
  return map;
}

ChoiReport cp_check(const Superoperator& s, double tol) {
  ChoiReport report;
  report.tol = tol;
  const Matrix choi = choi_matrix(s);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (choi + choi.adjoint()),
                                           Eigen::EigenvaluesOnly);
  report.spectrum = es.eigenvalues();
  report.min_eigenvalue = report.spectrum.minCoeff();
  report.is_cp = report.min_eigenvalue >= -tol;

  report.is_tp = true;
  Matrix eij = Matrix::Zero(s.dim, s.dim);
  for (int i = 0; i < s.dim && report.is_tp; ++i)
    for (int j = 0; j < s.dim; ++j) {
      eij(i, j) = 1.0;
      const Complex tr = s.apply(eij).trace();
      const Complex expect = (i == j) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      if (std::abs(tr - expect) > tol) {
        report.is_tp = false;
        break;
      }
      eij(i, j) = 0.0;
    }
  return report;
}

TripartiteCoefficients sample_feasible_coefficients(int n_s, int n_1, int n_2,
                                                    std::uint64_t seed, int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    TripartiteCoefficients c = TripartiteCoefficients::zeros(n_s, n_1, n_2);
    std::uint64_t slot = 0;
    auto draw = [&]() {
      return rng::normal(seed, 0xfea51b1eULL, attempt, slot++);
    };
    std::vector<double*> entries;
    for (auto v : {&c.alpha, &c.beta, &c.gamma})
      for (Eigen::Index i = 0; i < v->size(); ++i) entries.push_back(&(*v)[i]);
    for (auto m : {&c.delta, &c.eps, &c.eta})
      for (Eigen::Index i = 0; i < m->size(); ++i) entries.push_back(m->data() + i);
    for (auto& slice : c.nu)
      for (Eigen::Index i = 0; i < slice.size(); ++i) entries.push_back(slice.data() + i);
    double norm2 = 0.0;
    for (double* e : entries) {
      *e = draw();
      norm2 += *e * *e;
    }
    // scale the whole coefficient vector to norm <= 1/2
    const double target = 0.5 * rng::to_unit(rng::mix(seed, 0x5ca1eULL, attempt, 0));
    const double scale = target / std::sqrt(norm2);
    for (double* e : entries) *e *= scale;
    try {
      build_tripartite(c);
      return c;
    } catch (const validation_error&) {
      // not PSD; draw again
    }
  }
  throw std::runtime_error("sample_feasible_coefficients: no PSD draw found");
}

}  // namespace dekohere
