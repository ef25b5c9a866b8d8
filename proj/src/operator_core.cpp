#include "dekohere/operator_core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace dekohere {

HermitianOperator::HermitianOperator(Matrix m, double tol) {
  require_hermitian(m, "HermitianOperator", tol);
  if (m.rows() < 1) throw validation_error("HermitianOperator: dim must be >= 1");
  dim = static_cast<int>(m.rows());
  entries = std::move(m);
}

Matrix SpectralDecomposition::reconstruct() const {
  Matrix h = Matrix::Zero(dim, dim);
  for (int k = 0; k < levels(); ++k) h += eigenvalues[k] * projectors[k];
  return h;
}

DensityOperator DensityOperator::checked(Matrix m, double herm_tol, double trace_tol,
                                         double psd_tol) {
  require_hermitian(m, "DensityOperator", herm_tol);
  const double tr_defect = std::abs(m.trace() - Complex{1.0, 0.0});
  if (tr_defect > trace_tol)
    throw validation_error("DensityOperator: trace deviates from 1 by " +
                           std::to_string(tr_defect));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()),
                                           Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -psd_tol)
    throw validation_error("DensityOperator: not PSD, min eigenvalue " +
                           std::to_string(min_ev));
  DensityOperator rho;
  rho.dim = static_cast<int>(m.rows());
  rho.entries = std::move(m);
  return rho;
}

DensityOperator DensityOperator::trusted(Matrix m) {
  DensityOperator rho;
  rho.dim = static_cast<int>(m.rows());
  rho.entries = std::move(m);
  return rho;
}

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (entries + entries.adjoint()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvectorize(const Vector& v, int dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Matrix Superoperator::apply(const Matrix& rho) const {
  if (rho.rows() != dim || rho.cols() != dim)
    throw validation_error("Superoperator::apply: dimension mismatch, expected " +
                           std::to_string(dim) + ", got " + std::to_string(rho.rows()));
  return unvectorize(matrix * vectorize(rho), dim);
}

Superoperator Superoperator::operator+(const Superoperator& o) const {
  return {dim, matrix + o.matrix};
}
Superoperator Superoperator::operator-(const Superoperator& o) const {
  return {dim, matrix - o.matrix};
}
Superoperator Superoperator::operator*(const Superoperator& o) const {
  return {dim, matrix * o.matrix};
}
Superoperator Superoperator::operator*(Complex c) const { return {dim, matrix * c}; }

Superoperator Superoperator::zero(int d) { return {d, Matrix::Zero(d * d, d * d)}; }
Superoperator Superoperator::identity(int d) {
  return {d, Matrix::Identity(d * d, d * d)};
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpectralDecomposition spectral_decompose(const HermitianOperator& op,
                                         double degeneracy_tol) {
  const int d = op.dim;
  Eigen::SelfAdjointEigenSolver<Matrix> es(op.entries);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_decompose: eigensolver failed");
  const RealVector evals = es.eigenvalues();  // ascending
  const Matrix evecs = es.eigenvectors();

  SpectralDecomposition sd;
  sd.dim = d;
  std::vector<double> merged;
  std::vector<Matrix> projs;
  std::vector<int> mults;
  int k = 0;
  while (k < d) {
    int j = k;
    while (j + 1 < d && evals[j + 1] - evals[k] <= degeneracy_tol) ++j;
    const int mult = j - k + 1;
    Matrix p = Matrix::Zero(d, d);
    double esum = 0.0;
    for (int c = k; c <= j; ++c) {
      p += evecs.col(c) * evecs.col(c).adjoint();
      esum += evals[c];
    }
    merged.push_back(esum / mult);
    projs.push_back(std::move(p));
    mults.push_back(mult);
    k = j + 1;
  }
  sd.eigenvalues = Eigen::Map<RealVector>(merged.data(), merged.size());
  sd.projectors = std::move(projs);
  sd.multiplicities = std::move(mults);
  return sd;
}

SpectralDecomposition spectral_decompose(const Matrix& hermitian, double degeneracy_tol) {
  return spectral_decompose(HermitianOperator(hermitian), degeneracy_tol);
}

Matrix matrix_exponential(const Matrix& a, Complex scale) {
  require_square(a, "matrix_exponential");
  if (a.isZero(0.0)) return Matrix::Identity(a.rows(), a.cols());
  if (hermiticity_defect(a) <= kTightTol) {
    const bool real_scale = std::abs(scale.imag()) == 0.0;
    const bool imag_scale = std::abs(scale.real()) == 0.0;
    if (real_scale || imag_scale) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
      Vector phases(a.rows());
      for (Eigen::Index k = 0; k < a.rows(); ++k)
        phases[k] = std::exp(scale * es.eigenvalues()[k]);
      return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
  }
  const Matrix scaled = scale * a;
  return scaled.exp();  // Pade scaling-and-squaring
}

Superoperator commutator_superop(const Matrix& a) {
  require_square(a, "commutator_superop");
  const int d = static_cast<int>(a.rows());
  const Matrix id = Matrix::Identity(d, d);
  return {d, kronecker(id, a) - kronecker(a.transpose(), id)};
}

Superoperator sandwich_superop(const Matrix& l, const Matrix& r) {
  require_square(l, "sandwich_superop");
  require_square(r, "sandwich_superop");
  if (l.rows() != r.rows())
    throw validation_error("sandwich_superop: L and R dimensions differ");
  return {static_cast<int>(l.rows()), kronecker(r.transpose(), l)};
}

Superoperator left_mult_superop(const Matrix& a) {
  require_square(a, "left_mult_superop");
  const int d = static_cast<int>(a.rows());
  return {d, kronecker(Matrix::Identity(d, d), a)};
}

Superoperator right_mult_superop(const Matrix& b) {
  require_square(b, "right_mult_superop");
  const int d = static_cast<int>(b.rows());
  return {d, kronecker(b.transpose(), Matrix::Identity(d, d))};
}

Matrix choi_matrix(const Superoperator& s) {
  const int d = s.dim;
  Matrix choi = Matrix::Zero(d * d, d * d);
  Matrix eij = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      eij(i, j) = 1.0;
      choi.block(i * d, j * d, d, d) = s.apply(eij);
      eij(i, j) = 0.0;
    }
  return choi;
}

Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep) {
  const int n = static_cast<int>(dims.size());
  long total = 1;
  for (int d : dims) {
    if (d < 1) throw validation_error("partial_trace: factor dims must be >= 1");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total)
    throw validation_error("partial_trace: product of dims (" + std::to_string(total) +
                           ") does not match matrix dimension " +
                           std::to_string(rho.rows()));
  for (size_t i = 0; i + 1 < keep.size(); ++i)
    if (keep[i] >= keep[i + 1])
      throw validation_error("partial_trace: keep indices must be strictly ascending");
  for (int k : keep)
    if (k < 0 || k >= n) throw validation_error("partial_trace: keep index out of range");

  std::vector<int> traced;
  for (int f = 0; f < n; ++f)
    if (std::find(keep.begin(), keep.end(), f) == keep.end()) traced.push_back(f);

  long dkeep = 1, dtrace = 1;
  for (int f : keep) dkeep *= dims[f];
  for (int f : traced) dtrace *= dims[f];

  // strides of each factor in the row-major multi-index of the full space
  std::vector<long> stride(n, 1);
  for (int f = n - 2; f >= 0; --f) stride[f] = stride[f + 1] * dims[f + 1];

  auto flat_index = [&](const std::vector<int>& kept_idx,
                        const std::vector<int>& traced_idx) {
    long idx = 0;
    for (size_t a = 0; a < keep.size(); ++a) idx += kept_idx[a] * stride[keep[a]];
    for (size_t a = 0; a < traced.size(); ++a) idx += traced_idx[a] * stride[traced[a]];
    return idx;
  };
  auto unpack = [&](long flat, const std::vector<int>& factors) {
    std::vector<int> out(factors.size());
    for (int a = static_cast<int>(factors.size()) - 1; a >= 0; --a) {
      out[a] = static_cast<int>(flat % dims[factors[a]]);
      flat /= dims[factors[a]];
    }
    return out;
  };

  Matrix out = Matrix::Zero(dkeep, dkeep);
  for (long r = 0; r < dkeep; ++r) {
    const auto ri = unpack(r, keep);
    for (long c = 0; c < dkeep; ++c) {
      const auto ci = unpack(c, keep);
      Complex acc{0.0, 0.0};
      for (long tr = 0; tr < dtrace; ++tr) {
        const auto ti = unpack(tr, traced);
        acc += rho(flat_index(ri, ti), flat_index(ci, ti));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& dims,
                              const std::vector<int>& keep) {
  return DensityOperator::trusted(partial_trace(rho.entries, dims, keep));
}

namespace pauli {
Matrix identity() { return Matrix::Identity(2, 2); }
Matrix x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
Matrix y() {
  Matrix m(2, 2);
  m << 0, Complex{0, -1}, Complex{0, 1}, 0;
  return m;
}
Matrix z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
Matrix plus() { return 0.5 * (x() + kI * y()); }
Matrix minus() { return 0.5 * (x() - kI * y()); }
}  // namespace pauli

}  // namespace dekohere
