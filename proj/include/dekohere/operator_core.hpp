#ifndef DEKOHERE_OPERATOR_CORE_HPP
#define DEKOHERE_OPERATOR_CORE_HPP

#include <vector>

#include "dekohere/types.hpp"

namespace dekohere {

// Hermitian operator on a finite-dimensional space (hbar = 1, dimensionless
// energies). Construction validates Hermiticity.
struct HermitianOperator {
  int dim = 0;
  Matrix entries;

  HermitianOperator() = default;
  explicit HermitianOperator(Matrix m, double tol = kTightTol);
};

// H = sum_k e_k P_k with e_k ascending and P_k orthogonal projectors.
// Eigenvalues closer than the merge tolerance share one projector.
struct SpectralDecomposition {
  int dim = 0;
  RealVector eigenvalues;          // distinct, ascending
  std::vector<Matrix> projectors;  // same length as eigenvalues
  std::vector<int> multiplicities;

  int levels() const { return static_cast<int>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

// Positive-semidefinite unit-trace matrix. checked() validates all three
// invariants; trusted() skips them for intermediate values known to be valid.
struct DensityOperator {
  int dim = 0;
  Matrix entries;

  static DensityOperator checked(Matrix m, double herm_tol = kTightTol,
                                 double trace_tol = kTightTol,
                                 double psd_tol = kPsdTol);
  static DensityOperator trusted(Matrix m);

  double min_eigenvalue() const;
};

// Linear map on d x d operators stored as a d^2 x d^2 matrix with the
// column-stacking convention vec(A rho B) = (B^T (x) A) vec(rho).
struct Superoperator {
  int dim = 0;
  Matrix matrix;  // d^2 x d^2

  Superoperator() = default;
  Superoperator(int d, Matrix m) : dim(d), matrix(std::move(m)) {}

  Matrix apply(const Matrix& rho) const;

  Superoperator operator+(const Superoperator& o) const;
  Superoperator operator-(const Superoperator& o) const;
  Superoperator operator*(const Superoperator& o) const;  // composition
  Superoperator operator*(Complex c) const;
  static Superoperator zero(int d);
  static Superoperator identity(int d);
};

inline Superoperator operator*(Complex c, const Superoperator& s) { return s * c; }
inline Superoperator operator*(double c, const Superoperator& s) { return s * Complex(c); }

Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, int dim);

// --- operations -------------------------------------------------------------

SpectralDecomposition spectral_decompose(const HermitianOperator& op,
                                         double degeneracy_tol = kDefaultDegeneracyTol);
SpectralDecomposition spectral_decompose(const Matrix& hermitian,
                                         double degeneracy_tol = kDefaultDegeneracyTol);

// exp(scale * A). Hermitian A with real or purely imaginary scale goes through
// the eigendecomposition; anything else uses scaling-and-squaring.
Matrix matrix_exponential(const Matrix& a, Complex scale = Complex{1.0, 0.0});

// [A, .]
Superoperator commutator_superop(const Matrix& a);
// rho -> L rho R
Superoperator sandwich_superop(const Matrix& l, const Matrix& r);
// rho -> A rho,  rho -> rho B
Superoperator left_mult_superop(const Matrix& a);
Superoperator right_mult_superop(const Matrix& b);

// Choi = sum_ij |i><j| (x) S(|i><j|); PSD iff S completely positive.
Matrix choi_matrix(const Superoperator& s);

// Trace out every tensor factor not listed in keep. dims are the factor
// dimensions in tensor order; keep indices are in ascending order.
Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep);
DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& dims,
                              const std::vector<int>& keep);

Matrix kronecker(const Matrix& a, const Matrix& b);

// Pauli matrices in the convention sigma_z = diag(1,-1), sigma_pm = (x pm i y)/2.
namespace pauli {
Matrix identity();
Matrix x();
Matrix y();
Matrix z();
Matrix plus();
Matrix minus();
}  // namespace pauli

}  // namespace dekohere

#endif
