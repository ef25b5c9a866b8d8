#ifndef DEKOHERE_CP_ANALYSIS_HPP
#define DEKOHERE_CP_ANALYSIS_HPP

#include <cstdint>
#include <vector>

#include "dekohere/operator_core.hpp"

namespace dekohere {

// Generalized Gell-Mann matrices for SU(n): traceless Hermitian with
// Tr(s_i s_j) = 2 delta_ij. For n = 2 this is (x, y, z) Pauli order.
std::vector<Matrix> gell_mann_basis(int n);

// Bloch-like expansion coefficients of a system (x) env1 (x) env2 state.
// nu[i] is the (j, k) matrix coupled to sigma_i^(S) x sigma_j^(1) x sigma_k^(2).
struct TripartiteCoefficients {
  int n_s = 2, n_1 = 2, n_2 = 2;
  RealVector alpha;   // Ns^2-1
  RealVector beta;    // N1^2-1
  RealVector gamma;   // N2^2-1
  RealMatrix delta;   // (Ns^2-1) x (N1^2-1)
  RealMatrix eps;     // (Ns^2-1) x (N2^2-1)
  RealMatrix eta;     // (N1^2-1) x (N2^2-1)
  std::vector<RealMatrix> nu;

  static TripartiteCoefficients zeros(int n_s, int n_1, int n_2);
  void validate_shapes() const;
  bool system_uncorrelated(double tol = 1e-14) const;  // delta, eps, nu all zero
  long total_dim() const { return static_cast<long>(n_s) * n_1 * n_2; }
};

struct PrimedCoefficients {
  RealMatrix delta;  // (d_ij - a_i b_j) / (Ns N1 N2)
  RealMatrix eps;
  RealMatrix eta;
  std::vector<RealMatrix> nu;
};

struct ChoiReport {
  double min_eigenvalue = 0.0;
  RealVector spectrum;
  bool is_cp = false;
  bool is_tp = false;
  double tol = 1e-9;
};

// Affine reduced dynamics rho -> linear(rho) + Tr(rho) * offset. The offset is
// the non-Kraus term produced by environment-internal correlations; it is kept
// visible rather than folded into the linear part.
struct ReducedMap {
  Superoperator linear;  // the Kraus part rho -> Tr_12[U (rho x rho1 x rho2) U†]
  Matrix offset;
  // linear + offset * Tr(.) as one superoperator (how the Choi test sees it)
  Superoperator total() const;
};

// (1/Ns N1 N2)[ I + a.s x I x I + ... + nu_ijk s x s x s ]; throws with the
// offending eigenvalue when the coefficients do not give a PSD state.
DensityOperator build_tripartite(const TripartiteCoefficients& coeffs,
                                 double psd_tol = kPsdTol);

PrimedCoefficients primed_coefficients(const TripartiteCoefficients& coeffs);

// Tomography of rho_S -> Tr_12[U (rho_S x rho_1 x rho_2 + Tr(rho_S) G) U†]
// where G carries the eta' correlations. The system part of coeffs must be
// absent (alpha, delta, eps, nu all zero).
ReducedMap reduced_map_tomography(const Matrix& u, const TripartiteCoefficients& coeffs);

ChoiReport cp_check(const Superoperator& s, double tol = 1e-9);

// Rejection-sample PSD-feasible coefficients with entry norms <= 1/2.
TripartiteCoefficients sample_feasible_coefficients(int n_s, int n_1, int n_2,
                                                    std::uint64_t seed,
                                                    int max_tries = 1000);

}  // namespace dekohere

#endif
