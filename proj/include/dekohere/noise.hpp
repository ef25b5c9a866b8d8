#ifndef DEKOHERE_NOISE_HPP
#define DEKOHERE_NOISE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "dekohere/types.hpp"

namespace dekohere {

// Correlated Brownian kicks: n channels with diffusion (covariance-rate)
// matrix Gamma, plus deterministic drift a_k(t) and amplitude b_k(t) per
// channel. Amplitudes multiply dB inside Ito integrals.
struct NoiseSpec {
  int n_channels = 0;
  RealMatrix diffusion;          // n x n, symmetric PSD, units 1/time
  std::vector<RealFn> drift;     // may be empty (all zero)
  std::vector<RealFn> amplitude; // may be empty (all one)

  void validate() const;  // throws naming the offending eigenvalue
  double drift_at(int channel, double t) const;
  double amplitude_at(int channel, double t) const;

  static NoiseSpec white(int n_channels, double gamma);      // Gamma = gamma * I
  static NoiseSpec common_white(int n_channels, double gamma);  // Gamma = gamma * ones
};

// Sampled increments dB over a fixed grid; column s holds the step from
// grid[s] to grid[s+1].
struct BrownianPaths {
  RealVector time_grid;      // increasing, starts at 0
  RealMatrix increments;     // n_channels x (grid size - 1)
  std::uint64_t seed = 0;

  int n_channels() const { return static_cast<int>(increments.rows()); }
  int n_steps() const { return static_cast<int>(increments.cols()); }
};

// Accumulated phase variance t -> <eta>_t; nonnegative, nondecreasing, 0 at 0.
struct QuadraticVariationFn {
  std::function<double(double)> value;
  double operator()(double t) const { return value(t); }
};

// Gaussian increments with covariance Gamma*dt per step, generated from the
// Cholesky factor of Gamma. Deterministic in (spec, grid, seed, path_index).
BrownianPaths sample_paths(const NoiseSpec& spec, const RealVector& grid,
                           std::uint64_t seed, std::uint64_t path_index = 0);

// Left-endpoint Riemann sum of amplitude dB on the path grid, cumulatively:
// out[i] = sum_{s<i} b(grid[s]) dB_s, so out[0] = 0.
RealVector ito_integral(const RealFn& amplitude, const BrownianPaths& paths, int channel);

// t -> int_0^t [ b_j^2 G_jj + b_k^2 G_kk + sign * 2 b_j b_k G_jk ] ds.
// sign = -1 gives the variance of a phase difference (coherence decay).
QuadraticVariationFn quadratic_variation(const NoiseSpec& spec,
                                         std::pair<int, int> channel_pair,
                                         int sign = -1);

// Composite Simpson on [a, b]; panels is rounded up to even.
double simpson(const RealFn& f, double a, double b, int panels = 2048);

inline constexpr int kDefaultQuadraturePanels = 2048;
inline constexpr double kCholeskyJitter = 1e-12;

// Factor B with B B^T = Gamma: the Cholesky factor when positive definite, a
// spectral square root when semidefinite (zero or perfectly correlated
// channels factor exactly). Eigenvalues below -kCholeskyJitter are an error.
RealMatrix psd_cholesky(const RealMatrix& gamma);

}  // namespace dekohere

#endif
