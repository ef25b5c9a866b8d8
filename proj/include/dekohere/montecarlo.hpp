#ifndef DEKOHERE_MONTECARLO_HPP
#define DEKOHERE_MONTECARLO_HPP

#include <cstdint>
#include <variant>

#include "dekohere/noise.hpp"
#include "dekohere/operator_core.hpp"

namespace dekohere {

// U_st(t) = sum_k exp(-i (e_k t + int b_k dB_k)) P_k; one noise channel per
// distinct level of the decomposition.
struct SpectralKickModel {
  SpectralDecomposition decomposition;
  NoiseSpec noise;
};

// Time-ordered product of per-step exact unitaries
// exp(-i (w0 dt sz + dBx sx + dBy sy)); channels (x, y) of the noise spec.
struct TimeOrderedQubitModel {
  double omega0 = 0.0;
  NoiseSpec noise;  // 2 channels
};

struct TrajectoryModel {
  std::variant<SpectralKickModel, TimeOrderedQubitModel> kind;
  double horizon = 0.0;
  int n_steps = 0;  // 0: default ceil(horizon / (1e-3 * horizon)) = 1000

  int dim() const;
  int steps() const { return n_steps > 0 ? n_steps : 1000; }
  void validate() const;
};

// Entrywise sample mean and standard error (real and imaginary parts kept
// separately).
struct MCEstimate {
  Matrix mean;
  RealMatrix stderr_re;
  RealMatrix stderr_im;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

struct MomentOracleResult {
  Superoperator analytic;   // exp(-K(t)/2)
  Superoperator mc_mean;    // average of exp(-i A(t))
  RealMatrix mc_stderr_re;
  RealMatrix mc_stderr_im;
  long n_samples = 0;
  // scalar moments of the Ito integral X = int beta dB (odd-moment checks)
  double x_mean = 0.0, x_mean_se = 0.0;
  double x3_mean = 0.0, x3_mean_se = 0.0;
};

// Draw trajectory `index`; pure function of (model, seed, index).
Matrix sample_unitary(const TrajectoryModel& model, std::uint64_t seed,
                      std::uint64_t index);

// E[U rho U†] over n_samples trajectories. The reduction runs over fixed-size
// chunks combined in index order, so the result is bit-identical for any
// worker count. n_threads 0 resolves DEKOHERE_THREADS (0 or unset = auto).
MCEstimate mc_average(const TrajectoryModel& model, const DensityOperator& rho0,
                      long n_samples, std::uint64_t seed, int n_threads = 0);

// Same trajectories evaluated at the n_eval+1 uniform block boundaries of
// [0, horizon] in a single pass; element 0 is the t = 0 state.
std::vector<MCEstimate> mc_average_grid(const TrajectoryModel& model,
                                        const DensityOperator& rho0, long n_samples,
                                        std::uint64_t seed, int n_eval,
                                        int n_threads = 0);

// Appendix-style moment oracle for A(t) = int beta(s) S dB(s) with a single
// channel of variance rate gamma: analytic = exp(-S^2 gamma int beta^2 / 2),
// mc = mean over sampled paths of exp(-i X S).
MomentOracleResult moment_oracle(const Superoperator& s, const RealFn& beta,
                                 const NoiseSpec& noise, double t, long n_samples,
                                 std::uint64_t seed, int n_steps = 1000,
                                 int n_threads = 0);

int resolve_threads(int requested);

}  // namespace dekohere

#endif
