#include "dekohere/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <Eigen/Eigenvalues>

#include "dekohere/rng.hpp"

namespace dekohere {

namespace {

constexpr long kChunk = 256;

RealVector uniform_grid(double t, int n_steps) {
  RealVector g(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) g[i] = t * i / n_steps;
  return g;
}

// exp(-i v.sigma) = cos|v| I - i sin|v|/|v| v.sigma, exactly unitary
inline void apply_pauli_step(Matrix& u, double vx, double vy, double vz) {
  const double r = std::sqrt(vx * vx + vy * vy + vz * vz);
  Complex c = 1.0, sx = 0.0, sy = 0.0, sz = 0.0;
  if (r > 0.0) {
    const double sinc = std::sin(r) / r;
    c = std::cos(r);
    sx = -kI * sinc * vx;
    sy = -kI * sinc * vy;
    sz = -kI * sinc * vz;
  }
  const Complex a00 = c + sz, a01 = sx - kI * sy;
  const Complex a10 = sx + kI * sy, a11 = c - sz;
  const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  u(0, 0) = a00 * u00 + a01 * u10;
  u(0, 1) = a00 * u01 + a01 * u11;
  u(1, 0) = a10 * u00 + a11 * u10;
  u(1, 1) = a10 * u01 + a11 * u11;
}

// Unitaries at the n_eval+1 block boundaries of a single trajectory,
// boundary 0 being t = 0.
std::vector<Matrix> trajectory_unitaries(const TrajectoryModel& model,
                                         std::uint64_t seed, std::uint64_t index,
                                         int n_eval) {
  const int total_steps = model.steps();
  const int block = total_steps / n_eval;
  std::vector<Matrix> out;
  out.reserve(n_eval + 1);

  if (const auto* m = std::get_if<SpectralKickModel>(&model.kind)) {
    const auto& sd = m->decomposition;
    const BrownianPaths paths =
        sample_paths(m->noise, uniform_grid(model.horizon, total_steps), seed, index);
    out.push_back(Matrix::Identity(sd.dim, sd.dim));
    RealVector kick = RealVector::Zero(sd.levels());
    for (int b = 0; b < n_eval; ++b) {
      for (int s = b * block; s < (b + 1) * block; ++s)
        for (int k = 0; k < sd.levels(); ++k)
          kick[k] += m->noise.amplitude_at(k, paths.time_grid[s]) * paths.increments(k, s);
      const double t = paths.time_grid[(b + 1) * block];
      Matrix u = Matrix::Zero(sd.dim, sd.dim);
      for (int k = 0; k < sd.levels(); ++k)
        u += std::exp(-kI * (sd.eigenvalues[k] * t + kick[k])) * sd.projectors[k];
      out.push_back(std::move(u));
    }
    return out;
  }

  const auto& m = std::get<TimeOrderedQubitModel>(model.kind);
  const RealMatrix chol = psd_cholesky(m.noise.diffusion);
  const double dt = model.horizon / total_steps;
  const double sq = std::sqrt(dt);
  Matrix u = Matrix::Identity(2, 2);
  out.push_back(u);
  for (int b = 0; b < n_eval; ++b) {
    for (int s = b * block; s < (b + 1) * block; ++s) {
      const double z0 = rng::normal(seed, index, static_cast<std::uint64_t>(s), 0);
      const double z1 = rng::normal(seed, index, static_cast<std::uint64_t>(s), 1);
      const double ts = dt * s;
      const double bx = m.noise.amplitude_at(0, ts) * sq * (chol(0, 0) * z0);
      const double by =
          m.noise.amplitude_at(1, ts) * sq * (chol(1, 0) * z0 + chol(1, 1) * z1);
      apply_pauli_step(u, bx, by, m.omega0 * dt);
    }
    out.push_back(u);
  }
  return out;
}

// Per-chunk sums shifted by the chunk's first sample; the shift keeps the
// variance combination well conditioned (identical samples give stderr 0
// exactly instead of cancellation noise).
struct BlockSums {
  long count = 0;
  std::vector<Matrix> pivot;
  std::vector<Matrix> d1;        // sum of (x - pivot)
  std::vector<RealMatrix> d2_re; // sum of (x - pivot)^2, real part
  std::vector<RealMatrix> d2_im;
};

// Chunked fixed-order reduction of per-sample matrix stacks: bit-identical
// for any worker count because chunk sums are combined in index order.
template <typename SampleFn>
std::vector<MCEstimate> reduce_stacks(int dim, int stack, long n_samples,
                                      std::uint64_t seed, int n_threads,
                                      SampleFn&& sample) {
  const long n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<BlockSums> chunks(n_chunks);

  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long c = next.fetch_add(1);
      if (c >= n_chunks) return;
      BlockSums acc;
      acc.d1.assign(stack, Matrix::Zero(dim, dim));
      acc.d2_re.assign(stack, RealMatrix::Zero(dim, dim));
      acc.d2_im.assign(stack, RealMatrix::Zero(dim, dim));
      const long lo = c * kChunk;
      const long hi = std::min(n_samples, lo + kChunk);
      acc.count = hi - lo;
      for (long i = lo; i < hi; ++i) {
        const std::vector<Matrix> vals = sample(static_cast<std::uint64_t>(i));
        if (i == lo) acc.pivot = vals;
        for (int b = 0; b < stack; ++b) {
          const Matrix d = vals[b] - acc.pivot[b];
          acc.d1[b] += d;
          acc.d2_re[b] += d.real().cwiseAbs2();
          acc.d2_im[b] += d.imag().cwiseAbs2();
        }
      }
      chunks[c] = std::move(acc);
    }
  };

  const int workers = static_cast<int>(
      std::max<long>(1, std::min<long>(resolve_threads(n_threads), n_chunks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const double n = static_cast<double>(n_samples);
  std::vector<MCEstimate> out(stack);
  for (int b = 0; b < stack; ++b) {
    Matrix sum = Matrix::Zero(dim, dim);
    for (long c = 0; c < n_chunks; ++c)
      sum += static_cast<double>(chunks[c].count) * chunks[c].pivot[b] + chunks[c].d1[b];
    const Matrix mean = sum / n;

    // sum over chunks of sum_i (x_i - m)^2 via the shifted chunk sums
    RealMatrix var_re = RealMatrix::Zero(dim, dim);
    RealMatrix var_im = RealMatrix::Zero(dim, dim);
    for (long c = 0; c < n_chunks; ++c) {
      const Matrix shift = chunks[c].pivot[b] - mean;
      var_re += chunks[c].d2_re[b] +
                2.0 * (shift.real().cwiseProduct(chunks[c].d1[b].real())) +
                static_cast<double>(chunks[c].count) * shift.real().cwiseAbs2();
      var_im += chunks[c].d2_im[b] +
                2.0 * (shift.imag().cwiseProduct(chunks[c].d1[b].imag())) +
                static_cast<double>(chunks[c].count) * shift.imag().cwiseAbs2();
    }
    out[b].n_samples = n_samples;
    out[b].seed = seed;
    out[b].mean = mean;
    out[b].stderr_re = (var_re.cwiseMax(0.0) / (n * (n - 1.0))).cwiseSqrt();
    out[b].stderr_im = (var_im.cwiseMax(0.0) / (n * (n - 1.0))).cwiseSqrt();
  }
  return out;
}

}  // namespace

int TrajectoryModel::dim() const {
  if (const auto* s = std::get_if<SpectralKickModel>(&kind)) return s->decomposition.dim;
  return 2;
}

void TrajectoryModel::validate() const {
  if (horizon <= 0.0) throw validation_error("TrajectoryModel: horizon must be > 0");
  if (const auto* s = std::get_if<SpectralKickModel>(&kind)) {
    s->noise.validate();
    if (s->noise.n_channels != s->decomposition.levels())
      throw validation_error("SpectralKickModel: one noise channel per level required");
  } else {
    const auto& q = std::get<TimeOrderedQubitModel>(kind);
    q.noise.validate();
    if (q.noise.n_channels != 2)
      throw validation_error("TimeOrderedQubitModel: exactly two channels (x, y)");
  }
}

Matrix sample_unitary(const TrajectoryModel& model, std::uint64_t seed,
                      std::uint64_t index) {
  model.validate();
  return trajectory_unitaries(model, seed, index, 1).back();
}

std::vector<MCEstimate> mc_average_grid(const TrajectoryModel& model,
                                        const DensityOperator& rho0, long n_samples,
                                        std::uint64_t seed, int n_eval, int n_threads) {
  model.validate();
  if (n_samples < 2) throw validation_error("mc_average: n_samples must be >= 2");
  if (rho0.dim != model.dim())
    throw validation_error("mc_average: state dimension does not match model");
  if (n_eval < 1) throw validation_error("mc_average_grid: n_eval must be >= 1");

  // make the step count a multiple of the evaluation blocks
  TrajectoryModel adjusted = model;
  const int per_block = std::max(1, (model.steps() + n_eval - 1) / n_eval);
  adjusted.n_steps = per_block * n_eval;

  return reduce_stacks(model.dim(), n_eval + 1, n_samples, seed, n_threads,
                       [&](std::uint64_t i) {
                         const auto us = trajectory_unitaries(adjusted, seed, i, n_eval);
                         std::vector<Matrix> states;
                         states.reserve(us.size());
                         for (const auto& u : us)
                           states.emplace_back(u * rho0.entries * u.adjoint());
                         return states;
                       });
}

MCEstimate mc_average(const TrajectoryModel& model, const DensityOperator& rho0,
                      long n_samples, std::uint64_t seed, int n_threads) {
  return mc_average_grid(model, rho0, n_samples, seed, 1, n_threads).back();
}

MomentOracleResult moment_oracle(const Superoperator& s, const RealFn& beta,
                                 const NoiseSpec& noise, double t, long n_samples,
                                 std::uint64_t seed, int n_steps, int n_threads) {
  noise.validate();
  if (noise.n_channels != 1)
    throw validation_error("moment_oracle: a single noise channel is required");
  if (n_samples < 2) throw validation_error("moment_oracle: n_samples must be >= 2");
  const double gamma = noise.diffusion(0, 0);
  const int dd = static_cast<int>(s.matrix.rows());

  MomentOracleResult out;
  out.n_samples = n_samples;

  // K(t) = gamma * int beta^2 ds * S^2 for time-independent S
  const double beta2 = simpson(
      [&](double u) {
        const double b = beta ? beta(u) : 1.0;
        return b * b;
      },
      0.0, t, kDefaultQuadraturePanels);
  out.analytic = Superoperator{
      s.dim,
      matrix_exponential(Matrix(s.matrix * s.matrix), Complex{-0.5 * gamma * beta2, 0.0})};

  // diagonalize S once so each sample costs one diagonal rescaling
  Eigen::ComplexEigenSolver<Matrix> es(s.matrix);
  const Matrix v = es.eigenvectors();
  const Vector lam = es.eigenvalues();
  const Matrix vinv = v.inverse();
  const bool diagonalizable =
      ((v * lam.asDiagonal() * vinv - s.matrix).cwiseAbs().maxCoeff() < 1e-9);

  const double dt = t / n_steps;
  const double sq = std::sqrt(dt * gamma);
  auto draw_x = [&](std::uint64_t i) {
    double x = 0.0;
    for (int step = 0; step < n_steps; ++step) {
      const double b = beta ? beta(dt * step) : 1.0;
      x += b * sq * rng::normal(seed, i, static_cast<std::uint64_t>(step), 0);
    }
    return x;
  };

  std::vector<double> x_store(n_samples);
  auto ests = reduce_stacks(dd, 1, n_samples, seed, n_threads, [&](std::uint64_t i) {
    const double x = draw_x(i);
    x_store[i] = x;
    std::vector<Matrix> one;
    if (diagonalizable) {
      Vector phases(lam.size());
      for (Eigen::Index k = 0; k < lam.size(); ++k)
        phases[k] = std::exp(-kI * x * lam[k]);
      one.emplace_back(v * phases.asDiagonal() * vinv);
    } else {
      one.emplace_back(matrix_exponential(s.matrix, -kI * x));
    }
    return one;
  });
  out.mc_mean = Superoperator{s.dim, ests[0].mean};
  out.mc_stderr_re = ests[0].stderr_re;
  out.mc_stderr_im = ests[0].stderr_im;

  // scalar odd moments of X over the same draws
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s6 = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const double x = x_store[i];
    const double x3 = x * x * x;
    s1 += x;
    s2 += x * x;
    s3 += x3;
    s6 += x3 * x3;
  }
  const double n = static_cast<double>(n_samples);
  out.x_mean = s1 / n;
  out.x_mean_se =
      std::sqrt(std::max(0.0, (s2 - n * out.x_mean * out.x_mean)) / (n * (n - 1.0)));
  out.x3_mean = s3 / n;
  out.x3_mean_se =
      std::sqrt(std::max(0.0, (s6 - n * out.x3_mean * out.x3_mean)) / (n * (n - 1.0)));
  return out;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DEKOHERE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace dekohere
