#include "dekohere/noise.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dekohere/rng.hpp"

namespace dekohere {

void NoiseSpec::validate() const {
  if (n_channels < 1) throw validation_error("NoiseSpec: need at least one channel");
  if (diffusion.rows() != n_channels || diffusion.cols() != n_channels)
    throw validation_error("NoiseSpec: diffusion matrix must be n_channels square");
  if ((diffusion - diffusion.transpose()).cwiseAbs().maxCoeff() > kTightTol)
    throw validation_error("NoiseSpec: diffusion matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(diffusion, Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -kPsdTol)
    throw validation_error("NoiseSpec: diffusion matrix not PSD, eigenvalue " +
                           std::to_string(min_ev));
  if (!drift.empty() && static_cast<int>(drift.size()) != n_channels)
    throw validation_error("NoiseSpec: drift function count mismatch");
  if (!amplitude.empty() && static_cast<int>(amplitude.size()) != n_channels)
    throw validation_error("NoiseSpec: amplitude function count mismatch");
}

double NoiseSpec::drift_at(int channel, double t) const {
  if (drift.empty()) return 0.0;
  return drift[channel] ? drift[channel](t) : 0.0;
}

double NoiseSpec::amplitude_at(int channel, double t) const {
  if (amplitude.empty()) return 1.0;
  return amplitude[channel] ? amplitude[channel](t) : 1.0;
}

NoiseSpec NoiseSpec::white(int n_channels, double gamma) {
  NoiseSpec s;
  s.n_channels = n_channels;
  s.diffusion = gamma * RealMatrix::Identity(n_channels, n_channels);
  return s;
}

NoiseSpec NoiseSpec::common_white(int n_channels, double gamma) {
  NoiseSpec s;
  s.n_channels = n_channels;
  s.diffusion = gamma * RealMatrix::Ones(n_channels, n_channels);
  return s;
}

RealMatrix psd_cholesky(const RealMatrix& gamma) {
  Eigen::LLT<RealMatrix> llt(gamma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // semidefinite (zero or perfectly correlated channels): spectral factor with
  // eigenvalues clamped inside the jitter tolerance
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(gamma);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -kCholeskyJitter)
    throw validation_error("psd_cholesky: matrix not PSD within jitter, min eigenvalue " +
                           std::to_string(min_ev));
  RealVector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal();
}

BrownianPaths sample_paths(const NoiseSpec& spec, const RealVector& grid,
                           std::uint64_t seed, std::uint64_t path_index) {
  spec.validate();
  const int n_pts = static_cast<int>(grid.size());
  if (n_pts < 2) throw validation_error("sample_paths: grid needs at least two points");
  if (grid[0] != 0.0) throw validation_error("sample_paths: grid must start at 0");
  for (int i = 0; i + 1 < n_pts; ++i)
    if (grid[i + 1] <= grid[i])
      throw validation_error("sample_paths: grid must be strictly increasing");

  const int nc = spec.n_channels;
  const int n_steps = n_pts - 1;
  const RealMatrix chol = psd_cholesky(spec.diffusion);

  BrownianPaths paths;
  paths.time_grid = grid;
  paths.seed = seed;
  paths.increments.resize(nc, n_steps);
  RealVector z(nc);
  for (int s = 0; s < n_steps; ++s) {
    const double dt = grid[s + 1] - grid[s];
    const double sq = std::sqrt(dt);
    for (int c = 0; c < nc; ++c)
      z[c] = rng::normal(seed, path_index, static_cast<std::uint64_t>(s),
                         static_cast<std::uint64_t>(c));
    paths.increments.col(s) = sq * (chol * z);
  }
  return paths;
}

RealVector ito_integral(const RealFn& amplitude, const BrownianPaths& paths,
                        int channel) {
  if (channel < 0 || channel >= paths.n_channels())
    throw validation_error("ito_integral: channel " + std::to_string(channel) +
                           " out of range");
  const int n = paths.n_steps();
  RealVector out(n + 1);
  out[0] = 0.0;
  for (int s = 0; s < n; ++s) {
    const double b = amplitude ? amplitude(paths.time_grid[s]) : 1.0;
    out[s + 1] = out[s] + b * paths.increments(channel, s);
  }
  return out;
}

double simpson(const RealFn& f, double a, double b, int panels) {
  if (b <= a) return 0.0;
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

QuadraticVariationFn quadratic_variation(const NoiseSpec& spec,
                                         std::pair<int, int> channel_pair, int sign) {
  spec.validate();
  const auto [j, k] = channel_pair;
  if (j < 0 || j >= spec.n_channels || k < 0 || k >= spec.n_channels)
    throw validation_error("quadratic_variation: channel pair out of range");
  if (sign != 1 && sign != -1)
    throw validation_error("quadratic_variation: sign must be +1 or -1");
  const double gjj = spec.diffusion(j, j);
  const double gkk = spec.diffusion(k, k);
  const double gjk = spec.diffusion(j, k);
  auto integrand = [spec, j, k, gjj, gkk, gjk, sign](double s) {
    const double bj = spec.amplitude_at(j, s);
    const double bk = spec.amplitude_at(k, s);
    return bj * bj * gjj + bk * bk * gkk + 2.0 * sign * bj * bk * gjk;
  };
  // identical channels with the difference sign cancel exactly
  if (j == k && sign == -1)
    return {[](double) { return 0.0; }};
  return {[integrand](double t) {
    if (t <= 0.0) return 0.0;
    return simpson(integrand, 0.0, t, kDefaultQuadraturePanels);
  }};
}

}  // namespace dekohere
