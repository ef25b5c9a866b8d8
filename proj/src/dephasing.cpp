#include "dekohere/dephasing.hpp"

#include <cmath>

namespace dekohere {

namespace {

double kick_variance(const std::function<double(double, int)>& amp,
                     const std::function<double(double, int, int)>& corr, int n, int m,
                     double t) {
  auto integrand = [&](double s) {
    const double en = amp(s, n);
    const double em = amp(s, m);
    return en * en + em * em - 2.0 * corr(s, n, m) * en * em;
  };
  return simpson(integrand, 0.0, t, kDefaultQuadraturePanels);
}

void spot_check_correlation(const std::function<double(double, int, int)>& corr,
                            int levels) {
  for (double s : {0.0, 0.37, 1.0}) {
    for (int k = 0; k < levels; ++k) {
      if (std::abs(corr(s, k, k) - 1.0) > 1e-9)
        throw validation_error("GeneralKicks: correlation g(s,k,k) must equal 1");
      for (int j = 0; j < levels; ++j)
        if (std::abs(corr(s, k, j)) > 1.0 + 1e-9)
          throw validation_error("GeneralKicks: |g| must not exceed 1");
    }
  }
}

}  // namespace

void DephasingModel::validate() const {
  if (decomposition.levels() < 1)
    throw validation_error("DephasingModel: empty spectral decomposition");
  if (const auto* g = std::get_if<GlobalWhiteNoise>(&kind)) {
    if (g->gamma < 0.0) throw validation_error("GlobalWhiteNoise: gamma must be >= 0");
  } else if (const auto* u = std::get_if<UncorrelatedKicks>(&kind)) {
    if (u->gamma < 0.0) throw validation_error("UncorrelatedKicks: gamma must be >= 0");
  } else if (const auto* gen = std::get_if<GeneralKicks>(&kind)) {
    if (!gen->amplitude || !gen->correlation)
      throw validation_error("GeneralKicks: amplitude and correlation are required");
    spot_check_correlation(gen->correlation, decomposition.levels());
  }
}

double coherence_factor(const DephasingModel& model, int n, int m, double t) {
  if (t < 0.0) throw validation_error("coherence_factor: t must be >= 0");
  const int levels = model.decomposition.levels();
  if (n < 0 || n >= levels || m < 0 || m >= levels)
    throw validation_error("coherence_factor: level index out of range");
  if (n == m) return 1.0;  // populations untouched, trace conserved

  const RealVector& e = model.decomposition.eigenvalues;
  if (const auto* g = std::get_if<GlobalWhiteNoise>(&model.kind)) {
    const double de = e[n] - e[m];
    return std::exp(-0.5 * g->gamma * t * de * de);
  }
  if (const auto* u = std::get_if<UncorrelatedKicks>(&model.kind)) {
    return std::exp(-0.5 * u->gamma * t * (e[n] * e[n] + e[m] * e[m]));
  }
  const auto& gen = std::get<GeneralKicks>(model.kind);
  return std::exp(-0.5 * kick_variance(gen.amplitude, gen.correlation, n, m, t));
}

DensityOperator evolve_dephasing(const DephasingModel& model, const DensityOperator& rho0,
                                 double t) {
  model.validate();
  const auto& sd = model.decomposition;
  if (rho0.dim != sd.dim)
    throw validation_error("evolve_dephasing: state dimension " +
                           std::to_string(rho0.dim) + " does not match decomposition");
  const int levels = sd.levels();
  Matrix out = Matrix::Zero(sd.dim, sd.dim);
  for (int n = 0; n < levels; ++n) {
    const Matrix pn_rho = sd.projectors[n] * rho0.entries;
    for (int m = 0; m < levels; ++m) {
      const Complex phase = std::exp(-kI * (sd.eigenvalues[n] - sd.eigenvalues[m]) * t);
      out += phase * coherence_factor(model, n, m, t) * (pn_rho * sd.projectors[m]);
    }
  }
  return DensityOperator::trusted(std::move(out));
}

double coherence_factor_2p(const EnergyGrid2P& grid, int cm, int cm_p, double t) {
  if (t < 0.0) throw validation_error("coherence_factor_2p: t must be >= 0");
  const int ncm = static_cast<int>(grid.cm_levels.size());
  if (cm < 0 || cm >= ncm || cm_p < 0 || cm_p >= ncm)
    throw validation_error("coherence_factor_2p: CM index out of range");
  if (cm == cm_p) return 1.0;  // internal dynamics unaffected
  return std::exp(-0.5 * kick_variance(grid.amplitude, grid.correlation, cm, cm_p, t));
}

DensityOperator evolve_two_particle(const EnergyGrid2P& grid, const DensityOperator& rho0,
                                    double t) {
  if (!grid.amplitude || !grid.correlation)
    throw validation_error("evolve_two_particle: amplitude and correlation are required");
  const int d = grid.dim();
  if (rho0.dim != d)
    throw validation_error("evolve_two_particle: state dimension does not match grid");
  const int ncm = static_cast<int>(grid.cm_levels.size());
  const int nrel = static_cast<int>(grid.rel_levels.size());

  // cache the CM-pair variances; they do not depend on the relative labels
  RealMatrix half_var = RealMatrix::Zero(ncm, ncm);
  for (int i = 0; i < ncm; ++i)
    for (int j = i + 1; j < ncm; ++j) {
      half_var(i, j) = 0.5 * kick_variance(grid.amplitude, grid.correlation, i, j, t);
      half_var(j, i) = half_var(i, j);
    }

  Matrix out(d, d);
  for (int i = 0; i < ncm; ++i)
    for (int a = 0; a < nrel; ++a)
      for (int j = 0; j < ncm; ++j)
        for (int b = 0; b < nrel; ++b) {
          const double de = grid.total_energy(i, a) - grid.total_energy(j, b);
          const Complex phase = std::exp(-kI * de * t);
          const double factor = (i == j) ? 1.0 : std::exp(-half_var(i, j));
          out(grid.index(i, a), grid.index(j, b)) =
              phase * factor * rho0.entries(grid.index(i, a), grid.index(j, b));
        }
  return DensityOperator::trusted(std::move(out));
}

}  // namespace dekohere
