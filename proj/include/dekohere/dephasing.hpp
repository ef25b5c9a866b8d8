#ifndef DEKOHERE_DEPHASING_HPP
#define DEKOHERE_DEPHASING_HPP

#include <variant>

#include "dekohere/noise.hpp"
#include "dekohere/operator_core.hpp"

namespace dekohere {

// One Brownian kick shared by every level: coherences decay like
// exp(-gamma t (e_n - e_m)^2 / 2).
struct GlobalWhiteNoise {
  double gamma = 0.0;
};

// Independent kick per level: exp(-gamma t (e_n^2 + e_m^2) / 2) off diagonal.
struct UncorrelatedKicks {
  double gamma = 0.0;
};

// User-supplied amplitude e(s; level) and correlation g(s; level, level');
// g must satisfy g(s,k,k) = 1 and |g| <= 1 (spot-checked, not proven).
struct GeneralKicks {
  std::function<double(double, int)> amplitude;
  std::function<double(double, int, int)> correlation;
};

using DephasingKind = std::variant<GlobalWhiteNoise, UncorrelatedKicks, GeneralKicks>;

struct DephasingModel {
  SpectralDecomposition decomposition;
  DephasingKind kind;

  void validate() const;
};

// Two-particle spectral grid: states are labelled (E_CM, E_rel) pairs in
// row-major order (cm index slow, rel index fast). The kick amplitude and the
// Brownian correlations depend on the center-of-mass label only.
struct EnergyGrid2P {
  RealVector cm_levels;
  RealVector rel_levels;
  std::function<double(double, int)> amplitude;         // (s, cm index)
  std::function<double(double, int, int)> correlation;  // (s, cm, cm')

  int dim() const { return static_cast<int>(cm_levels.size() * rel_levels.size()); }
  int index(int cm, int rel) const {
    return cm * static_cast<int>(rel_levels.size()) + rel;
  }
  double total_energy(int cm, int rel) const { return cm_levels[cm] + rel_levels[rel]; }
};

// E[exp(-i (chi_n - chi_m))] magnitude at time t; 1 on the diagonal.
double coherence_factor(const DephasingModel& model, int n, int m, double t);

// rho_nm(t) = exp(-i (e_n - e_m) t) factor(n,m,t) rho_nm(0) in the eigenbasis,
// assembled basis-free through the spectral projectors.
DensityOperator evolve_dephasing(const DephasingModel& model, const DensityOperator& rho0,
                                 double t);

double coherence_factor_2p(const EnergyGrid2P& grid, int cm, int cm_p, double t);
DensityOperator evolve_two_particle(const EnergyGrid2P& grid, const DensityOperator& rho0,
                                    double t);

}  // namespace dekohere

#endif
