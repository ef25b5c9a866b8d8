#ifndef DEKOHERE_GENERATORS_HPP
#define DEKOHERE_GENERATORS_HPP

#include <variant>
#include <vector>

#include "dekohere/noise.hpp"
#include "dekohere/operator_core.hpp"

namespace dekohere {

// dρ/dt = -i[H,ρ] - (γ/2)[H,[H,ρ]]
struct PDME {
  Matrix hamiltonian;
  double gamma = 0.0;
};

// dρ/dt = -i[H,ρ] - 1/2 Σ_i d<η_i>_t/dt [V_i,[V_i,ρ]] with selfadjoint V_i
// driven by mutually uncorrelated processes.
struct SelfadjointLindblad {
  Matrix hamiltonian;
  std::vector<Matrix> lindblads;
  std::vector<QuadraticVariationFn> variations;
};

// H = H1 + λ(t) H2 with random λ; μ is the mean of ∫λ and variation the
// quadratic variation of the integrated parameter.
struct StochasticParameter {
  Matrix h1;
  Matrix h2;
  RealFn mu;
  QuadraticVariationFn variation;
};

// Qubit in a transverse random magnetic field: rate function Λ(t) scaling the
// x-y generator family, plus the coherent ω0 σz term.
struct QubitXY {
  double omega0 = 0.0;
  double gamma_x = 0.0;
  double gamma_y = 0.0;
  double gamma_xy = 0.0;
  std::function<double(double)> lambda;  // Λ(t), Λ(0)=0, nondecreasing
};

using GeneratorSpec = std::variant<PDME, SelfadjointLindblad, StochasticParameter, QubitXY>;

struct QubitGenerators {
  Superoperator l_xy;
  Superoperator l_plus;
  Superoperator l_minus;
  Superoperator d_xy;

  Superoperator sum() const { return l_xy + l_plus + l_minus + d_xy; }
};

void validate(const GeneratorSpec& spec);

// Instantaneous generator L(t) as a superoperator. Rate functions are
// differentiated by central differences with step 1e-6 * max(1, t).
Superoperator build_generator(const GeneratorSpec& spec, double t);

// The four x-y generators:
//   L_xy  = -(γx-γy)/2 ([σx,[σx,.]] - [σy,[σy,.]])
//   L_±   = (γx+γy) ([σ± . , σ∓] + [σ±, . σ∓])
//   D_xy  = 2 γxy (σx . σy + σy . σx)
// Requires γxy² <= γx γy.
QubitGenerators qubit_generators(double gamma_x, double gamma_y, double gamma_xy);

// Generator forced by Gaussian increments with covariance
// [[γx, γxy], [γxy, γy]] dt:
//   -1/2 (γx [σx,[σx,.]] + γy [σy,[σy,.]] + γxy ([σx,[σy,.]] + [σy,[σx,.]]))
// Serves as the independent oracle for the x-y family; the sum of the four
// generators above equals exactly twice this map.
Superoperator qubit_generator_moment(double gamma_x, double gamma_y, double gamma_xy);

// Time-ordered product of midpoint piecewise-constant exponentials
// exp(dt L(t_mid)); a single exponential when L is time independent.
DensityOperator propagate(const GeneratorSpec& spec, const DensityOperator& rho0,
                          double t, int n_steps = 1000);

// Propagator superoperator over [0, t] (same stepping as propagate).
Superoperator propagator(const GeneratorSpec& spec, double t, int n_steps = 1000);

double numeric_rate(const std::function<double(double)>& f, double t);

}  // namespace dekohere

#endif
