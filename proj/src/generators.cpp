#include "dekohere/generators.hpp"

#include <cmath>
#include <cstdio>

namespace dekohere {

namespace {

Superoperator double_commutator(const Matrix& a, const Matrix& b) {
  return commutator_superop(a) * commutator_superop(b);
}

void check_rate_inequality(double gx, double gy, double gxy) {
  if (gx < 0.0 || gy < 0.0)
    throw validation_error("qubit rates: gamma_x and gamma_y must be >= 0");
  if (gxy * gxy > gx * gy + kTightTol)
    throw validation_error("qubit rates: gamma_xy^2 exceeds gamma_x*gamma_y");
}

int generator_dim(const GeneratorSpec& spec) {
  if (const auto* p = std::get_if<PDME>(&spec)) return static_cast<int>(p->hamiltonian.rows());
  if (const auto* s = std::get_if<SelfadjointLindblad>(&spec))
    return static_cast<int>(s->hamiltonian.rows());
  if (const auto* s = std::get_if<StochasticParameter>(&spec))
    return static_cast<int>(s->h1.rows());
  return 2;
}

bool is_time_independent(const GeneratorSpec& spec) {
  return std::holds_alternative<PDME>(spec);
}

}  // namespace

double numeric_rate(const std::function<double(double)>& f, double t) {
  const double h = 1e-6 * std::max(1.0, std::abs(t));
  if (t - h < 0.0) return (f(t + h) - f(t)) / h;
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

void validate(const GeneratorSpec& spec) {
  if (const auto* p = std::get_if<PDME>(&spec)) {
    require_hermitian(p->hamiltonian, "PDME Hamiltonian");
    if (p->gamma < 0.0) throw validation_error("PDME: gamma must be >= 0");
  } else if (const auto* s = std::get_if<SelfadjointLindblad>(&spec)) {
    require_hermitian(s->hamiltonian, "SelfadjointLindblad Hamiltonian");
    if (s->lindblads.size() != s->variations.size())
      throw validation_error("SelfadjointLindblad: one variation per Lindblad required");
    for (const auto& v : s->lindblads) {
      require_hermitian(v, "SelfadjointLindblad operator");
      if (v.rows() != s->hamiltonian.rows())
        throw validation_error("SelfadjointLindblad: operator dimension mismatch");
    }
  } else if (const auto* s = std::get_if<StochasticParameter>(&spec)) {
    require_hermitian(s->h1, "StochasticParameter H1");
    require_hermitian(s->h2, "StochasticParameter H2");
    if (s->h1.rows() != s->h2.rows())
      throw validation_error("StochasticParameter: H1 and H2 dimensions differ");
  } else if (const auto* q = std::get_if<QubitXY>(&spec)) {
    check_rate_inequality(q->gamma_x, q->gamma_y, q->gamma_xy);
    if (!q->lambda) throw validation_error("QubitXY: Lambda(t) is required");
    if (std::abs(q->lambda(0.0)) > kTightTol)
      throw validation_error("QubitXY: Lambda(0) must be 0");
  }
}

Superoperator build_generator(const GeneratorSpec& spec, double t) {
  validate(spec);
  if (const auto* p = std::get_if<PDME>(&spec)) {
    const auto& h = p->hamiltonian;
    return -kI * commutator_superop(h) - 0.5 * p->gamma * double_commutator(h, h);
  }
  if (const auto* s = std::get_if<SelfadjointLindblad>(&spec)) {
    Superoperator gen = -kI * commutator_superop(s->hamiltonian);
    for (size_t i = 0; i < s->lindblads.size(); ++i) {
      const double rate = numeric_rate(s->variations[i].value, t);
      if (rate < -1e-9)
        std::fprintf(stderr,
                     "dekohere: warning: instantaneous rate %g < 0 at t=%g "
                     "(nonmarkovian dip)\n",
                     rate, t);
      gen = gen - 0.5 * rate * double_commutator(s->lindblads[i], s->lindblads[i]);
    }
    return gen;
  }
  if (const auto* s = std::get_if<StochasticParameter>(&spec)) {
    const double mu_dot = s->mu ? numeric_rate(s->mu, t) : 0.0;
    const double rate = numeric_rate(s->variation.value, t);
    return -kI * commutator_superop(s->h1) - (kI * mu_dot) * commutator_superop(s->h2) -
           0.5 * rate * double_commutator(s->h2, s->h2);
  }
  const auto& q = std::get<QubitXY>(spec);
  const double rate = numeric_rate(q.lambda, t);
  if (rate < -1e-9)
    std::fprintf(stderr, "dekohere: warning: Lambda rate %g < 0 at t=%g\n", rate, t);
  Superoperator gen = rate * qubit_generators(q.gamma_x, q.gamma_y, q.gamma_xy).sum();
  if (q.omega0 != 0.0) gen = gen - (kI * q.omega0) * commutator_superop(pauli::z());
  return gen;
}

QubitGenerators qubit_generators(double gamma_x, double gamma_y, double gamma_xy) {
  check_rate_inequality(gamma_x, gamma_y, gamma_xy);
  const Matrix sx = pauli::x(), sy = pauli::y(), sp = pauli::plus(), sm = pauli::minus();
  QubitGenerators g;
  g.l_xy = (-0.5 * (gamma_x - gamma_y)) *
           (double_commutator(sx, sx) - double_commutator(sy, sy));
  auto dissipator = [](const Matrix& s) {
    // [s . , s†] + [s, . s†] = 2 s . s† - {s†s, .}
    const Matrix sd = s.adjoint();
    return 2.0 * sandwich_superop(s, sd) - left_mult_superop(sd * s) -
           right_mult_superop(sd * s);
  };
  g.l_plus = (gamma_x + gamma_y) * dissipator(sp);
  g.l_minus = (gamma_x + gamma_y) * dissipator(sm);
  g.d_xy = (2.0 * gamma_xy) * (sandwich_superop(sx, sy) + sandwich_superop(sy, sx));
  return g;
}

Superoperator qubit_generator_moment(double gamma_x, double gamma_y, double gamma_xy) {
  check_rate_inequality(gamma_x, gamma_y, gamma_xy);
  const Matrix sx = pauli::x(), sy = pauli::y();
  return -0.5 * (gamma_x * double_commutator(sx, sx) + gamma_y * double_commutator(sy, sy) +
                 gamma_xy * (double_commutator(sx, sy) + double_commutator(sy, sx)));
}

Superoperator propagator(const GeneratorSpec& spec, double t, int n_steps) {
  validate(spec);
  const int d = generator_dim(spec);
  if (t == 0.0) return Superoperator::identity(d);
  if (t < 0.0) throw validation_error("propagator: t must be >= 0");
  if (n_steps < 1) throw validation_error("propagator: n_steps must be >= 1");

  if (is_time_independent(spec)) {
    const Superoperator gen = build_generator(spec, 0.0);
    return {d, matrix_exponential(gen.matrix, Complex{t, 0.0})};
  }

  // monotonicity guard for the accumulated rate of the x-y family
  if (const auto* q = std::get_if<QubitXY>(&spec)) {
    double prev = q->lambda(0.0);
    for (int i = 1; i <= 8; ++i) {
      const double cur = q->lambda(t * i / 8.0);
      if (cur < prev - 1e-9)
        throw validation_error("QubitXY: Lambda(t) decreases; not a valid accumulated rate");
      prev = cur;
    }
  }

  const double dt = t / n_steps;
  Matrix u = Matrix::Identity(d * d, d * d);
  for (int s = 0; s < n_steps; ++s) {
    const double t_mid = (s + 0.5) * dt;
    const Superoperator gen = build_generator(spec, t_mid);
    u = matrix_exponential(gen.matrix, Complex{dt, 0.0}) * u;
  }
  return {d, std::move(u)};
}

DensityOperator propagate(const GeneratorSpec& spec, const DensityOperator& rho0,
                          double t, int n_steps) {
  const int d = generator_dim(spec);
  if (rho0.dim != d)
    throw validation_error("propagate: state dimension does not match generator");
  if (t == 0.0) return rho0;
  const Superoperator u = propagator(spec, t, n_steps);
  return DensityOperator::trusted(u.apply(rho0.entries));
}

}  // namespace dekohere
