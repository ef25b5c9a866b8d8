#include "dekohere/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dekohere/cp_analysis.hpp"

namespace dekohere {

namespace {

using nlohmann::json;

const std::vector<std::string> kModelKinds = {
    "pdme",          "selfadjoint_lindblad", "stochastic_parameter",
    "qubit_xy",      "global_white_noise",   "uncorrelated_kicks",
    "general_kicks", "time_ordered_qubit"};

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw scenario_error(origin + ": " + what);
}

Complex parse_entry(const json& e, const std::string& origin) {
  if (e.is_number()) return Complex{e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
    return Complex{e[0].get<double>(), e[1].get<double>()};
  fail(origin, "matrix entries must be numbers or [re, im] pairs");
}

Matrix parse_matrix(const json& m, const std::string& origin) {
  if (!m.is_array() || m.empty()) fail(origin, "expected a nonempty array of rows");
  const size_t rows = m.size();
  Matrix out(rows, m[0].size());
  for (size_t i = 0; i < rows; ++i) {
    if (!m[i].is_array() || m[i].size() != m[0].size())
      fail(origin, "ragged matrix rows");
    for (size_t j = 0; j < m[i].size(); ++j) out(i, j) = parse_entry(m[i][j], origin);
  }
  return out;
}

FunctionSpec parse_function(const json& f, const std::string& origin) {
  FunctionSpec spec;
  if (f.is_number()) {
    spec.kind = FunctionSpec::Kind::Constant;
    spec.value = f.get<double>();
    return spec;
  }
  if (!f.is_object() || !f.contains("type"))
    fail(origin, "function spec must be a number or an object with a type");
  const std::string type = f.at("type").get<std::string>();
  if (type == "constant") {
    spec.kind = FunctionSpec::Kind::Constant;
    spec.value = f.value("value", 1.0);
  } else if (type == "exponential") {
    spec.kind = FunctionSpec::Kind::Exponential;
    spec.amplitude = f.value("amplitude", 1.0);
    spec.rate = f.value("rate", 1.0);
  } else {
    fail(origin, "unknown function type '" + type + "' (allowed: constant, exponential)");
  }
  return spec;
}

std::string list_kinds() {
  std::string s;
  for (size_t i = 0; i < kModelKinds.size(); ++i)
    s += (i ? ", " : "") + kModelKinds[i];
  return s;
}

}  // namespace

double FunctionSpec::operator()(double t) const {
  if (kind == Kind::Constant) return value;
  return amplitude * std::exp(-rate * t);
}

double FunctionSpec::squared_integral(double t) const {
  if (kind == Kind::Constant) return value * value * t;
  if (rate == 0.0) return amplitude * amplitude * t;
  return amplitude * amplitude * (1.0 - std::exp(-2.0 * rate * t)) / (2.0 * rate);
}

int Scenario::dim() const {
  const auto& m = model;
  if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit") return 2;
  return static_cast<int>(m.hamiltonian.rows());
}

DensityOperator Scenario::resolve_initial_state() const {
  const int d = dim();
  if (initial_state_name.empty()) {
    if (initial_state_matrix.rows() != d)
      throw scenario_error("initial_state dimension does not match the model");
    return DensityOperator::checked(initial_state_matrix, 1e-10, 1e-10, 1e-8);
  }
  if (initial_state_name == "maximally_mixed")
    return DensityOperator::trusted(Matrix::Identity(d, d) / static_cast<double>(d));
  if (initial_state_name == "plus")
    return DensityOperator::trusted(
        Matrix::Constant(d, d, Complex{1.0 / static_cast<double>(d), 0.0}));
  if (initial_state_name == "ground") {
    if (model.kind == "qubit_xy" || model.kind == "time_ordered_qubit") {
      Matrix m = Matrix::Zero(2, 2);
      m(1, 1) = 1.0;  // sigma_z ground state
      return DensityOperator::trusted(m);
    }
    const auto sd = spectral_decompose(model.hamiltonian);
    return DensityOperator::trusted(sd.projectors.front() /
                                    static_cast<double>(sd.multiplicities.front()));
  }
  throw scenario_error("unknown initial_state preset '" + initial_state_name + "'");
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scenario_error(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, std::string("JSON parse error: ") + e.what());
  }

  Scenario sc;
  sc.schema_version = root.value("schema_version", 0);
  if (sc.schema_version != 1)
    fail(origin, "schema_version must be 1, got " + std::to_string(sc.schema_version));
  if (!root.contains("name") || !root["name"].is_string())
    fail(origin, "field 'name' (string) is required");
  sc.name = root["name"].get<std::string>();

  if (!root.contains("model") || !root["model"].is_object())
    fail(origin, "field 'model' (object) is required");
  const json& jm = root["model"];
  ModelSection& m = sc.model;
  m.kind = jm.value("kind", "");
  if (std::find(kModelKinds.begin(), kModelKinds.end(), m.kind) == kModelKinds.end())
    fail(origin, "unknown model kind '" + m.kind + "'; allowed kinds: " + list_kinds());

  auto need_hamiltonian = [&](const char* field = "hamiltonian") {
    if (!jm.contains(field)) fail(origin, "model." + std::string(field) + " is required");
    Matrix h = parse_matrix(jm.at(field), origin + ": model." + field);
    if (h.rows() != h.cols()) fail(origin, "model Hamiltonian must be square");
    if (hermiticity_defect(h) > 1e-10)
      fail(origin, "model Hamiltonian is not Hermitian");
    return h;
  };

  if (m.kind == "pdme" || m.kind == "global_white_noise" ||
      m.kind == "uncorrelated_kicks") {
    m.hamiltonian = need_hamiltonian();
    m.gamma = jm.value("gamma", 0.0);
    if (m.gamma < 0.0) fail(origin, "model.gamma must be >= 0");
  } else if (m.kind == "general_kicks") {
    m.hamiltonian = need_hamiltonian();
    if (!jm.contains("kick_amplitudes") || !jm["kick_amplitudes"].is_array())
      fail(origin, "general_kicks requires kick_amplitudes (per-level array)");
    m.kick_amplitudes = jm["kick_amplitudes"].get<std::vector<double>>();
    if (!jm.contains("kick_correlation"))
      fail(origin, "general_kicks requires kick_correlation (level x level matrix)");
    const Matrix c = parse_matrix(jm["kick_correlation"], origin + ": kick_correlation");
    if (c.imag().cwiseAbs().maxCoeff() > 0.0)
      fail(origin, "kick_correlation must be real");
    m.kick_correlation = c.real();
  } else if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit") {
    m.omega0 = jm.value("omega0", 0.0);
    m.gamma_x = jm.value("gamma_x", 0.0);
    m.gamma_y = jm.value("gamma_y", 0.0);
    m.gamma_xy = jm.value("gamma_xy", 0.0);
    if (m.gamma_x < 0.0 || m.gamma_y < 0.0)
      fail(origin, "gamma_x and gamma_y must be >= 0");
    if (m.gamma_xy * m.gamma_xy > m.gamma_x * m.gamma_y + 1e-12)
      fail(origin, "diffusion matrix not PSD: gamma_xy^2 > gamma_x*gamma_y");
    if (jm.contains("b")) m.b = parse_function(jm["b"], origin + ": model.b");
    m.generator_form = jm.value("generator_form",
                                m.kind == "qubit_xy" ? "family" : "moment");
    if (m.generator_form != "family" && m.generator_form != "moment")
      fail(origin, "generator_form must be 'family' or 'moment'");
  } else if (m.kind == "selfadjoint_lindblad") {
    m.hamiltonian = need_hamiltonian();
    if (!jm.contains("lindblads") || !jm["lindblads"].is_array() || jm["lindblads"].empty())
      fail(origin, "selfadjoint_lindblad requires a nonempty lindblads array");
    for (const auto& lj : jm["lindblads"]) {
      Matrix v = parse_matrix(lj, origin + ": lindblads[]");
      if (hermiticity_defect(v) > 1e-10) fail(origin, "Lindblad operators must be Hermitian");
      m.lindblads.push_back(std::move(v));
    }
    if (!jm.contains("rates") || !jm["rates"].is_array() ||
        jm["rates"].size() != m.lindblads.size())
      fail(origin, "selfadjoint_lindblad requires one rate function per Lindblad");
    for (const auto& rj : jm["rates"])
      m.lindblad_b.push_back(parse_function(rj, origin + ": rates[]"));
  } else if (m.kind == "stochastic_parameter") {
    m.hamiltonian = need_hamiltonian("h1");
    if (!jm.contains("h2")) fail(origin, "stochastic_parameter requires h2");
    m.h2 = parse_matrix(jm["h2"], origin + ": model.h2");
    if (hermiticity_defect(m.h2) > 1e-10) fail(origin, "h2 must be Hermitian");
    if (jm.contains("mu")) {
      m.mu = parse_function(jm["mu"], origin + ": model.mu");
      m.has_mu = true;
    }
    if (jm.contains("b")) m.b = parse_function(jm["b"], origin + ": model.b");
  }

  if (root.contains("initial_state")) {
    const json& js = root["initial_state"];
    if (js.is_string())
      sc.initial_state_name = js.get<std::string>();
    else
      sc.initial_state_matrix = parse_matrix(js, origin + ": initial_state");
  } else {
    sc.initial_state_name = "maximally_mixed";
  }

  if (root.contains("time_grid")) {
    const json& jt = root["time_grid"];
    sc.t_max = jt.value("t_max", 1.0);
    sc.n_points = jt.value("n_points", 101);
  }
  if (sc.t_max < 0.0) fail(origin, "time_grid.t_max must be >= 0");
  if (sc.t_max == 0.0)
    sc.n_points = 1;
  else if (sc.n_points < 2)
    fail(origin, "time_grid.n_points must be >= 2");

  if (root.contains("mc")) {
    const json& jmc = root["mc"];
    sc.mc_samples = jmc.value("n_samples", 10000L);
    sc.mc_dt = jmc.value("dt", 0.0);
    sc.seed = jmc.value("seed", 0ULL);
    if (sc.mc_samples < 2) fail(origin, "mc.n_samples must be >= 2");
    if (sc.mc_dt < 0.0) fail(origin, "mc.dt must be >= 0");
  }

  if (root.contains("outputs")) {
    if (!root["outputs"].is_array()) fail(origin, "outputs must be an array");
    for (const auto& jo : root["outputs"]) {
      OutputSpec out;
      out.observable = jo.value("observable", "full_state");
      out.sink = jo.value("sink", "");
      if (out.sink.empty()) fail(origin, "every output needs a sink file name");
      sc.outputs.push_back(std::move(out));
    }
  }
  if (sc.outputs.empty())
    sc.outputs.push_back({"full_state", sc.name + ".csv"});

  // observable level indices must fit the model dimension
  const int d = sc.dim();
  for (const auto& out : sc.outputs) {
    int a = -1, b = -1;
    if (std::sscanf(out.observable.c_str(), "coherence(%d,%d)", &a, &b) == 2) {
      if (a < 0 || a >= d || b < 0 || b >= d)
        fail(origin, "observable " + out.observable + " out of range for dim " +
                         std::to_string(d));
    } else if (std::sscanf(out.observable.c_str(), "population(%d)", &a) == 1) {
      if (a < 0 || a >= d)
        fail(origin, "observable " + out.observable + " out of range for dim " +
                         std::to_string(d));
    } else if (out.observable != "full_state" && out.observable != "choi_spectrum") {
      fail(origin, "unknown observable '" + out.observable +
                       "' (allowed: coherence(n,m), population(n), full_state, "
                       "choi_spectrum)");
    }
  }
  return sc;
}

std::string format_csv_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// --- model assembly ---------------------------------------------------------

DephasingModel dephasing_model_of(const ModelSection& m) {
  DephasingModel model;
  model.decomposition = spectral_decompose(m.hamiltonian);
  if (m.kind == "global_white_noise" || m.kind == "pdme") {
    model.kind = GlobalWhiteNoise{m.gamma};
  } else if (m.kind == "uncorrelated_kicks") {
    model.kind = UncorrelatedKicks{m.gamma};
  } else {
    const auto amps = m.kick_amplitudes;
    const RealMatrix corr = m.kick_correlation;
    if (static_cast<int>(amps.size()) != model.decomposition.levels())
      throw scenario_error("general_kicks: one kick amplitude per level required");
    if (corr.rows() != model.decomposition.levels())
      throw scenario_error("general_kicks: correlation matrix must be level x level");
    model.kind = GeneralKicks{
        [amps](double, int k) { return amps[k]; },
        [corr](double, int j, int k) { return corr(j, k); }};
  }
  model.validate();
  return model;
}

GeneratorSpec generator_spec_of(const ModelSection& m) {
  if (m.kind == "pdme" || m.kind == "global_white_noise")
    return PDME{m.hamiltonian, m.gamma};
  if (m.kind == "selfadjoint_lindblad") {
    SelfadjointLindblad s;
    s.hamiltonian = m.hamiltonian;
    s.lindblads = m.lindblads;
    for (const auto& b : m.lindblad_b)
      s.variations.push_back(
          QuadraticVariationFn{[b](double t) { return b.squared_integral(t); }});
    return s;
  }
  if (m.kind == "stochastic_parameter") {
    StochasticParameter s;
    s.h1 = m.hamiltonian;
    s.h2 = m.h2;
    if (m.has_mu) {
      const FunctionSpec mu = m.mu;
      s.mu = [mu](double t) {
        if (mu.kind == FunctionSpec::Kind::Constant) return mu.value * t;
        return mu.rate == 0.0 ? mu.amplitude * t
                              : mu.amplitude * (1.0 - std::exp(-mu.rate * t)) / mu.rate;
      };
    }
    const FunctionSpec b = m.b;
    s.variation = QuadraticVariationFn{[b](double t) { return b.squared_integral(t); }};
    return s;
  }
  if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit") {
    QubitXY q;
    q.omega0 = m.omega0;
    q.gamma_x = m.gamma_x;
    q.gamma_y = m.gamma_y;
    q.gamma_xy = m.gamma_xy;
    const FunctionSpec b = m.b;
    q.lambda = [b](double t) { return b.squared_integral(t); };
    return q;
  }
  throw scenario_error("model kind '" + m.kind + "' has no generator form");
}

// exp over [0,t] of Lam'(s) G - i w0 [sz, .] with G the chosen x-y family form
Superoperator qubit_xy_propagator(const ModelSection& m, double t, int steps) {
  const Superoperator family = m.generator_form == "moment"
                                   ? qubit_generator_moment(m.gamma_x, m.gamma_y, m.gamma_xy)
                                   : qubit_generators(m.gamma_x, m.gamma_y, m.gamma_xy).sum();
  const Superoperator hpart = Complex{0.0, -m.omega0} * commutator_superop(pauli::z());
  if (t == 0.0) return Superoperator::identity(2);
  Matrix u = Matrix::Identity(4, 4);
  const double dt = t / steps;
  for (int s = 0; s < steps; ++s) {
    const double t0 = s * dt, t1 = (s + 1) * dt;
    const double dlam = m.b.squared_integral(t1) - m.b.squared_integral(t0);
    const Matrix gen = dlam * family.matrix + dt * hpart.matrix;
    u = matrix_exponential(gen) * u;
  }
  return {2, std::move(u)};
}

Superoperator analytic_propagator(const Scenario& sc, double t, int steps) {
  const ModelSection& m = sc.model;
  if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit")
    return qubit_xy_propagator(m, t, steps);
  if (m.kind == "pdme" || m.kind == "selfadjoint_lindblad" ||
      m.kind == "stochastic_parameter")
    return propagator(generator_spec_of(m), t, steps);
  // dephasing closed forms as a superoperator (for cp-audit)
  const DephasingModel model = dephasing_model_of(m);
  const int d = sc.dim();
  Superoperator s = Superoperator::zero(d);
  const auto& sd = model.decomposition;
  for (int n = 0; n < sd.levels(); ++n)
    for (int k = 0; k < sd.levels(); ++k) {
      const Complex phase = std::exp(-kI * (sd.eigenvalues[n] - sd.eigenvalues[k]) * t);
      s = s + (phase * coherence_factor(model, n, k, t)) *
                  sandwich_superop(sd.projectors[n], sd.projectors[k]);
    }
  return s;
}

DensityOperator analytic_state(const Scenario& sc, const DensityOperator& rho0, double t,
                               int steps) {
  const ModelSection& m = sc.model;
  if (m.kind == "global_white_noise" || m.kind == "uncorrelated_kicks" ||
      m.kind == "general_kicks")
    return evolve_dephasing(dephasing_model_of(m), rho0, t);
  if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit")
    return DensityOperator::trusted(qubit_xy_propagator(m, t, steps).apply(rho0.entries));
  return propagate(generator_spec_of(m), rho0, t, steps);
}

TrajectoryModel trajectory_model_of(const Scenario& sc, double horizon, int n_steps) {
  const ModelSection& m = sc.model;
  TrajectoryModel model;
  model.horizon = horizon;
  model.n_steps = n_steps;
  if (m.kind == "qubit_xy" || m.kind == "time_ordered_qubit") {
    TimeOrderedQubitModel q;
    q.omega0 = m.omega0;
    q.noise.n_channels = 2;
    q.noise.diffusion.resize(2, 2);
    q.noise.diffusion << m.gamma_x, m.gamma_xy, m.gamma_xy, m.gamma_y;
    const FunctionSpec b = m.b;
    q.noise.amplitude = {[b](double t) { return b(t); }, [b](double t) { return b(t); }};
    model.kind = std::move(q);
    return model;
  }
  if (m.kind == "selfadjoint_lindblad" || m.kind == "stochastic_parameter")
    throw scenario_error("mc: no trajectory form is configured for model kind '" +
                         m.kind + "'");
  SpectralKickModel s;
  s.decomposition = spectral_decompose(m.hamiltonian);
  const int levels = s.decomposition.levels();
  const RealVector evals = s.decomposition.eigenvalues;
  if (m.kind == "general_kicks") {
    const auto amps = m.kick_amplitudes;
    if (static_cast<int>(amps.size()) != levels)
      throw scenario_error("general_kicks: one kick amplitude per level required");
    s.noise.n_channels = levels;
    s.noise.diffusion = m.kick_correlation;
    for (int k = 0; k < levels; ++k) {
      const double a = amps[k];
      s.noise.amplitude.push_back([a](double) { return a; });
    }
  } else {
    s.noise = (m.kind == "uncorrelated_kicks") ? NoiseSpec::white(levels, m.gamma)
                                               : NoiseSpec::common_white(levels, m.gamma);
    for (int k = 0; k < levels; ++k) {
      const double e = evals[k];
      s.noise.amplitude.push_back([e](double) { return e; });
    }
  }
  model.kind = std::move(s);
  return model;
}

// --- output writing ----------------------------------------------------------

struct InvariantTracker {
  double max_violation = 0.0;
  bool violated = false;

  void track_state(const Matrix& rho) {
    const double tr = std::abs(rho.trace() - Complex{1.0, 0.0});
    const double herm = hermiticity_defect(rho);
    max_violation = std::max({max_violation, tr, herm});
    if (tr > 1e-10 || herm > 1e-10) violated = true;
  }
};

struct ColumnBlock {
  std::vector<std::string> names;
  std::vector<double> values;
};

ColumnBlock state_columns(const std::string& observable, const Matrix& mean,
                          const RealMatrix* se_re, const RealMatrix* se_im) {
  ColumnBlock block;
  const int d = static_cast<int>(mean.rows());
  auto push = [&](const std::string& name, double v) {
    block.names.push_back(name);
    block.values.push_back(v);
  };
  auto entry = [&](int i, int j) {
    const std::string tag = std::to_string(i) + "_" + std::to_string(j);
    push("re_rho_" + tag, mean(i, j).real());
    push("im_rho_" + tag, mean(i, j).imag());
    if (se_re) push("se_re_rho_" + tag, (*se_re)(i, j));
    if (se_im) push("se_im_rho_" + tag, (*se_im)(i, j));
  };
  int a = -1, b = -1;
  if (std::sscanf(observable.c_str(), "coherence(%d,%d)", &a, &b) == 2) {
    entry(a, b);
  } else if (std::sscanf(observable.c_str(), "population(%d)", &a) == 1) {
    push("pop_" + std::to_string(a), mean(a, a).real());
    if (se_re) push("se_pop_" + std::to_string(a), (*se_re)(a, a));
  } else {  // full_state
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) entry(i, j);
  }
  return block;
}

class CsvSink {
 public:
  CsvSink(const std::filesystem::path& path) : path_(path) {}

  void header(const std::vector<std::string>& names) {
    if (wrote_header_) return;
    body_ += "# t";
    for (const auto& n : names) body_ += "," + n;
    body_ += "\n";
    wrote_header_ = true;
  }

  void row(double t, const std::vector<double>& values) {
    body_ += format_csv_value(t);
    for (double v : values) body_ += "," + format_csv_value(v);
    body_ += "\n";
  }

  void flush() const {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw scenario_error("cannot write output file " + path_.string());
    out << body_;
  }

  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
  std::string body_;
  bool wrote_header_ = false;
};

}  // namespace

RunReport run_scenario(const std::string& subcommand, const Scenario& sc,
                       const RunFlags& flags) {
  const auto t_start = std::chrono::steady_clock::now();
  if (subcommand != "propagate" && subcommand != "mc" && subcommand != "compare" &&
      subcommand != "cp-audit")
    throw scenario_error("unknown subcommand '" + subcommand +
                         "' (allowed: propagate, mc, compare, cp-audit)");

  Scenario scenario = sc;
  if (flags.seed) scenario.seed = *flags.seed;
  if (flags.samples) scenario.mc_samples = *flags.samples;

  const int n_points = scenario.n_points;
  const double t_max = scenario.t_max;
  const int n_eval = std::max(1, n_points - 1);
  const double dt_default = scenario.mc_dt > 0.0 ? scenario.mc_dt : 1e-3 * std::max(t_max, 1e-12);
  int mc_steps = t_max > 0.0 ? std::max(n_eval, static_cast<int>(std::lround(t_max / dt_default)))
                             : n_eval;
  int prop_steps = flags.steps.value_or(1000);

  std::filesystem::create_directories(flags.out_dir);
  const DensityOperator rho0 = scenario.resolve_initial_state();

  RunReport report;
  report.scenario = scenario.name;
  report.subcommand = subcommand;
  InvariantTracker tracker;

  auto grid_time = [&](int i) { return n_points == 1 ? 0.0 : t_max * i / n_eval; };

  std::vector<CsvSink> sinks;
  sinks.reserve(scenario.outputs.size());
  for (const auto& out : scenario.outputs)
    sinks.emplace_back(std::filesystem::path(flags.out_dir) / out.sink);

  if (subcommand == "propagate") {
    for (int i = 0; i < n_points; ++i) {
      const double t = grid_time(i);
      const DensityOperator rho = analytic_state(scenario, rho0, t, prop_steps);
      tracker.track_state(rho.entries);
      for (size_t o = 0; o < sinks.size(); ++o) {
        if (scenario.outputs[o].observable == "choi_spectrum") continue;
        auto block = state_columns(scenario.outputs[o].observable, rho.entries,
                                   nullptr, nullptr);
        sinks[o].header(block.names);
        sinks[o].row(t, block.values);
      }
    }
  } else if (subcommand == "mc") {
    const TrajectoryModel model =
        trajectory_model_of(scenario, t_max > 0.0 ? t_max : 1.0, mc_steps);
    std::vector<MCEstimate> ests;
    if (t_max > 0.0) {
      ests = mc_average_grid(model, rho0, scenario.mc_samples, scenario.seed, n_eval,
                             flags.threads);
    } else {
      MCEstimate zero;
      zero.mean = rho0.entries;
      zero.stderr_re = RealMatrix::Zero(rho0.dim, rho0.dim);
      zero.stderr_im = RealMatrix::Zero(rho0.dim, rho0.dim);
      ests.push_back(std::move(zero));
    }
    for (int i = 0; i < static_cast<int>(ests.size()) && i < n_points; ++i) {
      const double t = grid_time(i);
      tracker.track_state(ests[i].mean);
      for (size_t o = 0; o < sinks.size(); ++o) {
        if (scenario.outputs[o].observable == "choi_spectrum") continue;
        auto block = state_columns(scenario.outputs[o].observable, ests[i].mean,
                                   &ests[i].stderr_re, &ests[i].stderr_im);
        sinks[o].header(block.names);
        sinks[o].row(t, block.values);
      }
    }
  } else if (subcommand == "compare") {
    const TrajectoryModel model =
        trajectory_model_of(scenario, t_max > 0.0 ? t_max : 1.0, mc_steps);
    std::vector<MCEstimate> ests;
    if (t_max > 0.0)
      ests = mc_average_grid(model, rho0, scenario.mc_samples, scenario.seed, n_eval,
                             flags.threads);
    const int d = scenario.dim();
    for (int i = 0; i < n_points; ++i) {
      const double t = grid_time(i);
      const DensityOperator ref = analytic_state(scenario, rho0, t, prop_steps);
      const Matrix mc = t_max > 0.0 ? ests[i].mean : rho0.entries;
      tracker.track_state(mc);
      std::vector<std::string> names;
      std::vector<double> values;
      double max_z = 0.0;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          auto zscore = [](double diff, double se) {
            if (std::abs(diff) < 1e-12) return 0.0;
            if (se <= 0.0) return 1e9;
            return diff / se;
          };
          const double zre = t_max > 0.0
                                 ? zscore(mc(r, c).real() - ref.entries(r, c).real(),
                                          ests[i].stderr_re(r, c))
                                 : 0.0;
          const double zim = t_max > 0.0
                                 ? zscore(mc(r, c).imag() - ref.entries(r, c).imag(),
                                          ests[i].stderr_im(r, c))
                                 : 0.0;
          const std::string tag = std::to_string(r) + "_" + std::to_string(c);
          names.push_back("z_re_" + tag);
          values.push_back(zre);
          names.push_back("z_im_" + tag);
          values.push_back(zim);
          max_z = std::max({max_z, std::abs(zre), std::abs(zim)});
        }
      names.push_back("max_abs_z");
      values.push_back(max_z);
      for (size_t o = 0; o < sinks.size(); ++o) {
        sinks[o].header(names);
        sinks[o].row(t, values);
      }
    }
  } else {  // cp-audit
    const int d = scenario.dim();
    for (int i = 0; i < n_points; ++i) {
      const double t = grid_time(i);
      const Superoperator prop = analytic_propagator(scenario, t, prop_steps);
      const ChoiReport choi = cp_check(prop, 1e-9);
      std::vector<std::string> names;
      std::vector<double> values;
      for (int k = 0; k < d * d; ++k) {
        names.push_back("choi_eig_" + std::to_string(k));
        values.push_back(choi.spectrum[k]);
      }
      names.push_back("min_eig");
      values.push_back(choi.min_eigenvalue);
      names.push_back("is_cp");
      values.push_back(choi.is_cp ? 1.0 : 0.0);
      for (size_t o = 0; o < sinks.size(); ++o) {
        sinks[o].header(names);
        sinks[o].row(t, values);
      }
    }
  }

  for (const auto& sink : sinks) {
    sink.flush();
    report.output_files.push_back(sink.path());
  }

  report.max_invariant_violation = tracker.max_violation;
  report.exit_code = tracker.violated ? 2 : 0;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  // JSON mirror of the report
  json jr;
  jr["scenario"] = report.scenario;
  jr["subcommand"] = report.subcommand;
  jr["outputs"] = report.output_files;
  jr["wall_time_s"] = report.wall_time_s;
  jr["max_invariant_violation"] = report.max_invariant_violation;
  jr["exit_code"] = report.exit_code;
  const auto report_path =
      std::filesystem::path(flags.out_dir) / (scenario.name + "_report.json");
  std::ofstream out(report_path);
  if (out) out << jr.dump(2) << "\n";
  report.output_files.push_back(report_path.string());

  return report;
}

}  // namespace dekohere
