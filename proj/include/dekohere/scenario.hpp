#ifndef DEKOHERE_SCENARIO_HPP
#define DEKOHERE_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dekohere/dephasing.hpp"
#include "dekohere/generators.hpp"
#include "dekohere/montecarlo.hpp"

namespace dekohere {

// Parse failures carry file/field context and map to CLI exit code 1.
class scenario_error : public std::runtime_error {
 public:
  explicit scenario_error(const std::string& what) : std::runtime_error(what) {}
};

// Time-dependent scalar described in JSON: constant b(t) = value, or
// exponential b(t) = amplitude * exp(-rate * t).
struct FunctionSpec {
  enum class Kind { Constant, Exponential };
  Kind kind = Kind::Constant;
  double value = 1.0;
  double amplitude = 1.0;
  double rate = 0.0;

  double operator()(double t) const;
  // closed form of int_0^t f(s)^2 ds (the accumulated rate Lambda)
  double squared_integral(double t) const;
};

struct OutputSpec {
  std::string observable;  // coherence(n,m) | population(n) | full_state | choi_spectrum
  std::string sink;        // file name, resolved against the output directory
};

struct ModelSection {
  std::string kind;
  Matrix hamiltonian;
  double gamma = 0.0;
  double omega0 = 0.0, gamma_x = 0.0, gamma_y = 0.0, gamma_xy = 0.0;
  FunctionSpec b;  // qubit_xy kick amplitude; Lambda(t) = int b^2
  std::string generator_form = "family";  // "family" | "moment"
  std::vector<Matrix> lindblads;
  std::vector<FunctionSpec> lindblad_b;  // per-Lindblad amplitude, <eta>_t = int b^2
  Matrix h2;
  FunctionSpec mu;
  bool has_mu = false;
  std::vector<double> kick_amplitudes;   // general_kicks: e(s,k) constant per level
  RealMatrix kick_correlation;           // general_kicks: g(k,k') constant matrix
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  ModelSection model;
  std::string initial_state_name;  // "plus" | "ground" | "maximally_mixed" | ""
  Matrix initial_state_matrix;     // used when the name is empty
  double t_max = 1.0;
  int n_points = 101;
  long mc_samples = 10000;
  double mc_dt = 0.0;  // 0: default 1e-3 * t_max
  std::uint64_t seed = 0;
  std::vector<OutputSpec> outputs;

  int dim() const;
  DensityOperator resolve_initial_state() const;
};

struct RunFlags {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::optional<int> steps;
  int threads = 0;  // 0: DEKOHERE_THREADS / auto
};

struct RunReport {
  std::string scenario;
  std::string subcommand;
  std::vector<std::string> output_files;
  double wall_time_s = 0.0;
  double max_invariant_violation = 0.0;
  int exit_code = 0;
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& json_text, const std::string& origin);

// subcommand: propagate | mc | compare | cp-audit. Writes CSV sinks plus a
// <name>_report.json mirror of the returned report into flags.out_dir.
RunReport run_scenario(const std::string& subcommand, const Scenario& scenario,
                       const RunFlags& flags);

std::string format_csv_value(double v);  // 17 significant digits

}  // namespace dekohere

#endif
