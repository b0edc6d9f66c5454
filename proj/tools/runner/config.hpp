#pragma once

// Experiment configuration: parsed from YAML, fully validated, with defaults
// filled in. Unknown keys are rejected and every error names its line.

#include "hyperlr/fields.hpp"
#include "hyperlr/flow_core.hpp"
#include "hyperlr/srb_response.hpp"
#include "hyperlr/symbolic_td.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hyperlr::runner {

using Json = nlohmann::ordered_json;

/// Validation failure carrying the source line (1-based; 0 when unknown).
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct PerturbationSpec {
  /// trig_window | base | zero | constant | unstable_trig
  std::string type = "trig_window";
  int window_power = 4;
  std::vector<TrigTerm> terms{{1, 1.0, 0, 1, -kTwoPi / 4.0}, {2, 0.5, 1, 0, 0.0}};
  double scale = 1.0;
  std::vector<double> vector;
};

struct ObservableSpec {
  /// trig_window | constant | coordinate | squared_coordinate
  std::string type = "trig_window";
  double amplitude = 1.0;
  int k1 = 0;
  int k2 = 1;
  double phase = 0.0;
  int window_power = 4;
  double value = 1.0;
  int index = 0;
  double scale = 1.0;
};

struct SystemSpec {
  /// cat_suspension | lorenz63
  std::string kind = "cat_suspension";
  CatRoof roof{1.0, 0.3, 0.0};
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  PerturbationSpec perturbation;
  ObservableSpec observable;
};

struct AverageSpec {
  double T = 2e4;
  int n_orbits = 4;
  double warmup = 50.0;
  double dt = 0.02;
};

struct SusceptibilitySpec {
  std::vector<double> epsilons{0.4, 0.2, 0.1};
  double re_min = -10.0;
  double re_max = 10.0;
  double re_step = 0.1;
  /// Im omega of the exported curve.
  double epsilon = 0.1;
};

struct NonautonomousSpec {
  /// constant | step | zero
  std::string schedule = "step";
  double t0 = 0.0;
  double t_eval = 5.0;
  double epsilon = 0.0;
};

struct OrbitSpec {
  double T = 400.0;
  double dt = 0.02;
  double warmup = 30.0;
};

struct EstimatorSpec {
  std::uint64_t seed = 1;
  AverageSpec average;
  FiniteDifferenceOptions finite_difference;
  KernelOptions kernel;
  DirectOptions direct;
  SusceptibilitySpec susceptibility;
  SplitOptions split;
  NonautonomousSpec nonautonomous;
  OrbitSpec clv;
  OrbitSpec divergence;
  DivergenceOptions divergence_options;
};

struct SymbolFunctionSpec {
  /// constant | symbol | cos_height
  std::string type = "cos_height";
  double value = 1.0;
  std::vector<double> table;
  double frequency = 1.0;
};

struct SymbolicSpec {
  /// none | cat_map
  std::string preset = "none";
  std::vector<std::vector<int>> tau{{1, 1}, {1, 1}};
  int memory = 1;
  std::vector<double> roof{1.0, 1.0};
  std::vector<double> potential{0.0, 0.0};
  ScanStrip scan;
  CorrelationOptions correlation;
  double t_max = 5.0;
  double t_step = 0.05;
  SymbolFunctionSpec B;
  SymbolFunctionSpec B_prime;
  int max_period = 6;
};

struct OutputSpec {
  std::string dir = "out";
};

struct ExperimentConfig {
  std::string source = "<defaults>";
  SystemSpec system;
  EstimatorSpec estimator;
  SymbolicSpec symbolic;
  OutputSpec output;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

/// Effective configuration (defaults included) in a stable key order.
Json config_to_json(const ExperimentConfig& config);

/// 64-bit FNV-1a of the compact effective configuration, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);

/// Adds `offset` to every seed.
void apply_seed_offset(ExperimentConfig& config, std::uint64_t offset);

// Builders.
FlowSystem build_system(const SystemSpec& spec);
VectorField build_perturbation(const SystemSpec& spec, const FlowSystem& base);
Observable build_observable(const SystemSpec& spec);
/// Cat suspension or Lorenz with the configured perturbation attached at a = 0.
FlowSystem build_perturbed_system(const SystemSpec& spec);

SftSystem build_sft(const SymbolicSpec& spec);
SuspensionFunction build_symbol_function(const SymbolFunctionSpec& spec, const SftSystem& sft);

}  // namespace hyperlr::runner
