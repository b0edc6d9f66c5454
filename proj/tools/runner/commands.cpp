#include "commands.hpp"

#include "acceptance.hpp"
#include "report.hpp"

#include "hyperlr/hyperbolic_split.hpp"
#include "hyperlr/oracle.hpp"
#include "hyperlr/srb_response.hpp"
#include "hyperlr/statistics.hpp"
#include "hyperlr/symbolic_td.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace hyperlr::runner {

namespace {

struct Context {
  const ExperimentConfig& config;
  std::string out;
  std::ostream& log;

  std::string path(const std::string& file) const { return out + "/" + file; }

  std::ofstream csv(const std::string& file) const {
    std::ofstream os(path(file));
    if (!os) throw Error("cannot write " + path(file));
    os.precision(17);
    return os;
  }
};

std::uint64_t seed_of(const Context& c) { return c.config.estimator.seed; }

Json header(const Context& c, const std::string& command) { return report_header(command, c.config, {seed_of(c)}); }

int finish(const Context& c, const std::string& command, Json j, bool inconclusive = false) {
  j["inconclusive"] = inconclusive;
  write_json(c.path(command + ".json"), j);
  c.log << command << ": wrote " << c.path(command + ".json") << (inconclusive ? " (inconclusive)" : "") << "\n";
  return inconclusive ? kExitInconclusive : kExitOk;
}

void write_diagnostics_csv(const Context& c, const std::string& file, const ResponseReport& r) {
  auto os = c.csv(file);
  os << "key,value\n";
  os << "value," << r.value << "\n";
  os << "std_error," << r.std_error << "\n";
  for (const auto& [k, v] : r.diagnostics) os << k << "," << v << "\n";
}

int response_command(const Context& c, const std::string& command, const ResponseReport& r) {
  write_diagnostics_csv(c, command + ".csv", r);
  Json j = header(c, command);
  j["result"] = to_json(r);
  return finish(c, command, j, r.inconclusive);
}

struct Problem {
  FlowSystem system;
  VectorField X;
  Observable A;
};

Problem problem(const Context& c) {
  const SystemSpec& s = c.config.system;
  const FlowSystem base = build_system(s);
  VectorField X = build_perturbation(s, base);
  return {base.with_perturbation(X), X, build_observable(s)};
}

KernelOptions kernel_options(const Context& c, KernelOptions k) {
  k.seed = seed_of(c);
  return k;
}

// ---------------------------------------------------------------------------

int cmd_average(const Context& c) {
  const Problem p = problem(c);
  const AverageSpec& a = c.config.estimator.average;
  const auto est = birkhoff_average(p.system, p.A, a.T, a.n_orbits, a.warmup, a.dt, seed_of(c));
  {
    auto os = c.csv("average_batches.csv");
    os << "batch,value\n";
    for (std::size_t i = 0; i < est.batch_values.size(); ++i) os << i << "," << est.batch_values[i] << "\n";
  }
  Json j = header(c, "average");
  j["result"] = {{"value", est.mean},     {"std_error", est.std_error}, {"T", est.T},
                 {"n_orbits", est.n_orbits}, {"warmup", est.warmup},  {"excluded", est.excluded}};
  return finish(c, "average", j);
}

int cmd_response_fd(const Context& c) {
  const Problem p = problem(c);
  FiniteDifferenceOptions o = c.config.estimator.finite_difference;
  o.seed = seed_of(c);
  return response_command(c, "response-fd", finite_difference_response(p.system, p.A, o));
}

int cmd_response_direct(const Context& c) {
  const Problem p = problem(c);
  DirectOptions o = c.config.estimator.direct;
  o.kernel = kernel_options(c, c.config.estimator.kernel);
  const KernelCurve kernel = response_kernel(p.system, p.A, p.X, o.kernel);
  {
    auto os = c.csv("kernel.csv");
    write_kernel_csv(os, kernel);
  }
  return response_command(c, "response-direct", direct_damped_from_kernel(kernel, o));
}

int cmd_susceptibility(const Context& c) {
  const Problem p = problem(c);
  const SusceptibilitySpec& s = c.config.estimator.susceptibility;
  const KernelCurve kernel = response_kernel(p.system, p.A, p.X, kernel_options(c, c.config.estimator.kernel));
  std::vector<double> grid;
  const auto n = static_cast<int>(std::floor((s.re_max - s.re_min) / s.re_step + 1e-9));
  for (int i = 0; i <= n; ++i) grid.push_back(s.re_min + i * s.re_step);
  const auto curve = susceptibility_curve(kernel, grid, s.epsilon);
  {
    auto os = c.csv("susceptibility.csv");
    write_susceptibility_csv(os, curve);
  }
  {
    auto os = c.csv("kernel.csv");
    write_kernel_csv(os, kernel);
  }
  const ResponseReport r = susceptibility_response(kernel, s.epsilons, 1);
  Json j = header(c, "susceptibility");
  j["result"] = to_json(r);
  j["curve"] = {{"epsilon", s.epsilon}, {"points", grid.size()}, {"csv", "susceptibility.csv"}};
  return finish(c, "susceptibility", j, r.inconclusive);
}

int cmd_response_split(const Context& c) {
  const Problem p = problem(c);
  SplitOptions o = c.config.estimator.split;
  o.seed = seed_of(c);
  return response_command(c, "response-split", split_response(p.system, p.A, p.X, o));
}

int cmd_response_nonauto(const Context& c) {
  const Problem p = problem(c);
  const NonautonomousSpec& n = c.config.estimator.nonautonomous;
  const VectorField X = p.X;
  const VectorField Z = zero_field(p.system.dim());
  FieldSchedule sched;
  sched.t0 = n.t0;
  if (n.schedule == "constant")
    sched.field = [X](double) { return X; };
  else if (n.schedule == "zero")
    sched.field = [Z](double) { return Z; };
  else
    sched.field = [X, Z, t0 = n.t0](double tau) { return tau <= t0 ? X : Z; };
  NonautonomousOptions o;
  o.kernel = kernel_options(c, c.config.estimator.kernel);
  o.epsilon = n.epsilon;
  const ResponseReport r = nonautonomous_response(p.system, p.A, sched, n.t_eval, o);
  write_diagnostics_csv(c, "response-nonauto.csv", r);
  Json j = header(c, "response-nonauto");
  j["schedule"] = {{"type", n.schedule}, {"t0", n.t0}, {"t_eval", n.t_eval}};
  j["result"] = to_json(r);
  return finish(c, "response-nonauto", j, r.inconclusive);
}

SplitFrame orbit_frame(const Context& c, const FlowSystem& system, const OrbitSpec& o, Trajectory* keep = nullptr) {
  const Vec p0 = srb_sample(system, seed_of(c), 0, 20.0, o.dt);
  Trajectory tr = integrate_orbit(system, p0, o.T + 2.0 * o.warmup, o.dt, seed_of(c));
  ClvOptions opt;
  opt.warmup = o.warmup;
  SplitFrame f = compute_clv(system, tr, opt);
  if (keep) *keep = std::move(tr);
  return f;
}

int cmd_clv(const Context& c) {
  const Problem p = problem(c);
  Trajectory tr;
  const SplitFrame f = orbit_frame(c, p.system, c.config.estimator.clv, &tr);
  {
    auto os = c.csv("clv.csv");
    write_frame_csv(os, f);
  }
  {
    auto os = c.csv("trajectory.csv");
    write_trajectory_csv(os, p.system, tr);
  }
  Json j = header(c, "clv");
  j["result"] = {{"exponents", f.exponents}, {"min_angle", f.min_angle}, {"samples", f.size()},
                 {"n_unstable", f.n_unstable}, {"n_stable", f.n_stable}};
  return finish(c, "clv", j);
}

int cmd_divergence(const Context& c) {
  const Problem p = problem(c);
  const SplitFrame f = orbit_frame(c, p.system, c.config.estimator.divergence);
  const DivergenceSamples d = estimate_divergence_C(p.system, p.X, f, c.config.estimator.divergence_options);
  {
    auto os = c.csv("divergence.csv");
    write_divergence_csv(os, d);
  }
  const MeanError m = batch_means(d.values);
  Json j = header(c, "divergence");
  j["result"] = {{"mean", m.mean},
                 {"std_error", m.std_error},
                 {"samples", d.values.size()},
                 {"h", d.h},
                 {"richardson_gap", d.richardson_gap},
                 {"noise_floor", d.noise_floor},
                 {"warnings", d.warnings}};
  return finish(c, "divergence", j);
}

// ---------------------------------------------------------------------------

struct Symbolic {
  SftSystem sft;
  double c;
};

Symbolic symbolic(const Context& ctx) {
  SftSystem sft = build_sft(ctx.config.symbolic);
  const double c = bowen_root(sft, sft.potential(), sft.roof());
  return {std::move(sft), c};
}

Json words_json(const SftSystem& sft) {
  Json w = Json::array();
  for (const auto& word : sft.words()) w.push_back(word);
  return w;
}

int cmd_symbolic_pressure(const Context& ctx) {
  const auto [sft, c] = symbolic(ctx);
  const double p0 = pressure(sft, sft.potential());
  {
    auto os = ctx.csv("pressure_curve.csv");
    os << "c,pressure\n";
    for (int i = -40; i <= 40; ++i) {
      const double ci = c + 0.05 * i;
      std::vector<double> w(sft.word_count());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = sft.potential()[k] - ci * sft.roof()[k];
      os << ci << "," << pressure(sft, w) << "\n";
    }
  }
  Json j = header(ctx, "symbolic-pressure");
  j["result"] = {{"pressure", p0}, {"bowen_root", c}, {"mixing_power", *check_mixing(sft.transitions())},
                 {"words", sft.word_count()}};
  return finish(ctx, "symbolic-pressure", j);
}

int cmd_symbolic_state(const Context& ctx) {
  const auto [sft, c] = symbolic(ctx);
  const EquilibriumState st = equilibrium_state(sft, sft.potential(), sft.roof(), c);
  {
    auto os = ctx.csv("state.csv");
    os << "word,weight,roof,potential\n";
    for (std::size_t k = 0; k < sft.word_count(); ++k) {
      std::string name;
      for (int s : sft.words()[k]) name += std::to_string(s);
      os << name << "," << st.weights[k] << "," << sft.roof()[k] << "," << sft.potential()[k] << "\n";
    }
  }
  Json kernel = Json::array();
  for (Eigen::Index i = 0; i < st.kernel.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < st.kernel.cols(); ++k) row.push_back(st.kernel(i, k));
    kernel.push_back(row);
  }
  Json j = header(ctx, "symbolic-state");
  j["result"] = {{"c", st.c},
                 {"mean_roof", st.mean_roof},
                 {"words", words_json(sft)},
                 {"weights", st.weights},
                 {"kernel", kernel},
                 {"invariance_residual", st.invariance_residual}};
  return finish(ctx, "symbolic-state", j);
}

int cmd_symbolic_correlation(const Context& ctx) {
  const auto [sft, c] = symbolic(ctx);
  const SymbolicSpec& s = ctx.config.symbolic;
  const EquilibriumState st = equilibrium_state(sft, sft.potential(), sft.roof(), c);
  std::vector<double> grid;
  const auto n = static_cast<int>(std::floor(s.t_max / s.t_step + 1e-9));
  for (int i = 0; i <= n; ++i) grid.push_back(i * s.t_step);
  const auto corr = flow_correlation(sft, st, build_symbol_function(s.B, sft), build_symbol_function(s.B_prime, sft),
                                     grid, s.correlation);
  {
    auto os = ctx.csv("correlation.csv");
    os << "t,value,sigma\n";
    for (std::size_t i = 0; i < corr.t.size(); ++i)
      os << corr.t[i] << "," << corr.values[i] << "," << corr.std_errors[i] << "\n";
  }
  Json j = header(ctx, "symbolic-correlation");
  j["seeds"] = {s.correlation.seed};
  j["result"] = {{"c", c}, {"points", corr.t.size()}, {"n_samples", s.correlation.n_samples},
                 {"value_at_0", corr.values.front()}, {"sigma_at_0", corr.std_errors.front()}};
  return finish(ctx, "symbolic-correlation", j);
}

int cmd_resonances(const Context& ctx) {
  const auto [sft, c] = symbolic(ctx);
  const SymbolicSpec& s = ctx.config.symbolic;
  const SpectralScan scan = resonance_scan(sft, sft.potential(), sft.roof(), c, s.scan);
  {
    auto os = ctx.csv("scan.csv");
    write_scan_csv(os, scan);
  }
  Json roots = Json::array();
  for (const auto& r : scan.roots)
    roots.push_back({{"re_omega", r.omega.real()},
                     {"im_omega", r.omega.imag()},
                     {"abs_one_minus_lambda", std::abs(1.0 - r.lambda)},
                     {"re_derivative", r.derivative.real()},
                     {"im_derivative", r.derivative.imag()},
                     {"refined", r.refined}});
  Json cycles = Json::array();
  {
    auto os = ctx.csv("cycles.csv");
    os << "cycle,period,roof_average\n";
    for (const auto& cyc : oracle::periodic_orbits(sft.transitions(), s.max_period)) {
      if (sft.memory() != 1) break;
      std::string name;
      for (int k : cyc) name += std::to_string(k);
      const double avg = cycle_average(sft, sft.roof(), cyc);
      os << name << "," << cyc.size() << "," << avg << "\n";
      cycles.push_back({{"cycle", name}, {"period", cyc.size()}, {"roof_average", avg}});
    }
  }
  Json j = header(ctx, "resonances");
  j["result"] = {{"c", c},
                 {"strip", {{"re_max", s.scan.re_max}, {"im_min", s.scan.im_min}, {"im_max", s.scan.im_max}}},
                 {"roots", roots},
                 {"min_overlap", scan.min_overlap},
                 {"cycles", cycles}};
  return finish(ctx, "resonances", j);
}

int cmd_oracle(const Context& ctx) {
  Json j = header(ctx, "oracle");
  Json results = Json::array();
  const SymbolicSpec& s = ctx.config.symbolic;
  if (s.memory == 1) {
    const auto g = oracle::markov_gibbs(s.tau, s.potential, s.roof);
    results.push_back({{"name", "markov_gibbs"},
                       {"c", g.c},
                       {"pressure", g.pressure},
                       {"distribution", g.distribution},
                       {"exactness", "Exact"}});
    Json cyc = Json::array();
    for (const auto& w : oracle::periodic_orbits(s.tau, s.max_period)) cyc.push_back(w);
    results.push_back({{"name", "periodic_orbits"}, {"cycles", cyc}, {"exactness", "Exact"}});
  }
  if (s.roof.size() > 0 && std::all_of(s.roof.begin(), s.roof.end(), [&](double r) { return r == s.roof.front(); }) &&
      s.roof.front() == 1.0)
    results.push_back({{"name", "constant_roof_resonances"},
                       {"roots", oracle::constant_roof_resonances(s.scan.re_max, s.scan.im_min, s.scan.im_max)},
                       {"exactness", "Exact"}});

  const Problem p = problem(ctx);
  FiniteDifferenceOptions o = ctx.config.estimator.finite_difference;
  const auto plus = birkhoff_average(p.system.with_parameter(o.a_step), p.A, o.T, o.n_orbits, o.warmup, o.dt, seed_of(ctx));
  const auto minus = birkhoff_average(p.system.with_parameter(-o.a_step), p.A, o.T, o.n_orbits, o.warmup, o.dt, seed_of(ctx));
  const auto fd = oracle::fd_slope(plus.batch_values, minus.batch_values, o.a_step);
  results.push_back(to_json(fd));
  {
    auto os = ctx.csv("fd_batches.csv");
    os << "batch,plus,minus\n";
    for (std::size_t i = 0; i < plus.batch_values.size(); ++i)
      os << i << "," << plus.batch_values[i] << "," << minus.batch_values[i] << "\n";
  }
  j["results"] = results;
  return finish(ctx, "oracle", j, fd.inconclusive);
}

int cmd_verify(const Context& ctx) {
  AcceptanceOptions o;
  o.seed_offset = ctx.config.estimator.seed - 1;
  const auto outcomes = run_acceptance(o, [&](const CriterionOutcome& c) { ctx.log << format_line(c) << "\n"; });
  Json j = header(ctx, "verify");
  j["manifest"] = acceptance_manifest(outcomes);
  {
    auto os = ctx.csv("acceptance.csv");
    os << "criterion,passed,seconds\n";
    for (const auto& c : outcomes) os << c.id << "," << (c.passed ? 1 : 0) << "," << c.seconds << "\n";
  }
  write_json(ctx.path("verify.json"), j);
  ctx.log << "verify: wrote " << ctx.path("verify.json") << "\n";
  for (const auto& c : outcomes)
    if (!c.passed) return kExitError;
  return kExitOk;
}

using Handler = int (*)(const Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"average", cmd_average},
      {"response-fd", cmd_response_fd},
      {"response-direct", cmd_response_direct},
      {"susceptibility", cmd_susceptibility},
      {"response-split", cmd_response_split},
      {"response-nonauto", cmd_response_nonauto},
      {"clv", cmd_clv},
      {"divergence", cmd_divergence},
      {"symbolic-pressure", cmd_symbolic_pressure},
      {"symbolic-state", cmd_symbolic_state},
      {"symbolic-correlation", cmd_symbolic_correlation},
      {"resonances", cmd_resonances},
      {"oracle", cmd_oracle},
      {"verify", cmd_verify},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"average",
                                              "response-fd",
                                              "response-direct",
                                              "susceptibility",
                                              "response-split",
                                              "response-nonauto",
                                              "clv",
                                              "divergence",
                                              "symbolic-pressure",
                                              "symbolic-state",
                                              "symbolic-correlation",
                                              "resonances",
                                              "oracle",
                                              "verify"};
  return names;
}

int run_command(const std::string& name, const ExperimentConfig& config, const std::string& out_dir,
                std::ostream& log) {
  const auto it = handlers().find(name);
  if (it == handlers().end()) throw ValidationError("unknown command: " + name);
  ensure_dir(out_dir);
  const Context ctx{config, out_dir, log};
  return it->second(ctx);
}

}  // namespace hyperlr::runner
