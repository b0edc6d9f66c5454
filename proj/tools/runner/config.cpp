#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace hyperlr::runner {

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : ValidationError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

struct Reader {
  std::string source;

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    throw ConfigError(source, line_of(at), what);
  }

  void keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, "'" + path + "' must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + path + "'");
    }
  }

  template <class T>
  bool get(const YAML::Node& node, const std::string& key, T& out, const std::string& path,
           const std::function<bool(const T&)>& ok = {}, const std::string& rule = {}) const {
    const YAML::Node v = node[key];
    if (!v) return false;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, "'" + path + "." + key + "' has the wrong type");
    }
    if (ok && !ok(out)) fail(v, "'" + path + "." + key + "' " + rule);
    return true;
  }
};

const auto positive = [](const double& v) { return v > 0.0; };
const auto nonnegative = [](const double& v) { return v >= 0.0; };
const auto positive_int = [](const int& v) { return v > 0; };

template <class T>
std::function<bool(const std::string&)> one_of(std::initializer_list<T> options) {
  std::set<std::string> s(options.begin(), options.end());
  return [s](const std::string& v) { return s.count(v) > 0; };
}

void read_terms(const Reader& r, const YAML::Node& node, std::vector<TrigTerm>& terms, const std::string& path) {
  if (!node.IsSequence()) r.fail(node, "'" + path + "' must be a list of [component, amplitude, k1, k2, phase]");
  terms.clear();
  for (const auto& item : node) {
    if (!item.IsSequence() || item.size() != 5) r.fail(item, "each term of '" + path + "' needs 5 entries");
    try {
      TrigTerm t;
      t.component = item[0].as<int>();
      t.amplitude = item[1].as<double>();
      t.k1 = item[2].as<int>();
      t.k2 = item[3].as<int>();
      t.phase = item[4].as<double>();
      if (t.component < 0 || t.component > 2) r.fail(item, "term component must be 0, 1 or 2");
      terms.push_back(t);
    } catch (const YAML::Exception&) {
      r.fail(item, "term in '" + path + "' has the wrong type");
    }
  }
}

void read_system(const Reader& r, const YAML::Node& node, SystemSpec& s) {
  r.keys(node, "system", {"kind", "roof", "lorenz", "perturbation", "observable"});
  r.get<std::string>(node, "kind", s.kind, "system", one_of({"cat_suspension", "lorenz63"}),
                     "must be cat_suspension or lorenz63");
  if (const auto roof = node["roof"]) {
    r.keys(roof, "system.roof", {"mean", "amp_x1", "amp_x2"});
    r.get<double>(roof, "mean", s.roof.mean, "system.roof", positive, "must be positive");
    r.get<double>(roof, "amp_x1", s.roof.amp_x1, "system.roof");
    r.get<double>(roof, "amp_x2", s.roof.amp_x2, "system.roof");
    if (s.roof.min_value() < kRoofFloor)
      r.fail(roof, "roof minimum " + std::to_string(s.roof.min_value()) + " is below psi_min " +
                       std::to_string(kRoofFloor));
  }
  if (const auto lz = node["lorenz"]) {
    r.keys(lz, "system.lorenz", {"sigma", "rho", "beta"});
    r.get<double>(lz, "sigma", s.sigma, "system.lorenz");
    r.get<double>(lz, "rho", s.rho, "system.lorenz");
    r.get<double>(lz, "beta", s.beta, "system.lorenz");
  }
  if (const auto p = node["perturbation"]) {
    r.keys(p, "system.perturbation", {"type", "window_power", "terms", "scale", "vector"});
    r.get<std::string>(p, "type", s.perturbation.type, "system.perturbation",
                       one_of({"trig_window", "base", "zero", "constant", "unstable_trig"}),
                       "must be trig_window, base, zero, constant or unstable_trig");
    r.get<int>(p, "window_power", s.perturbation.window_power, "system.perturbation",
               [](const int& v) { return v >= 0; }, "must be >= 0");
    if (const auto t = p["terms"]) read_terms(r, t, s.perturbation.terms, "system.perturbation.terms");
    r.get<double>(p, "scale", s.perturbation.scale, "system.perturbation");
    r.get<std::vector<double>>(p, "vector", s.perturbation.vector, "system.perturbation");
    const bool cat = s.kind == "cat_suspension";
    const auto& type = s.perturbation.type;
    if (!cat && (type == "trig_window" || type == "unstable_trig"))
      r.fail(p, "perturbation '" + type + "' needs the cat_suspension chart");
    if (type == "constant" && s.perturbation.vector.size() != 3)
      r.fail(p, "constant perturbation needs a 3-component 'vector'");
  }
  if (const auto o = node["observable"]) {
    auto& ob = s.observable;
    r.keys(o, "system.observable",
           {"type", "amplitude", "k1", "k2", "phase", "window_power", "value", "index", "scale"});
    r.get<std::string>(o, "type", ob.type, "system.observable",
                       one_of({"trig_window", "constant", "coordinate", "squared_coordinate"}),
                       "must be trig_window, constant, coordinate or squared_coordinate");
    r.get<double>(o, "amplitude", ob.amplitude, "system.observable");
    r.get<int>(o, "k1", ob.k1, "system.observable");
    r.get<int>(o, "k2", ob.k2, "system.observable");
    r.get<double>(o, "phase", ob.phase, "system.observable");
    r.get<int>(o, "window_power", ob.window_power, "system.observable", [](const int& v) { return v >= 0; },
               "must be >= 0");
    r.get<double>(o, "value", ob.value, "system.observable");
    r.get<int>(o, "index", ob.index, "system.observable", [](const int& v) { return v >= 0 && v < 3; },
               "must be 0, 1 or 2");
    r.get<double>(o, "scale", ob.scale, "system.observable");
    if (s.kind != "cat_suspension" && ob.type == "trig_window")
      r.fail(o, "observable 'trig_window' needs the cat_suspension chart");
  }
  if (s.kind == "cat_suspension" && s.perturbation.type == "trig_window") {
    const VectorField X = trig_window_field(s.roof, s.perturbation.terms, HeightWindow{s.perturbation.window_power});
    const double gap = gluing_mismatch(s.roof, X, 64, 7);
    if (gap > 1e-8)
      r.fail(node["perturbation"] ? node["perturbation"] : node,
             "perturbation is not smooth across the roof identification (mismatch " + std::to_string(gap) + ")");
  }
}

void read_orbit(const Reader& r, const YAML::Node& node, OrbitSpec& o, const std::string& path,
                std::set<std::string> extra = {}) {
  std::set<std::string> allowed{"T", "dt", "warmup"};
  allowed.insert(extra.begin(), extra.end());
  r.keys(node, path, allowed);
  r.get<double>(node, "T", o.T, path, positive, "must be positive");
  r.get<double>(node, "dt", o.dt, path, positive, "must be positive");
  r.get<double>(node, "warmup", o.warmup, path, nonnegative, "must be >= 0");
}

void read_estimator(const Reader& r, const YAML::Node& node, EstimatorSpec& e) {
  r.keys(node, "estimator", {"seed", "average", "finite_difference", "kernel", "direct", "susceptibility", "split",
                             "nonautonomous", "clv", "divergence"});
  r.get<std::uint64_t>(node, "seed", e.seed, "estimator");
  if (const auto n = node["average"]) {
    const std::string p = "estimator.average";
    r.keys(n, p, {"T", "n_orbits", "warmup", "dt"});
    r.get<double>(n, "T", e.average.T, p, positive, "must be positive");
    r.get<int>(n, "n_orbits", e.average.n_orbits, p, positive_int, "must be positive");
    r.get<double>(n, "warmup", e.average.warmup, p, positive, "must be positive");
    r.get<double>(n, "dt", e.average.dt, p, positive, "must be positive");
    if (e.average.T <= e.average.warmup) r.fail(n, "'" + p + ".T' must exceed the warmup");
  }
  if (const auto n = node["finite_difference"]) {
    const std::string p = "estimator.finite_difference";
    auto& f = e.finite_difference;
    r.keys(n, p, {"a_step", "T", "n_orbits", "warmup", "dt"});
    r.get<double>(n, "a_step", f.a_step, p, positive, "must be positive");
    r.get<double>(n, "T", f.T, p, positive, "must be positive");
    r.get<int>(n, "n_orbits", f.n_orbits, p, positive_int, "must be positive");
    r.get<double>(n, "warmup", f.warmup, p, positive, "must be positive");
    r.get<double>(n, "dt", f.dt, p, positive, "must be positive");
    if (f.T <= f.warmup) r.fail(n, "'" + p + ".T' must exceed the warmup");
  }
  if (const auto n = node["kernel"]) {
    const std::string p = "estimator.kernel";
    auto& k = e.kernel;
    r.keys(n, p, {"T", "dt", "n_samples", "warmup", "clip"});
    r.get<double>(n, "T", k.T, p, positive, "must be positive");
    r.get<double>(n, "dt", k.dt, p, positive, "must be positive");
    r.get<int>(n, "n_samples", k.n_samples, p, [](const int& v) { return v >= 2; }, "must be >= 2");
    r.get<double>(n, "warmup", k.warmup, p, nonnegative, "must be >= 0");
    r.get<double>(n, "clip", k.clip, p, positive, "must be positive");
  }
  if (const auto n = node["direct"]) {
    const std::string p = "estimator.direct";
    r.keys(n, p, {"epsilons", "degree"});
    r.get<std::vector<double>>(n, "epsilons", e.direct.epsilons, p,
                               [](const std::vector<double>& v) {
                                 return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
                               },
                               "must be a non-empty list of values >= 0");
    r.get<int>(n, "degree", e.direct.degree, p, [](const int& v) { return v >= -1; }, "must be >= -1");
  }
  if (const auto n = node["susceptibility"]) {
    const std::string p = "estimator.susceptibility";
    auto& s = e.susceptibility;
    r.keys(n, p, {"epsilons", "re_min", "re_max", "re_step", "epsilon"});
    r.get<std::vector<double>>(n, "epsilons", s.epsilons, p,
                               [](const std::vector<double>& v) {
                                 return v.size() >= 2 && std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
                               },
                               "needs at least two positive values");
    r.get<double>(n, "re_min", s.re_min, p);
    r.get<double>(n, "re_max", s.re_max, p);
    r.get<double>(n, "re_step", s.re_step, p, positive, "must be positive");
    r.get<double>(n, "epsilon", s.epsilon, p, positive, "must be positive (Im omega > 0)");
    if (s.re_max < s.re_min) r.fail(n, "'" + p + ".re_max' must be >= re_min");
  }
  if (const auto n = node["split"]) {
    const std::string p = "estimator.split";
    auto& s = e.split;
    r.keys(n, p, {"n_orbits", "T", "dt", "clv_warmup", "T_back", "T_corr", "epsilon", "h", "stride",
                  "sample_warmup", "tail_tolerance"});
    r.get<int>(n, "n_orbits", s.n_orbits, p, [](const int& v) { return v >= 2; }, "must be >= 2");
    r.get<double>(n, "T", s.T, p, positive, "must be positive");
    r.get<double>(n, "dt", s.dt, p, positive, "must be positive");
    r.get<double>(n, "clv_warmup", s.clv_warmup, p, positive, "must be positive");
    r.get<double>(n, "T_back", s.T_back, p, positive, "must be positive");
    r.get<double>(n, "T_corr", s.T_corr, p, positive, "must be positive");
    r.get<double>(n, "epsilon", s.epsilon, p, nonnegative, "must be >= 0");
    r.get<double>(n, "h", s.divergence.h, p, positive, "must be positive");
    r.get<int>(n, "stride", s.divergence.stride, p, positive_int, "must be positive");
    r.get<double>(n, "sample_warmup", s.sample_warmup, p, positive, "must be positive");
    r.get<double>(n, "tail_tolerance", s.tail_tolerance, p, positive, "must be positive");
  }
  if (const auto n = node["nonautonomous"]) {
    const std::string p = "estimator.nonautonomous";
    auto& s = e.nonautonomous;
    r.keys(n, p, {"schedule", "t0", "t_eval", "epsilon"});
    r.get<std::string>(n, "schedule", s.schedule, p, one_of({"constant", "step", "zero"}),
                       "must be constant, step or zero");
    r.get<double>(n, "t0", s.t0, p);
    r.get<double>(n, "t_eval", s.t_eval, p);
    r.get<double>(n, "epsilon", s.epsilon, p, nonnegative, "must be >= 0");
    if (s.t_eval < s.t0) r.fail(n, "'" + p + ".t_eval' must not precede t0");
  }
  if (const auto n = node["clv"]) read_orbit(r, n, e.clv, "estimator.clv");
  if (const auto n = node["divergence"]) {
    const std::string p = "estimator.divergence";
    read_orbit(r, n, e.divergence, p, {"h", "stride", "richardson_every"});
    r.get<double>(n, "h", e.divergence_options.h, p, positive, "must be positive");
    r.get<int>(n, "stride", e.divergence_options.stride, p, positive_int, "must be positive");
    r.get<int>(n, "richardson_every", e.divergence_options.richardson_every, p, [](const int& v) { return v >= 0; },
               "must be >= 0");
  }
  if (e.clv.T <= 2.0 * e.clv.warmup) r.fail(node, "'estimator.clv.T' must exceed twice the warmup");
  if (e.divergence.T <= 2.0 * e.divergence.warmup) r.fail(node, "'estimator.divergence.T' must exceed twice the warmup");
}

void read_function(const Reader& r, const YAML::Node& node, SymbolFunctionSpec& f, const std::string& path) {
  r.keys(node, path, {"type", "value", "table", "frequency"});
  r.get<std::string>(node, "type", f.type, path, one_of({"constant", "symbol", "cos_height"}),
                     "must be constant, symbol or cos_height");
  r.get<double>(node, "value", f.value, path);
  r.get<std::vector<double>>(node, "table", f.table, path);
  r.get<double>(node, "frequency", f.frequency, path);
}

void read_symbolic(const Reader& r, const YAML::Node& node, SymbolicSpec& s) {
  r.keys(node, "symbolic",
         {"preset", "tau", "memory", "roof", "potential", "scan", "correlation", "max_period"});
  r.get<std::string>(node, "preset", s.preset, "symbolic", one_of({"none", "cat_map"}), "must be none or cat_map");
  if (s.preset == "cat_map") {
    const SftSystem cat = cat_map_sft();
    s.tau = cat.transitions();
    s.memory = 1;
    s.roof.assign(cat.word_count(), 1.0);
    s.potential.assign(cat.word_count(), -std::log(CatMap::expansion()));
  }
  const bool has_tau = r.get<std::vector<std::vector<int>>>(node, "tau", s.tau, "symbolic");
  r.get<int>(node, "memory", s.memory, "symbolic", positive_int, "must be >= 1");
  const bool has_roof = r.get<std::vector<double>>(node, "roof", s.roof, "symbolic");
  const bool has_potential = r.get<std::vector<double>>(node, "potential", s.potential, "symbolic");
  r.get<int>(node, "max_period", s.max_period, "symbolic", [](const int& v) { return v >= 1 && v <= 8; },
             "must be in 1..8");
  if (const auto n = node["scan"]) {
    const std::string p = "symbolic.scan";
    auto& sc = s.scan;
    r.keys(n, p, {"re_max", "im_min", "im_max", "re_step", "im_step", "newton_tol"});
    r.get<double>(n, "re_max", sc.re_max, p, nonnegative, "must be >= 0");
    r.get<double>(n, "im_min", sc.im_min, p, [](const double& v) { return v <= 0.0; }, "must be <= 0");
    r.get<double>(n, "im_max", sc.im_max, p, nonnegative, "must be >= 0");
    r.get<double>(n, "re_step", sc.re_step, p, positive, "must be positive");
    r.get<double>(n, "im_step", sc.im_step, p, positive, "must be positive");
    r.get<double>(n, "newton_tol", sc.newton_tol, p, positive, "must be positive");
  }
  if (const auto n = node["correlation"]) {
    const std::string p = "symbolic.correlation";
    r.keys(n, p, {"n_samples", "n_ext", "seed", "t_max", "t_step", "B", "B_prime"});
    r.get<int>(n, "n_samples", s.correlation.n_samples, p, [](const int& v) { return v >= 2; }, "must be >= 2");
    r.get<int>(n, "n_ext", s.correlation.n_ext, p, [](const int& v) { return v >= 0; }, "must be >= 0");
    r.get<std::uint64_t>(n, "seed", s.correlation.seed, p);
    r.get<double>(n, "t_max", s.t_max, p, nonnegative, "must be >= 0");
    r.get<double>(n, "t_step", s.t_step, p, positive, "must be positive");
    if (const auto b = n["B"]) read_function(r, b, s.B, p + ".B");
    if (const auto b = n["B_prime"]) read_function(r, b, s.B_prime, p + ".B_prime");
  }
  // Structural checks against the enumerated words.
  try {
    const SftSystem sft(s.tau, s.memory);
    if (!has_roof && s.roof.size() != sft.word_count()) s.roof.assign(sft.word_count(), 1.0);
    if (!has_potential && s.potential.size() != sft.word_count()) s.potential.assign(sft.word_count(), 0.0);
    if (s.roof.size() != sft.word_count())
      r.fail(node["roof"], "'symbolic.roof' needs " + std::to_string(sft.word_count()) + " entries (one per word)");
    if (s.potential.size() != sft.word_count())
      r.fail(node["potential"],
             "'symbolic.potential' needs " + std::to_string(sft.word_count()) + " entries (one per word)");
    for (const auto* f : {&s.B, &s.B_prime})
      if (f->type == "symbol" && f->table.size() != sft.word_count())
        r.fail(node["correlation"], "symbol tables need " + std::to_string(sft.word_count()) + " entries");
    SftSystem check = sft;
    check.set_roof(s.roof);
    check.set_potential(s.potential);
    check.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.fail(has_tau ? node["tau"] : node, e.what());
  }
}

ExperimentConfig parse_root(const YAML::Node& root, const std::string& source) {
  Reader r{source};
  ExperimentConfig c;
  c.source = source;
  if (root.IsNull()) return c;
  r.keys(root, "<root>", {"system", "estimator", "symbolic", "output"});
  if (const auto n = root["system"]) read_system(r, n, c.system);
  if (const auto n = root["estimator"]) read_estimator(r, n, c.estimator);
  if (const auto n = root["symbolic"]) read_symbolic(r, n, c.symbolic);
  if (const auto n = root["output"]) {
    r.keys(n, "output", {"dir"});
    r.get<std::string>(n, "dir", c.output.dir, "output");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "YAML syntax error: " + e.msg);
  }
  return parse_root(root, source);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace {

Json terms_json(const std::vector<TrigTerm>& terms) {
  Json a = Json::array();
  for (const auto& t : terms) a.push_back({t.component, t.amplitude, t.k1, t.k2, t.phase});
  return a;
}

Json function_json(const SymbolFunctionSpec& f) {
  return Json{{"type", f.type}, {"value", f.value}, {"table", f.table}, {"frequency", f.frequency}};
}

}  // namespace

Json config_to_json(const ExperimentConfig& c) {
  const auto& s = c.system;
  const auto& e = c.estimator;
  const auto& y = c.symbolic;
  Json j;
  j["system"] = {
      {"kind", s.kind},
      {"roof", {{"mean", s.roof.mean}, {"amp_x1", s.roof.amp_x1}, {"amp_x2", s.roof.amp_x2}}},
      {"lorenz", {{"sigma", s.sigma}, {"rho", s.rho}, {"beta", s.beta}}},
      {"perturbation",
       {{"type", s.perturbation.type},
        {"window_power", s.perturbation.window_power},
        {"terms", terms_json(s.perturbation.terms)},
        {"scale", s.perturbation.scale},
        {"vector", s.perturbation.vector}}},
      {"observable",
       {{"type", s.observable.type},
        {"amplitude", s.observable.amplitude},
        {"k1", s.observable.k1},
        {"k2", s.observable.k2},
        {"phase", s.observable.phase},
        {"window_power", s.observable.window_power},
        {"value", s.observable.value},
        {"index", s.observable.index},
        {"scale", s.observable.scale}}}};
  j["estimator"] = {
      {"seed", e.seed},
      {"average", {{"T", e.average.T}, {"n_orbits", e.average.n_orbits}, {"warmup", e.average.warmup}, {"dt", e.average.dt}}},
      {"finite_difference",
       {{"a_step", e.finite_difference.a_step},
        {"T", e.finite_difference.T},
        {"n_orbits", e.finite_difference.n_orbits},
        {"warmup", e.finite_difference.warmup},
        {"dt", e.finite_difference.dt}}},
      {"kernel",
       {{"T", e.kernel.T}, {"dt", e.kernel.dt}, {"n_samples", e.kernel.n_samples}, {"warmup", e.kernel.warmup},
        {"clip", e.kernel.clip}}},
      {"direct", {{"epsilons", e.direct.epsilons}, {"degree", e.direct.degree}}},
      {"susceptibility",
       {{"epsilons", e.susceptibility.epsilons},
        {"re_min", e.susceptibility.re_min},
        {"re_max", e.susceptibility.re_max},
        {"re_step", e.susceptibility.re_step},
        {"epsilon", e.susceptibility.epsilon}}},
      {"split",
       {{"n_orbits", e.split.n_orbits},
        {"T", e.split.T},
        {"dt", e.split.dt},
        {"clv_warmup", e.split.clv_warmup},
        {"T_back", e.split.T_back},
        {"T_corr", e.split.T_corr},
        {"epsilon", e.split.epsilon},
        {"h", e.split.divergence.h},
        {"stride", e.split.divergence.stride},
        {"sample_warmup", e.split.sample_warmup},
        {"tail_tolerance", e.split.tail_tolerance}}},
      {"nonautonomous",
       {{"schedule", e.nonautonomous.schedule},
        {"t0", e.nonautonomous.t0},
        {"t_eval", e.nonautonomous.t_eval},
        {"epsilon", e.nonautonomous.epsilon}}},
      {"clv", {{"T", e.clv.T}, {"dt", e.clv.dt}, {"warmup", e.clv.warmup}}},
      {"divergence",
       {{"T", e.divergence.T},
        {"dt", e.divergence.dt},
        {"warmup", e.divergence.warmup},
        {"h", e.divergence_options.h},
        {"stride", e.divergence_options.stride},
        {"richardson_every", e.divergence_options.richardson_every}}}};
  j["symbolic"] = {
      {"preset", y.preset},
      {"tau", y.tau},
      {"memory", y.memory},
      {"roof", y.roof},
      {"potential", y.potential},
      {"max_period", y.max_period},
      {"scan",
       {{"re_max", y.scan.re_max},
        {"im_min", y.scan.im_min},
        {"im_max", y.scan.im_max},
        {"re_step", y.scan.re_step},
        {"im_step", y.scan.im_step},
        {"newton_tol", y.scan.newton_tol}}},
      {"correlation",
       {{"n_samples", y.correlation.n_samples},
        {"n_ext", y.correlation.n_ext},
        {"seed", y.correlation.seed},
        {"t_max", y.t_max},
        {"t_step", y.t_step},
        {"B", function_json(y.B)},
        {"B_prime", function_json(y.B_prime)}}}};
  j["output"] = {{"dir", c.output.dir}};
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(config).dump())));
  return buf;
}

void apply_seed_offset(ExperimentConfig& c, std::uint64_t offset) {
  auto& e = c.estimator;
  e.seed += offset;
  c.symbolic.correlation.seed += offset;
}

// ---------------------------------------------------------------------------

FlowSystem build_system(const SystemSpec& s) {
  if (s.kind == "lorenz63") return FlowSystem::lorenz63(s.sigma, s.rho, s.beta);
  return FlowSystem::cat_suspension(s.roof);
}

VectorField build_perturbation(const SystemSpec& s, const FlowSystem& base) {
  const auto& p = s.perturbation;
  const int dim = base.dim();
  if (p.type == "zero") return zero_field(dim);
  if (p.type == "base") return scaled_base_field(base, p.scale);
  if (p.type == "constant") {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = p.vector[static_cast<std::size_t>(i)];
    return constant_field(v);
  }
  if (p.type == "unstable_trig") return unstable_trig_field(p.terms);
  return trig_window_field(s.roof, p.terms, HeightWindow{p.window_power});
}

Observable build_observable(const SystemSpec& s) {
  const auto& o = s.observable;
  const int dim = 3;
  if (o.type == "constant") return constant_observable(dim, o.value);
  if (o.type == "coordinate") return coordinate_observable(dim, o.index, o.scale);
  if (o.type == "squared_coordinate") return squared_coordinate_observable(dim, o.index, o.scale);
  return trig_window_observable(s.roof, o.amplitude, o.k1, o.k2, o.phase, HeightWindow{o.window_power});
}

FlowSystem build_perturbed_system(const SystemSpec& s) {
  const FlowSystem base = build_system(s);
  return base.with_perturbation(build_perturbation(s, base));
}

SftSystem build_sft(const SymbolicSpec& s) {
  SftSystem sft(s.tau, s.memory);
  sft.set_roof(s.roof);
  sft.set_potential(s.potential);
  sft.validate();
  return sft;
}

SuspensionFunction build_symbol_function(const SymbolFunctionSpec& f, const SftSystem& sft) {
  if (f.type == "constant") {
    const double v = f.value;
    return [v](int, double) { return v; };
  }
  if (f.type == "symbol") {
    const std::vector<double> table = f.table;
    require(table.size() == sft.word_count(), "symbol table size does not match the word count");
    return [table](int w, double) { return table[static_cast<std::size_t>(w)]; };
  }
  const double k = f.frequency;
  return [k](int, double t) { return std::cos(kTwoPi * k * t); };
}

}  // namespace hyperlr::runner
