#include <doctest.h>

#include "commands.hpp"
#include "config.hpp"
#include "report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hyperlr;
using namespace hyperlr::runner;

namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hyperlr_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  return Json::parse(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults parse and validate") {
  const ExperimentConfig c = parse_config_text("{}");
  CHECK(c.system.kind == "cat_suspension");
  CHECK(c.system.roof.amp_x1 == 0.3);
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("unknown keys and bad values name their line") {
  try {
    parse_config_text("system:\n  kind: cat_suspension\n  rooff: 1\n", "t.yaml");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("t.yaml:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("estimator:\n  seed: 1\n  kernel:\n    dt: -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("system:\n  roof: {mean: 0.5, amp_x1: 0.3}\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("symbolic:\n  tau: [[1, 0], [0, 1]]\n"), ValidationError);
}

TEST_CASE("config hash tracks content") {
  const auto a = parse_config_text("{}");
  const auto b = parse_config_text("estimator: {seed: 2}");
  CHECK(config_hash(a) == config_hash(parse_config_text("{}")));
  CHECK(config_hash(a) != config_hash(b));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("average of a constant observable") {
  const auto c = parse_config_text(
      "system:\n  observable: {type: constant, value: 1.0}\n"
      "estimator:\n  average: {T: 100, n_orbits: 2}\n");
  const std::string out = temp_dir("average");
  std::ostringstream log;
  CHECK(run_command("average", c, out, log) == kExitOk);
  const Json j = read_json(out + "/average.json");
  CHECK(j["result"]["value"].get<double>() == 1.0);
  CHECK(j["result"]["std_error"].get<double>() == 0.0);
  CHECK(j["config_hash"] == config_hash(c));
  CHECK(j["version"] == version_string());
  CHECK(j["seeds"].size() == 1);
}

TEST_CASE("resonances of the constant roof") {
  const auto c = parse_config_text("symbolic:\n  tau: [[1, 1], [1, 1]]\n  roof: [1, 1]\n  potential: [0, 0]\n");
  const std::string out = temp_dir("resonances");
  std::ostringstream log;
  CHECK(run_command("resonances", c, out, log) == kExitOk);
  const Json roots = read_json(out + "/resonances.json")["result"]["roots"];
  REQUIRE(roots.size() == 3);
  const double expect[3] = {-kTwoPi, 0.0, kTwoPi};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(roots[i]["re_omega"].get<double>() - expect[i]) < 1e-8);
    CHECK(std::abs(roots[i]["im_omega"].get<double>()) < 1e-8);
  }
  const std::string csv = slurp(out + "/scan.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "re_omega,im_omega,re_lambda,im_lambda,abs_one_minus_lambda");
}

TEST_CASE("reports are deterministic up to the timestamp") {
  const auto c = parse_config_text(
      "estimator:\n  kernel: {T: 2, n_samples: 400}\n  susceptibility: {re_min: -1, re_max: 1, re_step: 0.5}\n");
  std::ostringstream log;
  const std::string a = temp_dir("det_a"), b = temp_dir("det_b");
  run_command("susceptibility", c, a, log);
  run_command("susceptibility", c, b, log);
  CHECK(without_timestamp(read_json(a + "/susceptibility.json")).dump() ==
        without_timestamp(read_json(b + "/susceptibility.json")).dump());
  CHECK(slurp(a + "/susceptibility.csv") == slurp(b + "/susceptibility.csv"));
  const std::string csv = slurp(a + "/susceptibility.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "re_omega,im_omega,re_chi,im_chi,sigma");
}

TEST_CASE("seed offsets move every seed") {
  auto c = parse_config_text("{}");
  const auto before = c.estimator.seed;
  apply_seed_offset(c, 5);
  CHECK(c.estimator.seed == before + 5);
}

TEST_CASE("symbolic commands write their artifacts") {
  const auto c = parse_config_text("symbolic:\n  preset: cat_map\n  correlation: {n_samples: 2000, t_max: 1}\n");
  const std::string out = temp_dir("symbolic");
  std::ostringstream log;
  for (const char* cmd : {"symbolic-pressure", "symbolic-state", "symbolic-correlation", "resonances"}) {
    CHECK(run_command(cmd, c, out, log) == kExitOk);
    CHECK(std::filesystem::exists(out + "/" + cmd + ".json"));
  }
  const Json p = read_json(out + "/symbolic-pressure.json");
  // The preset carries the potential -log(lambda) on every edge, whose pressure vanishes.
  CHECK(std::abs(p["result"]["pressure"].get<double>()) < 1e-12);
  CHECK(std::abs(p["result"]["bowen_root"].get<double>()) < 1e-12);
  CHECK_THROWS(run_command("no-such-command", c, out, log));
}

TEST_CASE("damped response honours the kernel block") {
  const auto c = parse_config_text("estimator:\n  kernel: {T: 1.5, dt: 0.05, n_samples: 300}\n");
  const std::string out = temp_dir("direct");
  std::ostringstream log;
  run_command("response-direct", c, out, log);
  const Json j = read_json(out + "/response-direct.json");
  CHECK(j["result"]["diagnostics"]["n_samples"].get<double>() == 300.0);
  const std::string csv = slurp(out + "/kernel.csv");
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  CHECK(std::stod(last.substr(0, last.find(','))) == doctest::Approx(1.5));
}
