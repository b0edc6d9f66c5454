#include "report.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#ifndef HYPERLR_VERSION
#define HYPERLR_VERSION "0.0.0"
#endif

namespace hyperlr::runner {

std::string version_string() { return "hyperlr " HYPERLR_VERSION; }

Json report_header(const std::string& command, const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  Json j;
  j["command"] = command;
  j["version"] = version_string();
  j["config_hash"] = config_hash(config);
  j["config_source"] = config.source;
  j["seeds"] = seeds;
  j["timestamp"] = stamp;
  return j;
}

Json to_json(const ResponseReport& r) {
  Json j;
  j["method"] = to_string(r.method);
  j["value"] = r.value;
  j["std_error"] = r.std_error;
  j["inconclusive"] = r.inconclusive;
  Json d = Json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = v;
  j["diagnostics"] = d;
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const oracle::OracleResult& r) {
  Json j;
  j["name"] = r.name;
  j["value"] = r.values.size() == 1 ? Json(r.values.front()) : Json(r.values);
  if (r.sigma) j["sigma"] = *r.sigma;
  j["method"] = r.method;
  j["exactness"] = oracle::to_string(r.exactness);
  if (r.inconclusive) j["inconclusive"] = true;
  return j;
}

Json without_timestamp(Json j) {
  if (j.is_object()) {
    j.erase("timestamp");
    for (auto& [k, v] : j.items()) v = without_timestamp(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timestamp(v);
  }
  return j;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace hyperlr::runner
