#pragma once

#include "config.hpp"

#include "hyperlr/oracle.hpp"
#include "hyperlr/srb_response.hpp"

#include <string>
#include <vector>

namespace hyperlr::runner {

std::string version_string();

/// Common header of every report: command, version, config hash, seeds, timestamp.
Json report_header(const std::string& command, const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds);

Json to_json(const ResponseReport& r);
Json to_json(const oracle::OracleResult& r);

/// Copy without the "timestamp" field.
Json without_timestamp(Json j);

void write_json(const std::string& path, const Json& j);
/// Creates the directory (and parents) if needed.
void ensure_dir(const std::string& dir);

}  // namespace hyperlr::runner
