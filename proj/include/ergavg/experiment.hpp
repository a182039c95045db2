#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ergavg/parallel.hpp"

namespace ergavg {

inline constexpr const char* kVersion = "ergavg 0.1.0";

struct RunOptions {
  std::optional<std::string> out_prefix;
  ExecPolicy exec;
};

struct RunResult {
  int exit_code = 0;
  std::string message;
  std::string csv_path;
  std::string meta_path;
};

/// Exit codes: 0 success (failed grid points are flagged in the CSV),
/// 1 numerical or internal error, 2 invalid config (message names the
/// field), 3 I/O failure.
RunResult run_experiment(const nlohmann::json& config, const RunOptions& options = {});
RunResult run_experiment_file(const std::string& path, const RunOptions& options = {});

/// CSV and meta text without writing files.
struct ExperimentOutput {
  std::string csv;
  nlohmann::json meta;
};
ExperimentOutput evaluate_experiment(const nlohmann::json& config, const ExecPolicy& exec = {});

}  // namespace ergavg
