#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/report.hpp"

namespace pencil::app {

// Command-line values that replace the corresponding config entries.
struct Overrides {
  std::optional<std::vector<double>> lambdas;
  std::optional<int> grid;  // samples per axis
  std::optional<double> tolerance;  // pass threshold of every check
  std::optional<std::string> output_dir;
};

struct RunResult {
  std::string command;
  std::string digest;  // FNV-1a of the canonical config, hex
  ComplianceReport report;
  double wall_time = 0.0;              // seconds; not written to any file
  std::vector<std::string> artifacts;  // data files relative to output_dir
  std::string output_dir;
  std::string report_json;             // also written as output_dir/report.json

  Verdict verdict() const { return report.verdict(); }
};

// check-hamiltonian, check-compat, solve-diagonal, frame, deform-surface.
const std::vector<std::string>& commands();

// Parses and validates the config, runs the command and writes its files.
// Throws ConfigError, ParseError, DomainError or PreconditionError for bad
// input and NumericalFailure when a solver gives up.
RunResult run(std::string_view command, std::string_view config_json, const Overrides& overrides = {});

// 0 pass, 1 fail, 2 inconclusive.
int exit_code(Verdict v);
constexpr int kConfigExit = 3;

}  // namespace pencil::app
