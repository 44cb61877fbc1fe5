#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pencil_lab/pencil_lab.h"

namespace {

constexpr int kExitConfig = 3;

std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw CLI::ValidationError("--lambda", "bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--lambda", "empty list");
  return out;
}

struct RunHandle {
  pl_run* run = nullptr;
  ~RunHandle() { pl_run_destroy(run); }
};

void print_summary(const pl_run* run, const std::string& command) {
  auto report = nlohmann::json::parse(pl_run_report_json(run));
  std::printf("%s: %s (config %s)\n", command.c_str(), report["verdict"].get<std::string>().c_str(),
              pl_run_digest(run));
  for (const auto& r : report["residuals"]) {
    std::printf("  %-48s %-24s %s%s\n", r["name"].get<std::string>().c_str(), r["value"].dump().c_str(),
                r["verdict"].get<std::string>().c_str(), r["gating"].get<bool>() ? "" : " (info)");
  }
  for (const auto& s : report["skipped_lambdas"]) std::printf("  skipped lambda %s (pole)\n", s.dump().c_str());
  for (const auto& n : report["notes"]) std::printf("  note: %s\n", n.get<std::string>().c_str());
  for (std::size_t i = 0; i < pl_run_artifact_count(run); ++i) std::printf("  wrote %s\n", pl_run_artifact(run, i));
  std::fprintf(stderr, "wall time %.3f s\n", pl_run_wall_time(run));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compatible Poisson brackets of hydrodynamic type: checks, solvers and surface families"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, lambdas;
  int grid = 0;
  double tol = 0.0;

  const char* commands[] = {"check-hamiltonian", "check-compat", "solve-diagonal", "frame", "deform-surface"};
  for (const char* name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--lambda", lambdas, "comma-separated lambda list");
    sub->add_option("--grid", grid, "samples per axis")->check(CLI::Range(2, 100000));
    sub->add_option("--tol", tol, "pass threshold for every check")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  std::string command = app.get_subcommands().front()->get_name();

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot read config '%s'\n", config_path.c_str());
    return kExitConfig;
  }
  std::string config((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  RunHandle h;
  if (pl_run_create(&h.run) != PL_OK) {
    std::fprintf(stderr, "error: %s\n", pl_last_error());
    return kExitConfig;
  }
  try {
    if (!lambdas.empty()) {
      auto l = parse_lambda_list(lambdas);
      pl_run_set_lambdas(h.run, l.data(), l.size());
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  if (grid) pl_run_set_grid(h.run, grid);
  if (tol > 0.0) pl_run_set_tolerance(h.run, tol);
  if (!out_dir.empty()) pl_run_set_output_dir(h.run, out_dir.c_str());

  pl_status s = pl_run_execute(h.run, command.c_str(), config.c_str());
  if (s != PL_OK) {
    std::fprintf(stderr, "error (%s): %s\n", pl_status_string(s), pl_last_error());
    if (s == PL_ERR_PARSE) std::fprintf(stderr, "parse offset %zu\n", pl_last_error_offset());
    return s == PL_ERR_NUMERICAL ? 1 : kExitConfig;
  }
  print_summary(h.run, command);
  switch (pl_run_verdict(h.run)) {
    case PL_VERDICT_PASS: return 0;
    case PL_VERDICT_FAIL: return 1;
    case PL_VERDICT_INCONCLUSIVE: return 2;
    default: return kExitConfig;
  }
}
