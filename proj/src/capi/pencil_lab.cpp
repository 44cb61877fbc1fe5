#include "pencil_lab/pencil_lab.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "pencil/app.hpp"
#include "pencil/errors.hpp"
#include "pencil/expr.hpp"

struct pl_expr {
  pencil::Expr e;
};

struct pl_run {
  pencil::app::Overrides overrides;
  std::optional<pencil::app::RunResult> result;
};

namespace {

thread_local std::string last_error;
thread_local std::size_t last_offset = 0;

pl_status fail(pl_status s, const char* what, std::size_t offset = 0) {
  last_error = what;
  last_offset = offset;
  return s;
}

template <class F>
pl_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    last_offset = 0;
    return PL_OK;
  } catch (const pencil::ParseError& e) {
    return fail(PL_ERR_PARSE, e.what(), e.offset());
  } catch (const pencil::ConfigError& e) {
    return fail(PL_ERR_CONFIG, e.what());
  } catch (const pencil::DomainError& e) {
    return fail(PL_ERR_DOMAIN, e.what());
  } catch (const pencil::PreconditionError& e) {
    return fail(PL_ERR_PRECONDITION, e.what());
  } catch (const pencil::NumericalFailure& e) {
    return fail(PL_ERR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PL_ERR_INTERNAL, e.what());
  }
}

}  // namespace

extern "C" {

const char* pl_version(void) { return "1.0.0"; }

const char* pl_status_string(pl_status status) {
  switch (status) {
    case PL_OK: return "ok";
    case PL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PL_ERR_PARSE: return "parse error";
    case PL_ERR_CONFIG: return "config error";
    case PL_ERR_DOMAIN: return "domain error";
    case PL_ERR_PRECONDITION: return "precondition violated";
    case PL_ERR_NUMERICAL: return "numerical failure";
    case PL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pl_last_error(void) { return last_error.c_str(); }
size_t pl_last_error_offset(void) { return last_offset; }

pl_status pl_expr_parse(const char* text, int dimension, pl_expr** out) {
  if (!text || !out || dimension < 1) return fail(PL_ERR_INVALID_ARGUMENT, "null text/out or dimension < 1");
  *out = nullptr;
  return guarded([&] { *out = new pl_expr{pencil::parse_expr(text, dimension)}; });
}

pl_status pl_expr_eval(const pl_expr* e, const double* point, size_t n, double* out) {
  if (!e || !out || (n && !point)) return fail(PL_ERR_INVALID_ARGUMENT, "null expression, point or out");
  if (static_cast<size_t>(e->e.dimension_used()) > n) return fail(PL_ERR_INVALID_ARGUMENT, "point has too few coordinates");
  return guarded([&] { *out = e->e.eval(std::span<const double>(point, n)); });
}

pl_status pl_expr_diff(const pl_expr* e, int axis, pl_expr** out) {
  if (!e || !out || axis < 0) return fail(PL_ERR_INVALID_ARGUMENT, "null expression/out or negative axis");
  *out = nullptr;
  return guarded([&] { *out = new pl_expr{e->e.diff(axis)}; });
}

pl_status pl_expr_to_string(const pl_expr* e, char* buf, size_t cap, size_t* needed) {
  if (!e || (cap && !buf)) return fail(PL_ERR_INVALID_ARGUMENT, "null expression or buffer");
  return guarded([&] {
    std::string s = e->e.str();
    if (needed) *needed = s.size() + 1;
    if (cap) {
      size_t k = std::min(cap - 1, s.size());
      std::memcpy(buf, s.data(), k);
      buf[k] = '\0';
    }
  });
}

void pl_expr_free(pl_expr* e) { delete e; }

pl_status pl_run_create(pl_run** out) {
  if (!out) return fail(PL_ERR_INVALID_ARGUMENT, "null out");
  *out = nullptr;
  return guarded([&] { *out = new pl_run{}; });
}

pl_status pl_run_set_lambdas(pl_run* run, const double* lambdas, size_t count) {
  if (!run || (count && !lambdas)) return fail(PL_ERR_INVALID_ARGUMENT, "null run or lambdas");
  run->overrides.lambdas = std::vector<double>(lambdas, lambdas + count);
  return PL_OK;
}

pl_status pl_run_set_grid(pl_run* run, int points) {
  if (!run || points < 2) return fail(PL_ERR_INVALID_ARGUMENT, "null run or fewer than 2 points");
  run->overrides.grid = points;
  return PL_OK;
}

pl_status pl_run_set_tolerance(pl_run* run, double pass) {
  if (!run || !(pass > 0.0)) return fail(PL_ERR_INVALID_ARGUMENT, "null run or non-positive tolerance");
  run->overrides.tolerance = pass;
  return PL_OK;
}

pl_status pl_run_set_output_dir(pl_run* run, const char* dir) {
  if (!run || !dir) return fail(PL_ERR_INVALID_ARGUMENT, "null run or directory");
  run->overrides.output_dir = std::string(dir);
  return PL_OK;
}

pl_status pl_run_execute(pl_run* run, const char* command, const char* config_json) {
  if (!run || !command || !config_json) return fail(PL_ERR_INVALID_ARGUMENT, "null run, command or config");
  run->result.reset();
  return guarded([&] { run->result = pencil::app::run(command, config_json, run->overrides); });
}

pl_verdict pl_run_verdict(const pl_run* run) {
  if (!run || !run->result) return PL_VERDICT_NONE;
  switch (run->result->verdict()) {
    case pencil::Verdict::Pass: return PL_VERDICT_PASS;
    case pencil::Verdict::Fail: return PL_VERDICT_FAIL;
    case pencil::Verdict::Inconclusive: return PL_VERDICT_INCONCLUSIVE;
  }
  return PL_VERDICT_NONE;
}

const char* pl_run_report_json(const pl_run* run) {
  return run && run->result ? run->result->report_json.c_str() : nullptr;
}

const char* pl_run_digest(const pl_run* run) { return run && run->result ? run->result->digest.c_str() : nullptr; }

double pl_run_wall_time(const pl_run* run) { return run && run->result ? run->result->wall_time : 0.0; }

size_t pl_run_artifact_count(const pl_run* run) { return run && run->result ? run->result->artifacts.size() : 0; }

const char* pl_run_artifact(const pl_run* run, size_t i) {
  if (!run || !run->result || i >= run->result->artifacts.size()) return nullptr;
  return run->result->artifacts[i].c_str();
}

void pl_run_destroy(pl_run* run) { delete run; }

}  // extern "C"
