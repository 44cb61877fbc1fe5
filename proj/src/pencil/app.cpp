#include "pencil/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#include "json.hpp"
#include "pencil/compat.hpp"
#include "pencil/diagonal.hpp"
#include "pencil/errors.hpp"
#include "pencil/format.hpp"
#include "pencil/io.hpp"
#include "pencil/lax.hpp"
#include "pencil/surface.hpp"

namespace pencil::app {

using nlohmann::json;

namespace {

struct Tolerances {
  Thresholds exact{1e-8, 1e-4};
  Thresholds grid{1e-5, 1e-3};
};

struct Context {
  std::string command;
  json config;
  Chart chart;
  std::vector<double> lambdas;
  bool lambdas_given = false;
  Tolerances tol;
  std::filesystem::path out;
  std::string digest;
  ComplianceReport report;
  std::vector<std::string> artifacts;

  void write(const std::string& name, std::string_view content) {
    write_file(out / name, content);
    artifacts.push_back(name);
  }
  std::string header() const { return "pencil-lab " + command + "\nconfig_digest " + digest; }
};

const json& need(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError("missing config entry '" + path + key + "'");
  return obj.at(key);
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("config entry '" + path + "' must be a number");
  return v.get<double>();
}

int integer_at(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError("config entry '" + path + "' must be an integer");
  return v.get<int>();
}

Expr expr_at(const json& v, const std::string& path, int n) {
  if (!v.is_string()) throw ConfigError("config entry '" + path + "' must be an expression string");
  try {
    return parse_expr(v.get<std::string>(), n);
  } catch (const ParseError& e) {
    std::string what = e.what();
    auto cut = what.rfind(" at offset ");
    throw ParseError(path + ": " + what.substr(0, cut), e.offset());
  }
}

std::vector<Expr> expr_list(const json& v, const std::string& path, int n, std::size_t count) {
  if (!v.is_array() || v.size() != count) {
    throw ConfigError("config entry '" + path + "' must list " + std::to_string(count) + " expressions");
  }
  std::vector<Expr> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(expr_at(v[i], path + "[" + std::to_string(i) + "]", n));
  return out;
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError("config entry '" + path + "' must be a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

MetricField metric_at(const json& v, const std::string& path, int n) {
  auto un = static_cast<std::size_t>(n);
  if (v.is_object() && v.contains("upper")) {
    return MetricField::from_contravariant(expr_list(v["upper"], path + ".upper", n, un * un), n);
  }
  if (v.is_object() && v.contains("lower")) {
    return MetricField::from_covariant(expr_list(v["lower"], path + ".lower", n, un * un), n);
  }
  if (v.is_object() && v.contains("diagonal")) {
    return MetricField::diagonal_contravariant(expr_list(v["diagonal"], path + ".diagonal", n, un));
  }
  throw ConfigError("config entry '" + path + "' needs one of 'upper', 'lower' or 'diagonal'");
}

Chart chart_at(json& root, const Overrides& o) {
  json& c = root["chart"];
  if (!c.is_object()) throw ConfigError("missing config entry 'chart'");
  auto lo = number_list(need(c, "lo", "chart."), "chart.lo");
  auto hi = number_list(need(c, "hi", "chart."), "chart.hi");
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("chart.lo and chart.hi must have the same nonzero length");
  if (o.grid) c["points"] = *o.grid;
  const json& p = need(c, "points", "chart.");
  std::vector<int> m;
  if (p.is_array()) {
    for (std::size_t i = 0; i < p.size(); ++i) m.push_back(integer_at(p[i], "chart.points[" + std::to_string(i) + "]"));
  } else {
    m.assign(lo.size(), integer_at(p, "chart.points"));
  }
  if (m.size() != lo.size()) throw ConfigError("chart.points must give one count per axis");
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (m[k] < 2) throw ConfigError("chart.points must be at least 2");
    if (!(hi[k] > lo[k])) throw ConfigError("chart.hi must exceed chart.lo on every axis");
  }
  return Chart(lo, hi, m);
}

Thresholds thresholds_at(const json& root, const char* key, Thresholds t, const Overrides& o) {
  if (root.contains("tolerances") && root["tolerances"].contains(key)) {
    const json& v = root["tolerances"][key];
    std::string path = std::string("tolerances.") + key;
    if (v.contains("pass")) t.pass = number_at(v["pass"], path + ".pass");
    if (v.contains("fail")) t.fail = number_at(v["fail"], path + ".fail");
  }
  if (o.tolerance) {
    t.pass = *o.tolerance;
    if (t.fail <= t.pass) t.fail = 100.0 * t.pass;
  }
  if (!(t.pass > 0.0) || !(t.fail > t.pass)) throw ConfigError(std::string("tolerances.") + key + " need 0 < pass < fail");
  return t;
}

std::string lambda_row(double l, const char* what) { return "lambda_" + format_number(l) + "_" + what; }

std::vector<int> axis_order_at(const json& sec, const std::string& path, int n) {
  std::vector<int> order;
  if (!sec.contains("axis_order")) return order;
  const json& v = sec["axis_order"];
  if (!v.is_array()) throw ConfigError("config entry '" + path + "axis_order' must be a list");
  for (std::size_t i = 0; i < v.size(); ++i) {
    int a = integer_at(v[i], path + "axis_order[" + std::to_string(i) + "]");
    if (a < 1 || a > n) throw ConfigError("axis_order entries are 1-based axes");
    order.push_back(a - 1);
  }
  return order;
}

void require_lambdas(const Context& c) {
  if (c.lambdas.empty()) throw ConfigError("this command needs a nonempty lambda list");
}

// check-hamiltonian ---------------------------------------------------------

void cmd_check_hamiltonian(Context& c) {
  const json& sec = need(c.config, "hamiltonian", "");
  int n = c.chart.dim();
  MetricField g = metric_at(need(sec, "metric", "hamiltonian."), "hamiltonian.metric", n);
  g.validate(c.chart);
  HamiltonianOperator a{g, {}};
  auto un = static_cast<std::size_t>(n);
  if (sec.contains("b")) {
    a.b = expr_list(sec["b"], "hamiltonian.b", n, un * un * un);
  } else if (g.has_lower()) {
    a = levi_civita_operator(g);
  }
  c.report = check_hamiltonian(a, c.chart, c.tol.exact);
}

// check-compat --------------------------------------------------------------

void cmd_check_compat(Context& c) {
  const json& sec = need(c.config, "compat", "");
  int n = c.chart.dim();
  MetricField g = metric_at(need(sec, "g", "compat."), "compat.g", n);
  MetricField gt = metric_at(need(sec, "gt", "compat."), "compat.gt", n);
  g.validate(c.chart);
  gt.validate(c.chart);
  CompatOptions opt;
  opt.thresholds = c.tol.exact;
  if (c.lambdas_given) opt.lambdas = c.lambdas;
  auto op = [](const MetricField& m) { return m.has_lower() ? levi_civita_operator(m) : HamiltonianOperator{m, {}}; };
  auto p = pencil_operator(g, gt);
  ComplianceReport rep;
  rep.merge(check_theorem1(p, c.chart, opt), "theorem1.");
  rep.merge(check_pencil(op(g), op(gt), c.chart, opt), "pencil.");
  rep.merge(verify_appendix(p, c.chart, opt), "appendix.");
  c.report = std::move(rep);
}

// solve-diagonal ------------------------------------------------------------

struct DiagonalInput {
  std::vector<Expr> eta;
  std::vector<Expr> boundary;
  DiagonalOptions opt;
};

DiagonalInput diagonal_input(const json& sec, const std::string& path, int n) {
  auto un = static_cast<std::size_t>(n);
  DiagonalInput in;
  in.eta = expr_list(need(sec, "eta", path), path + "eta", n, un);
  in.boundary = expr_list(need(sec, "boundary", path), path + "boundary", n, un * un);
  in.opt.axis_order = axis_order_at(sec, path, n);
  return in;
}

std::vector<Column> beta_columns(const BetaGrids& beta, int n) {
  std::vector<Column> cols;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) cols.push_back({"beta_" + std::to_string(i + 1) + std::to_string(j + 1), &beta[idx2(n, i, j)]});
    }
  }
  return cols;
}

void cmd_solve_diagonal(Context& c) {
  const json& sec = need(c.config, "diagonal", "");
  int n = c.chart.dim();
  c.chart.require_samples(5, "fourth-order differences");
  auto in = diagonal_input(sec, "diagonal.", n);
  auto beta = solve_S(in.eta, in.boundary, c.chart, in.opt);
  c.report = diagonal_report(beta, in.eta, in.boundary, c.chart, c.tol.grid);
  auto cols = beta_columns(beta, n);
  c.write("beta.csv", grid_csv(c.chart, cols, c.header()));

  bool constant = std::all_of(in.eta.begin(), in.eta.end(), [](const Expr& e) { return e.is_constant(); });
  if (n == 3 && constant) {
    std::vector<double> cv;
    for (const auto& e : in.eta) cv.push_back(e.value());
    auto P = conserved_P(beta, cv, c.chart);
    c.report.add("conserved_P_drift", P.transverse_drift, 1.0, c.tol.grid);
    std::vector<Column> pc;
    for (int i = 0; i < 3; ++i) pc.push_back({"P_" + std::to_string(i + 1), &P.P[static_cast<std::size_t>(i)]});
    c.write("p_table.csv", grid_csv(c.chart, pc, c.header()));
    if (cv[0] < cv[1] && cv[1] < cv[2]) {
      auto mu = mu_constants(cv);
      for (int i = 0; i < 3; ++i) c.report.add_info("mu_" + std::to_string(i + 1), mu[static_cast<std::size_t>(i)]);
    }
  }
  if (sec.contains("s2")) {
    if (n != 3 || !constant) throw ConfigError("diagonal.s2 needs n = 3 and constant eta");
    auto seed = number_list(need(sec["s2"], "seed", "diagonal.s2."), "diagonal.s2.seed");
    if (seed.size() != 3) throw ConfigError("diagonal.s2.seed must hold p, q, r");
    auto s = integrate_S2({seed[0], seed[1], seed[2]}, c.chart, axis_order_at(sec["s2"], "diagonal.s2.", 3));
    c.report.add("s2_consistency", s2_consistency(s, c.chart), 1.0, c.tol.grid);
    auto ma = monge_ampere_residual(s.q, c.chart);
    for (int i = 0; i < 3; ++i) {
      c.report.add("monge_ampere_" + std::to_string(i + 1), ma[static_cast<std::size_t>(i)], 1.0, c.tol.grid);
    }
    std::vector<Column> sc{{"p", &s.p}, {"q", &s.q}, {"r", &s.r}};
    c.write("s2.csv", grid_csv(c.chart, sc, c.header()));
  }
}

// frame ---------------------------------------------------------------------

void cmd_frame(Context& c) {
  const json& sec = need(c.config, "frame", "");
  int n = c.chart.dim();
  auto un = static_cast<std::size_t>(n);
  require_lambdas(c);
  c.chart.require_samples(5, "fourth-order differences");
  auto in = diagonal_input(sec, "frame.", n);
  std::vector<Expr> line(un, Expr(1.0));
  if (sec.contains("lame_line")) line = expr_list(sec["lame_line"], "frame.lame_line", n, un);
  auto beta = solve_S(in.eta, in.boundary, c.chart, in.opt);
  auto H = solve_lame(beta, line, c.chart);

  int fixed = n - 1, index = (c.chart.count(n - 1) - 1) / 2;
  if (sec.contains("slice")) {
    const json& s = sec["slice"];
    if (s.contains("axis")) fixed = integer_at(s["axis"], "frame.slice.axis") - 1;
    if (fixed < 0 || fixed >= n) throw ConfigError("frame.slice.axis is a 1-based axis");
    index = s.contains("index") ? integer_at(s["index"], "frame.slice.index") : (c.chart.count(fixed) - 1) / 2;
    if (index < 0 || index >= c.chart.count(fixed)) throw ConfigError("frame.slice.index is outside the grid");
  }
  bool slices = n >= 2;
  Slice slice;
  if (slices) slice = make_slice(c.chart, fixed, index);

  ComplianceReport rep;
  std::vector<SliceCurvatures> family;
  for (double l : c.lambdas) {
    auto L = build_lax(beta, in.eta, l, c.chart);
    rep.add(lambda_row(l, "zero_curvature"), zero_curvature_residual(L, c.chart), 1.0, c.tol.grid);
    FrameOptions fo;
    fo.axis_order = in.opt.axis_order;
    auto F = integrate_frame(L, H, c.chart, fo);
    rep.add(lambda_row(l, "orthogonality"), F.orthogonality_drift, 1.0, c.tol.grid);
    rep.add(lambda_row(l, "induced_metric"), induced_metric_residual(F, L, H, c.chart), 1.0, c.tol.grid);
    rep.add(lambda_row(l, "rvec_compatibility"), rvec_compatibility(F, L, H, c.chart), 1.0, c.tol.grid);
    rep.lambdas.push_back(l);

    std::vector<Field> comps(un + un * un, Field(c.chart.size()));
    std::vector<Column> cols;
    for (std::size_t q = 0; q < c.chart.size(); ++q) {
      for (std::size_t i = 0; i < un; ++i) comps[i][q] = F.rvec[q * un + i];
      for (std::size_t e = 0; e < un * un; ++e) comps[un + e][q] = F.phi[q * un * un + e];
    }
    for (int i = 0; i < n; ++i) cols.push_back({"r_" + std::to_string(i + 1), &comps[static_cast<std::size_t>(i)]});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        cols.push_back({"phi_" + std::to_string(i + 1) + std::to_string(j + 1), &comps[un + idx2(n, i, j)]});
      }
    }
    c.write("frame_lambda_" + format_number(l) + ".csv", grid_csv(c.chart, cols, c.header()));

    if (slices) {
      family.push_back(hypersurface_curvatures(F, L, beta, H, c.chart, slice));
      if (n == 3) {
        c.write("slice_lambda_" + format_number(l) + ".obj", obj_text(slice_surface(F, slice), c.header()));
      }
    }
  }
  if (family.size() >= 2) {
    rep.merge(weingarten_scaling_report(family, c.tol.grid), "scaling.");
  } else {
    rep.notes.push_back("scaling rows need at least two lambdas");
  }
  c.report = std::move(rep);
}

// deform-surface ------------------------------------------------------------

void cmd_deform_surface(Context& c) {
  const json& sec = need(c.config, "surface", "");
  if (c.chart.dim() != 2) throw ConfigError("deform-surface needs a 2-D chart");
  require_lambdas(c);
  c.chart.require_samples(5, "fourth-order differences");
  SurfaceModel m{expr_at(need(sec, "g11", "surface."), "surface.g11", 2),
                 expr_at(need(sec, "g22", "surface."), "surface.g22", 2),
                 expr_at(need(sec, "eta1", "surface."), "surface.eta1", 2),
                 expr_at(need(sec, "eta2", "surface."), "surface.eta2", 2), c.chart, c.lambdas};
  Expr k1 = expr_at(need(sec, "k1_line", "surface."), "surface.k1_line", 2);
  Expr k2 = expr_at(need(sec, "k2_line", "surface."), "surface.k2_line", 2);

  ComplianceReport& rep = c.report;
  rep.lambdas = c.lambdas;
  rep.add("flatness", surface_flatness(m), 1.0, c.tol.exact);
  auto cc = constant_curvature_check(m);
  for (std::size_t i = 0; i < cc.size(); ++i) rep.add(lambda_row(c.lambdas[i], "constant_curvature"), cc[i], 1.0, c.tol.exact);
  auto lame = surface_lame(m);
  auto sys = surface_system_residual(lame.H1, lame.H2, lame.beta12, lame.beta21, m.eta1, m.eta2, c.chart);
  const char* sys_names[] = {"system_lame_1", "system_lame_2", "system_divergence", "system_pencil"};
  for (std::size_t i = 0; i < 4; ++i) rep.add(sys_names[i], sys[i], 1.0, c.tol.exact);
  for (const auto& r : surface_lax_residuals(m)) {
    rep.add(lambda_row(r.lambda, "lax_3x3"), r.three, 1.0, c.tol.grid);
    rep.add(lambda_row(r.lambda, "lax_2x2"), r.two, 1.0, c.tol.grid);
  }
  if (rep.verdict() != Verdict::Pass) {
    rep.notes.push_back("model checks did not pass; reconstruction skipped");
    return;
  }

  auto radii = solve_codazzi_family(m, k1, k2);
  double spread = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    rep.add(lambda_row(c.lambdas[i], "peterson_codazzi"), radii[i].pc_residual, 1.0, c.tol.grid);
    spread = std::max({spread, max_abs_diff(radii[i].k1, radii[0].k1), max_abs_diff(radii[i].k2, radii[0].k2)});
  }
  rep.add("radii_lambda_spread", spread, 1.0, c.tol.grid);

  auto family = reconstruct_family(m, radii);
  for (const auto& f : family) {
    rep.add(lambda_row(f.lambda, "orthogonality"), f.orthogonality_drift, 1.0, c.tol.grid);
    rep.add(lambda_row(f.lambda, "rodrigues_closure"), f.rodrigues_closure, 1.0, c.tol.grid);
    rep.add(lambda_row(f.lambda, "third_form"), third_form_residual(f, m), 1.0, c.tol.grid);
    c.write("surface_lambda_" + format_number(f.lambda) + ".obj", obj_text(f.surface, c.header()));
  }
  if (family.size() >= 2) {
    ComplianceReport w = weingarten_family_compare(family, &radii.front());
    w.lambdas.clear();
    rep.merge(w, "weingarten.");
    double d = procrustes_hausdorff(family.front().surface.r, family.back().surface.r);
    rep.add_decided("deformation_hausdorff", d, d >= 1e-3 ? Verdict::Pass : Verdict::Fail, false,
                    "first and last lambda after rigid alignment; a value below 1e-3 means a trivial deformation");
  } else {
    rep.notes.push_back("Weingarten comparison needs at least two lambdas");
  }
}

using Handler = std::function<void(Context&)>;

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> h{
      {"check-hamiltonian", cmd_check_hamiltonian}, {"check-compat", cmd_check_compat},
      {"solve-diagonal", cmd_solve_diagonal},       {"frame", cmd_frame},
      {"deform-surface", cmd_deform_surface},
  };
  return h;
}

json residual_json(const Residual& r) {
  return json{{"name", r.name},       {"value", r.value},   {"scale", r.scale},
              {"verdict", verdict_name(r.verdict)}, {"gating", r.gating}, {"note", r.note}};
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return 0;
    case Verdict::Fail: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 1;
}

RunResult run(std::string_view command, std::string_view config_json, const Overrides& o) {
  auto start = std::chrono::steady_clock::now();
  auto it = handlers().find(command);
  if (it == handlers().end()) throw ConfigError("unknown command '" + std::string(command) + "'");

  Context c;
  c.command = std::string(command);
  try {
    c.config = json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  if (!c.config.is_object()) throw ConfigError("config must be a JSON object");

  c.chart = chart_at(c.config, o);
  if (o.lambdas) c.config["lambdas"] = *o.lambdas;
  if (c.config.contains("lambdas")) {
    c.lambdas = number_list(c.config["lambdas"], "lambdas");
    c.lambdas_given = true;
  }
  c.tol.exact = thresholds_at(c.config, "exact", c.tol.exact, o);
  c.tol.grid = thresholds_at(c.config, "grid", c.tol.grid, o);
  if (o.tolerance) c.config["tolerances"] = {{"exact", {{"pass", c.tol.exact.pass}, {"fail", c.tol.exact.fail}}},
                                             {"grid", {{"pass", c.tol.grid.pass}, {"fail", c.tol.grid.fail}}}};

  std::string dir = "pencil_lab_out";
  if (c.config.contains("output_dir")) {
    if (!c.config["output_dir"].is_string()) throw ConfigError("output_dir must be a string");
    dir = c.config["output_dir"].get<std::string>();
  }
  if (o.output_dir) dir = *o.output_dir;
  c.out = dir;

  json canonical = c.config;
  canonical.erase("output_dir");
  c.digest = hex64(fnv1a64(canonical.dump()));

  it->second(c);

  json j;
  j["command"] = c.command;
  j["config_digest"] = c.digest;
  j["verdict"] = verdict_name(c.report.verdict());
  j["artifacts"] = c.artifacts;
  j["lambdas"] = c.report.lambdas;
  j["skipped_lambdas"] = c.report.skipped_lambdas;
  j["notes"] = c.report.notes;
  j["residuals"] = json::array();
  for (const auto& r : c.report.rows()) j["residuals"].push_back(residual_json(r));

  RunResult res;
  res.command = c.command;
  res.digest = c.digest;
  res.report_json = j.dump(2) + "\n";
  write_file(c.out / "report.json", res.report_json);
  res.report = std::move(c.report);
  res.artifacts = std::move(c.artifacts);
  res.output_dir = c.out.string();
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace pencil::app
