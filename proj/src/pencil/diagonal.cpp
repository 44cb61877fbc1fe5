#include "pencil/diagonal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pencil/errors.hpp"
#include "pencil/goursat.hpp"

namespace pencil {

namespace {

// All first derivatives of every beta field: [idx3(n,a,i,j)].
std::vector<Field> beta_derivatives(const BetaGrids& beta, const Chart& chart) {
  int n = chart.dim();
  std::vector<Field> d(static_cast<std::size_t>(n * n * n));
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        d[idx3(n, a, i, j)] = fd_first(chart, beta[idx2(n, i, j)], a);
      }
    }
  }
  return d;
}

void check_beta(const BetaGrids& beta, const Chart& chart) {
  int n = chart.dim();
  if (beta.size() != static_cast<std::size_t>(n * n)) throw ConfigError("beta needs n*n grids");
  for (const auto& f : beta) {
    if (f.size() != chart.size()) throw ConfigError("beta grid does not match the chart");
  }
  chart.require_samples(5, "fourth-order differences");
}

void gather(std::size_t q, int n, const BetaGrids& beta, const std::vector<Field>& d, std::vector<double>& b,
            std::vector<double>& db) {
  auto un = static_cast<std::size_t>(n);
  b.assign(un * un, 0.0);
  db.assign(un * un * un, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      b[idx2(n, i, j)] = beta[idx2(n, i, j)][q];
      for (int a = 0; a < n; ++a) db[idx3(n, a, i, j)] = d[idx3(n, a, i, j)][q];
    }
  }
}

// eta_i and eta_i' as one program.
ExprProgram eta_program(std::span<const Expr> eta) {
  std::vector<Expr> out(eta.begin(), eta.end());
  for (std::size_t i = 0; i < eta.size(); ++i) out.push_back(eta[i].diff(static_cast<int>(i)));
  return ExprProgram(out);
}

double fd_max(const Field& f, const Chart& chart, int axis) {
  return max_abs(fd_first(chart, f, axis));
}

}  // namespace

LameData lame_from_metric(const MetricField& g, const Chart& chart) {
  if (!g.is_diagonal()) throw ConfigError("Lame coefficients need a diagonal metric");
  int n = g.dim();
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < chart.size(); ++q) {
    chart.point(q, x);
    for (int i = 0; i < n; ++i) {
      if (!(g.up(i, i).eval(x) > 0.0)) {
        throw DomainError("g^{" + std::to_string(i + 1) + std::to_string(i + 1) + "} is not positive at a grid node");
      }
    }
  }
  LameData d;
  for (int i = 0; i < n; ++i) d.H.push_back(Expr(1.0) / sqrt(g.up(i, i)));
  d.beta.assign(static_cast<std::size_t>(n * n), Expr(0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) d.beta[idx2(n, i, j)] = d.H[static_cast<std::size_t>(j)].diff(i) / d.H[static_cast<std::size_t>(i)];
    }
  }
  return d;
}

void validate_eta(std::span<const Expr> eta) {
  int n = static_cast<int>(eta.size());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < std::max(n, eta[static_cast<std::size_t>(i)].dimension_used()); ++k) {
      if (k != i && eta[static_cast<std::size_t>(i)].depends_on(k)) {
        throw ConfigError("eta_" + std::to_string(i + 1) + " must depend on R" + std::to_string(i + 1) + " only");
      }
    }
  }
}

double f2_form(int n, int i, int j, std::span<const double> beta, std::span<const double> dbeta) {
  double v = dbeta[idx3(n, i, i, j)] + dbeta[idx3(n, j, j, i)];
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) v += beta[idx2(n, k, i)] * beta[idx2(n, k, j)];
  }
  return v;
}

double f3_form(int n, int i, int j, std::span<const double> beta, std::span<const double> dbeta,
               std::span<const double> eta, std::span<const double> deta) {
  auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
  double v = eta[ui] * dbeta[idx3(n, i, i, j)] + eta[uj] * dbeta[idx3(n, j, j, i)] +
             0.5 * deta[ui] * beta[idx2(n, i, j)] + 0.5 * deta[uj] * beta[idx2(n, j, i)];
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) v += eta[static_cast<std::size_t>(k)] * beta[idx2(n, k, i)] * beta[idx2(n, k, j)];
  }
  return v;
}

double resolved_rhs(int n, int i, int j, std::span<const double> beta, std::span<const double> eta,
                    std::span<const double> deta, double guard) {
  auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
  double d = eta[uj] - eta[ui];
  if (std::abs(d) < guard) {
    throw DomainError("eta_" + std::to_string(j + 1) + " - eta_" + std::to_string(i + 1) +
                      " vanishes (spectrum collision)");
  }
  double v = 0.5 * deta[ui] * beta[idx2(n, i, j)] + 0.5 * deta[uj] * beta[idx2(n, j, i)];
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) v += (eta[static_cast<std::size_t>(k)] - eta[uj]) * beta[idx2(n, k, i)] * beta[idx2(n, k, j)];
  }
  return v / d;
}

FlatnessResiduals flatness_residuals(const BetaGrids& beta, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  auto d = beta_derivatives(beta, chart);
  FlatnessResiduals r;
  r.f1 = parallel_max(chart.size(), [&](std::size_t q) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          if (i == j || j == k || i == k) continue;
          m = std::max(m, std::abs(d[idx3(n, k, i, j)][q] - beta[idx2(n, i, k)][q] * beta[idx2(n, k, j)][q]));
        }
      }
    }
    return m;
  });
  r.f2 = parallel_max(chart.size(), [&](std::size_t q) {
    std::vector<double> b, db;
    gather(q, n, beta, d, b, db);
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) m = std::max(m, std::abs(f2_form(n, i, j, b, db)));
    }
    return m;
  });
  return r;
}

double pencil_residual_f3(const BetaGrids& beta, std::span<const Expr> eta, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  auto d = beta_derivatives(beta, chart);
  ExprProgram prog = eta_program(eta);
  return parallel_max(chart.size(), [&](std::size_t q) {
    std::vector<double> b, db, x = chart.point(q), e(2 * static_cast<std::size_t>(n)), scratch;
    gather(q, n, beta, d, b, db);
    prog.eval(x, e, scratch);
    std::span<const double> ev(e.data(), static_cast<std::size_t>(n)), dev(e.data() + n, static_cast<std::size_t>(n));
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) m = std::max(m, std::abs(f3_form(n, i, j, b, db, ev, dev)));
    }
    return m;
  });
}

double resolved_residual(const BetaGrids& beta, std::span<const Expr> eta, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  auto d = beta_derivatives(beta, chart);
  ExprProgram prog = eta_program(eta);
  return parallel_max(chart.size(), [&](std::size_t q) {
    std::vector<double> b, db, x = chart.point(q), e(2 * static_cast<std::size_t>(n)), scratch;
    gather(q, n, beta, d, b, db);
    prog.eval(x, e, scratch);
    std::span<const double> ev(e.data(), static_cast<std::size_t>(n)), dev(e.data() + n, static_cast<std::size_t>(n));
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        m = std::max(m, std::abs(db[idx3(n, i, i, j)] - resolved_rhs(n, i, j, b, ev, dev)));
      }
    }
    return m;
  });
}

BetaGrids solve_S(std::span<const Expr> eta, std::span<const Expr> boundary, const Chart& chart,
                  const DiagonalOptions& opt) {
  int n = chart.dim();
  auto un = static_cast<std::size_t>(n);
  if (eta.size() != un) throw ConfigError("eta needs one entry per coordinate");
  if (boundary.size() != un * un) throw ConfigError("boundary data needs n*n entries");
  validate_eta(eta);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int k = 0; k < n; ++k) {
        if (k != j && boundary[idx2(n, i, j)].depends_on(k)) {
          throw ConfigError("boundary data for beta_" + std::to_string(i + 1) + std::to_string(j + 1) +
                            " must depend on R" + std::to_string(j + 1) + " only");
        }
      }
    }
  }
  ExprProgram prog = eta_program(eta);
  std::vector<double> e(2 * un), scratch;
  // spectrum collisions at nodes are rejected before marching
  for (std::size_t q = 0; q < chart.size(); ++q) {
    prog.eval(chart.point(q), e, scratch);
    for (std::size_t i = 0; i < un; ++i) {
      for (std::size_t j = i + 1; j < un; ++j) {
        if (std::abs(e[j] - e[i]) < opt.denominator_guard) {
          throw DomainError("eta_" + std::to_string(i + 1) + " and eta_" + std::to_string(j + 1) +
                            " collide on the grid");
        }
      }
    }
  }

  std::vector<std::pair<int, int>> pairs;
  std::vector<int> slot(un * un, -1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      slot[idx2(n, i, j)] = static_cast<int>(pairs.size());
      pairs.emplace_back(i, j);
    }
  }
  GoursatProblem prob;
  prob.unknowns = static_cast<int>(pairs.size());
  for (auto [i, j] : pairs) prob.free_axis.push_back(j);
  prob.axis_order = opt.axis_order;
  prob.blowup = opt.blowup;
  std::vector<double> b(un * un, 0.0);
  prob.rhs = [&](int u, int k, std::span<const double> x, std::span<const double> vals) {
    auto [i, j] = pairs[static_cast<std::size_t>(u)];
    if (k != i) {
      return vals[static_cast<std::size_t>(slot[idx2(n, i, k)])] * vals[static_cast<std::size_t>(slot[idx2(n, k, j)])];
    }
    for (std::size_t s = 0; s < pairs.size(); ++s) b[idx2(n, pairs[s].first, pairs[s].second)] = vals[s];
    prog.eval(x, e, scratch);
    return resolved_rhs(n, i, j, b, std::span<const double>(e.data(), un), std::span<const double>(e.data() + n, un),
                        opt.denominator_guard);
  };
  prob.line_value = [&](int u, std::span<const double> x) {
    auto [i, j] = pairs[static_cast<std::size_t>(u)];
    return boundary[idx2(n, i, j)].eval(x);
  };
  GoursatSolution sol = solve_goursat(prob, chart);
  BetaGrids beta(un * un, Field(chart.size(), 0.0));
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    beta[idx2(n, pairs[s].first, pairs[s].second)] = std::move(sol.fields[s]);
  }
  return beta;
}

double boundary_reproduction(const BetaGrids& beta, std::span<const Expr> boundary, const Chart& chart) {
  int n = chart.dim();
  double m = 0.0;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < chart.size(); ++q) {
    chart.point(q, x);
    for (int j = 0; j < n; ++j) {
      bool on_line = true;
      for (int k = 0; k < n; ++k) {
        if (k != j && chart.index_of(q, k) != 0) on_line = false;
      }
      if (!on_line) continue;
      for (int i = 0; i < n; ++i) {
        if (i != j) m = std::max(m, std::abs(beta[idx2(n, i, j)][q] - boundary[idx2(n, i, j)].eval(x)));
      }
    }
  }
  return m;
}

double egorov_defect(const BetaGrids& beta, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) m = std::max(m, max_abs_diff(beta[idx2(n, i, j)], beta[idx2(n, j, i)]));
  }
  return m;
}

ComplianceReport diagonal_report(const BetaGrids& beta, std::span<const Expr> eta,
                                 std::span<const Expr> boundary, const Chart& chart, const Thresholds& t) {
  int n = chart.dim();
  double scale = 1.0;
  for (const auto& f : beta) scale = std::max(scale, 1.0 + max_abs(f));
  auto flat = flatness_residuals(beta, chart);
  ComplianceReport rep;
  if (n >= 3) rep.add("flatness_f1", flat.f1, scale, t);
  rep.add("flatness_f2", flat.f2, scale, t);
  rep.add("pencil_f3", pencil_residual_f3(beta, eta, chart), scale, t);
  rep.add("resolved_system", resolved_residual(beta, eta, chart), scale, t);
  rep.add("boundary_reproduction", boundary_reproduction(beta, boundary, chart), scale, Thresholds{});
  double eg = egorov_defect(beta, n);
  rep.add_info("egorov_defect", eg, eg <= 1e-12 ? "Egorov case: beta_ij = beta_ji" : "");
  return rep;
}

std::vector<Field> solve_lame(const BetaGrids& beta, std::span<const Expr> line, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  if (line.size() != static_cast<std::size_t>(n)) throw ConfigError("Lame line data needs n entries");
  GoursatProblem prob;
  prob.unknowns = n;
  for (int j = 0; j < n; ++j) prob.free_axis.push_back(j);
  for (const auto& f : beta) prob.aux.push_back(&f);
  prob.rhs = [n](int j, int l, std::span<const double>, std::span<const double> vals) {
    return vals[static_cast<std::size_t>(n) + idx2(n, l, j)] * vals[static_cast<std::size_t>(l)];
  };
  prob.line_value = [&](int j, std::span<const double> x) { return line[static_cast<std::size_t>(j)].eval(x); };
  auto sol = solve_goursat(prob, chart);
  for (int j = 0; j < n; ++j) {
    for (double v : sol.fields[static_cast<std::size_t>(j)]) {
      if (!(v > 0.0)) throw DomainError("Lame coefficient H_" + std::to_string(j + 1) + " is not positive");
    }
  }
  return std::move(sol.fields);
}

double lame_residual(const std::vector<Field>& H, const BetaGrids& beta, const Chart& chart) {
  int n = chart.dim();
  double m = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      if (l == j) continue;
      Field d = fd_first(chart, H[static_cast<std::size_t>(j)], l);
      for (std::size_t q = 0; q < chart.size(); ++q) {
        m = std::max(m, std::abs(d[q] - beta[idx2(n, l, j)][q] * H[static_cast<std::size_t>(l)][q]));
      }
    }
  }
  return m;
}

ConservedP conserved_P(const BetaGrids& beta, std::span<const double> c, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  if (c.size() != static_cast<std::size_t>(n)) throw ConfigError("need one constant per coordinate");
  ConservedP out;
  out.P.assign(static_cast<std::size_t>(n), Field(chart.size(), 0.0));
  for (int i = 0; i < n; ++i) {
    Field& P = out.P[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      double w = c[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(i)];
      const Field& b = beta[idx2(n, k, i)];
      for (std::size_t q = 0; q < chart.size(); ++q) P[q] += w * b[q] * b[q];
    }
    for (int j = 0; j < n; ++j) {
      if (j != i) out.transverse_drift = std::max(out.transverse_drift, fd_max(P, chart, j));
    }
  }
  return out;
}

std::array<double, 3> mu_constants(std::span<const double> c) {
  if (c.size() != 3) throw PreconditionError("mu constants need exactly three values");
  if (!(c[0] < c[1] && c[1] < c[2])) throw PreconditionError("mu constants need c1 < c2 < c3");
  double a = c[1] - c[0], b = c[2] - c[0], d = c[2] - c[1];
  return {std::sqrt(d / (a * b)), std::sqrt(b / (a * d)), std::sqrt(a / (b * d))};
}

BetaGrids beta_from_pqr(const Field& p, const Field& q, const Field& r, std::span<const double> c) {
  mu_constants(c);
  double s21 = std::sqrt(c[1] - c[0]), s31 = std::sqrt(c[2] - c[0]), s32 = std::sqrt(c[2] - c[1]);
  std::size_t size = p.size();
  BetaGrids b(9, Field(size, 0.0));
  for (std::size_t k = 0; k < size; ++k) {
    b[idx2(3, 1, 0)][k] = std::sin(p[k]) / s21;
    b[idx2(3, 2, 0)][k] = std::cos(p[k]) / s31;
    b[idx2(3, 0, 1)][k] = std::sinh(q[k]) / s21;
    b[idx2(3, 2, 1)][k] = std::cosh(q[k]) / s32;
    b[idx2(3, 0, 2)][k] = std::sin(r[k]) / s31;
    b[idx2(3, 1, 2)][k] = std::cos(r[k]) / s32;
  }
  return b;
}

S2Solution integrate_S2(std::array<double, 3> seed, const Chart& chart, std::vector<int> axis_order) {
  if (chart.dim() != 3) throw ConfigError("the reduced system lives in three dimensions");
  GoursatProblem prob;
  prob.unknowns = 3;
  prob.free_axis = {0, 1, 2};
  prob.axis_order = std::move(axis_order);
  auto hyper = [](double q) {
    if (std::abs(q) > 20.0) throw NumericalFailure("|q| exceeded 20 (cosh q blow-up guard)");
    return q;
  };
  prob.rhs = [&](int u, int axis, std::span<const double>, std::span<const double> v) {
    double p = v[0], q = v[1], r = v[2];
    switch (u) {
      case 0: return axis == 1 ? -std::cosh(hyper(q)) : std::cos(r);
      case 1: return axis == 0 ? std::cos(p) : std::sin(r);
      default: return axis == 0 ? -std::sin(p) : std::sinh(hyper(q));
    }
  };
  prob.line_value = [&](int u, std::span<const double>) { return seed[static_cast<std::size_t>(u)]; };
  auto sol = solve_goursat(prob, chart);
  S2Solution s;
  s.p = std::move(sol.fields[0]);
  s.q = std::move(sol.fields[1]);
  s.r = std::move(sol.fields[2]);
  s.sweeps = sol.sweeps;
  return s;
}

double s2_consistency(const S2Solution& s, const Chart& chart) {
  chart.require_samples(5, "fourth-order differences");
  auto check = [&](const Field& f, int axis, auto rhs) {
    Field d = fd_first(chart, f, axis);
    double m = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) m = std::max(m, std::abs(d[k] - rhs(k)));
    return m;
  };
  return std::max({
      check(s.q, 0, [&](std::size_t k) { return std::cos(s.p[k]); }),
      check(s.r, 0, [&](std::size_t k) { return -std::sin(s.p[k]); }),
      check(s.p, 1, [&](std::size_t k) { return -std::cosh(s.q[k]); }),
      check(s.r, 1, [&](std::size_t k) { return std::sinh(s.q[k]); }),
      check(s.p, 2, [&](std::size_t k) { return std::cos(s.r[k]); }),
      check(s.q, 2, [&](std::size_t k) { return std::sin(s.r[k]); }),
  });
}

std::array<double, 3> monge_ampere_residual(const Field& q, const Chart& chart) {
  if (chart.dim() != 3) throw ConfigError("the Monge-Ampere triple lives in three dimensions");
  if (q.size() != chart.size()) throw ConfigError("grid does not match the chart");
  chart.require_samples(5, "fourth-order differences");
  Field d1 = fd_first(chart, q, 0), d3 = fd_first(chart, q, 2);
  Field d12 = fd_first(chart, d1, 1), d13 = fd_first(chart, d1, 2), d23 = fd_first(chart, d3, 1);
  auto root = [](double v, const char* what) {
    double s = 1.0 - v * v;
    if (std::abs(v) > 1.0 + 1e-4) throw DomainError(std::string(what) + " exceeds 1 in magnitude; square root undefined");
    return std::sqrt(std::max(0.0, s));
  };
  std::array<double, 3> r{0, 0, 0};
  for (std::size_t k = 0; k < q.size(); ++k) {
    double a = root(d1[k], "d1 q"), c = root(d3[k], "d3 q");
    r[0] = std::max(r[0], std::abs(d12[k] - std::cosh(q[k]) * a));
    r[1] = std::max(r[1], std::abs(d13[k] + a * c));
    r[2] = std::max(r[2], std::abs(d23[k] - std::sinh(q[k]) * c));
  }
  return r;
}

}  // namespace pencil
