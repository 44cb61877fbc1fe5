#include "pencil/surface.hpp"

#include <algorithm>
#include <cmath>

#include "pencil/errors.hpp"
#include "pencil/goursat.hpp"
#include "pencil/tensor.hpp"

namespace pencil {

namespace {

constexpr double kPoleGuard = 1e-8;
constexpr double kUmbilicGuard = 1e-8;
constexpr double kLineConsistency = 1e-6;

std::vector<Field> sample(std::span<const Expr> exprs, const Chart& chart) {
  ExprProgram prog(exprs);
  std::vector<Field> out(exprs.size(), Field(chart.size()));
  parallel_chunks(chart.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> x(static_cast<std::size_t>(chart.dim())), v(exprs.size()), scratch;
    for (std::size_t q = b; q < e; ++q) {
      chart.point(q, x);
      prog.eval(x, v, scratch);
      for (std::size_t c = 0; c < exprs.size(); ++c) out[c][q] = v[c];
    }
  });
  return out;
}

void require_surface_chart(const Chart& chart) {
  if (chart.dim() != 2) throw ConfigError("surface models live on a 2-D chart");
}

// l + eta_1 and l + eta_2 as expressions, after checking the pole guard.
std::array<Expr, 2> shifted(const SurfaceModel& m, double lambda) {
  std::array<Expr, 2> s{Expr(lambda) + m.eta1, Expr(lambda) + m.eta2};
  auto v = sample(s, m.chart);
  for (const auto& f : v) {
    if (*std::min_element(f.begin(), f.end()) <= kPoleGuard) {
      throw DomainError("spectral pole: lambda + eta vanishes on the grid");
    }
  }
  return s;
}

void check_fields(const Chart& chart, std::initializer_list<const Field*> fields) {
  for (const Field* f : fields) {
    if (f->size() != chart.size()) throw ConfigError("grid field does not match the chart");
  }
}

void umbilic_guard(const Field& k1, const Field& k2) {
  for (std::size_t q = 0; q < k1.size(); ++q) {
    if (std::abs(k1[q] - k2[q]) < kUmbilicGuard) throw PreconditionError("umbilic point: k1 = k2 on the grid");
  }
}

double pc_from_coefficients(const Field& c1, const Field& c2, const Field& k1, const Field& k2, const Chart& chart) {
  chart.require_samples(5, "fourth-order differences");
  umbilic_guard(k1, k2);
  Field d2k1 = fd_first(chart, k1, 1), d1k2 = fd_first(chart, k2, 0);
  double m = 0.0;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    m = std::max(m, std::abs(d2k1[q] - (k2[q] - k1[q]) * c1[q]));
    m = std::max(m, std::abs(d1k2[q] - (k1[q] - k2[q]) * c2[q]));
  }
  return m;
}

// d2 ln sqrt G11 and d1 ln sqrt G22.
std::array<Expr, 2> pc_coefficients(const Expr& G11, const Expr& G22) {
  return {G11.diff(1) / (Expr(2.0) * G11), G22.diff(0) / (Expr(2.0) * G22)};
}

std::array<Field, 2> pc_coefficients(const Field& G11, const Field& G22, const Chart& chart) {
  chart.require_samples(5, "fourth-order differences");
  check_fields(chart, {&G11, &G22});
  Field c1 = fd_first(chart, G11, 1), c2 = fd_first(chart, G22, 0);
  for (std::size_t q = 0; q < chart.size(); ++q) {
    if (!(G11[q] > 0.0) || !(G22[q] > 0.0)) throw DomainError("third fundamental form must be positive");
    c1[q] /= 2.0 * G11[q];
    c2[q] /= 2.0 * G22[q];
  }
  return {c1, c2};
}

using Coefficient = std::function<double(int u, std::span<const double> x, std::span<const double> vals)>;

CurvatureData run_codazzi(const Coefficient& coef, std::vector<const Field*> aux,
                          const std::function<double(int, std::span<const double>)>& line, const Chart& chart) {
  require_surface_chart(chart);
  GoursatProblem p;
  p.unknowns = 2;
  p.free_axis = {0, 1};
  p.aux = std::move(aux);
  p.line_value = line;
  p.rhs = [&](int u, int, std::span<const double> x, std::span<const double> vals) {
    double diff = u == 0 ? vals[1] - vals[0] : vals[0] - vals[1];
    return diff * coef(u, x, vals);
  };
  auto sol = solve_goursat(p, chart);
  CurvatureData out;
  out.k1 = std::move(sol.fields[0]);
  out.k2 = std::move(sol.fields[1]);
  out.sweeps = sol.sweeps;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    if (std::abs(out.k1[q] - out.k2[q]) < kUmbilicGuard) {
      throw PreconditionError("umbilic collision while transporting the radii");
    }
  }
  return out;
}

// (A_k)_{ab} stored as fields of a LinearConnection with matrix size n on a
// 2-D chart.
LinearConnection connection(int n, const std::vector<Expr>& entries, const Chart& chart) {
  LinearConnection L;
  L.n = n;
  L.A = sample(entries, chart);
  return L;
}

struct FrameData {
  Expr a1, a2;    // |d_i n| = H_i / sqrt(l + eta_i)
  Expr c12, c21;  // sqrt((l + eta_1)/(l + eta_2)) b12 and its mirror
};

FrameData frame_data(const SurfaceModel& m, double lambda, bool require_regular) {
  auto s = shifted(m, lambda);
  Expr H1 = sqrt(m.g11), H2 = sqrt(m.g22);
  FrameData f;
  f.a1 = H1 / sqrt(s[0]);
  f.a2 = H2 / sqrt(s[1]);
  if (require_regular) {
    auto a = sample(std::vector<Expr>{f.a1, f.a2}, m.chart);
    for (const auto& field : a) {
      if (*std::min_element(field.begin(), field.end()) < 1e-12) throw PreconditionError("Gauss map degenerate");
    }
  }
  auto lame = surface_lame(m);
  f.c12 = sqrt(s[0] / s[1]) * lame.beta12;
  f.c21 = sqrt(s[1] / s[0]) * lame.beta21;
  return f;
}

// Entries of the 3 x 3 pair, A_1 then A_2, row-major.
std::vector<Expr> lax3_entries(const FrameData& f) {
  Expr z;
  return {z,      -f.c21, f.a1, f.c21, z, z,     -f.a1, z,     z,
          z,      f.c12,  z,    -f.c12, z, f.a2, z,     -f.a2, z};
}

}  // namespace

Expr gaussian_curvature(const Expr& E, const Expr& G) {
  Expr w = sqrt(E * G);
  return -(G.diff(0) / w).diff(0) / (Expr(2.0) * w) - (E.diff(1) / w).diff(1) / (Expr(2.0) * w);
}

double surface_flatness(const SurfaceModel& m) {
  require_surface_chart(m.chart);
  std::vector<Expr> k{gaussian_curvature(m.g11, m.g22)};
  return max_abs(sample(k, m.chart)[0]);
}

std::vector<double> constant_curvature_check(const SurfaceModel& m) {
  require_surface_chart(m.chart);
  std::vector<double> out;
  for (double lambda : m.lambdas) {
    auto s = shifted(m, lambda);
    std::vector<Expr> k{gaussian_curvature(m.g11 / s[0], m.g22 / s[1]) - Expr(1.0)};
    out.push_back(max_abs(sample(k, m.chart)[0]));
  }
  return out;
}

SurfaceLame surface_lame(const SurfaceModel& m) {
  SurfaceLame l;
  l.H1 = sqrt(m.g11);
  l.H2 = sqrt(m.g22);
  l.beta12 = l.H2.diff(0) / l.H1;
  l.beta21 = l.H1.diff(1) / l.H2;
  return l;
}

std::array<double, 4> surface_system_residual(const Expr& H1, const Expr& H2, const Expr& b12, const Expr& b21,
                                              const Expr& eta1, const Expr& eta2, const Chart& chart) {
  require_surface_chart(chart);
  Expr half(0.5);
  std::vector<Expr> eq{H2.diff(0) - b12 * H1, H1.diff(1) - b21 * H2, b12.diff(0) + b21.diff(1),
                       eta1 * b12.diff(0) + eta2 * b21.diff(1) + half * eta1.diff(0) * b12 +
                           half * eta2.diff(1) * b21 + H1 * H2};
  auto f = sample(eq, chart);
  return {max_abs(f[0]), max_abs(f[1]), max_abs(f[2]), max_abs(f[3])};
}

double pc_residual(const Expr& G11, const Expr& G22, const Field& k1, const Field& k2, const Chart& chart) {
  require_surface_chart(chart);
  check_fields(chart, {&k1, &k2});
  auto c = pc_coefficients(G11, G22);
  auto f = sample(c, chart);
  return pc_from_coefficients(f[0], f[1], k1, k2, chart);
}

double pc_residual(const Field& G11, const Field& G22, const Field& k1, const Field& k2, const Chart& chart) {
  require_surface_chart(chart);
  check_fields(chart, {&k1, &k2});
  auto c = pc_coefficients(G11, G22, chart);
  return pc_from_coefficients(c[0], c[1], k1, k2, chart);
}

CurvatureData solve_codazzi(const Expr& G11, const Expr& G22, const Expr& k1_line, const Expr& k2_line,
                            const Chart& chart) {
  require_surface_chart(chart);
  if (k1_line.dimension_used() > 2 || k2_line.dimension_used() > 2) {
    throw ConfigError("boundary curvature data may only use R1 and R2");
  }
  auto c = pc_coefficients(G11, G22);
  ExprProgram prog(c);
  std::vector<double> cv(2), scratch;
  Coefficient coef = [&](int u, std::span<const double> x, std::span<const double>) {
    prog.eval(x, cv, scratch);
    return cv[static_cast<std::size_t>(u)];
  };
  auto line = [&](int u, std::span<const double> x) { return (u == 0 ? k1_line : k2_line).eval(x); };
  CurvatureData out = run_codazzi(coef, {}, line, chart);

  // Line data that vary across their line carry a transverse derivative which
  // the transport equation fixes.
  std::vector<double> x(2);
  for (int u = 0; u < 2; ++u) {
    const Expr& e = u == 0 ? k1_line : k2_line;
    int transverse = u == 0 ? 1 : 0;
    if (!e.depends_on(transverse)) continue;
    Expr d = e.diff(transverse);
    for (int i = 0; i < chart.count(u); ++i) {
      std::array<int, 2> idx{0, 0};
      idx[static_cast<std::size_t>(u)] = i;
      std::size_t q = chart.flat(idx);
      chart.point(q, x);
      prog.eval(x, cv, scratch);
      double other = u == 0 ? out.k2[q] : out.k1[q];
      double mismatch = d.eval(x) - (other - e.eval(x)) * cv[static_cast<std::size_t>(u)];
      if (std::abs(mismatch) > kLineConsistency) {
        throw PreconditionError(std::string("boundary data for k") + (u == 0 ? "1" : "2") +
                                " violate the transport equation on their line");
      }
    }
  }
  out.pc_residual = pc_residual(G11, G22, out.k1, out.k2, chart);
  return out;
}

CurvatureData solve_codazzi(const Field& G11, const Field& G22, std::span<const double> k1_line,
                            std::span<const double> k2_line, const Chart& chart) {
  require_surface_chart(chart);
  if (k1_line.size() != static_cast<std::size_t>(chart.count(0)) ||
      k2_line.size() != static_cast<std::size_t>(chart.count(1))) {
    throw ConfigError("boundary line data do not match the chart");
  }
  auto c = pc_coefficients(G11, G22, chart);
  Coefficient coef = [](int u, std::span<const double>, std::span<const double> vals) {
    return vals[2 + static_cast<std::size_t>(u)];
  };
  auto line = [&](int u, std::span<const double> x) {
    int axis = u == 0 ? 0 : 1;
    auto i = static_cast<std::size_t>(std::lround((x[static_cast<std::size_t>(axis)] - chart.lo(axis)) / chart.step(axis)));
    return u == 0 ? k1_line[i] : k2_line[i];
  };
  CurvatureData out = run_codazzi(coef, {&c[0], &c[1]}, line, chart);
  out.pc_residual = pc_from_coefficients(c[0], c[1], out.k1, out.k2, chart);
  return out;
}

LinearConnection surface_lax3(const SurfaceModel& m, double lambda) {
  require_surface_chart(m.chart);
  return connection(3, lax3_entries(frame_data(m, lambda, false)), m.chart);
}

LinearConnection surface_lax2(const SurfaceModel& m, double lambda) {
  require_surface_chart(m.chart);
  auto s = shifted(m, lambda);
  auto lame = surface_lame(m);
  Expr r1 = sqrt(s[0]), r2 = sqrt(s[1]);
  Expr half(0.5), z;
  // A_1 = [[i al, H1], [-H1, -i al]] / (2 r1),  al = r2 b21
  // A_2 = i [[-ga, H2], [H2, ga]] / (2 r2),     ga = r1 b12
  Expr al = half * r2 * lame.beta21 / r1, h1 = half * lame.H1 / r1;
  Expr ga = half * r1 * lame.beta12 / r2, h2 = half * lame.H2 / r2;
  std::array<std::array<Expr, 2>, 4> re{{{z, h1}, {-h1, z}, {z, z}, {z, z}}};
  std::array<std::array<Expr, 2>, 4> im{{{al, z}, {z, -al}, {-ga, h2}, {h2, ga}}};
  // complex entry p + i q acts on (Re, Im) pairs as [[p, -q], [q, p]]
  std::vector<Expr> entries(32);
  for (int k = 0; k < 2; ++k) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const Expr& p = re[static_cast<std::size_t>(2 * k + a)][static_cast<std::size_t>(b)];
        const Expr& q = im[static_cast<std::size_t>(2 * k + a)][static_cast<std::size_t>(b)];
        entries[idx3(4, k, 2 * a, 2 * b)] = p;
        entries[idx3(4, k, 2 * a, 2 * b + 1)] = -q;
        entries[idx3(4, k, 2 * a + 1, 2 * b)] = q;
        entries[idx3(4, k, 2 * a + 1, 2 * b + 1)] = p;
      }
    }
  }
  return connection(4, entries, m.chart);
}

std::vector<LaxResiduals> surface_lax_residuals(const SurfaceModel& m) {
  std::vector<LaxResiduals> out;
  for (double lambda : m.lambdas) {
    out.push_back({lambda, zero_curvature_residual(surface_lax3(m, lambda), m.chart),
                   zero_curvature_residual(surface_lax2(m, lambda), m.chart)});
  }
  return out;
}

std::vector<CurvatureData> solve_codazzi_family(const SurfaceModel& m, const Expr& k1_line, const Expr& k2_line) {
  std::vector<CurvatureData> out;
  for (double lambda : m.lambdas) {
    auto s = shifted(m, lambda);
    out.push_back(solve_codazzi(m.g11 / s[0], m.g22 / s[1], k1_line, k2_line, m.chart));
  }
  return out;
}

std::vector<FamilyMember> reconstruct_family(const SurfaceModel& m, const CurvatureData& k) {
  return reconstruct_family(m, std::span<const CurvatureData>(&k, 1));
}

std::vector<FamilyMember> reconstruct_family(const SurfaceModel& m, std::span<const CurvatureData> radii) {
  require_surface_chart(m.chart);
  const Chart& chart = m.chart;
  if (radii.size() != 1 && radii.size() != m.lambdas.size()) {
    throw ConfigError("need one set of radii or one per lambda");
  }
  for (const auto& k : radii) {
    check_fields(chart, {&k.k1, &k.k2});
    for (std::size_t q = 0; q < chart.size(); ++q) {
      if (std::abs(k.k1[q]) < 1e-8 || std::abs(k.k2[q]) < 1e-8) {
        throw PreconditionError("a radius of principal curvature vanishes on the grid");
      }
    }
  }
  std::vector<FamilyMember> out(m.lambdas.size());
  parallel_chunks(m.lambdas.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t l = b; l < e; ++l) {
      double lambda = m.lambdas[l];
      const CurvatureData& k = radii[radii.size() == 1 ? 0 : l];
      FrameData f = frame_data(m, lambda, true);
      auto e3 = lax3_entries(f);
      // rows e1, e2, n, r with d_i r = k^i d_i n = -k^i a_i e_i
      std::vector<Expr> e4(32);
      for (int ax = 0; ax < 2; ++ax) {
        for (int a = 0; a < 3; ++a) {
          for (int c = 0; c < 3; ++c) e4[idx3(4, ax, a, c)] = e3[idx3(3, ax, a, c)];
        }
      }
      LinearConnection L = connection(4, e4, chart);
      auto a = sample(std::vector<Expr>{f.a1, f.a2}, chart);
      L.A[idx3(4, 0, 3, 0)] = Field(chart.size());
      L.A[idx3(4, 1, 3, 1)] = Field(chart.size());
      for (std::size_t q = 0; q < chart.size(); ++q) {
        L.A[idx3(4, 0, 3, 0)][q] = -k.k1[q] * a[0][q];
        L.A[idx3(4, 1, 3, 1)][q] = -k.k2[q] * a[1][q];
      }
      std::vector<double> init{1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
      auto F = integrate_linear(L, init, 3, chart);

      FamilyMember& mem = out[l];
      mem.lambda = lambda;
      mem.surface.chart = chart;
      mem.surface.r.resize(chart.size());
      mem.surface.normal.resize(chart.size());
      double drift = 0.0;
      for (std::size_t q = 0; q < chart.size(); ++q) {
        const double* P = F.data() + q * 12;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            double d = 0.0;
            for (int c = 0; c < 3; ++c) d += P[i * 3 + c] * P[j * 3 + c];
            drift = std::max(drift, std::abs(d - (i == j ? 1.0 : 0.0)));
          }
        }
        mem.surface.normal[q] = {P[6], P[7], P[8]};
        mem.surface.r[q] = {P[9], P[10], P[11]};
      }
      mem.orthogonality_drift = drift;

      double closure = 0.0;
      for (int c = 0; c < 3; ++c) {
        Field t1(chart.size()), t2(chart.size());
        for (std::size_t q = 0; q < chart.size(); ++q) {
          t1[q] = k.k1[q] * a[0][q] * F[q * 12 + static_cast<std::size_t>(c)];
          t2[q] = k.k2[q] * a[1][q] * F[q * 12 + 3 + static_cast<std::size_t>(c)];
        }
        Field d2 = fd_first(chart, t1, 1), d1 = fd_first(chart, t2, 0);
        closure = std::max(closure, max_abs_diff(d2, d1));
      }
      mem.rodrigues_closure = closure;
    }
  });
  return out;
}

double third_form_residual(const FamilyMember& f, const SurfaceModel& m) {
  const Chart& chart = f.surface.chart;
  auto s = shifted(m, f.lambda);
  auto G = sample(std::vector<Expr>{m.g11 / s[0], m.g22 / s[1]}, chart);
  double out = 0.0;
  for (int ax = 0; ax < 2; ++ax) {
    std::vector<Field> d;
    for (int c = 0; c < 3; ++c) {
      Field comp(chart.size());
      for (std::size_t q = 0; q < chart.size(); ++q) comp[q] = f.surface.normal[q][static_cast<std::size_t>(c)];
      d.push_back(fd_first(chart, comp, ax));
    }
    for (std::size_t q = 0; q < chart.size(); ++q) {
      double n2 = d[0][q] * d[0][q] + d[1][q] * d[1][q] + d[2][q] * d[2][q];
      out = std::max(out, std::abs(n2 - G[static_cast<std::size_t>(ax)][q]));
    }
  }
  return out;
}

ComplianceReport weingarten_family_compare(std::span<const FamilyMember> family, const CurvatureData* radii,
                                           double umbilic_gap) {
  if (family.size() < 2) throw PreconditionError("need at least two surfaces to compare");
  const Chart& chart = family[0].surface.chart;
  for (const auto& f : family) {
    if (f.surface.chart.size() != chart.size() || f.surface.r.size() != chart.size()) {
      throw PreconditionError("surfaces are sampled on different grids");
    }
  }
  std::vector<ShapeOperatorField> ops;
  for (const auto& f : family) ops.push_back(mesh_shape_operator(f.surface, umbilic_gap));
  std::vector<char> excluded(chart.size(), 0);
  for (const auto& o : ops) {
    for (std::size_t q = 0; q < chart.size(); ++q) excluded[q] = excluded[q] || o.excluded[q];
  }
  double spread = 0.0, angle = 0.0, agree = 0.0;
  std::size_t dropped = 0;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    if (excluded[q]) {
      ++dropped;
      continue;
    }
    for (std::size_t a = 0; a < ops.size(); ++a) {
      angle = std::max(angle, ops[a].misalignment[q]);
      if (radii) {
        agree = std::max(agree, std::abs(ops[a].k1[q] - 1.0 / radii->k1[q]));
        agree = std::max(agree, std::abs(ops[a].k2[q] - 1.0 / radii->k2[q]));
      }
      for (std::size_t b = a + 1; b < ops.size(); ++b) {
        spread = std::max(spread, std::abs(ops[a].k1[q] - ops[b].k1[q]));
        spread = std::max(spread, std::abs(ops[a].k2[q] - ops[b].k2[q]));
      }
    }
  }
  ComplianceReport rep;
  for (const auto& f : family) rep.lambdas.push_back(f.lambda);
  rep.add("eigenvalue_spread", spread, 1.0, Thresholds{1e-3, 1e-1});
  rep.add("principal_direction_misalignment", angle, 1.0, Thresholds{1e-2, 1e-1});
  rep.add_info("excluded_vertices", static_cast<double>(dropped), "near-umbilic vertices left out");
  if (radii) rep.add("codazzi_curvature_agreement", agree, 1.0, Thresholds{1e-3, 1e-1});
  return rep;
}

}  // namespace pencil
