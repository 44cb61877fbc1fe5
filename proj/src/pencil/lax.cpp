#include "pencil/lax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pencil/errors.hpp"
#include "pencil/format.hpp"

namespace pencil {

namespace {

constexpr double kPole = 1e-8;

// lambda + eta_i at every node, with the pole check.
std::vector<Field> shifts(std::span<const Expr> eta, double lambda, const Chart& chart) {
  int n = chart.dim();
  if (eta.size() != static_cast<std::size_t>(n)) throw ConfigError("eta needs one entry per coordinate");
  validate_eta(eta);
  std::vector<Field> s(static_cast<std::size_t>(n), Field(chart.size()));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < chart.size(); ++q) {
    chart.point(q, x);
    for (int i = 0; i < n; ++i) {
      double v = lambda + eta[static_cast<std::size_t>(i)].eval(x);
      if (v <= kPole) {
        throw DomainError("lambda = " + format_number(lambda) + " is a pole: lambda + eta_" + std::to_string(i + 1) +
                          " <= 1e-8 on the grid");
      }
      s[static_cast<std::size_t>(i)][q] = v;
    }
  }
  return s;
}

void check_beta(const BetaGrids& beta, const Chart& chart) {
  int n = chart.dim();
  if (beta.size() != static_cast<std::size_t>(n * n)) throw ConfigError("beta needs n*n grids");
  for (const auto& f : beta) {
    if (f.size() != chart.size()) throw ConfigError("beta grid does not match the chart");
  }
}

double sample(const Field& f, std::size_t start, std::size_t stride, int m, int i, int stage) {
  const double* line = f.data() + start;
  if (stage == 1) return midpoint_cubic(line, stride, m, i);
  return line[static_cast<std::size_t>(i + (stage == 2 ? 1 : 0)) * stride];
}

// RK4 marches filling the whole grid from the corner state: along the first
// axis of `order` from the corner, then along each next axis from the
// already filled sub-box. rhs(axis, start, stride, m, i, stage, y, dy) with
// stage 0, 1, 2 for node i, the half step and node i + 1.
template <class Rhs>
void march_grid(const Chart& chart, std::span<const int> order, std::size_t w, std::vector<double>& state, Rhs&& rhs) {
  int n = chart.dim();
  std::vector<int> ord(order.begin(), order.end());
  if (ord.empty()) {
    for (int k = 0; k < n; ++k) ord.push_back(k);
  }
  auto sorted = ord;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < n; ++k) {
    if (static_cast<int>(sorted.size()) != n || sorted[static_cast<std::size_t>(k)] != k) {
      throw ConfigError("axis order must be a permutation of the axes");
    }
  }
  std::vector<double> y(w), k1(w), k2(w), k3(w), k4(w), t(w);
  for (std::size_t pos = 0; pos < ord.size(); ++pos) {
    int a = ord[pos];
    std::size_t s = chart.stride(a);
    int m = chart.count(a);
    double h = chart.step(a);
    for (std::size_t q = 0; q < chart.size(); ++q) {
      if (chart.index_of(q, a) != 0) continue;
      bool start = true;
      for (std::size_t later = pos + 1; later < ord.size(); ++later) {
        if (chart.index_of(q, ord[later]) != 0) start = false;
      }
      if (!start) continue;
      for (int i = 0; i + 1 < m; ++i) {
        std::size_t here = (q + static_cast<std::size_t>(i) * s) * w;
        std::copy(state.begin() + static_cast<std::ptrdiff_t>(here), state.begin() + static_cast<std::ptrdiff_t>(here + w),
                  y.begin());
        rhs(a, q, s, m, i, 0, y.data(), k1.data());
        for (std::size_t c = 0; c < w; ++c) t[c] = y[c] + 0.5 * h * k1[c];
        rhs(a, q, s, m, i, 1, t.data(), k2.data());
        for (std::size_t c = 0; c < w; ++c) t[c] = y[c] + 0.5 * h * k2[c];
        rhs(a, q, s, m, i, 1, t.data(), k3.data());
        for (std::size_t c = 0; c < w; ++c) t[c] = y[c] + h * k3[c];
        rhs(a, q, s, m, i, 2, t.data(), k4.data());
        std::size_t next = here + s * w;
        for (std::size_t c = 0; c < w; ++c) {
          double v = y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
          if (!std::isfinite(v)) throw NumericalFailure("non-finite value in frame march");
          state[next + c] = v;
        }
      }
    }
  }
}

// lambda + eta_k on the nodes and half steps of axis k: entry t is at
// lo + t h / 2.
std::vector<std::vector<double>> axis_shifts(std::span<const Expr> eta, double lambda, const Chart& chart) {
  int n = chart.dim();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = chart.lo(k);
  for (int k = 0; k < n; ++k) {
    auto uk = static_cast<std::size_t>(k);
    double keep = x[uk];
    for (int t = 0; t < 2 * chart.count(k) - 1; ++t) {
      x[uk] = chart.lo(k) + 0.5 * t * chart.step(k);
      out[uk].push_back(lambda + eta[uk].eval(x));
    }
    x[uk] = keep;
  }
  return out;
}

}  // namespace

LaxConnection build_lax(const BetaGrids& beta, std::span<const Expr> eta, double lambda, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  auto s = shifts(eta, lambda, chart);
  LaxConnection L;
  L.n = n;
  L.lambda = lambda;
  L.eta.assign(eta.begin(), eta.end());
  L.A.assign(static_cast<std::size_t>(n * n * n), Field(chart.size(), 0.0));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      Field& up = L.A[idx3(n, k, i, k)];
      Field& down = L.A[idx3(n, k, k, i)];
      const Field& b = beta[idx2(n, i, k)];
      for (std::size_t q = 0; q < chart.size(); ++q) {
        double f = std::sqrt(s[static_cast<std::size_t>(i)][q] / s[static_cast<std::size_t>(k)][q]) * b[q];
        up[q] = f;
        down[q] = -f;
      }
    }
  }
  return L;
}

LinearConnection build_lax_psi(const BetaGrids& beta, std::span<const Expr> eta, double lambda, const Chart& chart) {
  check_beta(beta, chart);
  int n = chart.dim();
  auto s = shifts(eta, lambda, chart);
  LinearConnection L;
  L.n = n;
  L.A.assign(static_cast<std::size_t>(n * n * n), Field(chart.size(), 0.0));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Expr d = eta[static_cast<std::size_t>(k)].diff(k);
    const Field& sk = s[static_cast<std::size_t>(k)];
    for (std::size_t q = 0; q < chart.size(); ++q) {
      chart.point(q, x);
      L.A[idx3(n, k, k, k)][q] = -d.eval(x) / (2.0 * sk[q]);
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const Field& si = s[static_cast<std::size_t>(i)];
      for (std::size_t q = 0; q < chart.size(); ++q) {
        L.A[idx3(n, k, i, k)][q] = beta[idx2(n, i, k)][q];
        L.A[idx3(n, k, k, i)][q] = -si[q] / sk[q] * beta[idx2(n, i, k)][q];
      }
    }
  }
  return L;
}

double skewness(const LinearConnection& L) {
  int n = L.n;
  int d = L.axes();
  double m = 0.0;
  for (int k = 0; k < d; ++k) {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        const Field& x = L.A[idx3(n, k, a, b)];
        const Field& y = L.A[idx3(n, k, b, a)];
        for (std::size_t q = 0; q < x.size(); ++q) m = std::max(m, std::abs(x[q] + y[q]));
      }
    }
  }
  return m;
}

double zero_curvature_residual(const LinearConnection& L, const Chart& chart) {
  int n = L.n;
  int d = chart.dim();
  if (L.axes() != d) throw ConfigError("connection does not match the chart");
  chart.require_samples(5, "fourth-order differences");
  // dA[((a*d + k)*n + i)*n + j] = d_a (A_k)_{ij}
  auto at = [&](int a, int k, int i, int j) { return static_cast<std::size_t>(((a * d + k) * n + i) * n + j); };
  std::vector<Field> dA(static_cast<std::size_t>(d * d * n * n));
  for (int a = 0; a < d; ++a) {
    for (int k = 0; k < d; ++k) {
      if (a == k) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) dA[at(a, k, i, j)] = fd_first(chart, L.A[idx3(n, k, i, j)], a);
      }
    }
  }
  return parallel_max(chart.size(), [&](std::size_t q) {
    double m = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = a + 1; b < d; ++b) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            double v = dA[at(a, b, i, j)][q] - dA[at(b, a, i, j)][q];
            for (int s = 0; s < n; ++s) {
              v -= L.A[idx3(n, a, i, s)][q] * L.A[idx3(n, b, s, j)][q] - L.A[idx3(n, b, i, s)][q] * L.A[idx3(n, a, s, j)][q];
            }
            m = std::max(m, std::abs(v));
          }
        }
      }
    }
    return m;
  });
}

std::vector<double> integrate_linear(const LinearConnection& L, std::span<const double> initial, int columns,
                                     const Chart& chart, std::span<const int> axis_order) {
  int n = L.n;
  auto w = static_cast<std::size_t>(n * columns);
  if (initial.size() != w) throw ConfigError("initial state has the wrong size");
  chart.require_samples(3, "march interpolation");
  std::vector<double> F(chart.size() * w, 0.0);
  std::copy(initial.begin(), initial.end(), F.begin());
  std::vector<double> A(static_cast<std::size_t>(n * n));
  march_grid(chart, axis_order, w, F,
             [&](int k, std::size_t start, std::size_t stride, int m, int i, int stage, const double* y, double* dy) {
               for (int a = 0; a < n; ++a) {
                 for (int b = 0; b < n; ++b) A[idx2(n, a, b)] = sample(L.A[idx3(n, k, a, b)], start, stride, m, i, stage);
               }
               for (int a = 0; a < n; ++a) {
                 for (int c = 0; c < columns; ++c) {
                   double v = 0.0;
                   for (int b = 0; b < n; ++b) v += A[idx2(n, a, b)] * y[b * columns + c];
                   dy[a * columns + c] = v;
                 }
               }
             });
  return F;
}

double linear_residual(const LinearConnection& L, std::span<const double> F, int columns, const Chart& chart) {
  int n = L.n;
  auto w = static_cast<std::size_t>(n * columns);
  chart.require_samples(5, "fourth-order differences");
  double m = 0.0;
  Field comp(chart.size());
  for (int e = 0; e < n * columns; ++e) {
    for (std::size_t q = 0; q < chart.size(); ++q) comp[q] = F[q * w + static_cast<std::size_t>(e)];
    int a = e / columns, c = e % columns;
    for (int k = 0; k < chart.dim(); ++k) {
      Field d = fd_first(chart, comp, k);
      for (std::size_t q = 0; q < chart.size(); ++q) {
        double v = d[q];
        for (int b = 0; b < n; ++b) v -= L.A[idx3(n, k, a, b)][q] * F[q * w + static_cast<std::size_t>(b * columns + c)];
        m = std::max(m, std::abs(v));
      }
    }
  }
  return m;
}

std::vector<double> gauge_psi_to_phi(std::span<const double> psi, int columns, std::span<const Expr> eta,
                                     double lambda, const Chart& chart) {
  int n = chart.dim();
  auto s = shifts(eta, lambda, chart);
  auto w = static_cast<std::size_t>(n * columns);
  if (psi.size() != chart.size() * w) throw ConfigError("psi does not match the chart");
  std::vector<double> phi(psi.begin(), psi.end());
  for (std::size_t q = 0; q < chart.size(); ++q) {
    for (int a = 0; a < n; ++a) {
      double f = std::sqrt(s[static_cast<std::size_t>(a)][q]);
      for (int c = 0; c < columns; ++c) phi[q * w + static_cast<std::size_t>(a * columns + c)] *= f;
    }
  }
  return phi;
}

FrameSolution integrate_frame(const LaxConnection& L, const std::vector<Field>& H, const Chart& chart,
                              const FrameOptions& opt) {
  int n = L.n;
  auto un = static_cast<std::size_t>(n);
  if (H.size() != un) throw ConfigError("need one Lame coefficient per coordinate");
  chart.require_samples(3, "march interpolation");
  std::vector<double> init = opt.initial;
  if (init.empty()) {
    init.assign(un * un, 0.0);
    for (int i = 0; i < n; ++i) init[idx2(n, i, i)] = 1.0;
  }
  if (init.size() != un * un) throw ConfigError("initial frame must be n x n");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = -(i == j ? 1.0 : 0.0);
      for (int c = 0; c < n; ++c) v += init[idx2(n, i, c)] * init[idx2(n, j, c)];
      if (std::abs(v) > 1e-10) throw ConfigError("initial frame is not orthogonal");
    }
  }
  auto sh = axis_shifts(L.eta, L.lambda, chart);
  for (const auto& line : sh) {
    for (double v : line) {
      if (v <= kPole) throw DomainError("lambda = " + format_number(L.lambda) + " is a pole on the grid");
    }
  }
  std::size_t w = un * un + un;
  std::vector<double> state(chart.size() * w, 0.0);
  std::copy(init.begin(), init.end(), state.begin());
  std::vector<double> A(un * un);
  march_grid(chart, opt.axis_order, w, state,
             [&](int k, std::size_t start, std::size_t stride, int m, int i, int stage, const double* y, double* dy) {
               for (int a = 0; a < n; ++a) {
                 for (int b = 0; b < n; ++b) A[idx2(n, a, b)] = sample(L.A[idx3(n, k, a, b)], start, stride, m, i, stage);
               }
               for (int a = 0; a < n; ++a) {
                 for (int c = 0; c < n; ++c) {
                   double v = 0.0;
                   for (int b = 0; b < n; ++b) v += A[idx2(n, a, b)] * y[b * n + c];
                   dy[a * n + c] = v;
                 }
               }
               int node = chart.index_of(start, k) + i;
               int t = 2 * node + stage;
               double f = sample(H[static_cast<std::size_t>(k)], start, stride, m, i, stage) /
                          std::sqrt(sh[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)]);
               for (int c = 0; c < n; ++c) dy[n * n + c] = f * y[k * n + c];
             });
  FrameSolution F;
  F.lambda = L.lambda;
  F.n = n;
  F.phi.resize(chart.size() * un * un);
  F.rvec.resize(chart.size() * un);
  for (std::size_t q = 0; q < chart.size(); ++q) {
    std::copy_n(state.begin() + static_cast<std::ptrdiff_t>(q * w), un * un, F.phi.begin() + static_cast<std::ptrdiff_t>(q * un * un));
    std::copy_n(state.begin() + static_cast<std::ptrdiff_t>(q * w + un * un), un, F.rvec.begin() + static_cast<std::ptrdiff_t>(q * un));
    const double* P = F.phi.data() + q * un * un;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = -(i == j ? 1.0 : 0.0);
        for (int c = 0; c < n; ++c) v += P[i * n + c] * P[j * n + c];
        F.orthogonality_drift = std::max(F.orthogonality_drift, std::abs(v));
      }
    }
  }
  if (F.orthogonality_drift > opt.drift_abort) {
    throw NumericalFailure("frame orthogonality drift " + format_number(F.orthogonality_drift) + " exceeds " +
                           format_number(opt.drift_abort));
  }
  return F;
}

double frame_difference(const FrameSolution& a, const FrameSolution& b) {
  return std::max(max_abs_diff(a.phi, b.phi), max_abs_diff(a.rvec, b.rvec));
}

namespace {

// Finite-difference derivatives of the n components of a node-major vector
// field: out[axis][component] is a grid field.
std::vector<std::vector<Field>> vector_gradient(std::span<const double> v, int n, std::size_t offset, std::size_t width,
                                                const Chart& chart) {
  std::vector<std::vector<Field>> out(static_cast<std::size_t>(chart.dim()));
  Field comp(chart.size());
  for (int c = 0; c < n; ++c) {
    for (std::size_t q = 0; q < chart.size(); ++q) comp[q] = v[q * width + offset + static_cast<std::size_t>(c)];
    for (int a = 0; a < chart.dim(); ++a) out[static_cast<std::size_t>(a)].push_back(fd_first(chart, comp, a));
  }
  return out;
}

}  // namespace

double induced_metric_residual(const FrameSolution& F, const LaxConnection& L, const std::vector<Field>& H,
                               const Chart& chart) {
  int n = F.n;
  chart.require_samples(5, "fourth-order differences");
  auto s = shifts(L.eta, L.lambda, chart);
  auto dr = vector_gradient(F.rvec, n, 0, static_cast<std::size_t>(n), chart);
  double m = 0.0;
  for (std::size_t q = 0; q < chart.size(); ++q) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double v = 0.0;
        for (int c = 0; c < n; ++c) {
          v += dr[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)][q] * dr[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)][q];
        }
        if (i == j) {
          double h = H[static_cast<std::size_t>(i)][q];
          v -= h * h / s[static_cast<std::size_t>(i)][q];
        }
        m = std::max(m, std::abs(v));
      }
    }
  }
  return m;
}

double rvec_compatibility(const FrameSolution& F, const LaxConnection& L, const std::vector<Field>& H,
                          const Chart& chart) {
  int n = F.n;
  auto un = static_cast<std::size_t>(n);
  chart.require_samples(5, "fourth-order differences");
  auto s = shifts(L.eta, L.lambda, chart);
  // V[i] = H_i phi_i / sqrt(l + eta_i), node-major vectors
  std::vector<std::vector<double>> V(un, std::vector<double>(chart.size() * un));
  for (int i = 0; i < n; ++i) {
    auto ui = static_cast<std::size_t>(i);
    for (std::size_t q = 0; q < chart.size(); ++q) {
      double f = H[ui][q] / std::sqrt(s[ui][q]);
      for (std::size_t c = 0; c < un; ++c) V[ui][q * un + c] = f * F.phi[q * un * un + ui * un + c];
    }
  }
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    auto gi = vector_gradient(V[static_cast<std::size_t>(i)], n, 0, un, chart);
    for (int j = i + 1; j < n; ++j) {
      auto gj = vector_gradient(V[static_cast<std::size_t>(j)], n, 0, un, chart);
      for (std::size_t c = 0; c < un; ++c) {
        m = std::max(m, max_abs_diff(gi[static_cast<std::size_t>(j)][c], gj[static_cast<std::size_t>(i)][c]));
      }
    }
  }
  return m;
}

Slice make_slice(const Chart& chart, int fixed, int slice) {
  int n = chart.dim();
  if (n < 2) throw ConfigError("a slice needs at least two dimensions");
  if (fixed < 0 || fixed >= n) throw ConfigError("slice axis out of range");
  if (slice < 0 || slice >= chart.count(fixed)) throw ConfigError("slice index out of range");
  Slice s;
  s.fixed = fixed;
  s.slice = slice;
  std::vector<double> lo, hi;
  std::vector<int> m;
  for (int k = 0; k < n; ++k) {
    if (k == fixed) continue;
    s.axes.push_back(k);
    lo.push_back(chart.lo(k));
    hi.push_back(chart.hi(k));
    m.push_back(chart.count(k));
  }
  s.chart = Chart(lo, hi, m);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (std::size_t p = 0; p < s.chart.size(); ++p) {
    for (std::size_t a = 0; a < s.axes.size(); ++a) {
      idx[static_cast<std::size_t>(s.axes[a])] = s.chart.index_of(p, static_cast<int>(a));
    }
    idx[static_cast<std::size_t>(fixed)] = slice;
    s.nodes.push_back(chart.flat(idx));
  }
  return s;
}

SurfaceSamples slice_surface(const FrameSolution& F, const Slice& s) {
  if (F.n != 3) throw ConfigError("slice meshes need a three-dimensional frame");
  SurfaceSamples out;
  out.chart = s.chart;
  for (std::size_t node : s.nodes) {
    Vec3 r{}, nrm{};
    for (std::size_t c = 0; c < 3; ++c) {
      r[c] = F.rvec[node * 3 + c];
      nrm[c] = F.phi[node * 9 + static_cast<std::size_t>(s.fixed) * 3 + c];
    }
    out.r.push_back(r);
    out.normal.push_back(nrm);
  }
  return out;
}

SliceCurvatures hypersurface_curvatures(const FrameSolution& F, const LaxConnection& L, const BetaGrids& beta,
                                        const std::vector<Field>& H, const Chart& chart, const Slice& s) {
  int n = F.n;
  auto un = static_cast<std::size_t>(n);
  s.chart.require_samples(5, "fourth-order differences");
  std::vector<double> x = chart.point(s.nodes.front());
  SliceCurvatures out;
  out.lambda = F.lambda;
  out.shift = L.lambda + L.eta[static_cast<std::size_t>(s.fixed)].eval(x);
  if (out.shift <= kPole) throw DomainError("lambda = " + format_number(L.lambda) + " is a pole on the slice");
  double root = std::sqrt(out.shift);
  std::size_t N = s.nodes.size();
  // slice-local vectors r and phi_fixed
  std::vector<double> r(N * un), nv(N * un);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t c = 0; c < un; ++c) {
      r[p * un + c] = F.rvec[s.nodes[p] * un + c];
      nv[p * un + c] = F.phi[s.nodes[p] * un * un + static_cast<std::size_t>(s.fixed) * un + c];
    }
  }
  auto dr = vector_gradient(r, n, 0, un, s.chart);
  auto dn = vector_gradient(nv, n, 0, un, s.chart);
  for (std::size_t a = 0; a < s.axes.size(); ++a) {
    int i = s.axes[a];
    Field closed(N), wein(N);
    for (std::size_t p = 0; p < N; ++p) {
      double h = H[static_cast<std::size_t>(i)][s.nodes[p]];
      if (h == 0.0) throw DomainError("H_" + std::to_string(i + 1) + " vanishes on the slice");
      closed[p] = beta[idx2(n, s.fixed, i)][s.nodes[p]] / h * root;
      double num = 0.0, den = 0.0;
      for (std::size_t c = 0; c < un; ++c) {
        num += dn[a][c][p] * dr[a][c][p];
        den += dr[a][c][p] * dr[a][c][p];
      }
      wein[p] = num / den;
      out.weingarten_residual = std::max(out.weingarten_residual, std::abs(wein[p] - closed[p]));
    }
    out.closed.push_back(std::move(closed));
    out.weingarten.push_back(std::move(wein));
  }
  if (n == 3) {
    auto shape = mesh_shape_operator(slice_surface(F, s));
    out.mesh = {shape.k1, shape.k2};
    out.misalignment = max_abs(shape.misalignment);
    out.umbilic_excluded = shape.excluded_count;
  }
  return out;
}

ComplianceReport weingarten_scaling_report(std::span<const SliceCurvatures> family, const Thresholds& t) {
  if (family.size() < 2) throw PreconditionError("the scaling comparison needs at least two lambda values");
  double closed_dev = 0.0, mesh_dev = 0.0, wres = 0.0, mis = 0.0, kmax = 0.0;
  bool any = false, mesh = !family.front().mesh.empty();
  for (const auto& f : family) {
    wres = std::max(wres, f.weingarten_residual);
    mis = std::max(mis, f.misalignment);
    for (const auto& k : f.closed) kmax = std::max(kmax, max_abs(k));
  }
  for (std::size_t a = 0; a < family.size(); ++a) {
    for (std::size_t b = a + 1; b < family.size(); ++b) {
      double want = std::sqrt(family[a].shift / family[b].shift);
      for (std::size_t i = 0; i < family[a].closed.size(); ++i) {
        for (std::size_t p = 0; p < family[a].closed[i].size(); ++p) {
          double kb = family[b].closed[i][p];
          if (std::abs(kb) <= 1e-12) continue;
          any = true;
          closed_dev = std::max(closed_dev, std::abs(family[a].closed[i][p] / kb - want));
          // the mesh ratio is only meaningful away from flat points
          if (mesh && std::abs(kb) > 1e-2 * kmax) {
            mesh_dev = std::max(mesh_dev, std::abs(family[a].mesh[i][p] / family[b].mesh[i][p] - want));
          }
        }
      }
    }
  }
  ComplianceReport rep;
  for (const auto& f : family) rep.lambdas.push_back(f.lambda);
  if (!any) {
    rep.add_decided("closed_ratio_deviation", 0.0, Verdict::Pass, false, "umbilic-flat slice, scaling vacuous");
    rep.notes.push_back("umbilic-flat slice, scaling vacuous");
  } else {
    rep.add("closed_ratio_deviation", closed_dev, 1.0, Thresholds{1e-6, 1e-3});
    if (mesh) rep.add("mesh_ratio_deviation", mesh_dev, 1.0, Thresholds{1e-3, 1e-1});
  }
  rep.add("weingarten_residual", wres, 1.0 + kmax, t);
  if (mesh) rep.add("principal_direction_misalignment", mis, 1.0, Thresholds{1e-2, 1e-1});
  return rep;
}

}  // namespace pencil
