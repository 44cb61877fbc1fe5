#include "pencil/compat.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "pencil/errors.hpp"
#include "pencil/format.hpp"

namespace pencil {

namespace {

using Vec = std::vector<double>;

// Operator data at one point: g^{ij}, d_a g^{ij}, b^{ij}_k, d_l b^{ij}_k.
struct OpPoint {
  int n = 0;
  Vec g, dg, b, db;
};

OpPoint combine(const OpPoint& x, double cx, const OpPoint& y, double cy) {
  OpPoint z = x;
  auto mix = [&](Vec& out, const Vec& a, const Vec& c) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cx * a[i] + cy * c[i];
  };
  mix(z.g, x.g, y.g);
  mix(z.dg, x.dg, y.dg);
  mix(z.b, x.b, y.b);
  mix(z.db, x.db, y.db);
  return z;
}

double max_entry(const OpPoint& p) {
  return std::max(max_abs(p.g), max_abs(p.b));
}

class OperatorSampler {
 public:
  explicit OperatorSampler(const HamiltonianOperator& a)
      : n_(a.dim()),
        levi_(a.b.empty()),
        gjet_(a.g.upper(), n_, levi_ ? 2 : 1),
        bjet_(levi_ ? std::span<const Expr>() : std::span<const Expr>(a.b), n_, 1) {
    if (!levi_ && a.b.size() != static_cast<std::size_t>(n_ * n_ * n_)) {
      throw ConfigError("connection coefficients need n^3 entries");
    }
  }

  OpPoint sample(std::span<const double> x) {
    OpPoint p;
    p.n = n_;
    auto un = static_cast<std::size_t>(n_);
    std::size_t nn = un * un, nnn = nn * un;
    gv_.resize(gjet_.width());
    gjet_.eval(x, gv_, scratch_);
    if (levi_) {
      MetricPoint mp = metric_point(n_, 2, gv_);
      p.g = mp.gU;
      p.dg = mp.dgU;
      p.b = mp.b;
      p.db = mp.db;
      return p;
    }
    p.g.assign(gv_.begin(), gv_.begin() + static_cast<std::ptrdiff_t>(nn));
    p.dg.assign(gv_.begin() + static_cast<std::ptrdiff_t>(nn), gv_.begin() + static_cast<std::ptrdiff_t>(nn + nnn));
    bv_.resize(bjet_.width());
    bjet_.eval(x, bv_, scratch_);
    p.b.assign(bv_.begin(), bv_.begin() + static_cast<std::ptrdiff_t>(nnn));
    // jet layout: d_l of entry c at nnn*(1+l) + c, which is idx4(n,l,i,j,k) shifted
    p.db.assign(bv_.begin() + static_cast<std::ptrdiff_t>(nnn), bv_.end());
    return p;
  }

 private:
  int n_;
  bool levi_;
  JetProgram gjet_;
  JetProgram bjet_;
  Vec gv_, bv_, scratch_;
};

// Polarized Hamiltonian conditions. J1(A,A) and J2(A,A) are the conditions for
// A itself; J(X,Y) + J(Y,X) is the coefficient of lambda in J(Y + lambda X).
double j1(const OpPoint& X, const OpPoint& Y, const OpPoint* X2 = nullptr, const OpPoint* Y2 = nullptr) {
  int n = X.n;
  double m = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        auto term = [&](const OpPoint& x, const OpPoint& y) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) {
            v += 2.0 * x.b[idx3(n, k, i, s)] * y.g[idx2(n, s, j)];
            v -= y.g[idx2(n, j, s)] * x.dg[idx3(n, s, i, k)];
            v -= y.g[idx2(n, k, s)] * x.dg[idx3(n, s, i, j)];
            v += y.g[idx2(n, i, s)] * x.dg[idx3(n, s, k, j)];
          }
          return v;
        };
        double v = term(X, Y);
        if (X2) v += term(*X2, *Y2);
        m = std::max(m, std::abs(v));
      }
    }
  }
  return m;
}

double j2(const OpPoint& X, const OpPoint& Y, const OpPoint* X2 = nullptr, const OpPoint* Y2 = nullptr) {
  int n = X.n;
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int q = 0; q < n; ++q) {
          auto term = [&](const OpPoint& x, const OpPoint& y) {
            double v = 0.0;
            for (int s = 0; s < n; ++s) {
              v += y.g[idx2(n, j, s)] * x.db[idx4(n, s, i, k, q)];
              v -= y.g[idx2(n, i, s)] * x.db[idx4(n, s, j, k, q)];
              v += (x.b[idx3(n, i, j, s)] - x.b[idx3(n, j, i, s)]) * y.b[idx3(n, s, k, q)];
              v += x.b[idx3(n, i, k, s)] * y.b[idx3(n, j, s, q)];
              v -= x.b[idx3(n, j, k, s)] * y.b[idx3(n, i, s, q)];
            }
            return v;
          };
          double v = term(X, Y);
          if (X2) v += term(*X2, *Y2);
          m = std::max(m, std::abs(v));
        }
      }
    }
  }
  return m;
}

// Pencil-operator data at one point, built from the second-order jets of
// both metrics.
struct PencilPoint {
  int n = 0;
  MetricPoint g, gt;
  Vec r, dr, ddr;  // r^i_j [idx2], d_a r [idx3(a,i,j)], d_a d_b r [idx4(a,b,i,j)]
  Vec D;           // nabla_a gt^{kl} at [idx3(a,k,l)]
  Vec M;           // nabla_a r^j_k at [idx3(a,j,k)]
  Vec UM;          // nabla^i r^j_k at [idx3(i,j,k)]
  Vec bt7;         // coefficients from r, [idx3]
};

class PencilSampler {
 public:
  explicit PencilSampler(const PencilOperator& p)
      : n_(p.dim()), gjet_(p.g.upper(), n_, 2), tjet_(p.gt.upper(), n_, 2) {
    if (p.gt.dim() != n_) throw ConfigError("pencil metrics have different dimensions");
  }

  PencilPoint sample(std::span<const double> x) {
    int n = n_;
    auto un = static_cast<std::size_t>(n);
    std::size_t nn = un * un, nnn = nn * un, n4 = nnn * un;
    gv_.resize(gjet_.width());
    tv_.resize(tjet_.width());
    gjet_.eval(x, gv_, scratch_);
    tjet_.eval(x, tv_, scratch_);
    PencilPoint q;
    q.n = n;
    q.g = metric_point(n, 2, gv_);
    q.gt = metric_point(n, 2, tv_);
    const auto& L = q.g.gL;
    const auto& dL = q.g.dgL;
    const auto& ddL = q.g.ddgL;
    const auto& T = q.gt.gU;
    const auto& dT = q.gt.dgU;
    const auto& ddT = q.gt.ddgU;
    const auto& G = q.g.gamma;
    const auto& dG = q.g.dgamma;

    q.r.assign(nn, 0.0);
    q.dr.assign(nnn, 0.0);
    q.ddr.assign(n4, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int s = 0; s < n; ++s) {
          q.r[idx2(n, i, j)] += T[idx2(n, i, s)] * L[idx2(n, s, j)];
          for (int a = 0; a < n; ++a) {
            q.dr[idx3(n, a, i, j)] += dT[idx3(n, a, i, s)] * L[idx2(n, s, j)] + T[idx2(n, i, s)] * dL[idx3(n, a, s, j)];
            for (int b = 0; b < n; ++b) {
              q.ddr[idx4(n, a, b, i, j)] +=
                  ddT[idx4(n, a, b, i, s)] * L[idx2(n, s, j)] + dT[idx3(n, a, i, s)] * dL[idx3(n, b, s, j)] +
                  dT[idx3(n, b, i, s)] * dL[idx3(n, a, s, j)] + T[idx2(n, i, s)] * ddL[idx4(n, a, b, s, j)];
            }
          }
        }
      }
    }
    q.D.assign(nnn, 0.0);
    q.M.assign(nnn, 0.0);
    for (int a = 0; a < n; ++a) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double d = dT[idx3(n, a, k, l)];
          double m = q.dr[idx3(n, a, k, l)];
          for (int s = 0; s < n; ++s) {
            d += G[idx3(n, k, a, s)] * T[idx2(n, s, l)] + G[idx3(n, l, a, s)] * T[idx2(n, k, s)];
            m += G[idx3(n, k, a, s)] * q.r[idx2(n, s, l)] - G[idx3(n, s, a, l)] * q.r[idx2(n, k, s)];
          }
          q.D[idx3(n, a, k, l)] = d;
          q.M[idx3(n, a, k, l)] = m;
        }
      }
    }
    q.UM.assign(nnn, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int a = 0; a < n; ++a) v += q.g.gU[idx2(n, i, a)] * q.M[idx3(n, a, j, k)];
          q.UM[idx3(n, i, j, k)] = v;
        }
      }
    }
    q.bt7.assign(nnn, 0.0);
    const auto& b = q.g.b;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = q.UM[idx3(n, i, j, k)] - q.UM[idx3(n, j, i, k)] + q.D[idx3(n, k, i, j)];
          for (int s = 0; s < n; ++s) v += 2.0 * b[idx3(n, s, j, k)] * q.r[idx2(n, i, s)];
          q.bt7[idx3(n, i, j, k)] = 0.5 * v;
        }
      }
    }
    (void)dG;
    return q;
  }

 private:
  int n_;
  JetProgram gjet_, tjet_;
  Vec gv_, tv_, scratch_;
};

double nijenhuis_at(const PencilPoint& q) {
  int n = q.n;
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        double v = 0.0;
        for (int s = 0; s < n; ++s) {
          v += q.r[idx2(n, s, j)] * q.dr[idx3(n, s, i, k)] - q.r[idx2(n, s, k)] * q.dr[idx3(n, s, i, j)] -
               q.r[idx2(n, i, s)] * (q.dr[idx3(n, j, s, k)] - q.dr[idx3(n, k, s, j)]);
        }
        m = std::max(m, std::abs(v));
      }
    }
  }
  return m;
}

// Residual of nabla^i nabla^j r^{kl} + nabla^k nabla^l r^{ij}
//   - nabla^i nabla^k r^{jl} - nabla^j nabla^l r^{ik}.
double second_covariant_at(const PencilPoint& q) {
  int n = q.n;
  auto un = static_cast<std::size_t>(n);
  std::size_t n4 = un * un * un * un;
  const auto& G = q.g.gamma;
  const auto& dG = q.g.dgamma;
  const auto& T = q.gt.gU;
  const auto& dT = q.gt.dgU;
  const auto& ddT = q.gt.ddgU;
  const auto& gu = q.g.gU;
  // DD[b][a][k][l] = nabla_b nabla_a gt^{kl}
  Vec DD(n4, 0.0);
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a < n; ++a) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = ddT[idx4(n, b, a, k, l)];
          for (int s = 0; s < n; ++s) {
            v += dG[idx4(n, b, k, a, s)] * T[idx2(n, s, l)] + G[idx3(n, k, a, s)] * dT[idx3(n, b, s, l)] +
                 dG[idx4(n, b, l, a, s)] * T[idx2(n, k, s)] + G[idx3(n, l, a, s)] * dT[idx3(n, b, k, s)];
            v -= G[idx3(n, s, b, a)] * q.D[idx3(n, s, k, l)];
            v += G[idx3(n, k, b, s)] * q.D[idx3(n, a, s, l)] + G[idx3(n, l, b, s)] * q.D[idx3(n, a, k, s)];
          }
          DD[idx4(n, b, a, k, l)] = v;
        }
      }
    }
  }
  // raise both derivative indices
  Vec U(n4, 0.0), W(n4, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int b = 0; b < n; ++b) v += gu[idx2(n, i, b)] * DD[idx4(n, b, a, k, l)];
          U[idx4(n, i, a, k, l)] = v;
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int a = 0; a < n; ++a) v += gu[idx2(n, j, a)] * U[idx4(n, i, a, k, l)];
          W[idx4(n, i, j, k, l)] = v;
        }
      }
    }
  }
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = W[idx4(n, i, j, k, l)] + W[idx4(n, k, l, i, j)] - W[idx4(n, i, k, j, l)] -
                     W[idx4(n, j, l, i, k)];
          m = std::max(m, std::abs(v));
        }
      }
    }
  }
  return m;
}

double riemann_max_at(const MetricPoint& mp) {
  return max_abs(riemann_tensor(mp.n, mp.gamma, mp.dgamma));
}

template <class F>
void for_each_node(const Chart& chart, F&& f) {
  std::vector<double> x(static_cast<std::size_t>(chart.dim()));
  for (std::size_t p = 0; p < chart.size(); ++p) {
    chart.point(p, x);
    f(std::span<const double>(x), p);
  }
}

void require_dim(int n, const Chart& chart) {
  if (n != chart.dim()) throw ConfigError("operator dimension does not match the chart");
}

}  // namespace

HamiltonianOperator levi_civita_operator(const MetricField& g) {
  int n = g.dim();
  auto gamma = christoffel(g);
  std::vector<Expr> b(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        std::vector<Expr> terms;
        for (int s = 0; s < n; ++s) terms.push_back(g.up(i, s) * gamma[idx3(n, j, s, k)]);
        b[idx3(n, i, j, k)] = -sum(terms);
      }
    }
  }
  return HamiltonianOperator{g, std::move(b)};
}

PencilOperator pencil_operator(const MetricField& g, const MetricField& gt) {
  int n = g.dim();
  if (gt.dim() != n) throw ConfigError("pencil metrics have different dimensions");
  std::vector<Expr> r;
  if (g.has_lower()) {
    r.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::vector<Expr> terms;
        for (int s = 0; s < n; ++s) terms.push_back(gt.up(i, s) * g.low(s, j));
        r[idx2(n, i, j)] = sum(terms);
      }
    }
  }
  return PencilOperator{g, gt, std::move(r)};
}

std::vector<Expr> btilde_from_r(const PencilOperator& p) {
  int n = p.dim();
  if (p.r.empty()) throw PreconditionError("symbolic r needs a symbolic inverse metric");
  auto gamma = christoffel(p.g);
  auto b = levi_civita_operator(p.g).b;
  auto up_r = raise_derivative_index(covariant_derivative(p.r, Valence::Mixed, gamma, n), p.g);
  auto dk_rt = covariant_derivative(p.gt.upper(), Valence::Upper, gamma, n);
  std::vector<Expr> bt(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        std::vector<Expr> terms{up_r[idx3(n, i, j, k)], -up_r[idx3(n, j, i, k)], dk_rt[idx3(n, k, i, j)]};
        for (int s = 0; s < n; ++s) terms.push_back(Expr(2.0) * b[idx3(n, s, j, k)] * p.r[idx2(n, i, s)]);
        bt[idx3(n, i, j, k)] = Expr(0.5) * sum(terms);
      }
    }
  }
  return bt;
}

ComplianceReport check_hamiltonian(const HamiltonianOperator& a, const Chart& chart, const Thresholds& t) {
  int n = a.dim();
  require_dim(n, chart);
  OperatorSampler sampler(a);
  double r1 = 0, r2 = 0, sym = 0, msym = 0, scale = 0;
  for_each_node(chart, [&](std::span<const double> x, std::size_t) {
    OpPoint p = sampler.sample(x);
    scale = std::max(scale, max_entry(p));
    r1 = std::max(r1, j1(p, p));
    r2 = std::max(r2, j2(p, p));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          sym = std::max(sym, std::abs(p.b[idx3(n, i, j, k)] + p.b[idx3(n, j, i, k)] - p.dg[idx3(n, k, i, j)]));
          double v = 0.0;
          for (int s = 0; s < n; ++s) {
            v += p.b[idx3(n, i, k, s)] * p.g[idx2(n, s, j)] - p.b[idx3(n, j, k, s)] * p.g[idx2(n, s, i)];
          }
          msym = std::max(msym, std::abs(v));
        }
      }
    }
  });
  scale += 1.0;
  ComplianceReport rep;
  rep.add("hamiltonian_metric_condition", r1, scale, t);
  rep.add("hamiltonian_jacobi_condition", r2, scale, t);
  rep.add("b_symmetric_part", sym, scale, t);
  rep.add("b_metric_symmetry", msym, scale, t);
  return rep;
}

ComplianceReport check_theorem1(const PencilOperator& p, const Chart& chart, const CompatOptions& opt) {
  int n = p.dim();
  require_dim(n, chart);
  PencilSampler sampler(p);
  double nij = 0, second = 0, flat_g = 0, flat_t = 0, symm = 0, back = 0, scale = 0, scale_g = 0, scale_t = 0;
  for_each_node(chart, [&](std::span<const double> x, std::size_t) {
    PencilPoint q = sampler.sample(x);
    scale_g = std::max(scale_g, max_abs(q.g.gU));
    scale_t = std::max(scale_t, max_abs(q.gt.gU));
    nij = std::max(nij, nijenhuis_at(q));
    second = std::max(second, second_covariant_at(q));
    flat_g = std::max(flat_g, riemann_max_at(q.g));
    flat_t = std::max(flat_t, riemann_max_at(q.gt));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int s = 0; s < n; ++s) {
          v += q.r[idx2(n, i, s)] * q.g.gU[idx2(n, s, j)] - q.r[idx2(n, j, s)] * q.g.gU[idx2(n, s, i)];
        }
        symm = std::max(symm, std::abs(v));
        double w = -q.gt.gU[idx2(n, i, j)];
        for (int s = 0; s < n; ++s) w += q.r[idx2(n, i, s)] * q.g.gU[idx2(n, s, j)];
        back = std::max(back, std::abs(w));
      }
    }
  });
  scale = 1.0 + std::max(scale_g, scale_t);
  ComplianceReport rep;
  rep.add("nijenhuis", nij, scale, opt.thresholds);
  rep.add("second_covariant_condition", second, scale, opt.thresholds);
  rep.add("metric_flatness", flat_g, 1.0 + scale_g, opt.thresholds);
  rep.add("tilde_metric_flatness", flat_t, 1.0 + scale_t, opt.thresholds);
  rep.add("pencil_symmetry", symm, scale, opt.thresholds, false);
  rep.add("tilde_metric_from_r", back, scale, opt.thresholds, false);
  double gap = min_eigenvalue_gap(p, chart);
  rep.add_info("min_eigenvalue_gap", gap,
               gap > opt.spectrum_gap ? "simple spectrum" : "spectrum not simple on the grid");
  return rep;
}

ComplianceReport check_pencil(const HamiltonianOperator& a, const HamiltonianOperator& at,
                              const Chart& chart, const CompatOptions& opt) {
  int n = a.dim();
  require_dim(n, chart);
  if (at.dim() != n) throw ConfigError("pencil operators have different dimensions");
  ComplianceReport rep;
  rep.merge(check_hamiltonian(a, chart, opt.thresholds), "first_");
  rep.merge(check_hamiltonian(at, chart, opt.thresholds), "second_");

  OperatorSampler sa(a), st(at);
  std::vector<OpPoint> pa, pt;
  pa.reserve(chart.size());
  pt.reserve(chart.size());
  for_each_node(chart, [&](std::span<const double> x, std::size_t) {
    pa.push_back(sa.sample(x));
    pt.push_back(st.sample(x));
  });
  double c1 = 0, c2 = 0, scale = 0;
  for (std::size_t q = 0; q < pa.size(); ++q) {
    scale = std::max({scale, max_entry(pa[q]), max_entry(pt[q])});
    c1 = std::max(c1, j1(pt[q], pa[q], &pa[q], &pt[q]));
    c2 = std::max(c2, j2(pt[q], pa[q], &pa[q], &pt[q]));
  }
  scale += 1.0;
  rep.add("pencil_first_order", c1, scale, opt.thresholds);
  rep.add("pencil_second_order", c2, scale, opt.thresholds);

  double worst = 0.0;
  bool any = false;
  for (double lam : opt.lambdas) {
    bool pole = false;
    double r = 0.0, lscale = 0.0;
    for (std::size_t q = 0; q < pa.size() && !pole; ++q) {
      OpPoint c = combine(pt[q], 1.0, pa[q], lam);
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = c.g[idx2(n, i, j)];
      }
      if (std::abs(m.determinant()) < opt.pole_det) {
        pole = true;
        break;
      }
      lscale = std::max(lscale, max_entry(c));
      r = std::max({r, j1(c, c), j2(c, c)});
    }
    std::string name = "lambda_" + format_number(lam) + "_hamiltonian";
    if (pole) {
      rep.skipped_lambdas.push_back(lam);
      rep.add_decided(name, 0.0, Verdict::Pass, false, "skipped: gt + lambda g singular on the grid");
      continue;
    }
    any = true;
    rep.lambdas.push_back(lam);
    rep.add(name, r, 1.0 + lscale, opt.thresholds);
    worst = std::max(worst, r);
  }
  if (!any && !opt.lambdas.empty()) rep.notes.push_back("every lambda in the sweep was skipped");
  rep.add_info("lambda_sweep_worst", worst);
  return rep;
}

ComplianceReport verify_appendix(const PencilOperator& p, const Chart& chart, const CompatOptions& opt) {
  int n = p.dim();
  require_dim(n, chart);
  PencilSampler sampler(p);
  double i1 = 0, i2 = 0, i3 = 0, cancel = 0, skew = 0, match = 0, scale = 0;
  for_each_node(chart, [&](std::span<const double> x, std::size_t) {
    PencilPoint q = sampler.sample(x);
    scale = std::max({scale, max_abs(q.g.gU), max_abs(q.gt.gU)});
    const auto& T = q.gt.gU;
    const auto& b = q.g.b;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          i1 = std::max(i1, std::abs(q.bt7[idx3(n, i, j, k)] + q.bt7[idx3(n, j, i, k)] - q.gt.dgU[idx3(n, k, i, j)]));
          match = std::max(match, std::abs(q.bt7[idx3(n, i, j, k)] - q.gt.b[idx3(n, i, j, k)]));
          double v2 = 0, v3 = 0, vc = 0;
          for (int s = 0; s < n; ++s) {
            v2 += q.bt7[idx3(n, i, k, s)] * T[idx2(n, s, j)] - q.bt7[idx3(n, j, k, s)] * T[idx2(n, s, i)];
            double left = q.UM[idx3(n, i, k, s)] - q.UM[idx3(n, k, i, s)] + q.D[idx3(n, s, i, k)];
            double right = q.UM[idx3(n, j, k, s)] - q.UM[idx3(n, k, j, s)] + q.D[idx3(n, s, j, k)];
            v3 += left * T[idx2(n, s, j)] - right * T[idx2(n, s, i)];
            for (int l = 0; l < n; ++l) {
              vc += b[idx3(n, l, k, s)] * (q.r[idx2(n, i, l)] * T[idx2(n, s, j)] - q.r[idx2(n, j, l)] * T[idx2(n, s, i)]);
            }
          }
          i2 = std::max(i2, std::abs(v2));
          i3 = std::max(i3, std::abs(v3));
          cancel = std::max(cancel, std::abs(vc));
          // bracket B^{ij}_k and its (i,j) swap
          auto B = [&](int a, int c) {
            double v = q.UM[idx3(n, a, c, k)] - q.UM[idx3(n, c, a, k)];
            for (int s = 0; s < n; ++s) {
              v += b[idx3(n, s, c, k)] * q.r[idx2(n, a, s)] - b[idx3(n, s, a, k)] * q.r[idx2(n, c, s)];
            }
            return v;
          };
          skew = std::max(skew, std::abs(B(i, j) + B(j, i)));
        }
      }
    }
  });
  scale += 1.0;
  ComplianceReport rep;
  rep.add("btilde_symmetric_part", i1, scale, opt.thresholds);
  rep.add("btilde_r_symmetry", i2, scale, opt.thresholds);
  rep.add("bracket_form", i3, scale, opt.thresholds);
  rep.add("connection_terms_cancel", cancel, scale, opt.thresholds);
  rep.add("bracket_skew", skew, scale, opt.thresholds);
  rep.add("btilde_levi_civita_match", match, scale, opt.thresholds, false);
  return rep;
}

double min_eigenvalue_gap(const PencilOperator& p, const Chart& chart) {
  int n = p.dim();
  JetProgram gj(p.g.upper(), n, 0), tj(p.gt.upper(), n, 0);
  Vec gv(gj.width()), tv(tj.width()), scratch;
  double gap = std::numeric_limits<double>::infinity();
  for_each_node(chart, [&](std::span<const double> x, std::size_t) {
    gj.eval(x, gv, scratch);
    tj.eval(x, tv, scratch);
    Eigen::MatrixXd G(n, n), T(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        G(i, j) = gv[idx2(n, i, j)];
        T(i, j) = tv[idx2(n, i, j)];
      }
    }
    Eigen::MatrixXd r = T * G.inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(r, false);
    auto ev = es.eigenvalues();
    for (int a = 0; a < n; ++a) {
      for (int c = a + 1; c < n; ++c) gap = std::min(gap, std::abs(ev(a) - ev(c)));
    }
  });
  return n > 1 ? gap : 0.0;
}

}  // namespace pencil
