#include "pencil/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

bool off_diagonal_zero(std::span<const Expr> m, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && !m[idx2(n, i, j)].is_zero()) return false;
    }
  }
  return true;
}

void require_square(std::span<const Expr> m, int n, const char* what) {
  if (n < 1 || m.size() != static_cast<std::size_t>(n * n)) {
    throw PreconditionError(std::string(what) + ": expected an n x n matrix");
  }
}

// Per-chunk evaluation of a compiled program over the grid, reduced by max.
template <class Kernel>
double grid_reduce(const Chart& chart, const ExprProgram& program, Kernel&& kernel) {
  std::size_t count = chart.size();
  auto workers = static_cast<std::size_t>(worker_count());
  std::size_t chunk = (count + workers - 1) / workers;
  std::size_t chunks = (count + chunk - 1) / chunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(chunks, [&](std::size_t b, std::size_t e) {
    std::vector<double> scratch, values(program.outputs()), x(static_cast<std::size_t>(chart.dim()));
    for (std::size_t c = b; c < e; ++c) {
      double m = 0.0;
      for (std::size_t p = c * chunk; p < std::min(count, (c + 1) * chunk); ++p) {
        chart.point(p, x);
        program.eval(x, values, scratch);
        double v = kernel(std::span<const double>(values), p);
        if (std::isnan(v)) throw NumericalFailure("NaN encountered in grid reduction");
        m = std::max(m, v);
      }
      partial[c] = m;
    }
  });
  double m = 0.0;
  for (double v : partial) m = std::max(m, v);
  return m;
}

}  // namespace

Expr symbolic_determinant(std::span<const Expr> m, int n) {
  auto a = [&](int i, int j) -> const Expr& { return m[idx2(n, i, j)]; };
  switch (n) {
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default: throw PreconditionError("symbolic determinant is limited to n <= 3");
  }
}

std::vector<Expr> symbolic_inverse(std::span<const Expr> m, int n) {
  require_square(m, n, "symbolic_inverse");
  auto a = [&](int i, int j) -> const Expr& { return m[idx2(n, i, j)]; };
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> inv(un * un);
  if (off_diagonal_zero(m, n)) {
    for (int i = 0; i < n; ++i) inv[idx2(n, i, i)] = Expr(1.0) / a(i, i);
    return inv;
  }
  Expr det = symbolic_determinant(m, n);
  if (n == 2) {
    inv[idx2(n, 0, 0)] = a(1, 1) / det;
    inv[idx2(n, 0, 1)] = -a(0, 1) / det;
    inv[idx2(n, 1, 0)] = -a(1, 0) / det;
    inv[idx2(n, 1, 1)] = a(0, 0) / det;
    return inv;
  }
  // n == 3: transpose of the cofactor matrix
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[idx2(n, i, j)] = (a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0)) / det;
    }
  }
  return inv;
}

MetricField MetricField::from_contravariant(std::vector<Expr> upper, int n) {
  require_square(upper, n, "metric");
  bool diag = off_diagonal_zero(upper, n);
  std::vector<Expr> lower;
  if (diag || n <= 3) lower = symbolic_inverse(upper, n);
  return MetricField(n, std::move(upper), std::move(lower), diag);
}

MetricField MetricField::from_covariant(std::vector<Expr> lower, int n) {
  require_square(lower, n, "metric");
  bool diag = off_diagonal_zero(lower, n);
  if (!diag && n > 3) {
    throw PreconditionError("covariant metric input needs n <= 3 or a diagonal metric");
  }
  std::vector<Expr> upper = symbolic_inverse(lower, n);
  return MetricField(n, std::move(upper), std::move(lower), diag);
}

MetricField MetricField::diagonal_contravariant(std::span<const Expr> entries) {
  int n = static_cast<int>(entries.size());
  std::vector<Expr> upper(entries.size() * entries.size());
  for (int i = 0; i < n; ++i) upper[idx2(n, i, i)] = entries[static_cast<std::size_t>(i)];
  return from_contravariant(std::move(upper), n);
}

const Expr& MetricField::low(int i, int j) const {
  if (lower_.empty()) throw PreconditionError("covariant metric not available symbolically for n >= 4");
  return lower_[idx2(n_, i, j)];
}

std::span<const Expr> MetricField::lower() const {
  if (lower_.empty()) throw PreconditionError("covariant metric not available symbolically for n >= 4");
  return lower_;
}

void MetricField::validate(const Chart& chart) const {
  if (chart.dim() != n_) throw ConfigError("metric dimension does not match the chart");
  std::vector<Expr> all(upper_.begin(), upper_.end());
  all.insert(all.end(), lower_.begin(), lower_.end());
  ExprProgram program(all);
  auto nn = static_cast<std::size_t>(n_ * n_);
  grid_reduce(chart, program, [&](std::span<const double> v, std::size_t p) {
    Eigen::MatrixXd gu(n_, n_);
    double scale = 0.0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        gu(i, j) = v[idx2(n_, i, j)];
        scale = std::max(scale, std::abs(gu(i, j)));
      }
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < i; ++j) {
        if (std::abs(gu(i, j) - gu(j, i)) > 1e-12 * (1.0 + scale)) {
          throw DomainError("metric is not symmetric at grid node " + std::to_string(p));
        }
      }
    }
    double det = gu.determinant();
    if (!(std::abs(det) > 1e-12 * std::max(1.0, std::pow(scale, n_)))) {
      throw DomainError("metric is singular at grid node " + std::to_string(p));
    }
    if (!lower_.empty()) {
      Eigen::MatrixXd gl(n_, n_);
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) gl(i, j) = v[nn + idx2(n_, i, j)];
      }
      double err = (gu * gl - Eigen::MatrixXd::Identity(n_, n_)).cwiseAbs().maxCoeff();
      if (err > 1e-10 * (1.0 + scale * gl.cwiseAbs().maxCoeff())) {
        throw DomainError("inverse metric mismatch at grid node " + std::to_string(p));
      }
    }
    return 0.0;
  });
}

std::vector<Expr> christoffel(const MetricField& g) {
  int n = g.dim();
  auto un = static_cast<std::size_t>(n);
  // dl[a][s][k] = d_a g_{sk}
  std::vector<Expr> dl(un * un * un);
  for (int a = 0; a < n; ++a) {
    for (int s = 0; s < n; ++s) {
      for (int k = s; k < n; ++k) {
        Expr d = g.low(s, k).diff(a);
        dl[idx3(n, a, s, k)] = d;
        dl[idx3(n, a, k, s)] = d;
      }
    }
  }
  std::vector<Expr> gamma(un * un * un);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        std::vector<Expr> terms;
        for (int s = 0; s < n; ++s) {
          const Expr& gis = g.up(i, s);
          if (gis.is_zero()) continue;
          Expr c = dl[idx3(n, j, s, k)] + dl[idx3(n, k, s, j)] - dl[idx3(n, s, j, k)];
          if (c.is_zero()) continue;
          terms.push_back(gis * c);
        }
        Expr v = Expr(0.5) * sum(terms);
        gamma[idx3(n, i, j, k)] = v;
        gamma[idx3(n, i, k, j)] = v;
      }
    }
  }
  return gamma;
}

std::vector<Expr> covariant_derivative(std::span<const Expr> t, Valence valence,
                                       std::span<const Expr> gamma, int n) {
  require_square(t, n, "covariant_derivative");
  if (gamma.size() != static_cast<std::size_t>(n * n * n)) {
    throw PreconditionError("covariant_derivative: connection has the wrong size");
  }
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> out(un * un * un);
  auto T = [&](int i, int j) -> const Expr& { return t[idx2(n, i, j)]; };
  auto G = [&](int i, int j, int k) -> const Expr& { return gamma[idx3(n, i, j, k)]; };
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::vector<Expr> terms{T(i, j).diff(k)};
        for (int s = 0; s < n; ++s) {
          switch (valence) {
            case Valence::Mixed:
              terms.push_back(G(i, k, s) * T(s, j));
              terms.push_back(-(G(s, k, j) * T(i, s)));
              break;
            case Valence::Upper:
              terms.push_back(G(i, k, s) * T(s, j));
              terms.push_back(G(j, k, s) * T(i, s));
              break;
            case Valence::Lower:
              terms.push_back(-(G(s, k, i) * T(s, j)));
              terms.push_back(-(G(s, k, j) * T(i, s)));
              break;
          }
        }
        out[idx3(n, k, i, j)] = sum(terms);
      }
    }
  }
  return out;
}

std::vector<Expr> raise_derivative_index(std::span<const Expr> dt, const MetricField& g) {
  int n = g.dim();
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> out(un * un * un);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::vector<Expr> terms;
        for (int s = 0; s < n; ++s) terms.push_back(g.up(a, s) * dt[idx3(n, s, i, j)]);
        out[idx3(n, a, i, j)] = sum(terms);
      }
    }
  }
  return out;
}

namespace {

// D at [idx3(n,s,i,k)] holds the derivative d_s r^i_k (or its covariant form).
std::vector<Expr> nijenhuis_from(std::span<const Expr> r, std::span<const Expr> D, int n) {
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> out(un * un * un);
  auto R = [&](int i, int j) -> const Expr& { return r[idx2(n, i, j)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        std::vector<Expr> terms;
        for (int s = 0; s < n; ++s) {
          terms.push_back(R(s, j) * D[idx3(n, s, i, k)]);
          terms.push_back(-(R(s, k) * D[idx3(n, s, i, j)]));
          terms.push_back(-(R(i, s) * (D[idx3(n, j, s, k)] - D[idx3(n, k, s, j)])));
        }
        Expr v = sum(terms);
        out[idx3(n, i, j, k)] = v;
        out[idx3(n, i, k, j)] = -v;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Expr> nijenhuis(std::span<const Expr> r, int n) {
  require_square(r, n, "nijenhuis");
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> D(un * un * un);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) D[idx3(n, s, i, k)] = r[idx2(n, i, k)].diff(s);
    }
  }
  return nijenhuis_from(r, D, n);
}

std::vector<Expr> nijenhuis(std::span<const Expr> r, int n, std::span<const Expr> gamma) {
  return nijenhuis_from(r, covariant_derivative(r, Valence::Mixed, gamma, n), n);
}

std::vector<double> grid_max_abs_each(std::span<const Expr> exprs, const Chart& chart) {
  ExprProgram program(exprs);
  std::vector<double> result(exprs.size(), 0.0);
  std::vector<double> scratch, values(exprs.size()), x(static_cast<std::size_t>(chart.dim()));
  for (std::size_t p = 0; p < chart.size(); ++p) {
    chart.point(p, x);
    program.eval(x, values, scratch);
    for (std::size_t c = 0; c < values.size(); ++c) result[c] = std::max(result[c], std::abs(values[c]));
  }
  return result;
}

double grid_max_abs(std::span<const Expr> exprs, const Chart& chart) {
  ExprProgram program(exprs);
  return grid_reduce(chart, program, [](std::span<const double> v, std::size_t) {
    return max_abs(v);
  });
}

JetProgram::JetProgram(std::span<const Expr> fields, int n, int order)
    : n_(n), count_(static_cast<int>(fields.size())), order_(order) {
  if (order < 0 || order > 2) throw PreconditionError("jet order must be 0, 1 or 2");
  std::vector<Expr> outs(fields.begin(), fields.end());
  if (order >= 1) {
    std::vector<Expr> first;
    for (int a = 0; a < n; ++a) {
      for (const auto& f : fields) first.push_back(f.diff(a));
    }
    outs.insert(outs.end(), first.begin(), first.end());
    if (order == 2) {
      auto uc = fields.size();
      std::vector<Expr> second(static_cast<std::size_t>(n * n) * uc);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          for (std::size_t c = 0; c < uc; ++c) {
            Expr d = first[static_cast<std::size_t>(a) * uc + c].diff(b);
            second[static_cast<std::size_t>(a * n + b) * uc + c] = d;
            second[static_cast<std::size_t>(b * n + a) * uc + c] = d;
          }
        }
      }
      outs.insert(outs.end(), second.begin(), second.end());
    }
  }
  program_ = ExprProgram(outs);
}

std::size_t JetProgram::width() const { return program_.outputs(); }

void JetProgram::eval(std::span<const double> point, std::span<double> out,
                      std::vector<double>& scratch) const {
  program_.eval(point, out, scratch);
}

double MetricPoint::riemann(int i, int j, int k, int l) const {
  double v = dgamma[idx4(n, k, i, l, j)] - dgamma[idx4(n, l, i, k, j)];
  for (int s = 0; s < n; ++s) {
    v += gamma[idx3(n, i, k, s)] * gamma[idx3(n, s, l, j)] - gamma[idx3(n, i, l, s)] * gamma[idx3(n, s, k, j)];
  }
  return v;
}

MetricPoint metric_point(int n, int order, std::span<const double> jet) {
  if (order < 1) throw PreconditionError("metric_point needs at least first derivatives");
  MetricPoint mp;
  mp.n = n;
  auto un = static_cast<std::size_t>(n);
  std::size_t nn = un * un, nnn = nn * un, n4 = nnn * un;
  mp.gU.assign(jet.begin(), jet.begin() + static_cast<std::ptrdiff_t>(nn));
  mp.dgU.assign(jet.begin() + static_cast<std::ptrdiff_t>(nn),
                jet.begin() + static_cast<std::ptrdiff_t>(nn + nnn));

  Eigen::MatrixXd gu(n, n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gu(i, j) = mp.gU[idx2(n, i, j)];
      scale = std::max(scale, std::abs(gu(i, j)));
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(gu);
  double det = lu.determinant();
  if (!(std::abs(det) > 1e-12 * std::max(1.0, std::pow(scale, n)))) {
    throw DomainError("metric is singular at an evaluation point");
  }
  Eigen::MatrixXd gl = lu.inverse();
  mp.gL.resize(nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) mp.gL[idx2(n, i, j)] = gl(i, j);
  }

  std::vector<Eigen::MatrixXd> dG(un), dL(un);
  for (int a = 0; a < n; ++a) {
    dG[static_cast<std::size_t>(a)].resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) dG[static_cast<std::size_t>(a)](i, j) = mp.dgU[idx3(n, a, i, j)];
    }
    dL[static_cast<std::size_t>(a)] = -gl * dG[static_cast<std::size_t>(a)] * gl;
  }
  mp.dgL.resize(nnn);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) mp.dgL[idx3(n, a, i, j)] = dL[static_cast<std::size_t>(a)](i, j);
    }
  }
  auto dl = [&](int a, int s, int k) { return mp.dgL[idx3(n, a, s, k)]; };

  // C_{sjk} = d_j g_{sk} + d_k g_{sj} - d_s g_{jk}
  std::vector<double> C(nnn);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) C[idx3(n, s, j, k)] = dl(j, s, k) + dl(k, s, j) - dl(s, j, k);
    }
  }
  mp.gamma.assign(nnn, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int s = 0; s < n; ++s) v += mp.gU[idx2(n, i, s)] * C[idx3(n, s, j, k)];
        mp.gamma[idx3(n, i, j, k)] = 0.5 * v;
      }
    }
  }
  mp.b.assign(nnn, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int s = 0; s < n; ++s) v -= mp.gU[idx2(n, i, s)] * mp.gamma[idx3(n, j, s, k)];
        mp.b[idx3(n, i, j, k)] = v;
      }
    }
  }
  if (order < 2) return mp;

  // d_a d_b g_{ij} = -L ddG L + L dG_a L dG_b L + L dG_b L dG_a L
  std::vector<double>& ddl = mp.ddgL;
  ddl.assign(n4, 0.0);
  mp.ddgU.assign(n4, 0.0);
  std::size_t off = nn + nnn;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      Eigen::MatrixXd ddG(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          ddG(i, j) = jet[off + static_cast<std::size_t>(a * n + b) * nn + idx2(n, i, j)];
          mp.ddgU[idx4(n, a, b, i, j)] = ddG(i, j);
        }
      }
      const auto& Ga = dG[static_cast<std::size_t>(a)];
      const auto& Gb = dG[static_cast<std::size_t>(b)];
      Eigen::MatrixXd m = -gl * ddG * gl + gl * Ga * gl * Gb * gl + gl * Gb * gl * Ga * gl;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) ddl[idx4(n, a, b, i, j)] = m(i, j);
      }
    }
  }
  mp.dgamma.assign(n4, 0.0);
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) {
            double dC = ddl[idx4(n, l, j, s, k)] + ddl[idx4(n, l, k, s, j)] - ddl[idx4(n, l, s, j, k)];
            v += mp.dgU[idx3(n, l, i, s)] * C[idx3(n, s, j, k)] + mp.gU[idx2(n, i, s)] * dC;
          }
          mp.dgamma[idx4(n, l, i, j, k)] = 0.5 * v;
        }
      }
    }
  }
  mp.db.assign(n4, 0.0);
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) {
            v -= mp.dgU[idx3(n, l, i, s)] * mp.gamma[idx3(n, j, s, k)] +
                 mp.gU[idx2(n, i, s)] * mp.dgamma[idx4(n, l, j, s, k)];
          }
          mp.db[idx4(n, l, i, j, k)] = v;
        }
      }
    }
  }
  return mp;
}

std::vector<double> riemann_tensor(int n, std::span<const double> gamma,
                                   std::span<const double> dgamma) {
  auto un = static_cast<std::size_t>(n);
  std::vector<double> R(un * un * un * un, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = dgamma[idx4(n, k, i, l, j)] - dgamma[idx4(n, l, i, k, j)];
          for (int s = 0; s < n; ++s) {
            v += gamma[idx3(n, i, k, s)] * gamma[idx3(n, s, l, j)] -
                 gamma[idx3(n, i, l, s)] * gamma[idx3(n, s, k, j)];
          }
          R[idx4(n, i, j, k, l)] = v;
        }
      }
    }
  }
  return R;
}

double riemann_max_numeric(const MetricField& g, const Chart& chart) {
  int n = g.dim();
  JetProgram jet(g.upper(), n, 2);
  std::size_t count = chart.size();
  auto workers = static_cast<std::size_t>(worker_count());
  std::size_t chunk = (count + workers - 1) / workers;
  std::size_t chunks = (count + chunk - 1) / chunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(chunks, [&](std::size_t b, std::size_t e) {
    std::vector<double> scratch, values(jet.width()), x(static_cast<std::size_t>(n));
    for (std::size_t c = b; c < e; ++c) {
      double m = 0.0;
      for (std::size_t p = c * chunk; p < std::min(count, (c + 1) * chunk); ++p) {
        chart.point(p, x);
        jet.eval(x, values, scratch);
        MetricPoint mp = metric_point(n, 2, values);
        m = std::max(m, max_abs(riemann_tensor(n, mp.gamma, mp.dgamma)));
      }
      partial[c] = m;
    }
  });
  double m = 0.0;
  for (double v : partial) m = std::max(m, v);
  return m;
}

double riemann_max(const MetricField& g, const Chart& chart) {
  if (!g.has_lower()) return riemann_max_numeric(g, chart);
  int n = g.dim();
  auto un = static_cast<std::size_t>(n);
  std::vector<Expr> gamma = christoffel(g);
  std::vector<Expr> outs = gamma;
  outs.reserve(gamma.size() * (1 + un));
  for (int l = 0; l < n; ++l) {
    for (const auto& e : gamma) outs.push_back(e.diff(l));
  }
  ExprProgram program(outs);
  std::size_t nnn = un * un * un;
  return grid_reduce(chart, program, [&](std::span<const double> v, std::size_t) {
    return max_abs(riemann_tensor(n, v.subspan(0, nnn), v.subspan(nnn)));
  });
}

FlatnessVerdict flatness(const MetricField& g, const Chart& chart) {
  FlatnessVerdict v;
  v.riemann = riemann_max(g, chart);
  v.scale = 1.0 + grid_max_abs(g.upper(), chart);
  v.flat = v.riemann <= 1e-8 * v.scale;
  return v;
}

}  // namespace pencil
