#pragma once

// Independent numeric references used by several unit suites. They share no
// code with the library beyond evaluating expressions at points.

#include <cmath>
#include <functional>
#include <vector>

#include "pencil/expr.hpp"

namespace oracle {

using ScalarFn = std::function<double(const std::vector<double>&)>;

inline ScalarFn fn(const pencil::Expr& e) {
  return [e](const std::vector<double>& x) { return e.eval(x); };
}

// 6th-order central difference.
inline double partial(const ScalarFn& f, std::vector<double> x, int axis, double h = 1e-3) {
  auto at = [&](double d) {
    auto y = x;
    y[static_cast<std::size_t>(axis)] += d;
    return f(y);
  };
  return (at(3 * h) - 9 * at(2 * h) + 45 * at(h) - 45 * at(-h) + 9 * at(-2 * h) - at(-3 * h)) /
         (60 * h);
}

inline std::vector<double> invert(const std::vector<double>& m, int n) {
  // Gauss-Jordan with partial pivoting
  std::vector<double> a = m, inv(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r * n + c)]) > std::abs(a[static_cast<std::size_t>(p * n + c)])) p = r;
    }
    for (int k = 0; k < n; ++k) {
      std::swap(a[static_cast<std::size_t>(c * n + k)], a[static_cast<std::size_t>(p * n + k)]);
      std::swap(inv[static_cast<std::size_t>(c * n + k)], inv[static_cast<std::size_t>(p * n + k)]);
    }
    double d = a[static_cast<std::size_t>(c * n + c)];
    for (int k = 0; k < n; ++k) {
      a[static_cast<std::size_t>(c * n + k)] /= d;
      inv[static_cast<std::size_t>(c * n + k)] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[static_cast<std::size_t>(r * n + c)];
      for (int k = 0; k < n; ++k) {
        a[static_cast<std::size_t>(r * n + k)] -= f * a[static_cast<std::size_t>(c * n + k)];
        inv[static_cast<std::size_t>(r * n + k)] -= f * inv[static_cast<std::size_t>(c * n + k)];
      }
    }
  }
  return inv;
}

// Contravariant metric entries as functions.
struct Metric {
  int n;
  std::vector<ScalarFn> upper;

  std::vector<double> up_at(const std::vector<double>& x) const {
    std::vector<double> g(upper.size());
    for (std::size_t i = 0; i < upper.size(); ++i) g[i] = upper[i](x);
    return g;
  }
  std::vector<double> low_at(const std::vector<double>& x) const { return invert(up_at(x), n); }

  // Levi-Civita symbols by finite differences of the inverted metric.
  double christoffel(const std::vector<double>& x, int i, int j, int k) const {
    auto low = [&](int a, int b) {
      return ScalarFn([this, a, b](const std::vector<double>& y) {
        return low_at(y)[static_cast<std::size_t>(a * n + b)];
      });
    };
    auto gu = up_at(x);
    double v = 0.0;
    for (int s = 0; s < n; ++s) {
      double c = partial(low(s, k), x, j) + partial(low(s, j), x, k) - partial(low(j, k), x, s);
      v += gu[static_cast<std::size_t>(i * n + s)] * c;
    }
    return 0.5 * v;
  }

  // Riemann tensor with d Gamma by nested differences.
  double riemann(const std::vector<double>& x, int i, int j, int k, int l) const {
    auto G = [&](int a, int b, int c) {
      return ScalarFn([this, a, b, c](const std::vector<double>& y) { return christoffel(y, a, b, c); });
    };
    double v = partial(G(i, l, j), x, k, 1e-2) - partial(G(i, k, j), x, l, 1e-2);
    for (int s = 0; s < n; ++s) {
      v += christoffel(x, i, k, s) * christoffel(x, s, l, j) - christoffel(x, i, l, s) * christoffel(x, s, k, j);
    }
    return v;
  }
};

}  // namespace oracle
