#include "pencil/goursat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

class Marcher {
 public:
  Marcher(const GoursatProblem& p, const Chart& chart, std::vector<Field>& fields)
      : p_(p), chart_(chart), fields_(fields), n_(chart.dim()) {
    vals_.resize(static_cast<std::size_t>(p.unknowns) + p.aux.size());
    x_.resize(static_cast<std::size_t>(n_));
  }

  // Re-integrates unknown u everywhere from its free line.
  void sweep_unknown(int u, std::span<const int> order) {
    int j = p_.free_axis[static_cast<std::size_t>(u)];
    Field& f = fields_[static_cast<std::size_t>(u)];
    for (std::size_t q = 0; q < chart_.size(); ++q) {
      if (!on_sets(q, std::vector<int>{j})) continue;
      chart_.point(q, x_);
      f[q] = p_.line_value(u, x_);
    }
    std::vector<int> done{j};
    for (int a : order) {
      if (a == j) continue;
      for (std::size_t q = 0; q < chart_.size(); ++q) {
        if (chart_.index_of(q, a) != 0 || !on_sets(q, done)) continue;
        march(u, a, q);
      }
      done.push_back(a);
    }
  }

 private:
  // true when every axis outside `axes` has index 0 at q
  bool on_sets(std::size_t q, const std::vector<int>& axes) const {
    for (int k = 0; k < n_; ++k) {
      if (std::find(axes.begin(), axes.end(), k) != axes.end()) continue;
      if (chart_.index_of(q, k) != 0) return false;
    }
    return true;
  }

  const Field& source(std::size_t v) const {
    auto nu = static_cast<std::size_t>(p_.unknowns);
    return v < nu ? fields_[v] : *p_.aux[v - nu];
  }

  void load(std::size_t start, std::size_t stride, int m, int i, bool mid) {
    for (std::size_t v = 0; v < vals_.size(); ++v) {
      const double* line = source(v).data() + start;
      vals_[v] = mid ? midpoint_cubic(line, stride, m, i) : line[static_cast<std::size_t>(i) * stride];
    }
  }

  double f(int u, int a, double state) {
    vals_[static_cast<std::size_t>(u)] = state;
    return p_.rhs(u, a, x_, vals_);
  }

  void march(int u, int a, std::size_t start) {
    std::size_t s = chart_.stride(a);
    int m = chart_.count(a);
    double h = chart_.step(a);
    Field& out = fields_[static_cast<std::size_t>(u)];
    auto ua = static_cast<std::size_t>(a);
    chart_.point(start, x_);
    double base = x_[ua];
    double y = out[start];
    for (int i = 0; i + 1 < m; ++i) {
      x_[ua] = base + i * h;
      load(start, s, m, i, false);
      double k1 = f(u, a, y);
      x_[ua] = base + (i + 0.5) * h;
      load(start, s, m, i, true);
      double k2 = f(u, a, y + 0.5 * h * k1);
      double k3 = f(u, a, y + 0.5 * h * k2);
      x_[ua] = base + (i + 1) * h;
      load(start, s, m, i + 1, false);
      double k4 = f(u, a, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(y) || std::abs(y) > p_.blowup) {
        throw NumericalFailure("march blew up (|value| > " + std::to_string(p_.blowup) + ") along axis " +
                               std::to_string(a + 1));
      }
      out[start + static_cast<std::size_t>(i + 1) * s] = y;
    }
  }

  const GoursatProblem& p_;
  const Chart& chart_;
  std::vector<Field>& fields_;
  int n_;
  std::vector<double> vals_, x_;
};

}  // namespace

GoursatSolution solve_goursat(const GoursatProblem& problem, const Chart& chart) {
  int n = chart.dim();
  if (static_cast<int>(problem.free_axis.size()) != problem.unknowns) {
    throw std::invalid_argument("free_axis needs one entry per unknown");
  }
  for (int a : problem.free_axis) {
    if (a < 0 || a >= n) throw std::invalid_argument("free axis out of range");
  }
  std::vector<int> order = problem.axis_order;
  if (order.empty()) {
    for (int k = 0; k < n; ++k) order.push_back(k);
  }
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < n; ++k) {
      if (static_cast<int>(sorted.size()) != n || sorted[static_cast<std::size_t>(k)] != k) {
        throw ConfigError("axis order must be a permutation of the axes");
      }
    }
  }
  for (const Field* f : problem.aux) {
    if (f->size() != chart.size()) throw std::invalid_argument("aux field does not match the chart");
  }
  chart.require_samples(3, "march interpolation");

  GoursatSolution sol;
  sol.fields.assign(static_cast<std::size_t>(problem.unknowns), Field(chart.size(), 0.0));
  // start from each line value extended as a constant across the other axes
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int u = 0; u < problem.unknowns; ++u) {
    int j = problem.free_axis[static_cast<std::size_t>(u)];
    for (std::size_t q = 0; q < chart.size(); ++q) {
      chart.point(q, x);
      for (int k = 0; k < n; ++k) {
        if (k != j) x[static_cast<std::size_t>(k)] = chart.lo(k);
      }
      sol.fields[static_cast<std::size_t>(u)][q] = problem.line_value(u, x);
    }
  }

  Marcher marcher(problem, chart, sol.fields);
  std::vector<Field> previous;
  for (int sweep = 1; sweep <= problem.max_sweeps; ++sweep) {
    previous = sol.fields;
    for (int u = 0; u < problem.unknowns; ++u) marcher.sweep_unknown(u, order);
    double change = 0.0, size = 0.0;
    for (std::size_t u = 0; u < sol.fields.size(); ++u) {
      change = std::max(change, max_abs_diff(sol.fields[u], previous[u]));
      size = std::max(size, max_abs(sol.fields[u]));
    }
    sol.sweeps = sweep;
    sol.last_change = change;
    if (change <= problem.tolerance * (1.0 + size)) return sol;
  }
  throw NumericalFailure("sweeps did not converge after " + std::to_string(problem.max_sweeps) +
                         " iterations (last change " + std::to_string(sol.last_change) + ")");
}

}  // namespace pencil
