#include "pencil/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "pencil/errors.hpp"

namespace pencil {

Chart::Chart(std::vector<double> lo, std::vector<double> hi, std::vector<int> m)
    : lo_(std::move(lo)), hi_(std::move(hi)), m_(std::move(m)) {
  if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != m_.size()) {
    throw ConfigError("chart: box bounds and sample counts must have the same nonzero length");
  }
  if (lo_.size() > 6) throw ConfigError("chart: dimension above 6");
  stride_.assign(lo_.size(), 1);
  double total = 1.0;
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    if (!(hi_[k] > lo_[k]) || !std::isfinite(lo_[k]) || !std::isfinite(hi_[k])) {
      throw ConfigError("chart: interval " + std::to_string(k + 1) + " is degenerate");
    }
    if (m_[k] < 2) throw ConfigError("chart: axis " + std::to_string(k + 1) + " needs >= 2 samples");
    total *= m_[k];
  }
  if (total > 1e7) throw ConfigError("chart: more than 10^7 grid points");
  for (std::size_t k = lo_.size() - 1; k > 0; --k) {
    stride_[k - 1] = stride_[k] * static_cast<std::size_t>(m_[k]);
  }
  size_ = static_cast<std::size_t>(total);
}

Chart Chart::cube(int n, double lo, double hi, int m) {
  auto un = static_cast<std::size_t>(n);
  return Chart(std::vector<double>(un, lo), std::vector<double>(un, hi), std::vector<int>(un, m));
}

void Chart::point(std::size_t flat, std::span<double> x) const {
  for (int k = 0; k < dim(); ++k) x[static_cast<std::size_t>(k)] = coord(k, index_of(flat, k));
}

std::vector<double> Chart::point(std::size_t flat) const {
  std::vector<double> x(static_cast<std::size_t>(dim()));
  point(flat, x);
  return x;
}

std::size_t Chart::flat(std::span<const int> index) const {
  std::size_t f = 0;
  for (int k = 0; k < dim(); ++k) f += stride(k) * static_cast<std::size_t>(index[static_cast<std::size_t>(k)]);
  return f;
}

bool Chart::on_boundary(std::size_t flat) const {
  for (int k = 0; k < dim(); ++k) {
    int i = index_of(flat, k);
    if (i == 0 || i == count(k) - 1) return true;
  }
  return false;
}

void Chart::require_samples(int m_min, const char* what) const {
  for (int k = 0; k < dim(); ++k) {
    if (count(k) < m_min) {
      throw ConfigError(std::string(what) + ": axis " + std::to_string(k + 1) + " has " +
                        std::to_string(count(k)) + " samples, need at least " +
                        std::to_string(m_min));
    }
  }
}

double fd_first_1d(const double* f, std::size_t s, int m, int i, double h) {
  auto at = [&](int j) { return f[static_cast<std::size_t>(j) * s]; };
  if (m < 5) throw PreconditionError("4th-order differences need at least 5 samples per axis");
  if (i >= 2 && i <= m - 3) {
    return (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
  }
  if (i == 0) {
    return (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
  }
  if (i == 1) {
    return (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
  }
  if (i == m - 1) {
    return (25.0 * at(m - 1) - 48.0 * at(m - 2) + 36.0 * at(m - 3) - 16.0 * at(m - 4) +
            3.0 * at(m - 5)) / (12.0 * h);
  }
  return (3.0 * at(m - 1) + 10.0 * at(m - 2) - 18.0 * at(m - 3) + 6.0 * at(m - 4) - at(m - 5)) /
         (12.0 * h);
}

double fd_first(const Chart& chart, std::span<const double> f, int axis, std::size_t flat) {
  int i = chart.index_of(flat, axis);
  std::size_t s = chart.stride(axis);
  const double* line = f.data() + flat - static_cast<std::size_t>(i) * s;
  return fd_first_1d(line, s, chart.count(axis), i, chart.step(axis));
}

Field fd_first(const Chart& chart, std::span<const double> f, int axis) {
  Field out(chart.size());
  parallel_chunks(chart.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) out[p] = fd_first(chart, f, axis, p);
  });
  return out;
}

double midpoint_cubic(const double* f, std::size_t s, int m, int i) {
  auto at = [&](int j) { return f[static_cast<std::size_t>(j) * s]; };
  if (m == 2) return 0.5 * (at(0) + at(1));
  if (m == 3) {
    // quadratic through all three nodes
    if (i == 0) return 0.375 * at(0) + 0.75 * at(1) - 0.125 * at(2);
    return -0.125 * at(0) + 0.75 * at(1) + 0.375 * at(2);
  }
  if (i >= 1 && i <= m - 3) {
    return (-at(i - 1) + 9.0 * at(i) + 9.0 * at(i + 1) - at(i + 2)) / 16.0;
  }
  if (i == 0) return 0.3125 * at(0) + 0.9375 * at(1) - 0.3125 * at(2) + 0.0625 * at(3);
  return 0.3125 * at(m - 1) + 0.9375 * at(m - 2) - 0.3125 * at(m - 3) + 0.0625 * at(m - 4);
}

int worker_count() {
  const char* env = std::getenv("PENCIL_LAB_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<int>(std::min(v, 64L));
}

void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
  auto workers = static_cast<std::size_t>(worker_count());
  if (workers <= 1 || count <= 1) {
    body(0, count);
    return;
  }
  workers = std::min(workers, count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(count, b + chunk);
    pool.emplace_back([&, w, b, e] {
      try {
        if (b < e) body(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

double parallel_max(std::size_t count, const std::function<double(std::size_t)>& f) {
  auto workers = static_cast<std::size_t>(std::max(1, worker_count()));
  std::size_t chunk = (count + workers - 1) / std::max<std::size_t>(workers, 1);
  std::size_t chunks = chunk ? (count + chunk - 1) / chunk : 0;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(chunks, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      double m = 0.0;
      for (std::size_t i = c * chunk; i < std::min(count, (c + 1) * chunk); ++i) {
        double v = f(i);
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

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace pencil
