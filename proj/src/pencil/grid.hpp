#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pencil {

// Rectangular box in R^n sampled on a uniform tensor grid. Flat indices are
// row-major with the last axis fastest.
class Chart {
 public:
  Chart() = default;
  Chart(std::vector<double> lo, std::vector<double> hi, std::vector<int> m);
  static Chart cube(int n, double lo, double hi, int m);

  int dim() const { return static_cast<int>(lo_.size()); }
  double lo(int k) const { return lo_[static_cast<std::size_t>(k)]; }
  double hi(int k) const { return hi_[static_cast<std::size_t>(k)]; }
  int count(int k) const { return m_[static_cast<std::size_t>(k)]; }
  double step(int k) const { return (hi(k) - lo(k)) / (count(k) - 1); }
  std::size_t stride(int k) const { return stride_[static_cast<std::size_t>(k)]; }
  std::size_t size() const { return size_; }

  double coord(int k, int index) const { return lo(k) + index * step(k); }
  int index_of(std::size_t flat, int k) const {
    return static_cast<int>((flat / stride(k)) % static_cast<std::size_t>(count(k)));
  }
  void point(std::size_t flat, std::span<double> x) const;
  std::vector<double> point(std::size_t flat) const;
  std::size_t flat(std::span<const int> index) const;
  bool on_boundary(std::size_t flat) const;

  // Throws ConfigError unless every axis has at least `m_min` samples.
  void require_samples(int m_min, const char* what) const;

 private:
  std::vector<double> lo_, hi_;
  std::vector<int> m_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

using Field = std::vector<double>;

// 4th-order first derivative along `axis` at grid node `flat`; central in
// the interior, one-sided within two nodes of a face. Needs m >= 5.
double fd_first(const Chart& chart, std::span<const double> f, int axis, std::size_t flat);
Field fd_first(const Chart& chart, std::span<const double> f, int axis);

// Same stencils on a strided 1-D sequence of m samples with spacing h.
double fd_first_1d(const double* f, std::size_t stride, int m, int i, double h);

// Cubic Lagrange value halfway between nodes i and i+1 of a strided line.
double midpoint_cubic(const double* f, std::size_t stride, int m, int i);

// Worker count from PENCIL_LAB_THREADS (default 1, clamped to [1, 64]).
int worker_count();

// Runs body(begin, end) over contiguous chunks of [0, count).
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

// max over i of f(i); chunk maxima are combined in chunk order so the result
// does not depend on scheduling.
double parallel_max(std::size_t count, const std::function<double(std::size_t)>& f);

double max_abs(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace pencil
