#pragma once

#include <span>
#include <vector>

#include "pencil/expr.hpp"
#include "pencil/grid.hpp"

namespace pencil {

// Index helpers for dense tensors stored row-major.
constexpr std::size_t idx2(int n, int i, int j) {
  return static_cast<std::size_t>(i * n + j);
}
constexpr std::size_t idx3(int n, int i, int j, int k) {
  return static_cast<std::size_t>((i * n + j) * n + k);
}
constexpr std::size_t idx4(int n, int i, int j, int k, int l) {
  return static_cast<std::size_t>(((i * n + j) * n + k) * n + l);
}

// Symmetric metric with contravariant entries g^{ij} and, when it can be
// formed symbolically, the covariant inverse g_{ij}. The inverse is built by
// adjugate for n <= 3 and entrywise for diagonal metrics; for a general
// metric with n >= 4 it is left empty and numeric routes invert per point.
class MetricField {
 public:
  static MetricField from_contravariant(std::vector<Expr> upper, int n);
  static MetricField from_covariant(std::vector<Expr> lower, int n);
  static MetricField diagonal_contravariant(std::span<const Expr> entries);

  int dim() const { return n_; }
  bool is_diagonal() const { return diagonal_; }
  bool has_lower() const { return !lower_.empty(); }
  const Expr& up(int i, int j) const { return upper_[idx2(n_, i, j)]; }
  const Expr& low(int i, int j) const;
  std::span<const Expr> upper() const { return upper_; }
  std::span<const Expr> lower() const;

  // Checks det g^{ij} != 0 at every grid node and, when g_{ij} is symbolic,
  // that g^{is} g_{sj} = delta to 1e-10. Throws DomainError otherwise.
  void validate(const Chart& chart) const;

 private:
  MetricField(int n, std::vector<Expr> upper, std::vector<Expr> lower, bool diagonal)
      : n_(n), upper_(std::move(upper)), lower_(std::move(lower)), diagonal_(diagonal) {}
  int n_ = 0;
  std::vector<Expr> upper_;
  std::vector<Expr> lower_;
  bool diagonal_ = false;
};

// Symbolic inverse of an n x n matrix for n <= 3 (adjugate over determinant).
std::vector<Expr> symbolic_inverse(std::span<const Expr> m, int n);
Expr symbolic_determinant(std::span<const Expr> m, int n);

// Gamma^i_{jk} at [idx3(n,i,j,k)]; symmetric in (j,k) by construction.
std::vector<Expr> christoffel(const MetricField& g);

enum class Valence { Mixed, Upper, Lower };

// nabla_k T^i_j (Mixed), nabla_k T^{ij} (Upper) or nabla_k T_{ij} (Lower),
// stored at [idx3(n,k,i,j)].
std::vector<Expr> covariant_derivative(std::span<const Expr> t, Valence valence,
                                       std::span<const Expr> gamma, int n);

// nabla^i = g^{is} nabla_s applied to the output of covariant_derivative.
std::vector<Expr> raise_derivative_index(std::span<const Expr> dt, const MetricField& g);

// N^i_{jk} at [idx3(n,i,j,k)], antisymmetric in (j,k) by construction.
std::vector<Expr> nijenhuis(std::span<const Expr> r, int n);
// The same expression with partial derivatives replaced by nabla of the given
// torsion-free connection.
std::vector<Expr> nijenhuis(std::span<const Expr> r, int n, std::span<const Expr> gamma);

// max over grid nodes and entries of |e|.
double grid_max_abs(std::span<const Expr> exprs, const Chart& chart);
// max over grid nodes of |e| for every expression separately.
std::vector<double> grid_max_abs_each(std::span<const Expr> exprs, const Chart& chart);

// Values and partial derivatives up to second order of a list of
// expressions at one point. For c in [0, count): value at [c], d_a at
// [count*(1+a) + c], d_a d_b at [count*(1+n+a*n+b) + c].
class JetProgram {
 public:
  JetProgram(std::span<const Expr> fields, int n, int order);
  int dim() const { return n_; }
  int count() const { return count_; }
  int order() const { return order_; }
  std::size_t width() const;
  void eval(std::span<const double> point, std::span<double> out, std::vector<double>& scratch) const;

 private:
  int n_, count_, order_;
  ExprProgram program_;
};

// Levi-Civita data of a metric at one point, computed numerically from the
// second-order jet of g^{ij}.
struct MetricPoint {
  int n = 0;
  std::vector<double> gU, gL;      // [idx2]
  std::vector<double> dgU, dgL;    // d_a g at [idx3(n,a,i,j)]
  std::vector<double> ddgU, ddgL;  // d_a d_b g at [idx4(n,a,b,i,j)]; order-2 jets only
  std::vector<double> gamma;       // Gamma^i_{jk} at [idx3(n,i,j,k)]
  std::vector<double> dgamma;      // d_l Gamma^i_{jk} at [idx4(n,l,i,j,k)]; order-2 jets only
  std::vector<double> b;           // b^{ij}_k = -g^{is} Gamma^j_{sk} at [idx3(n,i,j,k)]
  std::vector<double> db;          // d_l b^{ij}_k at [idx4(n,l,i,j,k)]; order-2 jets only

  double riemann(int i, int j, int k, int l) const;
};

// `jet` has the JetProgram layout for the n*n entries of g^{ij}.
MetricPoint metric_point(int n, int order, std::span<const double> jet);

// R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{ks}Gamma^s_{lj}
// - Gamma^i_{ls}Gamma^s_{kj}, at [idx4(n,i,j,k,l)].
std::vector<double> riemann_tensor(int n, std::span<const double> gamma,
                                   std::span<const double> dgamma);

// Max |R^i_{jkl}| over the grid. Uses symbolic Christoffel symbols when the
// covariant metric is symbolic and the numeric jet route otherwise.
double riemann_max(const MetricField& g, const Chart& chart);
// Always the jet route; independent of christoffel().
double riemann_max_numeric(const MetricField& g, const Chart& chart);

struct FlatnessVerdict {
  double riemann = 0.0;
  double scale = 1.0;  // 1 + max |g^{ij}| on the grid
  bool flat = false;
};
FlatnessVerdict flatness(const MetricField& g, const Chart& chart);

}  // namespace pencil
