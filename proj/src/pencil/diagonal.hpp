#pragma once

#include <array>
#include <span>
#include <vector>

#include "pencil/expr.hpp"
#include "pencil/grid.hpp"
#include "pencil/report.hpp"
#include "pencil/tensor.hpp"

namespace pencil {

// Rotation coefficients on a grid: beta_ij at [idx2(n,i,j)], diagonal slots
// are zero fields.
using BetaGrids = std::vector<Field>;

struct LameData {
  std::vector<Expr> H;     // H_i = 1/sqrt(g^{ii})
  std::vector<Expr> beta;  // beta_ij = d_i H_j / H_i at [idx2], zero on the diagonal
};

// Throws DomainError unless g^{ii} > 0 at every node.
LameData lame_from_metric(const MetricField& g, const Chart& chart);

// Throws ConfigError unless eta_i references no coordinate other than R^i.
void validate_eta(std::span<const Expr> eta);

// Pointwise forms. dbeta[idx3(n,a,i,j)] = d_a beta_ij, deta[i] = eta_i'.
double f2_form(int n, int i, int j, std::span<const double> beta, std::span<const double> dbeta);
double f3_form(int n, int i, int j, std::span<const double> beta, std::span<const double> dbeta,
               std::span<const double> eta, std::span<const double> deta);
// Right-hand side of the resolved equation for d_i beta_ij.
double resolved_rhs(int n, int i, int j, std::span<const double> beta, std::span<const double> eta,
                    std::span<const double> deta, double guard = 1e-8);

struct FlatnessResiduals {
  double f1 = 0.0;  // d_k beta_ij - beta_ik beta_kj, distinct i, j, k; 0 when n < 3
  double f2 = 0.0;
};
FlatnessResiduals flatness_residuals(const BetaGrids& beta, const Chart& chart);
double pencil_residual_f3(const BetaGrids& beta, std::span<const Expr> eta, const Chart& chart);
// d_i beta_ij minus the resolved right-hand side.
double resolved_residual(const BetaGrids& beta, std::span<const Expr> eta, const Chart& chart);

struct DiagonalOptions {
  std::vector<int> axis_order;  // empty means 1..n
  double denominator_guard = 1e-8;
  double blowup = 1e6;
};

// boundary[idx2(n,i,j)] is beta_ij on the R^j line through the minimal
// corner, a function of R^j only.
BetaGrids solve_S(std::span<const Expr> eta, std::span<const Expr> boundary, const Chart& chart,
                  const DiagonalOptions& opt = {});

// Max |beta_ij - boundary_ij| on the R^j line through the corner.
double boundary_reproduction(const BetaGrids& beta, std::span<const Expr> boundary, const Chart& chart);

// max |beta_ij - beta_ji| over the grid; zero in the Egorov case.
double egorov_defect(const BetaGrids& beta, int n);

// Post-hoc residual rows: flatness_f1, flatness_f2, pencil_f3, resolved_system,
// boundary_reproduction, egorov_defect.
ComplianceReport diagonal_report(const BetaGrids& beta, std::span<const Expr> eta,
                                 std::span<const Expr> boundary, const Chart& chart, const Thresholds& t);

// Lame coefficients from d_l H_j = beta_lj H_l, with H_j given on its R^j line.
std::vector<Field> solve_lame(const BetaGrids& beta, std::span<const Expr> line, const Chart& chart);
// max |d_l H_j - beta_lj H_l| over l != j.
double lame_residual(const std::vector<Field>& H, const BetaGrids& beta, const Chart& chart);

struct ConservedP {
  std::vector<Field> P;           // P_i = sum_{k != i} (c_k - c_i) beta_ki^2
  double transverse_drift = 0.0;  // max over j != i of |d_j P_i|
};
ConservedP conserved_P(const BetaGrids& beta, std::span<const double> c, const Chart& chart);

// Needs c_1 < c_2 < c_3; throws PreconditionError otherwise.
std::array<double, 3> mu_constants(std::span<const double> c);

// beta from (p, q, r) by the trigonometric/hyperbolic parametrization with
// P = (1, 1, -1).
BetaGrids beta_from_pqr(const Field& p, const Field& q, const Field& r, std::span<const double> c);

struct S2Solution {
  Field p, q, r;
  int sweeps = 0;
};

// Integrates d1 q = cos p, d1 r = -sin p, d2 p = -cosh q, d2 r = sinh q,
// d3 p = cos r, d3 q = sin r with p, q, r held at the seed along their free
// lines (axes 1, 2, 3). Throws NumericalFailure when |q| exceeds 20.
S2Solution integrate_S2(std::array<double, 3> seed, const Chart& chart, std::vector<int> axis_order = {});

// Max over the six equations of |finite-difference derivative - rhs|.
double s2_consistency(const S2Solution& s, const Chart& chart);

// Residuals of the three Monge-Ampere equations; throws DomainError when
// |d1 q| or |d3 q| exceeds 1 by more than 1e-4 (difference error near the
// edge of the range is clamped).
std::array<double, 3> monge_ampere_residual(const Field& q, const Chart& chart);

}  // namespace pencil
