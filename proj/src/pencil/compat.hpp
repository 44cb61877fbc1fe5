#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pencil/report.hpp"
#include "pencil/tensor.hpp"

namespace pencil {

// A = g^{ij} d/dx + b^{ij}_k u^k_x. An empty `b` stands for the Levi-Civita
// coefficients of g, which are then evaluated numerically per point.
struct HamiltonianOperator {
  MetricField g;
  std::vector<Expr> b;  // b^{ij}_k at [idx3(n,i,j,k)]
  int dim() const { return g.dim(); }
};

// b^{ij}_k = -g^{is} Gamma^j_{sk} as expressions.
HamiltonianOperator levi_civita_operator(const MetricField& g);

// r^i_j = gt^{is} g_{sj} with both metrics attached.
struct PencilOperator {
  MetricField g;
  MetricField gt;
  std::vector<Expr> r;  // [idx2]; empty when g has no symbolic inverse
  int dim() const { return g.dim(); }
};

PencilOperator pencil_operator(const MetricField& g, const MetricField& gt);

// Coefficients from r via 2 bt^{ij}_k = nabla^i r^j_k - nabla^j r^i_k
// + nabla_k r^{ij} + 2 b^{sj}_k r^i_s, as expressions.
std::vector<Expr> btilde_from_r(const PencilOperator& p);

struct CompatOptions {
  Thresholds thresholds;
  std::vector<double> lambdas{0.0, 0.75, 1.5, 2.25, 3.0};
  double pole_det = 1e-8;
  double spectrum_gap = 1e-6;
};

// Rows: hamiltonian_metric_condition, hamiltonian_jacobi_condition,
// b_symmetric_part, b_metric_symmetry.
ComplianceReport check_hamiltonian(const HamiltonianOperator& a, const Chart& chart,
                                   const Thresholds& t = {});

// Rows: nijenhuis, second_covariant_condition, metric_flatness,
// tilde_metric_flatness, pencil_symmetry, min_eigenvalue_gap.
ComplianceReport check_theorem1(const PencilOperator& p, const Chart& chart,
                                const CompatOptions& opt = {});

// Rows: pencil_first_order, pencil_second_order, per-lambda sweep rows and
// the Hamiltonian rows of both operators.
ComplianceReport check_pencil(const HamiltonianOperator& a, const HamiltonianOperator& at,
                              const Chart& chart, const CompatOptions& opt = {});

// Rows: btilde_symmetric_part, btilde_r_symmetry, bracket_form,
// connection_terms_cancel, bracket_skew, btilde_levi_civita_match.
ComplianceReport verify_appendix(const PencilOperator& p, const Chart& chart,
                                 const CompatOptions& opt = {});

// Smallest pairwise distance between eigenvalues of r over the grid.
double min_eigenvalue_gap(const PencilOperator& p, const Chart& chart);

}  // namespace pencil
