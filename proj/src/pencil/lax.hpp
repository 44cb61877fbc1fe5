#pragma once

#include <span>
#include <vector>

#include "pencil/diagonal.hpp"
#include "pencil/mesh.hpp"
#include "pencil/report.hpp"

namespace pencil {

// Linear system d_k F = A_k F on a grid with n x n matrices A_k, one per
// coordinate. Entry (a, b) of A_k is the field A[idx3(n,k,a,b)].
struct LinearConnection {
  int n = 0;
  std::vector<Field> A;
  int axes() const { return n == 0 ? 0 : static_cast<int>(A.size()) / (n * n); }
};

// The skew form with spectral parameter: (A_k)_{ik} = sqrt((l+eta_i)/(l+eta_k))
// beta_ik for i != k and (A_k)_{km} = -sqrt((l+eta_m)/(l+eta_k)) beta_mk.
struct LaxConnection : LinearConnection {
  double lambda = 0.0;
  std::vector<Expr> eta;
};

// Throws DomainError at a pole: min over the grid of l + eta_i <= 1e-8.
LaxConnection build_lax(const BetaGrids& beta, std::span<const Expr> eta, double lambda, const Chart& chart);
// The connection acting on psi before the gauge psi_i = phi_i / sqrt(l + eta_i).
LinearConnection build_lax_psi(const BetaGrids& beta, std::span<const Expr> eta, double lambda, const Chart& chart);

// Max over grid nodes and entries of A_k + A_k^T.
double skewness(const LinearConnection& L);

// Max of |d_i A_j - d_j A_i - [A_i, A_j]| over nodes, pairs and entries.
double zero_curvature_residual(const LinearConnection& L, const Chart& chart);

// States are n x c matrices per node, stored node-major.
std::vector<double> integrate_linear(const LinearConnection& L, std::span<const double> initial, int columns,
                                     const Chart& chart, std::span<const int> axis_order = {});
// Max |d_k F - A_k F| by finite differences.
double linear_residual(const LinearConnection& L, std::span<const double> F, int columns, const Chart& chart);

// phi_i = psi_i sqrt(l + eta_i) for an n x c state per node.
std::vector<double> gauge_psi_to_phi(std::span<const double> psi, int columns, std::span<const Expr> eta,
                                     double lambda, const Chart& chart);

struct FrameSolution {
  double lambda = 0.0;
  int n = 0;
  std::vector<double> phi;   // node-major; row i of each n x n block is phi_i
  std::vector<double> rvec;  // node-major n-vectors, zero at the corner
  double orthogonality_drift = 0.0;  // max |Phi Phi^T - I|
};

struct FrameOptions {
  std::vector<double> initial;  // n x n orthogonal, empty means identity
  std::vector<int> axis_order;
  double drift_abort = 1e-4;
};

// Integrates the frame together with d_i r = H_i phi_i / sqrt(l + eta_i).
// Throws NumericalFailure when the orthogonality drift exceeds drift_abort.
FrameSolution integrate_frame(const LaxConnection& L, const std::vector<Field>& H, const Chart& chart,
                              const FrameOptions& opt = {});

double frame_difference(const FrameSolution& a, const FrameSolution& b);

// max |(d_i r, d_j r) - delta_ij H_i^2 / (l + eta_i)|.
double induced_metric_residual(const FrameSolution& F, const LaxConnection& L, const std::vector<Field>& H,
                               const Chart& chart);
// max |d_j (H_i phi_i / s_i) - d_i (H_j phi_j / s_j)|, s_i = sqrt(l + eta_i).
double rvec_compatibility(const FrameSolution& F, const LaxConnection& L, const std::vector<Field>& H,
                          const Chart& chart);

// The coordinate hypersurface R^fixed = const through node `slice` of that axis.
struct Slice {
  int fixed = 0;
  int slice = 0;
  std::vector<int> axes;            // remaining axes in order
  Chart chart;                      // parameter chart of the slice
  std::vector<std::size_t> nodes;   // flat indices into the full chart
};
Slice make_slice(const Chart& chart, int fixed, int slice);

struct SliceCurvatures {
  double lambda = 0.0;
  double shift = 0.0;                // l + eta_fixed on the slice
  std::vector<Field> closed;         // k^i = beta_{fixed,i} / H_i sqrt(l + eta_fixed)
  std::vector<Field> weingarten;     // (d_i phi_fixed . d_i r) / |d_i r|^2
  double weingarten_residual = 0.0;  // max |weingarten - closed|
  std::vector<Field> mesh;           // shape-operator route; n = 3 only
  double misalignment = 0.0;         // max angle to coordinate directions; n = 3 only
  std::size_t umbilic_excluded = 0;
};

SliceCurvatures hypersurface_curvatures(const FrameSolution& F, const LaxConnection& L, const BetaGrids& beta,
                                        const std::vector<Field>& H, const Chart& chart, const Slice& s);

// Surface samples of the slice (n = 3): vertices rvec, normals phi_fixed.
SurfaceSamples slice_surface(const FrameSolution& F, const Slice& s);

// Rows closed_ratio_deviation, mesh_ratio_deviation (n = 3), weingarten_residual,
// principal_direction_misalignment. Throws PreconditionError for fewer than
// two entries.
ComplianceReport weingarten_scaling_report(std::span<const SliceCurvatures> family, const Thresholds& t);

}  // namespace pencil
