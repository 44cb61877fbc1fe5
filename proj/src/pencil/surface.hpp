#pragma once

#include <array>
#include <span>
#include <vector>

#include "pencil/expr.hpp"
#include "pencil/grid.hpp"
#include "pencil/lax.hpp"
#include "pencil/mesh.hpp"
#include "pencil/report.hpp"

namespace pencil {

// Flat diagonal metric g11 (dR1)^2 + g22 (dR2)^2 with eta_i in R^i, giving the
// third fundamental forms G_ii = g_ii / (l + eta_i) of a surface family.
struct SurfaceModel {
  Expr g11, g22;
  Expr eta1, eta2;
  Chart chart;
  std::vector<double> lambdas;
};

// Gaussian curvature of E (dR1)^2 + G (dR2)^2.
Expr gaussian_curvature(const Expr& E, const Expr& G);

// max |K(g)| over the grid.
double surface_flatness(const SurfaceModel& m);

// Max |K - 1| of g_ii / (l + eta_i) per lambda, from exact derivatives.
// Throws DomainError at a pole (l + eta_i <= 1e-8 somewhere on the grid).
std::vector<double> constant_curvature_check(const SurfaceModel& m);

struct SurfaceLame {
  Expr H1, H2, beta12, beta21;
};
SurfaceLame surface_lame(const SurfaceModel& m);

// Residuals of d1 H2 = b12 H1, d2 H1 = b21 H2, d1 b12 + d2 b21 = 0 and
// eta1 d1 b12 + eta2 d2 b21 + eta1' b12 / 2 + eta2' b21 / 2 + H1 H2 = 0.
std::array<double, 4> surface_system_residual(const Expr& H1, const Expr& H2, const Expr& b12, const Expr& b21,
                                              const Expr& eta1, const Expr& eta2, const Chart& chart);

// Radii of principal curvature k^1, k^2 along the coordinate lines.
struct CurvatureData {
  Field k1, k2;
  double pc_residual = 0.0;
  int sweeps = 0;
};

// max of |d2 k1 - (k2 - k1) d2 ln sqrt G11| and |d1 k2 - (k1 - k2) d1 ln sqrt G22|.
// Throws PreconditionError where |k1 - k2| < 1e-8.
double pc_residual(const Expr& G11, const Expr& G22, const Field& k1, const Field& k2, const Chart& chart);
double pc_residual(const Field& G11, const Field& G22, const Field& k1, const Field& k2, const Chart& chart);

// k1 is given on the R1-line R2 = lo and transported along R2, k2 on the
// R2-line R1 = lo and transported along R1. A boundary expression that
// references the transverse coordinate must satisfy its transport equation on
// its line to 1e-6; otherwise PreconditionError. An umbilic collision is a
// PreconditionError too.
CurvatureData solve_codazzi(const Expr& G11, const Expr& G22, const Expr& k1_line, const Expr& k2_line,
                            const Chart& chart);
// Grid form: line data hold count(0) values of k1 and count(1) values of k2.
CurvatureData solve_codazzi(const Field& G11, const Field& G22, std::span<const double> k1_line,
                            std::span<const double> k2_line, const Chart& chart);

// The 3 x 3 pair acting on the frame (e1, e2, n) of the Gauss map, and the
// 2 x 2 complex pair written as a real 4 x 4 connection.
LinearConnection surface_lax3(const SurfaceModel& m, double lambda);
LinearConnection surface_lax2(const SurfaceModel& m, double lambda);

struct LaxResiduals {
  double lambda = 0.0;
  double three = 0.0;
  double two = 0.0;
};
std::vector<LaxResiduals> surface_lax_residuals(const SurfaceModel& m);

struct FamilyMember {
  double lambda = 0.0;
  SurfaceSamples surface;            // normal = n, the third frame vector
  double orthogonality_drift = 0.0;  // max |Psi Psi^T - I|
  double rodrigues_closure = 0.0;    // max |d2 (k1 d1 n) - d1 (k2 d2 n)|
};

// Integrates the frame and d_i r = k^i d_i n from the minimal corner for every
// lambda. The normal is n; flipping it negates both radii. `radii` holds one
// entry shared by every lambda or one entry per lambda. Throws
// PreconditionError when d_i n vanishes ("Gauss map degenerate") or a radius
// vanishes, DomainError at a pole.
std::vector<FamilyMember> reconstruct_family(const SurfaceModel& m, std::span<const CurvatureData> radii);
std::vector<FamilyMember> reconstruct_family(const SurfaceModel& m, const CurvatureData& k);

// Radii transported with the third fundamental form of every lambda from the
// same line data.
std::vector<CurvatureData> solve_codazzi_family(const SurfaceModel& m, const Expr& k1_line, const Expr& k2_line);

// max |d_i n . d_i n - G_ii| with G for the member's lambda.
double third_form_residual(const FamilyMember& f, const SurfaceModel& m);

// Rows eigenvalue_spread, principal_direction_misalignment, excluded_vertices
// and, when radii are given, codazzi_curvature_agreement. Mesh eigenvalues
// are the reciprocal radii. Throws PreconditionError for fewer than two
// members or mismatched grids.
ComplianceReport weingarten_family_compare(std::span<const FamilyMember> family, const CurvatureData* radii = nullptr,
                                           double umbilic_gap = 1e-6);

}  // namespace pencil
