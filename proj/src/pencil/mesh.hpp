#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/grid.hpp"

namespace pencil {

using Vec3 = std::array<double, 3>;

// A parametrized surface in E^3 sampled on a 2-D chart.
struct SurfaceSamples {
  Chart chart;
  std::vector<Vec3> r;
  std::vector<Vec3> normal;
};

// Principal curvatures from finite-difference fundamental forms:
// I_ab = r_a . r_b, II_ab = -r_a . n_b (symmetrized), eigenvalues of
// I^{-1} II negated so that dn = k dr along a curvature line. Eigenpairs are
// assigned to the coordinate direction they are closest to.
struct ShapeOperatorField {
  Field k1, k2;                  // along the first and second parameter
  Field misalignment;            // radians between eigen and coordinate directions
  std::vector<char> excluded;    // umbilic vertices (eigenvalue gap below the guard)
  std::size_t excluded_count = 0;
};
ShapeOperatorField mesh_shape_operator(const SurfaceSamples& s, double umbilic_gap = 1e-6);

// Vertices then two triangles per grid quad, each counterclockwise as seen
// from the side the normals point to. `header` lines are written as comments.
std::string obj_text(const SurfaceSamples& s, std::string_view header);

// Symmetric Hausdorff distance after the best orthogonal (rotation or
// reflection) alignment of the centred point sets.
double procrustes_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);

}  // namespace pencil
