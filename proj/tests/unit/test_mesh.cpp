#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "pencil/errors.hpp"
#include "pencil/mesh.hpp"

using namespace pencil;

namespace {

// Ellipsoid-free test surface: a torus patch with known principal curvatures.
SurfaceSamples torus(int m, double R, double a) {
  SurfaceSamples s{Chart({0.2, 0.3}, {1.0, 1.1}, {m, m}), {}, {}};
  for (std::size_t q = 0; q < s.chart.size(); ++q) {
    auto x = s.chart.point(q);
    double u = x[0], v = x[1];
    Vec3 n{std::cos(u) * std::cos(v), std::cos(u) * std::sin(v), std::sin(u)};
    double rho = R + a * std::cos(u);
    s.r.push_back({rho * std::cos(v), rho * std::sin(v), a * std::sin(u)});
    s.normal.push_back(n);
  }
  return s;
}

}  // namespace

TEST_CASE("shape operator of a torus patch") {
  double R = 2.0, a = 0.5;
  auto s = torus(33, R, a);
  auto k = mesh_shape_operator(s);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t q = 0; q < s.chart.size(); ++q) {
    double u = s.chart.point(q)[0];
    // dn = k dr along u and v
    e1 = std::max(e1, std::abs(k.k1[q] - 1.0 / a));
    e2 = std::max(e2, std::abs(k.k2[q] - std::cos(u) / (R + a * std::cos(u))));
  }
  CHECK(e1 <= 1e-5);
  CHECK(e2 <= 1e-5);
  CHECK(max_abs(k.misalignment) <= 1e-4);
  CHECK(k.excluded_count == 0);
}

TEST_CASE("umbilic vertices are excluded") {
  SurfaceSamples s{Chart({0.3, 0.2}, {1.0, 1.0}, {9, 9}), {}, {}};
  for (std::size_t q = 0; q < s.chart.size(); ++q) {
    auto x = s.chart.point(q);
    Vec3 n{std::cos(x[0]) * std::cos(x[1]), std::cos(x[0]) * std::sin(x[1]), std::sin(x[0])};
    s.r.push_back({3 * n[0], 3 * n[1], 3 * n[2]});
    s.normal.push_back(n);
  }
  auto k = mesh_shape_operator(s, 1e-6);
  CHECK(k.excluded_count == s.chart.size());
  CHECK(k.k1[5] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("OBJ faces are counterclockwise seen from the normal side") {
  auto s = torus(5, 2.0, 0.5);
  std::string text = obj_text(s, "digest abc\nsecond line");
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3> v;
  int faces = 0, header = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) ++header;
    if (line.rfind("v ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      Vec3 p;
      ls >> p[0] >> p[1] >> p[2];
      v.push_back(p);
    }
    if (line.rfind("f ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      std::size_t a, b, c;
      ls >> a >> b >> c;
      Vec3 e1, e2;
      for (std::size_t d = 0; d < 3; ++d) {
        e1[d] = v[b - 1][d] - v[a - 1][d];
        e2[d] = v[c - 1][d] - v[a - 1][d];
      }
      CHECK(dot(cross(e1, e2), s.normal[a - 1]) > 0.0);
      ++faces;
    }
  }
  CHECK(header == 2);
  CHECK(v.size() == 25);
  CHECK(faces == 32);
  CHECK(v[7][0] == s.r[7][0]);
}

TEST_CASE("Procrustes-aligned Hausdorff distance") {
  auto s = torus(9, 2.0, 0.5);
  std::vector<Vec3> moved;
  double c = std::cos(0.7), sn = std::sin(0.7);
  for (const auto& p : s.r) moved.push_back({c * p[0] - sn * p[1] + 3.0, sn * p[0] + c * p[1] - 1.0, -p[2] + 0.5});
  CHECK(procrustes_hausdorff(s.r, moved) <= 1e-12);
  auto other = torus(9, 2.0, 0.6);
  CHECK(procrustes_hausdorff(s.r, other.r) >= 1e-2);
  CHECK_THROWS_AS(procrustes_hausdorff(s.r, {}), ConfigError);
}
