#include "pencil/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pencil/errors.hpp"
#include "pencil/format.hpp"

namespace pencil {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

namespace {

std::vector<Vec3> fd_vec(const Chart& c, const std::vector<Vec3>& v, int axis) {
  std::vector<Vec3> out(v.size());
  Field comp(v.size());
  for (int d = 0; d < 3; ++d) {
    for (std::size_t q = 0; q < v.size(); ++q) comp[q] = v[q][static_cast<std::size_t>(d)];
    Field g = fd_first(c, comp, axis);
    for (std::size_t q = 0; q < v.size(); ++q) out[q][static_cast<std::size_t>(d)] = g[q];
  }
  return out;
}

double angle_between(const Vec3& a, const Vec3& b) {
  double c = std::abs(dot(a, b)) / std::sqrt(dot(a, a) * dot(b, b));
  return std::acos(std::min(1.0, c));
}

}  // namespace

ShapeOperatorField mesh_shape_operator(const SurfaceSamples& s, double umbilic_gap) {
  if (s.chart.dim() != 2) throw ConfigError("surface samples need a 2-D parameter chart");
  s.chart.require_samples(5, "fourth-order differences");
  auto ra = fd_vec(s.chart, s.r, 0), rb = fd_vec(s.chart, s.r, 1);
  auto na = fd_vec(s.chart, s.normal, 0), nb = fd_vec(s.chart, s.normal, 1);
  std::size_t N = s.r.size();
  ShapeOperatorField out;
  out.k1.assign(N, 0.0);
  out.k2.assign(N, 0.0);
  out.misalignment.assign(N, 0.0);
  out.excluded.assign(N, 0);
  for (std::size_t q = 0; q < N; ++q) {
    Eigen::Matrix2d I, II;
    I << dot(ra[q], ra[q]), dot(ra[q], rb[q]), dot(rb[q], ra[q]), dot(rb[q], rb[q]);
    double off = -0.5 * (dot(ra[q], nb[q]) + dot(rb[q], na[q]));
    II << -dot(ra[q], na[q]), off, off, -dot(rb[q], nb[q]);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(II, I);
    if (es.info() != Eigen::Success) throw NumericalFailure("degenerate first fundamental form on the mesh");
    Eigen::Vector2d mu = es.eigenvalues();
    if (std::abs(mu(0) - mu(1)) < umbilic_gap) {
      out.excluded[q] = 1;
      ++out.excluded_count;
      out.k1[q] = out.k2[q] = -0.5 * (mu(0) + mu(1));
      continue;
    }
    Vec3 t[2];
    for (int e = 0; e < 2; ++e) {
      Eigen::Vector2d v = es.eigenvectors().col(e);
      for (std::size_t d = 0; d < 3; ++d) t[e][d] = v(0) * ra[q][d] + v(1) * rb[q][d];
    }
    // pair eigenvectors with coordinate directions by total angle
    double a0 = angle_between(t[0], ra[q]) + angle_between(t[1], rb[q]);
    double a1 = angle_between(t[1], ra[q]) + angle_between(t[0], rb[q]);
    int first = a0 <= a1 ? 0 : 1;
    out.k1[q] = -mu(first);
    out.k2[q] = -mu(1 - first);
    out.misalignment[q] = std::max(angle_between(t[first], ra[q]), angle_between(t[1 - first], rb[q]));
  }
  return out;
}

std::string obj_text(const SurfaceSamples& s, std::string_view header) {
  if (s.chart.dim() != 2) throw ConfigError("OBJ export needs a 2-D parameter chart");
  std::string out;
  std::size_t pos = 0;
  while (pos <= header.size() && !header.empty()) {
    auto nl = header.find('\n', pos);
    out += "# ";
    out += header.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    out += '\n';
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  for (const auto& v : s.r) {
    out += "v " + format_exact(v[0]) + ' ' + format_exact(v[1]) + ' ' + format_exact(v[2]) + '\n';
  }
  int m0 = s.chart.count(0), m1 = s.chart.count(1);
  auto id = [&](int a, int b) { return static_cast<std::size_t>(a) * static_cast<std::size_t>(m1) + static_cast<std::size_t>(b); };
  auto tri = [&](std::size_t a, std::size_t b, std::size_t c) {
    Vec3 e1, e2;
    for (std::size_t d = 0; d < 3; ++d) {
      e1[d] = s.r[b][d] - s.r[a][d];
      e2[d] = s.r[c][d] - s.r[a][d];
    }
    Vec3 nrm{0, 0, 0};
    for (std::size_t d = 0; d < 3; ++d) nrm[d] = s.normal[a][d] + s.normal[b][d] + s.normal[c][d];
    if (dot(cross(e1, e2), nrm) < 0) std::swap(b, c);
    out += "f " + std::to_string(a + 1) + ' ' + std::to_string(b + 1) + ' ' + std::to_string(c + 1) + '\n';
  };
  for (int a = 0; a + 1 < m0; ++a) {
    for (int b = 0; b + 1 < m1; ++b) {
      tri(id(a, b), id(a + 1, b), id(a + 1, b + 1));
      tri(id(a, b), id(a + 1, b + 1), id(a, b + 1));
    }
  }
  return out;
}

double procrustes_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || a.size() != b.size()) throw ConfigError("alignment needs two point sets of equal size");
  auto to_matrix = [](const std::vector<Vec3>& p) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p.size()), 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (int d = 0; d < 3; ++d) m(static_cast<Eigen::Index>(i), d) = p[i][static_cast<std::size_t>(d)];
    }
    m.rowwise() -= m.colwise().mean();
    return m;
  };
  Eigen::MatrixXd A = to_matrix(a), B = to_matrix(b);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(A.transpose() * B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  Eigen::MatrixXd Ar = A * R;
  auto directed = [](const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < Q.rows(); ++j) best = std::min(best, (P.row(i) - Q.row(j)).squaredNorm());
      h = std::max(h, best);
    }
    return std::sqrt(h);
  };
  return std::max(directed(Ar, B), directed(B, Ar));
}

}  // namespace pencil
