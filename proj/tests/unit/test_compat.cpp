#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pencil/compat.hpp"
#include "pencil/errors.hpp"

using namespace pencil;

namespace {

std::vector<Expr> parse_all(const std::vector<const char*>& entries, int n) {
  std::vector<Expr> e;
  for (const char* t : entries) e.push_back(parse_expr(t, n));
  return e;
}

MetricField upper(const std::vector<const char*>& entries, int n) {
  return MetricField::from_contravariant(parse_all(entries, n), n);
}

MetricField identity(int n) {
  std::vector<Expr> d(static_cast<std::size_t>(n), Expr(1.0));
  return MetricField::diagonal_contravariant(d);
}

MetricField diag(const std::vector<const char*>& entries) {
  int n = static_cast<int>(entries.size());
  auto e = parse_all(entries, n);
  return MetricField::diagonal_contravariant(e);
}

struct Pair {
  const char* name;
  MetricField g, gt;
  Chart chart;
};

std::vector<Pair> compatible_pairs() {
  std::vector<Pair> out;
  out.push_back({"diag2", identity(2), diag({"1+R1^2", "2+R2^2"}), Chart::cube(2, 0.0, 1.0, 9)});
  out.push_back({"diag3", identity(3), diag({"1+R1^2", "2.5+0.3*sin(R2)", "4+R3"}), Chart::cube(3, 0.0, 1.0, 5)});
  out.push_back({"shear",
                 upper({"1+4*R2^2", "-2*R2", "-2*R2", "1"}, 2),
                 upper({"1+(R1+R2^2)^2+4*R2^2*(6+R2)", "-2*R2*(6+R2)", "-2*R2*(6+R2)", "6+R2"}, 2),
                 Chart::cube(2, 0.0, 1.0, 9)});
  return out;
}

std::vector<Pair> violating_pairs() {
  std::vector<Pair> out;
  out.push_back({"swapped", identity(2), diag({"R2", "R1"}), Chart::cube(2, 1.0, 2.0, 9)});
  out.push_back({"polar", identity(2), diag({"1", "1/R1^2"}), Chart({1.5, 0.0}, {2.5, 1.0}, {9, 9})});
  out.push_back({"spherical", identity(3), diag({"1", "1/R1^2", "1/(R1^2*sin(R2)^2)"}),
                 Chart({1.5, 0.5, 0.0}, {2.5, 1.5, 1.0}, {5, 5, 5})});
  return out;
}

// Metric condition residual by finite differences of the metric.
double metric_condition_oracle(const MetricField& g, const std::vector<Expr>& b, const Chart& chart) {
  int n = g.dim();
  double m = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    auto x = chart.point(p);
    auto G = [&](int i, int j) { return g.up(i, j).eval(x); };
    auto dG = [&](int s, int i, int j) { return oracle::partial(oracle::fn(g.up(i, j)), x, s); };
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) {
            v += 2 * b[idx3(n, k, i, s)].eval(x) * G(s, j) - G(j, s) * dG(s, i, k) - G(k, s) * dG(s, i, j) +
                 G(i, s) * dG(s, k, j);
          }
          m = std::max(m, std::abs(v));
        }
      }
    }
  }
  return m;
}

// Jacobi condition residual by finite differences of b.
double jacobi_condition_oracle(const MetricField& g, const std::vector<Expr>& b, const Chart& chart) {
  int n = g.dim();
  double m = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    auto x = chart.point(p);
    auto G = [&](int i, int j) { return g.up(i, j).eval(x); };
    auto B = [&](int i, int j, int k) { return b[idx3(n, i, j, k)].eval(x); };
    auto dB = [&](int s, int i, int j, int k) { return oracle::partial(oracle::fn(b[idx3(n, i, j, k)]), x, s); };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          for (int q = 0; q < n; ++q) {
            double v = 0.0;
            for (int s = 0; s < n; ++s) {
              v += G(j, s) * dB(s, i, k, q) - G(i, s) * dB(s, j, k, q) + (B(i, j, s) - B(j, i, s)) * B(s, k, q) +
                   B(i, k, s) * B(j, s, q) - B(j, k, s) * B(i, s, q);
            }
            m = std::max(m, std::abs(v));
          }
        }
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("levi-civita coefficients") {
  auto g = diag({"R1", "R2"});
  auto b = levi_civita_operator(g).b;
  std::vector<double> x{0.7, 1.3};
  CHECK(b[idx3(2, 0, 0, 0)].eval(x) == doctest::Approx(0.5));
  CHECK(b[idx3(2, 1, 1, 1)].eval(x) == doctest::Approx(0.5));

  auto polar = diag({"1", "1/R1^2"});
  auto bp = levi_civita_operator(polar).b;
  // Christoffel oracle: b^{22}_1 = -g^{22} Gamma^2_{21}
  oracle::Metric om{2, {oracle::fn(polar.up(0, 0)), oracle::fn(polar.up(0, 1)), oracle::fn(polar.up(1, 0)),
                        oracle::fn(polar.up(1, 1))}};
  for (double r : {1.2, 2.0, 3.1}) {
    std::vector<double> y{r, 0.4};
    double expect = -polar.up(1, 1).eval(y) * om.christoffel(y, 1, 1, 0);
    CHECK(bp[idx3(2, 1, 1, 0)].eval(y) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(bp[idx3(2, 1, 1, 0)].eval(y) == doctest::Approx(-1.0 / (r * r * r)));
  }

  auto flat = identity(3);
  for (const auto& e : levi_civita_operator(flat).b) CHECK(e.is_zero());
}

TEST_CASE("hamiltonian checks") {
  Chart c = Chart::cube(2, 0.0, 1.0, 5);
  SUBCASE("constant metric with zero b") {
    HamiltonianOperator a{identity(2), std::vector<Expr>(8, Expr(0.0))};
    auto rep = check_hamiltonian(a, c);
    CHECK(rep.value("hamiltonian_metric_condition") == 0.0);
    CHECK(rep.value("hamiltonian_jacobi_condition") == 0.0);
    CHECK(rep.verdict() == Verdict::Pass);
  }
  SUBCASE("single wrong coefficient") {
    std::vector<Expr> b(8, Expr(0.0));
    b[idx3(2, 0, 1, 0)] = Expr(1.0);
    auto rep = check_hamiltonian(HamiltonianOperator{identity(2), b}, c);
    CHECK(rep.value("hamiltonian_metric_condition") == doctest::Approx(2.0));
    CHECK(rep.verdict() == Verdict::Fail);
  }
  SUBCASE("levi-civita of flat metrics") {
    for (const auto& p : violating_pairs()) {
      if (std::string(p.name) == "swapped") continue;
      auto sym = check_hamiltonian(levi_civita_operator(p.gt), p.chart);
      auto num = check_hamiltonian(HamiltonianOperator{p.gt, {}}, p.chart);
      CAPTURE(p.name);
      CHECK(sym.value("hamiltonian_metric_condition") <= 1e-9);
      CHECK(sym.value("hamiltonian_jacobi_condition") <= 1e-9);
      CHECK(num.value("hamiltonian_jacobi_condition") <= 1e-9);
      CHECK(sym.value("b_symmetric_part") <= 1e-10);
      CHECK(sym.value("b_metric_symmetry") <= 1e-10);
    }
  }
  SUBCASE("curved metric fails the jacobi condition") {
    auto sphere = diag({"1", "1/sin(R1)^2"});
    Chart s({0.5, 0.0}, {1.5, 1.0}, {5, 5});
    auto rep = check_hamiltonian(HamiltonianOperator{sphere, {}}, s);
    CHECK(rep.value("hamiltonian_metric_condition") <= 1e-10);
    CHECK(rep.at("hamiltonian_jacobi_condition").verdict == Verdict::Fail);
  }
}

TEST_CASE("hamiltonian residuals agree with finite differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> c(-0.5, 0.5);
  Chart chart = Chart::cube(2, 0.1, 0.9, 3);
  for (int trial = 0; trial < 4; ++trial) {
    auto g = upper({"2+R1*R2", "0.3*sin(R1)", "0.3*sin(R1)", "1.5+R2^2"}, 2);
    std::vector<Expr> b;
    for (int q = 0; q < 8; ++q) b.push_back(Expr(c(rng)) * Expr::coord(q % 2) + Expr(c(rng)) * cos(Expr::coord(1 - q % 2)));
    auto rep = check_hamiltonian(HamiltonianOperator{g, b}, chart);
    CHECK(rep.value("hamiltonian_metric_condition") ==
          doctest::Approx(metric_condition_oracle(g, b, chart)).epsilon(1e-8));
    CHECK(rep.value("hamiltonian_jacobi_condition") ==
          doctest::Approx(jacobi_condition_oracle(g, b, chart)).epsilon(1e-8));
  }
}

TEST_CASE("pencil operator") {
  std::vector<double> x{0.3, 0.8};
  auto same = pencil_operator(diag({"1+R1", "2"}), diag({"1+R1", "2"}));
  CHECK(same.r[idx2(2, 0, 0)].eval(x) == doctest::Approx(1.0));
  CHECK(same.r[idx2(2, 0, 1)].eval(x) == doctest::Approx(0.0));
  CHECK(same.r[idx2(2, 1, 1)].eval(x) == doctest::Approx(1.0));

  auto d = pencil_operator(identity(2), diag({"R1", "R2"}));
  CHECK(d.r[idx2(2, 0, 0)].eval(x) == doctest::Approx(0.3));
  CHECK(d.r[idx2(2, 1, 1)].eval(x) == doctest::Approx(0.8));

  auto full = pencil_operator(identity(2), upper({"2", "1", "1", "2"}, 2));
  std::vector<double> want{2, 1, 1, 2};
  for (std::size_t q = 0; q < 4; ++q) CHECK(full.r[q].eval(x) == doctest::Approx(want[q]));
}

TEST_CASE("coefficients from r") {
  std::vector<double> x{0.4, 0.9};
  auto constant = btilde_from_r(pencil_operator(identity(2), upper({"2", "1", "1", "3"}, 2)));
  for (const auto& e : constant) CHECK(e.eval(x) == 0.0);

  auto bt = btilde_from_r(pencil_operator(identity(2), diag({"R1", "R2"})));
  CHECK(bt[idx3(2, 0, 0, 0)].eval(x) == doctest::Approx(0.5));
  CHECK(bt[idx3(2, 0, 1, 1)].eval(x) == doctest::Approx(0.0));

  // agrees with the Levi-Civita coefficients of gt for compatible pairs
  for (const auto& p : compatible_pairs()) {
    CAPTURE(p.name);
    auto po = pencil_operator(p.g, p.gt);
    auto from_r = btilde_from_r(po);
    auto lc = levi_civita_operator(p.gt).b;
    std::vector<Expr> diff;
    for (std::size_t q = 0; q < lc.size(); ++q) diff.push_back(from_r[q] - lc[q]);
    CHECK(grid_max_abs(diff, p.chart) <= 1e-8);
    CHECK(verify_appendix(po, p.chart).value("btilde_levi_civita_match") <= 1e-8);
  }
}

TEST_CASE("compatibility conditions on the corpus") {
  for (const auto& p : compatible_pairs()) {
    CAPTURE(p.name);
    auto rep = check_theorem1(pencil_operator(p.g, p.gt), p.chart);
    CHECK(rep.value("nijenhuis") <= 1e-8);
    CHECK(rep.value("second_covariant_condition") <= 1e-8);
    CHECK(rep.value("metric_flatness") <= 1e-8);
    CHECK(rep.value("tilde_metric_flatness") <= 1e-8);
    CHECK(rep.value("pencil_symmetry") <= 1e-10);
    CHECK(rep.value("tilde_metric_from_r") <= 1e-10);
    CHECK(rep.verdict() == Verdict::Pass);
  }
  auto v = violating_pairs();
  auto swapped = check_theorem1(pencil_operator(v[0].g, v[0].gt), v[0].chart);
  CHECK(swapped.value("nijenhuis") >= 0.5);
  CHECK(swapped.verdict() == Verdict::Fail);
  for (std::size_t q = 1; q < v.size(); ++q) {
    CAPTURE(v[q].name);
    auto rep = check_theorem1(pencil_operator(v[q].g, v[q].gt), v[q].chart);
    CHECK(rep.value("metric_flatness") <= 1e-8);
    CHECK(rep.value("tilde_metric_flatness") <= 1e-8);
    CHECK(rep.value("nijenhuis") >= 1e-4);
    CHECK(rep.verdict() == Verdict::Fail);
  }
  auto scaled = check_theorem1(pencil_operator(diag({"1+R1^2", "2"}), diag({"3*(1+R1^2)", "6"})),
                               Chart::cube(2, 0.0, 1.0, 5));
  CHECK(scaled.value("nijenhuis") <= 1e-12);
  CHECK(scaled.value("second_covariant_condition") <= 1e-12);
}

TEST_CASE("second covariant condition is redundant at simple spectrum") {
  for (const auto& p : compatible_pairs()) {
    CAPTURE(p.name);
    auto po = pencil_operator(p.g, p.gt);
    auto rep = check_theorem1(po, p.chart);
    if (rep.value("min_eigenvalue_gap") > 1e-6 && rep.value("nijenhuis") <= 1e-8) {
      CHECK(rep.value("second_covariant_condition") <= 1e-7);
    }
  }
  // the first pair touches a double eigenvalue at (1, 0)
  auto p = compatible_pairs()[0];
  CHECK(min_eigenvalue_gap(pencil_operator(p.g, p.gt), p.chart) <= 1e-12);
  auto q = compatible_pairs()[1];
  CHECK(min_eigenvalue_gap(pencil_operator(q.g, q.gt), q.chart) > 1e-6);
}

TEST_CASE("pencil conditions") {
  for (const auto& p : compatible_pairs()) {
    CAPTURE(p.name);
    CompatOptions opt;
    opt.lambdas = {0.0, 1.0, 2.5};
    auto rep = check_pencil(HamiltonianOperator{p.g, {}}, HamiltonianOperator{p.gt, {}}, p.chart, opt);
    CHECK(rep.value("pencil_first_order") <= 1e-8);
    CHECK(rep.value("pencil_second_order") <= 1e-8);
    CHECK(rep.value("lambda_sweep_worst") <= 1e-8);
    CHECK(rep.lambdas.size() == 3);
    CHECK(rep.verdict() == Verdict::Pass);
  }
  for (const auto& p : violating_pairs()) {
    CAPTURE(p.name);
    auto rep = check_pencil(HamiltonianOperator{p.g, {}}, HamiltonianOperator{p.gt, {}}, p.chart);
    double worst = std::max(rep.value("pencil_first_order"), rep.value("pencil_second_order"));
    CHECK(worst >= 1e-4);
    CHECK(rep.verdict() == Verdict::Fail);
  }
  SUBCASE("operator with itself") {
    auto g = diag({"1+R1^2", "2+R2^2"});
    auto a = levi_civita_operator(g);
    auto rep = check_pencil(a, a, Chart::cube(2, 0.0, 1.0, 5));
    CHECK(rep.value("pencil_first_order") <= 1e-12);
    CHECK(rep.value("pencil_second_order") <= 1e-12);
  }
  SUBCASE("singular lambda is skipped") {
    CompatOptions opt;
    opt.lambdas = {-2.0, 1.0};
    auto rep = check_pencil(HamiltonianOperator{identity(2), {}}, HamiltonianOperator{diag({"2", "3"}), {}},
                            Chart::cube(2, 0.0, 1.0, 5), opt);
    REQUIRE(rep.skipped_lambdas.size() == 1);
    CHECK(rep.skipped_lambdas[0] == -2.0);
    CHECK(rep.lambdas == std::vector<double>{1.0});
    CHECK_FALSE(rep.at("lambda_-2_hamiltonian").gating);
  }
}

TEST_CASE("lambda sweep matches the levi-civita operator of the combined metric") {
  auto p = compatible_pairs()[2];
  std::vector<Expr> comb;
  double lam = 1.5;
  for (std::size_t q = 0; q < 4; ++q) comb.push_back(p.gt.upper()[q] + Expr(lam) * p.g.upper()[q]);
  auto direct = check_hamiltonian(levi_civita_operator(MetricField::from_contravariant(comb, 2)), p.chart);
  CHECK(direct.value("hamiltonian_jacobi_condition") <= 1e-8);
  CompatOptions opt;
  opt.lambdas = {lam};
  auto rep = check_pencil(HamiltonianOperator{p.g, {}}, HamiltonianOperator{p.gt, {}}, p.chart, opt);
  CHECK(rep.value("lambda_1.5_hamiltonian") <= 1e-8);
}

TEST_CASE("torsion and pencil verdicts agree") {
  auto all = compatible_pairs();
  for (auto& p : violating_pairs()) all.push_back(p);
  for (const auto& p : all) {
    CAPTURE(p.name);
    auto t = check_theorem1(pencil_operator(p.g, p.gt), p.chart);
    auto c = check_pencil(HamiltonianOperator{p.g, {}}, HamiltonianOperator{p.gt, {}}, p.chart);
    auto pass = [](const ComplianceReport& r, std::initializer_list<const char*> names) {
      for (const char* n : names) {
        if (r.at(n).verdict != Verdict::Pass) return false;
      }
      return true;
    };
    CHECK(pass(t, {"nijenhuis", "second_covariant_condition"}) ==
          pass(c, {"pencil_first_order", "pencil_second_order"}));
  }
}

TEST_CASE("bracket identities") {
  Chart c = Chart::cube(2, 0.0, 1.0, 5);
  auto constant = verify_appendix(pencil_operator(identity(2), upper({"2", "1", "1", "3"}, 2)), c);
  CHECK(constant.value("btilde_symmetric_part") == 0.0);
  CHECK(constant.value("btilde_r_symmetry") == 0.0);

  for (const auto& p : compatible_pairs()) {
    CAPTURE(p.name);
    auto rep = verify_appendix(pencil_operator(p.g, p.gt), p.chart);
    CHECK(rep.value("btilde_symmetric_part") <= 1e-9);
    CHECK(rep.value("btilde_r_symmetry") <= 1e-9);
    CHECK(rep.value("bracket_form") <= 1e-9);
    CHECK(rep.value("connection_terms_cancel") <= 1e-9);
    CHECK(rep.value("bracket_skew") <= 1e-12);
  }
  auto v = violating_pairs()[0];
  auto rep = verify_appendix(pencil_operator(v.g, v.gt), v.chart);
  CHECK(rep.value("btilde_symmetric_part") <= 1e-9);
  CHECK(rep.value("btilde_r_symmetry") > 1e-3);
  CHECK(rep.value("bracket_skew") <= 1e-12);
}

TEST_CASE("dimension mismatch") {
  CHECK_THROWS_AS(check_theorem1(pencil_operator(identity(2), diag({"1", "2"})), Chart::cube(3, 0, 1, 5)),
                  ConfigError);
  CHECK_THROWS_AS(pencil_operator(identity(2), identity(3)), ConfigError);
}
