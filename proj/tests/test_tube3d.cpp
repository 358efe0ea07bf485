#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sidehole/tube3d.hpp"

using namespace sidehole;

namespace {

constexpr double kPi = std::numbers::pi;

Tube3DConfig small_tube(double eps, double delta) {
  Tube3DConfig c;
  c.epsilon = eps;
  c.hole.position_a = 0.7;
  c.hole.delta = delta;
  c.grid.cells_width = 4;
  c.grid.hole_cells = 4;
  c.grid.mouth_cells = 4;
  c.grid.hmax_x1 = 1.0 / 24;
  return c;
}

std::size_t count_top_hole_nodes_along(const Grid3D& g, bool along_x1) {
  const std::size_t top = g.n2() - 1;
  std::size_t n = 0;
  if (along_x1) {
    const std::size_t k = g.n3() / 2;
    for (std::size_t i = 0; i < g.n1(); ++i)
      if (g.x1[i] > 0.5 && g.x1[i] < 0.95 && g.dirichlet[g.index(i, top, k)]) ++n;
  } else {
    std::size_t i = 0;
    while (std::abs(g.x1[i] - 0.7) > std::abs(g.x1[i + 1] - 0.7)) ++i;
    for (std::size_t k = 0; k < g.n3(); ++k)
      if (g.dirichlet[g.index(i, top, k)]) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("tube configuration invariants") {
  Tube3DConfig c = small_tube(0.25, 1.0);
  CHECK(c.violations().empty());
  c.hole.delta = 4.0;  // delta eps^2 = eps
  CHECK_FALSE(c.violations().empty());
  CHECK_THROWS_AS(build_grid(c), std::invalid_argument);
  c = small_tube(0.25, 1.0);
  c.hole.position_a = 0.27;  // overlaps the mouth
  CHECK_FALSE(c.violations().empty());
  c = small_tube(0.25, 1.0);
  c.grid.hole_cells = 3;
  CHECK_FALSE(c.violations().empty());
}

TEST_CASE("grid for eps = 0.25, delta = 1 satisfies the resolution rules") {
  Tube3DConfig c;
  c.epsilon = 0.25;
  c.hole.delta = 1.0;
  const Grid3D g = build_grid(c);
  CHECK(g.nodes() <= c.node_budget);
  CHECK(g.max_grading_ratio() <= 1.5);
  CHECK(count_top_hole_nodes_along(g, true) >= 4);
  CHECK(count_top_hole_nodes_along(g, false) >= 4);
  CHECK(g.n2() - 1 >= 4);
  CHECK(g.n3() - 1 >= 4);
  CHECK(g.x1.front() == 0.0);
  CHECK(g.x1.back() == 1.0);
  CHECK(g.x2.front() == -0.25);
  CHECK(g.x3.back() == 0.125);
  // the hole edge lies halfway between two node lines
  const double edge = 0.7 + 0.0625 / 2;
  bool straddled = false;
  for (std::size_t i = 1; i < g.n1(); ++i)
    if (g.x1[i - 1] < edge && g.x1[i] > edge)
      straddled = std::abs(0.5 * (g.x1[i - 1] + g.x1[i]) - edge) < 1e-12;
  CHECK(straddled);
}

TEST_CASE("grid without hole and budget errors") {
  Tube3DConfig c = small_tube(0.25, 0.0);
  const Grid3D g = build_grid(c);
  CHECK(count_top_hole_nodes_along(g, true) == 0);
  c.node_budget = 100;
  try {
    build_grid(c);
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(e.needed == g.nodes());
    CHECK(std::string(e.what()).find("minimal budget: " + std::to_string(g.nodes())) != std::string::npos);
  }
}

TEST_CASE("graded axis respects breakpoints and ratio") {
  const auto x = graded_axis({0.0, 0.3, 1.0}, {0.01, 0.001, 0.05}, 0.05, 1.2);
  CHECK(x.front() == 0.0);
  CHECK(x.back() == 1.0);
  CHECK(std::find(x.begin(), x.end(), 0.3) != x.end());
  double worst = 1.0;
  for (std::size_t i = 2; i < x.size(); ++i) {
    const double a = x[i - 1] - x[i - 2], b = x[i] - x[i - 1];
    worst = std::max({worst, a / b, b / a});
  }
  CHECK(worst <= 1.5);
}

TEST_CASE("pure Neumann box has a constant null mode") {
  const Grid3D g = box_grid(1.0, 0.5, 0.25, 6, false);
  const Operator3D op = assemble(g);
  CHECK_FALSE(op.has_dirichlet);
  const EigenResult3D r = smallest_eigs(op, 2);
  CHECK(std::abs(r.eigenvalues[0]) < 1e-10);
  const Eigen::VectorXd v = r.vectors.col(0);
  const double mean = v.mean();
  CHECK((v.array() - mean).abs().maxCoeff() / std::abs(mean) < 1e-6);
  // second mode: cos(pi x1), lambda near pi^2
  CHECK(r.eigenvalues[1] == doctest::Approx(kPi * kPi).epsilon(0.05));
}

TEST_CASE("quadratic form equals the edge sum") {
  const Tube3DConfig c = small_tube(0.3, 1.0);
  const Grid3D g = build_grid(c);
  const Operator3D op = assemble(g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(op.stiffness.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  const double form = v.dot(op.stiffness * v);
  CHECK(form == doctest::Approx(edge_energy(g, op, v)).epsilon(1e-12));
  CHECK(form > 0.0);
  CHECK(Eigen::MatrixXd(op.stiffness) == Eigen::MatrixXd(op.stiffness.transpose()));
}

TEST_CASE("Dirichlet unit cube converges to 3 pi^2") {
  double prev = 1e300;
  for (int n : {6, 12, 24}) {
    const EigenResult3D r = smallest_eigs(assemble(box_grid(1, 1, 1, n, true)), 1);
    const double err = std::abs(r.eigenvalues[0] - 3 * kPi * kPi) / (3 * kPi * kPi);
    CHECK(err < prev / 3.0);  // second order
    prev = err;
  }
  CHECK(prev < 2e-3);
}

TEST_CASE("closed pipe reproduces (pi/2)^2") {
  for (double eps : {0.4, 0.2}) {
    Tube3DConfig c = small_tube(eps, 0.0);
    c.mouth = false;
    const EigenResult3D r = smallest_eigs(assemble(build_grid(c)), 3);
    CHECK(r.eigenvalues[0] == doctest::Approx(kPi * kPi / 4).epsilon(1e-3));
    CHECK(r.eigenvalues[1] == doctest::Approx(9 * kPi * kPi / 4).epsilon(5e-3));
    for (double res : r.residuals) CHECK(res < 1e-8);
    CHECK(r.orthonormality_error < 1e-8);
  }
  Tube3DConfig c = small_tube(0.3, 0.0);
  c.mouth = false;
  const auto lim = limit_eigenvalues(c, 2);
  CHECK(lim[0] == doctest::Approx(kPi * kPi / 4).epsilon(1e-12));
  c.right_end_dirichlet = false;
  CHECK(limit_eigenvalues(c, 2)[0] == 0.0);
}

TEST_CASE("adding the hole patch raises every eigenvalue") {
  const Tube3DConfig c = small_tube(0.3, 2.0);
  const Grid3D g = build_grid(c);
  Tube3DConfig plain = c;
  plain.hole.delta = 0.0;
  const auto with = smallest_eigs(assemble(g), 3).eigenvalues;
  const auto without = smallest_eigs(assemble(plain, g), 3).eigenvalues;
  for (int k = 0; k < 3; ++k) CHECK(with[k] >= without[k]);
  CHECK(with[0] > without[0] * 1.01);
}

TEST_CASE("study rows are deterministic and match single runs") {
  const Tube3DConfig c = small_tube(0.3, 1.0);
  StudyOptions opt;
  opt.compare_without_hole = true;
  const SweepReport rep = convergence_study(c, {0.4, 0.3}, 2, opt);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.trend_checked);
  CHECK(rep.monotone_ok());
  Tube3DConfig single = c;
  single.epsilon = 0.3;
  const auto r = smallest_eigs(assemble(build_grid(single)), 2);
  CHECK(r.eigenvalues == rep.rows[1].lambda_3d);
  const SweepReport again = convergence_study(c, {0.4, 0.3}, 2, opt);
  CHECK(again.rows[0].lambda_3d == rep.rows[0].lambda_3d);

  const std::string csv = sweep_csv(rep);
  CHECK(csv.rfind("epsilon,nodes,k,lambda_3d,lambda_1d,rel_dev,wall_s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const nlohmann::json j = rep;
  CHECK(j.at("rows").size() == 2);
  CHECK(j.at("trend").at("checked") == true);
}

TEST_CASE("study argument handling") {
  const Tube3DConfig c = small_tube(0.3, 0.0);
  CHECK_THROWS_AS(convergence_study(c, {0.2, 0.3}, 1), std::invalid_argument);
  const SweepReport one = convergence_study(c, {0.3}, 1);
  CHECK_FALSE(one.trend_checked);
  CHECK(one.warnings.size() == 1);

  StudyOptions opt;
  opt.eig.max_iterations = 1;
  try {
    convergence_study(c, {0.4, 0.3}, 2, opt);
    FAIL("expected a study error");
  } catch (const StudyError& e) {
    CHECK(e.partial.rows.empty());
    CHECK(std::string(e.what()).find("no convergence") != std::string::npos);
  }
}

TEST_CASE("tube config JSON round trip") {
  Tube3DConfig c = small_tube(0.2, 2.0);
  c.hole.alpha_override = 2.5;
  const nlohmann::json j = c;
  const Tube3DConfig back = j.get<Tube3DConfig>();
  CHECK(nlohmann::json(back) == j);
}
