#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "sidehole/secular.hpp"

using namespace sidehole;
constexpr double pi = std::numbers::pi;

namespace {

// Roots of mu sin mu + 5 sin(0.7 mu) sin(0.3 mu), from a 30-digit
// independent root finder (mpmath), one per interval [k pi, (k+1) pi].
constexpr double kRefRoots[] = {3.7639481641141908295, 6.9505977870589220378, 9.4781609862246792896,
                                12.691928580005194288, 16.016456547452653737, 18.945106897574120691,
                                22.012255059713430911, 25.306608147401100614};

}  // namespace

TEST_CASE("secular_eval examples") {
  for (int k = 1; k <= 6; ++k) CHECK(std::abs(secular_eval(k * pi, SecularProblem{0.3, 0.0})) < 1e-13);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(secular_eval(2 * k * pi, SecularProblem{0.5, 7.0})) < 1e-12);
  const double v = secular_eval(pi, SecularProblem{0.7, 5.0});
  CHECK(v > 0.0);
  CHECK(v == doctest::Approx(5.0 * std::sin(0.7 * pi) * std::sin(0.3 * pi)).epsilon(1e-14));
  CHECK_THROWS(secular_eval(0.0, SecularProblem{}));
}

TEST_CASE("secular_eval template on long double agrees with double") {
  const long double v = secular_eval<long double>(3.1L, 0.7L, 5.0L);
  CHECK(static_cast<double>(v) == doctest::Approx(secular_eval(3.1, 0.7, 5.0)).epsilon(1e-14));
}

TEST_CASE("find_roots: unperturbed string") {
  const Spectrum1D s = find_roots({0.37, 0.0}, 5);
  REQUIRE(s.mu.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(s.mu[k] == (k + 1) * pi);
  CHECK(s.method == Method::closed_form);
}

TEST_CASE("find_roots: node at the hole") {
  const Spectrum1D s = find_roots({0.5, 10.0}, 2);
  CHECK(s.mu[1] == 2 * pi);
  CHECK(s.mu[0] > pi);
  CHECK(s.mu[0] < 2 * pi);
}

TEST_CASE("find_roots: reference values a=0.7 kappa=5") {
  const Spectrum1D s = find_roots({0.7, 5.0}, 8);
  for (int k = 0; k < 8; ++k) CHECK(std::abs(s.mu[k] - kRefRoots[k]) < 1e-11);
  CHECK(std::abs(s.mu[2] - 3 * pi) < std::abs(s.mu[4] - 5 * pi));
  CHECK(s.mu[0] > pi);
  CHECK(s.mu[0] < 2 * pi);
}

TEST_CASE("find_roots: argument checks") {
  CHECK_THROWS(find_roots({0.5, 1.0}, 0));
  CHECK_THROWS(find_roots({0.5, 1.0, EndCondition::closed, EndCondition::open}, 3));
  CHECK_THROWS(find_roots({1.5, 1.0}, 3));
}

TEST_CASE("eigenfunction examples") {
  SUBCASE("unperturbed") {
    const EigenSolution1D u = eigenfunction(pi, {0.4, 0.0});
    CHECK(u.c_left == doctest::Approx(std::sqrt(2.0)));
    CHECK(u.c_right == doctest::Approx(std::sqrt(2.0)));
    CHECK(u.value(0.25) == doctest::Approx(std::sqrt(2.0) * std::sin(pi * 0.25)));
  }
  SUBCASE("node at hole") {
    const EigenSolution1D u = eigenfunction(2 * pi, {0.5, 5.0});
    for (double x : {0.1, 0.3, 0.6, 0.9}) CHECK(u.value(x) == doctest::Approx(std::sqrt(2.0) * std::sin(2 * pi * x)));
    CHECK(std::abs(u.value(0.5)) < 1e-14);
    CHECK(std::abs(u.derivative(0.5, true) - u.derivative(0.5, false)) < 1e-12);
    CHECK(jump_residual(u, 0.5, 5.0) < 1e-12);
  }
  SUBCASE("reference hole") {
    const Spectrum1D s = find_roots({0.7, 5.0}, 6);
    for (const auto& u : s.eigensolutions) {
      CHECK(jump_residual(u, 0.7, 5.0) < 1e-8);
      CHECK(u.norm_squared() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(u.value(0.7) - u.segments[1].c_cos) < 1e-13);  // continuity
    }
  }
  SUBCASE("quadrature check of the closed-form norm") {
    const EigenSolution1D u = eigenfunction(kRefRoots[1], {0.7, 5.0});
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) / n;
      sum += u.value(x) * u.value(x) / n;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-7));
  }
  CHECK_THROWS(eigenfunction(3.0, {0.7, 5.0}));
}

TEST_CASE("sturm bisection matches a dense eigensolver") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymTridiagonal<double> t;
  const int n = 40;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    t.d.push_back(2.0 + u(rng));
    dense(i, i) = t.d.back();
    if (i + 1 < n) {
      t.e.push_back(u(rng));
      dense(i, i + 1) = dense(i + 1, i) = t.e.back();
    }
  }
  const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
  const auto ev = tridiagonal_eigenvalues(t, n);
  for (int i = 0; i < n; ++i) CHECK(ev[i] == doctest::Approx(ref(i)).epsilon(1e-12));
  CHECK(sturm_count(t, ref(5) + 1e-9) == 6);
}

TEST_CASE("fd_oracle examples") {
  SUBCASE("Dirichlet string") {
    const Spectrum1D s = fd_oracle(SecularProblem{0.5, 0.0}, 2000, 3);
    const double h = 1.0 / 2000;
    const double pi2 = pi * pi;
    CHECK(std::abs(s.lambda_coarse[0] - pi2) < 1.1 * pi2 * pi2 * h * h / 12.0);
    CHECK(std::abs(s.lambda_coarse[0] - pi2) > 0.0);
    CHECK(std::abs(s.mu[0] * s.mu[0] - pi2) / pi2 < 1e-8);
  }
  SUBCASE("reference hole agrees with the closed form") {
    const Spectrum1D fd = fd_oracle(SecularProblem{0.7, 5.0}, 2000, 6);
    for (int k = 0; k < 6; ++k) {
      const double lam = kRefRoots[k] * kRefRoots[k];
      CHECK(std::abs(fd.mu[k] * fd.mu[k] - lam) / lam < 1e-6);
    }
  }
  SUBCASE("constant bore cancels") {
    GeneralizedProblem plain = GeneralizedProblem::from(SecularProblem{0.7, 5.0});
    GeneralizedProblem scaled = plain;
    scaled.bore = BoreProfile::constant_profile(3.7);
    const auto a = fd_eigenvalues(plain, 500, 6);
    const auto b = fd_eigenvalues(scaled, 500, 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(a[k] - b[k]) / a[k] < 1e-10);
  }
  SUBCASE("off-grid hole still extrapolates at second order") {
    const double a = 0.61803398874989;
    const Spectrum1D fd = fd_oracle(SecularProblem{a, 3.0}, 1000, 4);
    const Spectrum1D cf = find_roots({a, 3.0}, 4, {.cross_validate = false});
    for (int k = 0; k < 4; ++k) CHECK(std::abs(fd.mu[k] / cf.mu[k] - 1.0) < 1e-7);
  }
  CHECK_THROWS(fd_oracle(SecularProblem{0.0004, 1.0}, 2000, 2));
  CHECK_THROWS(fd_oracle(SecularProblem{0.5, 1.0}, 50, 2));
}

TEST_CASE("fd_oracle and shooting on an exponential bore") {
  // g = exp(p x): u = exp(-p x / 2) sin(k pi x), lambda = k^2 pi^2 + p^2 / 4.
  GeneralizedProblem g;
  const double p = 1.3;
  g.bore = BoreProfile::named_profile("exponential", p);
  const Spectrum1D fd = fd_oracle(g, 1000, 4);
  const Spectrum1D sh = shooting_spectrum(g, 4);
  for (int k = 1; k <= 4; ++k) {
    const double lam = k * k * pi * pi + p * p / 4.0;
    CHECK(std::abs(fd.mu[k - 1] * fd.mu[k - 1] / lam - 1.0) < 1e-7);
    CHECK(std::abs(sh.mu[k - 1] * sh.mu[k - 1] / lam - 1.0) < 1e-8);
  }
}

TEST_CASE("shooting examples") {
  SUBCASE("one hole matches the closed form") {
    const Spectrum1D sh = shooting_spectrum(GeneralizedProblem::from(SecularProblem{0.7, 5.0}), 5);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(sh.mu[k] - kRefRoots[k]) < 1e-11);
    for (const auto& u : sh.eigensolutions) {
      CHECK(jump_residual(u, 0.7, 5.0) < 1e-8);
      CHECK(std::abs(u.value(1.0)) < 1e-9);
    }
  }
  SUBCASE("zero coupling is no hole") {
    GeneralizedProblem two;
    two.holes = {{0.4, 5.0}, {0.8, 0.0}};
    GeneralizedProblem one;
    one.holes = {{0.4, 5.0}};
    const auto a = shooting_spectrum(two, 6), b = shooting_spectrum(one, 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(a.mu[k] - b.mu[k]) < 1e-11);
  }
  SUBCASE("closed/open pipe") {
    GeneralizedProblem g;
    g.left_end = EndCondition::closed;
    const Spectrum1D s = shooting_spectrum(g, 10);
    for (int k = 1; k <= 10; ++k) CHECK(std::abs(s.mu[k - 1] - (2 * k - 1) * pi / 2) < 1e-12);
  }
  SUBCASE("closed/closed with a hole has a positive fundamental") {
    GeneralizedProblem g;
    g.left_end = g.right_end = EndCondition::closed;
    g.holes = {{0.3, 2.0}};
    const Spectrum1D s = shooting_spectrum(g, 4);
    CHECK(s.mu[0] > 0.0);
    CHECK(s.mu[0] < pi);
  }
}

TEST_CASE("limit behaviours") {
  const LimitReport r = limit_behaviors(0.5, 3);
  CHECK(r.monotone_in_kappa);
  CHECK(r.distance_nonincreasing);
  for (int k = 0; k < 3; ++k) CHECK(r.mu.front()[k] == (k + 1) * pi);
  CHECK(std::abs(r.mu.back()[0] - 2 * pi) < 1e-2);
  CHECK(r.mu[2][0] >= r.mu[1][0]);

  const LimitReport q = limit_behaviors(0.7, 5);
  CHECK(q.monotone_in_kappa);
  CHECK(q.distance_nonincreasing);
  CHECK(q.distance.back()[0] < q.distance.front()[0]);
}

// ---------------------------------------------------------------------------
// Properties over randomised (a, kappa)

TEST_CASE("property: interlacing, jump residual and method agreement") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> pos(0.05, 0.95);
  std::uniform_real_distribution<double> logk(-2.0, 2.5);
  for (int trial = 0; trial < 25; ++trial) {
    const double a = pos(rng);
    const double kappa = std::pow(10.0, logk(rng));
    CAPTURE(a);
    CAPTURE(kappa);
    const Spectrum1D cf = find_roots({a, kappa}, 6);
    for (int k = 1; k <= 6; ++k) {
      CHECK(cf.mu[k - 1] >= k * pi);
      CHECK(cf.mu[k - 1] <= (k + 1) * pi);
      if (k > 1) CHECK(cf.mu[k - 1] > cf.mu[k - 2]);
      CHECK(jump_residual(cf.eigensolutions[k - 1], a, kappa) < 1e-8);
    }
    const Spectrum1D sh = shooting_spectrum(GeneralizedProblem::from(SecularProblem{a, kappa}), 6);
    const Spectrum1D fd = fd_oracle(SecularProblem{a, kappa}, 2000, 6);
    for (int k = 0; k < 6; ++k) {
      const double lam = cf.mu[k] * cf.mu[k];
      CHECK(std::abs(sh.mu[k] * sh.mu[k] - lam) / lam < 1e-6);
      CHECK(std::abs(fd.mu[k] * fd.mu[k] - lam) / lam < 1e-6);
    }
  }
}

TEST_CASE("property: monotone in kappa, strictly where u(a) != 0") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(0.05, 0.95);
  std::uniform_real_distribution<double> kap(0.0, 20.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = pos(rng);
    const double k1 = kap(rng), k2 = k1 + 0.5 + kap(rng);
    const Spectrum1D s1 = find_roots({a, k1}, 5), s2 = find_roots({a, k2}, 5);
    for (int k = 0; k < 5; ++k) {
      CHECK(s2.mu[k] >= s1.mu[k]);
      if (std::abs(s1.eigensolutions[k].value(a)) > 1e-6) CHECK(s2.mu[k] > s1.mu[k]);
    }
  }
}

TEST_CASE("property: node invariance for rational positions") {
  for (auto [p, q] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 5}, std::pair{3, 4}}) {
    const double a = static_cast<double>(p) / q;
    for (double kappa : {0.5, 5.0, 50.0}) {
      const Spectrum1D s = find_roots({a, kappa}, 2 * q);
      bool found = false;
      for (double mu : s.mu) found = found || mu == q * pi;
      CHECK(found);
    }
  }
}

TEST_CASE("spectrum CSV and JSON") {
  const Spectrum1D s = find_roots({0.7, 5.0}, 3);
  TubeSpec t;
  const std::string csv = spectrum_csv(s, t);
  CHECK(csv.rfind("k,mu,lambda,freq_hz,cents_vs_fundamental\n", 0) == 0);
  CHECK(csv.find("\n1,3.76394816411,") != std::string::npos);
  const nlohmann::json j = s;
  CHECK(j.at("method") == "closed_form");
  CHECK(j.at("mu").size() == 3);
  CHECK(j.at("eigensolutions").at(0).at("segments").size() == 2);
}
