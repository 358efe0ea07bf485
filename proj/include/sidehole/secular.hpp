#pragma once

// Spectrum of the one-dimensional limit operator -u'' on (0,1) with
// derivative jumps u'(a+) - u'(a-) = kappa u(a) at side holes.
//
// Three independent routes:
//   * find_roots        single hole, open/open: roots of the entire secular
//                       function F(mu) = mu sin(mu) + kappa sin(mu a) sin(mu (1-a)),
//                       one per interlacing interval [k pi, (k+1) pi];
//   * shooting_spectrum multiple holes, any end conditions, variable bore;
//   * fd_oracle         finite-difference discretisation of the quadratic form
//                       with Sturm-sequence bisection and Richardson extrapolation.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidehole/model.hpp"

namespace sidehole {

struct SecularProblem {
  double a = 0.5;
  double kappa = 0.0;
  EndCondition left_end = EndCondition::open;
  EndCondition right_end = EndCondition::open;
};

struct HolePoint {
  double a;
  double kappa;
};

/// Bore (1/g)(g u')' with point couplings; holes sorted by position.
struct GeneralizedProblem {
  BoreProfile bore;
  std::vector<HolePoint> holes;
  EndCondition left_end = EndCondition::open;
  EndCondition right_end = EndCondition::open;

  static GeneralizedProblem from(const SecularProblem& p);
  /// Holes of `config` with couplings alpha_i delta_i open_fraction_i.
  static GeneralizedProblem from(const ModelConfig& config);
};

/// Piece of a constant-bore eigenfunction on [x_begin, x_end]:
///   u(x) = c_sin sin(mu (x - x_begin)) + c_cos cos(mu (x - x_begin)).
struct Segment {
  double x_begin;
  double x_end;
  double c_sin;
  double c_cos;
};

struct EigenSolution1D {
  double mu = 0.0;
  double lambda = 0.0;
  std::vector<Segment> segments;
  /// Amplitudes of the two-span form: u = c_left sin(mu x) on (0,a) and
  /// u = c_right sin(mu (1-x)) on (a,1). Only set for the single-hole case.
  double c_left = 0.0;
  double c_right = 0.0;

  double value(double x) const;
  /// One-sided derivative; `from_right` picks the segment starting at x.
  double derivative(double x, bool from_right) const;
  /// Integral of u^2 over the segments, in closed form.
  double norm_squared() const;
};

enum class Method { closed_form, shooting, fd_oracle };
std::string to_string(Method m);

struct Spectrum1D {
  std::string problem;
  std::vector<double> mu;
  std::vector<EigenSolution1D> eigensolutions;
  Method method = Method::closed_form;
  // fd_oracle diagnostics: raw eigenvalues on grids n and 2n.
  int grid_n = 0;
  std::vector<double> lambda_coarse;
  std::vector<double> lambda_fine;

  std::vector<double> lambda() const;
};

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Secular function

template <typename Scalar>
Scalar secular_eval(Scalar mu, Scalar a, Scalar kappa) {
  using std::sin;
  return mu * sin(mu) + kappa * sin(mu * a) * sin(mu * (Scalar(1) - a));
}

double secular_eval(double mu, const SecularProblem& problem);

/// Quotient form -mu sin(mu) / (sin(mu a) sin(mu (1-a))); poles where either
/// sine vanishes. Only used for plotting.
template <typename Scalar>
Scalar secular_quotient(Scalar mu, Scalar a) {
  using std::sin;
  return -mu * sin(mu) / (sin(mu * a) * sin(mu * (Scalar(1) - a)));
}

struct FindOptions {
  double tol = 1e-12;
  int scan_points = 1000;       ///< sign-scan resolution per interlacing interval
  bool cross_validate = true;   ///< check every root against fd_oracle
  int oracle_n = 2000;
  double oracle_rel_tol = 1e-6; ///< relative agreement of eigenvalues
};

Spectrum1D find_roots(const SecularProblem& problem, int count, const FindOptions& opt = {});

/// Eigenfunction for a root of F, normalised to unit L2 norm with c_left > 0
/// (or c_right > 0 when the left amplitude vanishes).
EigenSolution1D eigenfunction(double mu, const SecularProblem& problem, double residual_tol = 1e-8);

/// |u'(a+) - u'(a-) - kappa u(a)| of a constructed eigenfunction.
double jump_residual(const EigenSolution1D& u, double a, double kappa);

// ---------------------------------------------------------------------------
// Finite-difference oracle

/// Symmetric tridiagonal matrix: diagonal d, off-diagonal e (size n-1).
template <typename Scalar>
struct SymTridiagonal {
  std::vector<Scalar> d;
  std::vector<Scalar> e;
};

/// Number of eigenvalues strictly below x (Sturm count via LDL^T pivots).
template <typename Scalar>
int sturm_count(const SymTridiagonal<Scalar>& t, Scalar x) {
  int count = 0;
  Scalar q = Scalar(1);
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  for (std::size_t i = 0; i < t.d.size(); ++i) {
    const Scalar off = i == 0 ? Scalar(0) : t.e[i - 1] * t.e[i - 1] / q;
    q = t.d[i] - x - off;
    if (q == Scalar(0)) q = -tiny;
    if (q < Scalar(0)) ++count;
  }
  return count;
}

/// The `count` smallest eigenvalues, by bisection to round-off level.
std::vector<double> tridiagonal_eigenvalues(const SymTridiagonal<double>& t, int count);

/// Discretise the quadratic form int g u'v' + sum kappa_i g(a_i) u(a_i) v(a_i)
/// against the lumped mass int g u v, symmetrised by the mass diagonal.
///
/// The grid has about n intervals per unit length and a node on every hole:
/// each span between consecutive holes (or ends) is split uniformly into
/// round(n * length) * refine intervals. A hole is a diagonal bump kappa g(a)
/// on its node. When every a_i * n is an integer this is the plain uniform grid.
SymTridiagonal<double> fd_matrix(const GeneralizedProblem& problem, int n, int refine = 1);

/// Raw eigenvalues on one grid.
std::vector<double> fd_eigenvalues(const GeneralizedProblem& problem, int n, int count, int refine = 1);

/// Eigenvalues on grids n and 2n combined by second-order Richardson
/// extrapolation. Throws std::invalid_argument when a hole lies closer than
/// 1/n to an end or to another hole.
Spectrum1D fd_oracle(const GeneralizedProblem& problem, int n, int count);
Spectrum1D fd_oracle(const SecularProblem& problem, int n, int count);

// ---------------------------------------------------------------------------
// Shooting / transfer matrix

struct ShootingOptions {
  double tol = 1e-12;
  int scan_points_per_pi = 0;  ///< 0 picks 1000 (constant bore) or 64 (variable bore)
  bool cross_validate = true;
  int oracle_n = 2000;
  double oracle_rel_tol = 1e-5;
};

/// Terminal boundary residual: u(1) for an open right end, g(1) u'(1) for a
/// closed one, from initial data matching the left end.
double shooting_residual(double mu, const GeneralizedProblem& problem);

Spectrum1D shooting_spectrum(const GeneralizedProblem& problem, int count, const ShootingOptions& opt = {});

// ---------------------------------------------------------------------------
// kappa -> 0 and kappa -> infinity behaviour

struct LimitReport {
  double a = 0.5;
  std::vector<double> kappas;
  std::vector<std::vector<double>> mu;        ///< [ladder entry][k]
  std::vector<double> limit_points;           ///< sorted {k pi/a} U {k pi/(1-a)}
  std::vector<std::vector<double>> distance;  ///< |mu_k - limit_points[k]|
  bool monotone_in_kappa = true;
  bool distance_nonincreasing = true;
};

LimitReport limit_behaviors(double a, int count,
                            std::vector<double> kappas = {0.0, 1.0, 10.0, 1e2, 1e3, 1e4});

// ---------------------------------------------------------------------------
// Serialisation

/// CSV with columns k,mu,lambda,freq_hz,cents_vs_fundamental (12 digits).
std::string spectrum_csv(const Spectrum1D& s, const TubeSpec& tube);
void to_json(nlohmann::json& j, const EigenSolution1D& u);
void to_json(nlohmann::json& j, const Spectrum1D& s);

}  // namespace sidehole
