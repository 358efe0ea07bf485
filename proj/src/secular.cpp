#include "sidehole/secular.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace sidehole {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

GeneralizedProblem GeneralizedProblem::from(const SecularProblem& p) {
  GeneralizedProblem g;
  g.holes = {{p.a, p.kappa}};
  g.left_end = p.left_end;
  g.right_end = p.right_end;
  return g;
}

GeneralizedProblem GeneralizedProblem::from(const ModelConfig& config) {
  GeneralizedProblem g;
  g.bore = config.tube.bore;
  g.left_end = config.tube.left_end;
  g.right_end = config.tube.right_end;
  for (std::size_t i = 0; i < config.holes.size(); ++i)
    g.holes.push_back({config.holes[i].position_a, config.coupling(i)});
  return g;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::shooting: return "shooting";
    case Method::fd_oracle: return "fd_oracle";
  }
  return "unknown";
}

std::vector<double> Spectrum1D::lambda() const {
  std::vector<double> out;
  out.reserve(mu.size());
  for (double m : mu) out.push_back(m * m);
  return out;
}

// ---------------------------------------------------------------------------
// EigenSolution1D

namespace {

const Segment& segment_at(const std::vector<Segment>& segs, double x, bool from_right) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& s = segs[i];
    const bool last = i + 1 == segs.size();
    if (from_right ? (x >= s.x_begin && (x < s.x_end || last)) : (x > s.x_begin && x <= s.x_end))
      return s;
  }
  return from_right ? segs.back() : segs.front();
}

}  // namespace

double EigenSolution1D::value(double x) const {
  const Segment& s = segment_at(segments, x, true);
  const double t = mu * (x - s.x_begin);
  return s.c_sin * std::sin(t) + s.c_cos * std::cos(t);
}

double EigenSolution1D::derivative(double x, bool from_right) const {
  const Segment& s = segment_at(segments, x, from_right);
  const double t = mu * (x - s.x_begin);
  return mu * (s.c_sin * std::cos(t) - s.c_cos * std::sin(t));
}

double EigenSolution1D::norm_squared() const {
  double sum = 0.0;
  for (const Segment& s : segments) {
    const double l = s.x_end - s.x_begin;
    const double s2 = std::sin(2.0 * mu * l) / (4.0 * mu);
    const double sl = std::sin(mu * l);
    sum += s.c_sin * s.c_sin * (l / 2.0 - s2) + s.c_cos * s.c_cos * (l / 2.0 + s2) +
           s.c_sin * s.c_cos * sl * sl / mu;
  }
  return sum;
}

double secular_eval(double mu, const SecularProblem& p) {
  if (!(mu > 0.0)) throw std::invalid_argument("secular_eval: mu must be positive");
  return secular_eval(mu, p.a, p.kappa);
}

// ---------------------------------------------------------------------------
// Closed-form roots

namespace {

std::string describe(const SecularProblem& p) {
  std::ostringstream os;
  os.precision(17);
  os << "single hole a=" << p.a << " kappa=" << p.kappa << " ends=" << to_string(p.left_end) << "/"
     << to_string(p.right_end);
  return os.str();
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

double bisect(const auto& f, double lo, double hi, int sign_lo, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int s = sign_of(f(mid));
    if (s == 0) return mid;
    (s == sign_lo ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void check_against_oracle(const Spectrum1D& s, const GeneralizedProblem& g, int n, double rel_tol) {
  double margin = 1.0;
  for (const auto& h : g.holes) margin = std::min({margin, h.a, 1.0 - h.a});
  for (std::size_t i = 1; i < g.holes.size(); ++i) margin = std::min(margin, g.holes[i].a - g.holes[i - 1].a);
  n = std::max(n, static_cast<int>(std::ceil(2.0 / margin)));

  const Spectrum1D fd = fd_oracle(g, n, static_cast<int>(s.mu.size()));
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    const double lam = s.mu[k] * s.mu[k];
    const double rel = std::abs(lam - fd.mu[k] * fd.mu[k]) / lam;
    if (rel > rel_tol) {
      std::ostringstream os;
      os.precision(15);
      os << "root " << k + 1 << " (mu=" << s.mu[k] << ") disagrees with the finite-difference oracle (mu="
         << fd.mu[k] << ", relative eigenvalue gap " << rel << ")";
      throw BracketError(os.str());
    }
  }
}

}  // namespace

Spectrum1D find_roots(const SecularProblem& p, int count, const FindOptions& opt) {
  if (count < 1) throw std::invalid_argument("find_roots: count must be at least 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("find_roots: tol must be positive");
  if (p.left_end != EndCondition::open || p.right_end != EndCondition::open)
    throw std::invalid_argument("find_roots: the closed form needs open ends on both sides");
  if (!(p.a > 0.0 && p.a < 1.0) || !(p.kappa >= 0.0))
    throw std::invalid_argument("find_roots: need 0 < a < 1 and kappa >= 0");

  const auto F = [&](double mu) { return secular_eval(mu, p.a, p.kappa); };

  Spectrum1D out;
  out.problem = describe(p);
  out.method = Method::closed_form;

  for (int k = 1; k <= count; ++k) {
    const double lo = k * kPi;
    const double hi = (k + 1) * kPi;
    const double s_lo = std::sin(lo * p.a);
    // Distance from k pi to the root that starts there, to first order.
    const double shift = p.kappa * s_lo * s_lo / lo;
    if (shift < 0.1 * opt.tol) {
      out.mu.push_back(lo);
      continue;
    }

    // F(k pi) = (-1)^(k+1) kappa sin^2(k pi a): the endpoint signs alternate.
    // Numerical values are used unless they sit in round-off.
    const int analytic_lo = (k % 2 == 1) ? 1 : -1;
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (hi * (k + 1) + p.kappa);
    const double f_lo = F(lo);
    const double f_hi = F(hi);
    const int sign_lo = std::abs(f_lo) > noise ? sign_of(f_lo) : analytic_lo;
    const int sign_hi = std::abs(f_hi) > noise ? sign_of(f_hi) : -analytic_lo;
    if (sign_lo == sign_hi) {
      std::ostringstream os;
      os << "no sign change of the secular function on [" << k << " pi, " << k + 1 << " pi]";
      throw BracketError(os.str());
    }

    double a = lo;
    double b = hi;
    double root = -1.0;
    for (int j = 1; j <= opt.scan_points; ++j) {
      const double t = j == opt.scan_points ? hi : lo + (hi - lo) * j / opt.scan_points;
      const int s = j == opt.scan_points ? sign_hi : sign_of(F(t));
      if (s == 0) {
        root = t;
        break;
      }
      if (s != sign_lo) {
        b = t;
        break;
      }
      a = t;
    }
    if (root < 0.0) root = bisect(F, a, b, sign_lo, opt.tol);
    out.mu.push_back(root);
  }

  for (double mu : out.mu) out.eigensolutions.push_back(eigenfunction(mu, p));
  if (opt.cross_validate) check_against_oracle(out, GeneralizedProblem::from(p), opt.oracle_n, opt.oracle_rel_tol);
  return out;
}

EigenSolution1D eigenfunction(double mu, const SecularProblem& p, double residual_tol) {
  if (!(mu > 0.0)) throw std::invalid_argument("eigenfunction: mu must be positive");
  const double a = p.a;
  const double k = p.kappa;
  const double residual = std::abs(secular_eval(mu, a, k));
  if (residual > residual_tol * (mu + k)) {
    std::ostringstream os;
    os.precision(17);
    os << "eigenfunction: mu=" << mu << " is not a root (|F(mu)| = " << residual << ")";
    throw std::invalid_argument(os.str());
  }

  const double sa = std::sin(mu * a), ca = std::cos(mu * a);
  const double sb = std::sin(mu * (1.0 - a)), cb = std::cos(mu * (1.0 - a));
  // Matching system for (C1, C2): continuity and derivative jump at a.
  //   [ sa              -sb    ] [C1]   [0]
  //   [ mu ca + k sa     mu cb ] [C2] = [0]
  const double r21 = mu * ca + k * sa, r22 = mu * cb;
  const double n1 = std::hypot(sa, sb);
  const double n2 = std::hypot(r21, r22) / (mu + k);
  double c1, c2;
  if (n1 >= n2) {
    c1 = sb;
    c2 = sa;
  } else {
    c1 = r22;
    c2 = -r21;
  }

  EigenSolution1D u;
  u.mu = mu;
  u.lambda = mu * mu;
  u.segments = {{0.0, a, c1, 0.0}, {a, 1.0, -c2 * cb, c2 * sb}};
  double scale = 1.0 / std::sqrt(u.norm_squared());
  if (c1 < 0.0 || (c1 == 0.0 && c2 < 0.0)) scale = -scale;
  for (Segment& s : u.segments) {
    s.c_sin *= scale;
    s.c_cos *= scale;
  }
  u.c_left = c1 * scale;
  u.c_right = c2 * scale;
  return u;
}

double jump_residual(const EigenSolution1D& u, double a, double kappa) {
  return std::abs(u.derivative(a, true) - u.derivative(a, false) - kappa * u.value(a));
}

// ---------------------------------------------------------------------------
// Limits

LimitReport limit_behaviors(double a, int count, std::vector<double> kappas) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("limit_behaviors: a must lie in (0,1)");
  LimitReport r;
  r.a = a;
  r.kappas = std::move(kappas);

  for (int k = 1; k <= count; ++k) {
    r.limit_points.push_back(k * kPi / a);
    r.limit_points.push_back(k * kPi / (1.0 - a));
  }
  std::sort(r.limit_points.begin(), r.limit_points.end());
  r.limit_points.resize(static_cast<std::size_t>(count));

  for (double kappa : r.kappas) {
    const Spectrum1D s = find_roots({a, kappa}, count);
    std::vector<double> d;
    for (int k = 0; k < count; ++k) d.push_back(std::abs(s.mu[k] - r.limit_points[k]));
    if (!r.mu.empty()) {
      for (int k = 0; k < count; ++k) {
        if (s.mu[k] < r.mu.back()[k] - 1e-12) r.monotone_in_kappa = false;
        if (d[k] > r.distance.back()[k] + 1e-12) r.distance_nonincreasing = false;
      }
    }
    r.mu.push_back(s.mu);
    r.distance.push_back(std::move(d));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialisation

std::string spectrum_csv(const Spectrum1D& s, const TubeSpec& tube) {
  std::string out = "k,mu,lambda,freq_hz,cents_vs_fundamental\n";
  char buf[256];
  const double f0 = s.mu.empty() ? 1.0 : to_frequency_hz(s.mu.front(), tube);
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    const double f = to_frequency_hz(s.mu[k], tube);
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g\n", k + 1, s.mu[k], s.mu[k] * s.mu[k], f,
                  cents(f, f0));
    out += buf;
  }
  return out;
}

void to_json(json& j, const EigenSolution1D& u) {
  json segs = json::array();
  for (const Segment& s : u.segments)
    segs.push_back({{"x_begin", s.x_begin}, {"x_end", s.x_end}, {"c_sin", s.c_sin}, {"c_cos", s.c_cos}});
  j = json{{"mu", u.mu}, {"lambda", u.lambda}, {"segments", segs}, {"normalization", "L2(0,1) = 1"}};
  if (u.c_left != 0.0 || u.c_right != 0.0) {
    j["c_left"] = u.c_left;
    j["c_right"] = u.c_right;
  }
}

void to_json(json& j, const Spectrum1D& s) {
  j = json{{"problem", s.problem},
           {"method", to_string(s.method)},
           {"mu", s.mu},
           {"lambda", s.lambda()},
           {"eigensolutions", s.eigensolutions}};
  if (s.method == Method::fd_oracle) {
    j["grid_n"] = s.grid_n;
    j["lambda_coarse"] = s.lambda_coarse;
    j["lambda_fine"] = s.lambda_fine;
  }
}

}  // namespace sidehole
