#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sidehole/secular.hpp"

namespace sidehole {

namespace {

constexpr double kPi = std::numbers::pi;

// State is (u, q) with q = g u'. For a constant bore g is taken as 1.
using State = std::array<double, 2>;

State initial_state(EndCondition left) {
  return left == EndCondition::open ? State{0.0, 1.0} : State{1.0, 0.0};
}

// Exact propagation of -u'' = mu^2 u over length l.
State propagate_exact(const State& s, double mu, double l) {
  const double c = std::cos(mu * l), sn = std::sin(mu * l);
  return {s[0] * c + s[1] * sn / mu, -s[0] * mu * sn + s[1] * c};
}

// Classical RK4 for u' = q / g, q' = -mu^2 g u on [x0, x1].
State propagate_rk4(State s, double mu, double x0, double x1, const BoreProfile& g) {
  const double len = x1 - x0;
  const double h_target = std::min(1.0 / 2000.0, 0.005 / mu);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / h_target)));
  const double h = len / steps;
  const double m2 = mu * mu;
  const auto rhs = [&](double x, const State& y) {
    const double gx = g(x);
    return State{y[1] / gx, -m2 * gx * y[0]};
  };
  for (int i = 0; i < steps; ++i) {
    const double x = x0 + i * h;
    const State k1 = rhs(x, s);
    const State k2 = rhs(x + h / 2, {s[0] + h / 2 * k1[0], s[1] + h / 2 * k1[1]});
    const State k3 = rhs(x + h / 2, {s[0] + h / 2 * k2[0], s[1] + h / 2 * k2[1]});
    const State k4 = rhs(x + h, {s[0] + h * k3[0], s[1] + h * k3[1]});
    s[0] += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    s[1] += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return s;
}

struct Piece {
  double x0, x1;
  double kappa_at_end;  // coupling applied at x1 (0 if x1 is not a hole)
};

std::vector<Piece> pieces(const GeneralizedProblem& p) {
  std::vector<std::pair<double, double>> marks;  // (x, kappa)
  for (const auto& h : p.holes) marks.emplace_back(h.a, h.kappa);
  for (double b : p.bore.breakpoints()) marks.emplace_back(b, 0.0);
  marks.emplace_back(1.0, 0.0);
  std::sort(marks.begin(), marks.end());

  std::vector<Piece> out;
  double x = 0.0;
  for (const auto& [m, k] : marks) {
    if (m > x) {
      out.push_back({x, m, k});
      x = m;
    } else if (!out.empty()) {
      out.back().kappa_at_end += k;  // coincident marks
    }
  }
  return out;
}

// Runs the shooting and optionally records the state at the start of every piece.
State shoot(double mu, const GeneralizedProblem& p, const std::vector<Piece>& ps, std::vector<State>* trace) {
  State s = initial_state(p.left_end);
  const bool constant = p.bore.is_constant();
  for (const Piece& pc : ps) {
    if (trace) trace->push_back(s);
    s = constant ? propagate_exact(s, mu, pc.x1 - pc.x0) : propagate_rk4(s, mu, pc.x0, pc.x1, p.bore);
    if (pc.kappa_at_end != 0.0) s[1] += pc.kappa_at_end * (constant ? 1.0 : p.bore(pc.x1)) * s[0];
  }
  return s;
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

double shooting_residual(double mu, const GeneralizedProblem& p) {
  if (!(mu > 0.0)) throw std::invalid_argument("shooting_residual: mu must be positive");
  const State s = shoot(mu, p, pieces(p), nullptr);
  return p.right_end == EndCondition::open ? s[0] : s[1];
}

Spectrum1D shooting_spectrum(const GeneralizedProblem& p, int count, const ShootingOptions& opt) {
  if (count < 1) throw std::invalid_argument("shooting_spectrum: count must be at least 1");
  for (std::size_t i = 0; i < p.holes.size(); ++i) {
    if (!(p.holes[i].a > 0.0 && p.holes[i].a < 1.0) || !(p.holes[i].kappa >= 0.0))
      throw std::invalid_argument("shooting_spectrum: holes need 0 < a < 1 and kappa >= 0");
    if (i > 0 && !(p.holes[i].a > p.holes[i - 1].a))
      throw std::invalid_argument("shooting_spectrum: holes must be sorted by position");
  }

  const std::vector<Piece> ps = pieces(p);
  const bool right_open = p.right_end == EndCondition::open;
  const auto S = [&](double mu) {
    const State s = shoot(mu, p, ps, nullptr);
    return right_open ? s[0] : s[1];
  };

  const int per_pi = opt.scan_points_per_pi > 0 ? opt.scan_points_per_pi : (p.bore.is_constant() ? 1000 : 64);
  const double step = kPi / per_pi;
  // Generous cap: every coupling can push at most one eigenvalue past each k pi.
  const double bore_ratio = [&] {
    double lo = p.bore(0.0), hi = lo;
    for (int i = 1; i <= 200; ++i) {
      lo = std::min(lo, p.bore(i / 200.0));
      hi = std::max(hi, p.bore(i / 200.0));
    }
    return hi / lo;
  }();
  const double mu_cap = (count + p.holes.size() + 2) * kPi * 4.0 * std::max(1.0, bore_ratio);

  Spectrum1D out;
  out.method = Method::shooting;
  {
    std::ostringstream os;
    os.precision(17);
    os << "generalized: " << p.holes.size() << " hole(s), ends=" << to_string(p.left_end) << "/"
       << to_string(p.right_end) << (p.bore.is_constant() ? ", constant bore" : ", variable bore");
    for (const auto& h : p.holes) os << ", (a=" << h.a << ", kappa=" << h.kappa << ")";
    out.problem = os.str();
  }

  double prev_mu = step;
  double prev_val = S(prev_mu);
  if (prev_val == 0.0) out.mu.push_back(prev_mu);
  for (long j = 2; static_cast<int>(out.mu.size()) < count; ++j) {
    const double mu = j * step;
    if (mu > mu_cap) throw BracketError("shooting_spectrum: fewer roots than requested below the scan cap");
    const double val = S(mu);
    if (val == 0.0) {
      out.mu.push_back(mu);
    } else if (prev_val != 0.0 && sign_of(val) != sign_of(prev_val)) {
      double lo = prev_mu, hi = mu;
      const int s_lo = sign_of(prev_val);
      while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const int s = sign_of(S(mid));
        if (s == 0) {
          lo = hi = mid;
          break;
        }
        (s == s_lo ? lo : hi) = mid;
      }
      out.mu.push_back(0.5 * (lo + hi));
    }
    prev_mu = mu;
    prev_val = val;
  }

  if (p.bore.is_constant()) {
    for (double mu : out.mu) {
      std::vector<State> trace;
      shoot(mu, p, ps, &trace);
      EigenSolution1D u;
      u.mu = mu;
      u.lambda = mu * mu;
      for (std::size_t i = 0; i < ps.size(); ++i)
        u.segments.push_back({ps[i].x0, ps[i].x1, trace[i][1] / mu, trace[i][0]});
      double scale = 1.0 / std::sqrt(u.norm_squared());
      const double lead = u.segments.front().c_sin != 0.0 ? u.segments.front().c_sin : u.segments.front().c_cos;
      if (lead < 0.0) scale = -scale;
      for (Segment& s : u.segments) {
        s.c_sin *= scale;
        s.c_cos *= scale;
      }
      out.eigensolutions.push_back(std::move(u));
    }
  }

  if (opt.cross_validate) {
    double margin = 1.0;
    for (const auto& h : p.holes) margin = std::min({margin, h.a, 1.0 - h.a});
    for (std::size_t i = 1; i < p.holes.size(); ++i) margin = std::min(margin, p.holes[i].a - p.holes[i - 1].a);
    const int n = std::max(opt.oracle_n, static_cast<int>(std::ceil(2.0 / margin)));

    // A pure Neumann tube without coupling has a zero eigenvalue the shooting scan skips.
    bool zero_mode = p.left_end == EndCondition::closed && p.right_end == EndCondition::closed;
    for (const auto& h : p.holes) zero_mode = zero_mode && h.kappa == 0.0;
    const int skip = zero_mode ? 1 : 0;

    const Spectrum1D fd = fd_oracle(p, n, count + skip);
    for (int k = 0; k < count; ++k) {
      const double lam = out.mu[k] * out.mu[k];
      const double ref = fd.mu[k + skip] * fd.mu[k + skip];
      const double rel = std::abs(lam - ref) / lam;
      if (rel > opt.oracle_rel_tol) {
        std::ostringstream os;
        os.precision(15);
        os << "shooting root " << k + 1 << " (mu=" << out.mu[k]
           << ") disagrees with the finite-difference oracle (mu=" << fd.mu[k + skip] << ", relative gap " << rel
           << "); a root was probably skipped by the scan";
        throw BracketError(os.str());
      }
    }
  }
  return out;
}

}  // namespace sidehole
