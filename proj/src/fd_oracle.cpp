#include <algorithm>
#include <cmath>
#include <sstream>

#include "sidehole/richardson.hpp"
#include "sidehole/secular.hpp"

namespace sidehole {

std::vector<double> tridiagonal_eigenvalues(const SymTridiagonal<double>& t, int count) {
  const std::size_t n = t.d.size();
  if (count < 0 || static_cast<std::size_t>(count) > n)
    throw std::invalid_argument("tridiagonal_eigenvalues: count out of range");

  // Gershgorin interval.
  double lower = t.d[0], upper = t.d[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(t.e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.e[i]) : 0.0);
    lower = std::min(lower, t.d[i] - r);
    upper = std::max(upper, t.d[i] + r);
  }
  const double pad = 1e-12 * std::max(std::abs(lower), std::abs(upper)) + 1e-300;
  lower -= pad;
  upper += pad;

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  const double eps = std::numeric_limits<double>::epsilon();
  for (int j = 0; j < count; ++j) {
    // Smallest x with more than j eigenvalues below it.
    double lo = out.empty() ? lower : out.back() - pad;
    double hi = upper;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi))) break;
      (sturm_count(t, mid) > j ? hi : lo) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

namespace {

std::vector<double> grid_nodes(const GeneralizedProblem& p, int n, int refine) {
  if (n < 1) throw std::invalid_argument("fd grid: n must be positive");
  std::vector<double> breaks{0.0};
  for (const auto& h : p.holes) breaks.push_back(h.a);
  breaks.push_back(1.0);
  const double h = 1.0 / n;
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (breaks[i] - breaks[i - 1] < h * (1.0 - 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "fd_oracle: hole positions must be at least one grid cell (h=" << h
         << ") from the ends and from each other";
      throw std::invalid_argument(os.str());
    }
  }
  std::vector<double> x{0.0};
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double len = breaks[i] - breaks[i - 1];
    const long m = std::max(1L, std::lround(len * n)) * refine;
    for (long j = 1; j <= m; ++j) x.push_back(j == m ? breaks[i] : breaks[i - 1] + len * j / m);
  }
  return x;
}

}  // namespace

SymTridiagonal<double> fd_matrix(const GeneralizedProblem& p, int n, int refine) {
  const std::vector<double> x = grid_nodes(p, n, refine);
  const std::size_t nodes = x.size();

  std::vector<double> diag(nodes, 0.0), off(nodes - 1, 0.0), mass(nodes, 0.0);
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    const double len = x[i + 1] - x[i];
    const double w = p.bore(0.5 * (x[i] + x[i + 1])) / len;
    diag[i] += w;
    diag[i + 1] += w;
    off[i] = -w;
    mass[i] += 0.5 * len * p.bore(x[i]);
    mass[i + 1] += 0.5 * len * p.bore(x[i + 1]);
  }
  for (const auto& h : p.holes) {
    const auto it = std::lower_bound(x.begin(), x.end(), h.a);
    diag[static_cast<std::size_t>(it - x.begin())] += h.kappa * p.bore(h.a);
  }

  // Open ends are Dirichlet: drop the boundary node.
  const std::size_t first = p.left_end == EndCondition::open ? 1 : 0;
  const std::size_t last = p.right_end == EndCondition::open ? nodes - 2 : nodes - 1;

  SymTridiagonal<double> t;
  for (std::size_t i = first; i <= last; ++i) {
    t.d.push_back(diag[i] / mass[i]);
    if (i < last) t.e.push_back(off[i] / std::sqrt(mass[i] * mass[i + 1]));
  }
  return t;
}

std::vector<double> fd_eigenvalues(const GeneralizedProblem& p, int n, int count, int refine) {
  return tridiagonal_eigenvalues(fd_matrix(p, n, refine), count);
}

Spectrum1D fd_oracle(const GeneralizedProblem& p, int n, int count) {
  if (n < 100) throw std::invalid_argument("fd_oracle: grid size must be at least 100");
  if (count < 1) throw std::invalid_argument("fd_oracle: count must be at least 1");

  Spectrum1D out;
  out.method = Method::fd_oracle;
  out.grid_n = n;
  {
    std::ostringstream os;
    os.precision(17);
    os << "generalized: " << p.holes.size() << " hole(s), ends=" << to_string(p.left_end) << "/"
       << to_string(p.right_end) << (p.bore.is_constant() ? ", constant bore" : ", variable bore");
    for (const auto& h : p.holes) os << ", (a=" << h.a << ", kappa=" << h.kappa << ")";
    out.problem = os.str();
  }

  out.lambda_coarse = fd_eigenvalues(p, n, count, 1);
  out.lambda_fine = fd_eigenvalues(p, n, count, 2);
  for (int k = 0; k < count; ++k) {
    const double lam = richardson(out.lambda_coarse[k], out.lambda_fine[k], 2.0, 2.0);
    out.mu.push_back(std::sqrt(std::max(lam, 0.0)));
  }
  return out;
}

Spectrum1D fd_oracle(const SecularProblem& p, int n, int count) {
  return fd_oracle(GeneralizedProblem::from(p), n, count);
}

}  // namespace sidehole
