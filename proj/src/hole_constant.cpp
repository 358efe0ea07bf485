#include "sidehole/hole_constant.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sidehole/richardson.hpp"

namespace sidehole {

using nlohmann::json;

namespace {

bool is_multiple(double value, double step) {
  const double q = value / step;
  return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, q);
}

}  // namespace

int HalfSpaceGrid::cells_x() const { return static_cast<int>(std::lround(2.0 * box_radius_R / spacing_h)); }
int HalfSpaceGrid::cells_y() const { return static_cast<int>(std::lround(box_radius_R / spacing_h)); }

std::vector<std::string> HalfSpaceGrid::violations() const {
  std::vector<std::string> out;
  if (!(spacing_h > 0.0)) out.push_back("spacing_h must be positive");
  if (!(hole_side >= 0.0)) out.push_back("hole_side must be nonnegative");
  if (!out.empty()) return out;
  if (!is_multiple(box_radius_R, spacing_h)) out.push_back("box_radius_R must be a multiple of spacing_h");
  if (hole_side > 0.0) {
    if (!is_multiple(0.5 * hole_side, spacing_h))
      out.push_back("spacing_h must divide the hole half-width evenly");
    if (!(box_radius_R >= 2.0 * hole_side)) out.push_back("box_radius_R must be at least 2 hole sides");
    if (!(spacing_h <= 0.25 * hole_side)) out.push_back("need at least 4 cells across the hole (h <= side/4)");
  } else if (!(box_radius_R >= 2.0 * spacing_h)) {
    out.push_back("box_radius_R must span at least 2 cells");
  }
  return out;
}

HalfSpaceGrid HalfSpaceGrid::make(double R, double h, double hole_side) {
  HalfSpaceGrid g{R, h, hole_side};
  const auto v = g.violations();
  if (!v.empty()) {
    std::string msg = "invalid half-space grid:";
    for (const auto& s : v) msg += " " + s + ";";
    throw std::invalid_argument(msg);
  }
  return g;
}

ZetaField ZetaField::boundary_only(const HalfSpaceGrid& grid) {
  ZetaField f;
  f.grid = grid;
  const int cx = grid.cells_x(), cy = grid.cells_y();
  f.nx = f.nz = cx + 1;
  f.ny = cy + 1;
  const std::size_t total = static_cast<std::size_t>(f.nx) * f.ny * f.nz;
  f.values.assign(total, 1.0);
  f.kind.assign(total, NodeKind::free);
  const double h = grid.spacing_h, R = grid.box_radius_R;
  const double half = 0.5 * grid.hole_side + 1e-9 * h;
  for (int k = 0; k < f.nz; ++k)
    for (int j = 0; j < f.ny; ++j)
      for (int i = 0; i < f.nx; ++i) {
        const std::size_t n = f.index(i, j, k);
        if (i == 0 || i == cx || k == 0 || k == cx || j == 0) {
          f.kind[n] = NodeKind::far;
        } else if (j == cy && std::abs(-R + i * h) <= half && std::abs(-R + k * h) <= half) {
          f.kind[n] = NodeKind::hole;
          f.values[n] = 0.0;
        }
      }
  return f;
}

namespace {

// Restriction of the operator to free nodes: out = L u on free nodes, 0 elsewhere.
void apply_free(const ZetaField& f, const std::vector<double>& u, std::vector<double>& out) {
  const int nx = f.nx, ny = f.ny, nz = f.nz;
  const int top = ny - 1;
  const double h = f.grid.spacing_h, hh = 0.5 * h;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
  std::fill(out.begin(), out.end(), 0.0);
  for (int k = 1; k < nz - 1; ++k)
    for (int j = 1; j < ny; ++j) {
      const std::size_t row = f.index(0, j, k);
      if (j < top) {
        for (int i = 1; i < nx - 1; ++i) {
          const std::size_t n = row + i;
          out[n] = h * (6.0 * u[n] - u[n - sx] - u[n + sx] - u[n - sy] - u[n + sy] - u[n - sz] - u[n + sz]);
        }
      } else {
        for (int i = 1; i < nx - 1; ++i) {
          const std::size_t n = row + i;
          if (f.kind[n] != NodeKind::free) continue;
          out[n] = hh * (4.0 * u[n] - u[n - sx] - u[n + sx] - u[n - sz] - u[n + sz]) + h * (u[n] - u[n - sy]);
        }
      }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Edge weight h * (dual face share) for an edge whose transverse node indices are (p, q).
inline double share(int idx, int last) { return (idx == 0 || idx == last) ? 0.5 : 1.0; }

}  // namespace

ZetaField solve_zeta(const HalfSpaceGrid& grid, double tol, int max_iterations) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_zeta: tol must be positive");
  {
    const auto v = grid.violations();
    if (!v.empty()) throw std::invalid_argument("solve_zeta: " + v.front());
  }
  ZetaField f = ZetaField::boundary_only(grid);
  const std::size_t total = f.values.size();

  std::vector<double> mask(total, 0.0), diag(total, 1.0);
  const double h = grid.spacing_h;
  for (std::size_t n = 0; n < total; ++n)
    if (f.kind[n] == NodeKind::free) mask[n] = 1.0;
  for (int k = 1; k < f.nz - 1; ++k)
    for (int i = 1; i < f.nx - 1; ++i) {
      for (int j = 1; j < f.ny - 1; ++j) diag[f.index(i, j, k)] = 6.0 * h;
      diag[f.index(i, f.ny - 1, k)] = 3.0 * h;
    }

  // b = -L_fc u_c: residual of the field with free nodes at zero.
  std::vector<double> tmp(f.values), r(total), q(total);
  for (std::size_t n = 0; n < total; ++n) tmp[n] *= (1.0 - mask[n]);
  apply_free(f, tmp, r);
  double b_norm = std::sqrt(dot(r, r));
  if (b_norm == 0.0) b_norm = 1.0;

  // Residual of the initial guess (free nodes at 1).
  std::vector<double>& x = f.values;
  apply_free(f, x, q);
  for (std::size_t n = 0; n < total; ++n) r[n] = -q[n];

  std::vector<double> z(total), p(total);
  for (std::size_t n = 0; n < total; ++n) z[n] = mask[n] * r[n] / diag[n];
  p = z;
  double rz = dot(r, z);
  double res = std::sqrt(dot(r, r)) / b_norm;
  int it = 0;
  while (res > tol) {
    if (it >= max_iterations) {
      std::ostringstream os;
      os << "solve_zeta: no convergence after " << it << " iterations (relative residual " << res << ")";
      throw SolverError(os.str());
    }
    apply_free(f, p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t n = 0; n < total; ++n) {
      x[n] += alpha * p[n];
      r[n] -= alpha * q[n];
    }
    for (std::size_t n = 0; n < total; ++n) z[n] = mask[n] * r[n] / diag[n];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t n = 0; n < total; ++n) p[n] = z[n] + beta * p[n];
    res = std::sqrt(dot(r, r)) / b_norm;
    ++it;
  }
  // True residual, guarding against drift of the recursive one.
  apply_free(f, x, q);
  f.relative_residual = std::sqrt(dot(q, q)) / b_norm;
  f.iterations = it;
  return f;
}

double energy(const ZetaField& f) {
  const int lx = f.nx - 1, ly = f.ny - 1, lz = f.nz - 1;
  const double h = f.grid.spacing_h;
  double e = 0.0;
  for (int k = 0; k <= lz; ++k)
    for (int j = 0; j <= ly; ++j)
      for (int i = 0; i <= lx; ++i) {
        const double u = f.at(i, j, k);
        if (i < lx) {
          const double d = u - f.at(i + 1, j, k);
          e += h * share(j, ly) * share(k, lz) * d * d;
        }
        if (j < ly) {
          const double d = u - f.at(i, j + 1, k);
          e += h * share(i, lx) * share(k, lz) * d * d;
        }
        if (k < lz) {
          const double d = u - f.at(i, j, k + 1);
          e += h * share(i, lx) * share(j, ly) * d * d;
        }
      }
  return e;
}

double form_energy(const ZetaField& f) {
  const int lx = f.nx - 1, ly = f.ny - 1, lz = f.nz - 1;
  const double h = f.grid.spacing_h;
  double e = 0.0;
  for (int k = 0; k <= lz; ++k)
    for (int j = 0; j <= ly; ++j)
      for (int i = 0; i <= lx; ++i) {
        const double u = f.at(i, j, k);
        double lu = 0.0;
        const double wx = h * share(j, ly) * share(k, lz);
        const double wy = h * share(i, lx) * share(k, lz);
        const double wz = h * share(i, lx) * share(j, ly);
        if (i > 0) lu += wx * (u - f.at(i - 1, j, k));
        if (i < lx) lu += wx * (u - f.at(i + 1, j, k));
        if (j > 0) lu += wy * (u - f.at(i, j - 1, k));
        if (j < ly) lu += wy * (u - f.at(i, j + 1, k));
        if (k > 0) lu += wz * (u - f.at(i, j, k - 1));
        if (k < lz) lu += wz * (u - f.at(i, j, k + 1));
        e += u * lu;
      }
  return e;
}

double symmetry_defect(const ZetaField& f) {
  double d = 0.0;
  for (int k = 0; k < f.nz; ++k)
    for (int j = 0; j < f.ny; ++j)
      for (int i = 0; i < f.nx; ++i) {
        const double u = f.at(i, j, k);
        d = std::max(d, std::abs(u - f.at(f.nx - 1 - i, j, k)));
        d = std::max(d, std::abs(u - f.at(k, j, i)));
      }
  return d;
}

LadderEntry solve_ladder_entry(double R, double h, double tol) {
  const ZetaField f = solve_zeta(HalfSpaceGrid::make(R, h), tol);
  LadderEntry e;
  e.R = R;
  e.h = h;
  e.energy = energy(f);
  e.iterations = f.iterations;
  e.relative_residual = f.relative_residual;
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  e.min_value = *lo;
  e.max_value = *hi;
  e.symmetry_defect = symmetry_defect(f);
  return e;
}

namespace {

void check_ratios(const std::vector<double>& v, const char* name) {
  if (v.size() < 3) throw std::invalid_argument(std::string("estimate_alpha: ") + name + " needs at least 3 entries");
  const std::size_t n = v.size();
  const double r1 = v[n - 2] / v[n - 3], r2 = v[n - 1] / v[n - 2];
  if (std::abs(r1 - r2) > 1e-9 * std::abs(r1) || std::abs(r1 - 1.0) < 1e-9)
    throw std::invalid_argument(std::string("estimate_alpha: ") + name + " must have a constant ratio != 1");
}

void check_monotone(const std::vector<LadderEntry>& l, double tol, const char* name) {
  int dir = 0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const double d = l[i].energy - l[i - 1].energy;
    if (std::abs(d) <= tol * std::abs(l[i].energy)) continue;
    const int s = d > 0 ? 1 : -1;
    if (dir != 0 && s != dir) {
      std::ostringstream os;
      os << "estimate_alpha: energies along the " << name << " ladder are not monotone (entry " << i << ")";
      throw SolverError(os.str());
    }
    dir = s;
  }
}

}  // namespace

AlphaEstimate combine_ladders(std::vector<LadderEntry> ladder_R, std::vector<LadderEntry> ladder_h,
                              double monotone_tol) {
  if (ladder_R.size() < 3 || ladder_h.size() < 3)
    throw std::invalid_argument("estimate_alpha: each ladder needs at least 3 entries");
  check_monotone(ladder_R, monotone_tol, "R");
  check_monotone(ladder_h, monotone_tol, "h");

  AlphaEstimate a;
  const std::size_t nr = ladder_R.size(), nh = ladder_h.size();
  // Truncation acts as a capacitance in series: 1/E(R) = 1/E(inf) - beta/R, so
  // the R ladder is fitted in 1/E with parameter 1/R.
  const auto fr = fit_three_level(1.0 / ladder_R[nr - 3].energy, 1.0 / ladder_R[nr - 2].energy,
                                  1.0 / ladder_R[nr - 1].energy, ladder_R[nr - 1].R / ladder_R[nr - 2].R);
  const auto fh = fit_three_level(ladder_h[nh - 3].energy, ladder_h[nh - 2].energy, ladder_h[nh - 1].energy,
                                  ladder_h[nh - 2].h / ladder_h[nh - 1].h);
  if (!fr.ok || !fh.ok) throw SolverError("estimate_alpha: ladder increments change sign; no power-law fit");
  if (!(fr.limit > 0.0) || !(fh.limit > 0.0)) throw SolverError("estimate_alpha: ladder limit is not positive");

  a.order_R = fr.order;
  a.order_h = fh.order;
  a.limit_R = 1.0 / fr.limit;
  a.limit_h = fh.limit;
  a.anchor_energy = ladder_R.front().energy;
  // The series term beta/R0 does not depend on h to leading order.
  const double inv = 1.0 / a.limit_h + 1.0 / a.limit_R - 1.0 / a.anchor_energy;
  a.alpha = inv > 0.0 ? 1.0 / inv : 0.0;
  a.low_confidence = !(a.order_R > 0.5 && a.order_R < 2.5 && a.order_h > 0.5 && a.order_h < 2.5);
  a.ladder_R = std::move(ladder_R);
  a.ladder_h = std::move(ladder_h);
  if (!(a.alpha > 0.0)) throw SolverError("estimate_alpha: extrapolated alpha is not positive");
  return a;
}

AlphaEstimate estimate_alpha(const std::vector<double>& Rs, const std::vector<double>& hs, double tol) {
  check_ratios(Rs, "ladder_R");
  check_ratios(hs, "ladder_h");
  for (std::size_t i = 1; i < Rs.size(); ++i)
    if (!(Rs[i] > Rs[i - 1])) throw std::invalid_argument("estimate_alpha: ladder_R must increase");
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1])) throw std::invalid_argument("estimate_alpha: ladder_h must decrease");

  const double R0 = Rs.front(), h0 = hs.front();
  std::vector<LadderEntry> lr, lh;
  const LadderEntry anchor = solve_ladder_entry(R0, h0, tol);
  lr.push_back(anchor);
  lh.push_back(anchor);
  for (std::size_t i = 1; i < Rs.size(); ++i) lr.push_back(solve_ladder_entry(Rs[i], h0, tol));
  for (std::size_t i = 1; i < hs.size(); ++i) lh.push_back(solve_ladder_entry(R0, hs[i], tol));
  return combine_ladders(std::move(lr), std::move(lh), 10.0 * tol);
}

// ---------------------------------------------------------------------------
// Subareas oracle

PlateSolution plate_charges(int n) {
  if (n < 8) throw std::invalid_argument("capacitance_oracle: need at least 8 patches per side");
  const double b = 1.0 / n;
  const int m = n * n;
  const double inv4pi = 1.0 / (4.0 * std::numbers::pi);
  const double g = b / (2.0 * std::sqrt(3.0));  // 2x2 Gauss offsets
  const double self = b * std::log(1.0 + std::sqrt(2.0)) / std::numbers::pi;

  const auto centre = [&](int p) { return std::pair{-0.5 + (p % n + 0.5) * b, -0.5 + (p / n + 0.5) * b}; };
  Eigen::MatrixXd G(m, m);
  for (int p = 0; p < m; ++p) {
    const auto [xp, yp] = centre(p);
    for (int q = 0; q < m; ++q) {
      if (p == q) {
        G(p, q) = self;
        continue;
      }
      const auto [xq, yq] = centre(q);
      double s = 0.0;
      for (double ox : {-g, g})
        for (double oy : {-g, g}) s += 1.0 / std::hypot(xp - xq - ox, yp - yq - oy);
      G(p, q) = inv4pi * s * b * b / 4.0;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw SolverError("capacitance_oracle: influence matrix is not positive definite");
  const Eigen::VectorXd sigma = llt.solve(Eigen::VectorXd::Ones(m));

  PlateSolution out;
  out.n = n;
  out.charge.resize(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) {
    out.charge[static_cast<std::size_t>(p)] = sigma(p) * b * b;
    out.total_charge += out.charge[static_cast<std::size_t>(p)];
  }
  return out;
}

double capacitance_oracle(int n) {
  const double coarse = plate_charges(n).alpha();
  const double fine = plate_charges(2 * n).alpha();
  return richardson(coarse, fine, 2.0, 1.0);
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const LadderEntry& e) {
  j = json{{"R", e.R},
           {"h", e.h},
           {"energy", e.energy},
           {"iterations", e.iterations},
           {"relative_residual", e.relative_residual},
           {"min_value", e.min_value},
           {"max_value", e.max_value},
           {"symmetry_defect", e.symmetry_defect}};
}

void from_json(const json& j, LadderEntry& e) {
  e.R = j.at("R");
  e.h = j.at("h");
  e.energy = j.at("energy");
  e.iterations = j.at("iterations");
  e.relative_residual = j.at("relative_residual");
  e.min_value = j.at("min_value");
  e.max_value = j.at("max_value");
  e.symmetry_defect = j.at("symmetry_defect");
}

void to_json(json& j, const AlphaEstimate& a) {
  j = json{{"alpha", a.alpha},
           {"ladder_R", a.ladder_R},
           {"ladder_h", a.ladder_h},
           {"diagnostics",
            {{"order_R", a.order_R},
             {"order_h", a.order_h},
             {"limit_R", a.limit_R},
             {"limit_h", a.limit_h},
             {"anchor_energy", a.anchor_energy},
             {"low_confidence", a.low_confidence}}}};
  j["oracle_alpha"] = a.oracle_alpha ? json(*a.oracle_alpha) : json(nullptr);
}

void from_json(const json& j, AlphaEstimate& a) {
  a.alpha = j.at("alpha");
  a.ladder_R = j.at("ladder_R").get<std::vector<LadderEntry>>();
  a.ladder_h = j.at("ladder_h").get<std::vector<LadderEntry>>();
  const json& d = j.at("diagnostics");
  a.order_R = d.at("order_R");
  a.order_h = d.at("order_h");
  a.limit_R = d.at("limit_R");
  a.limit_h = d.at("limit_h");
  a.anchor_energy = d.at("anchor_energy");
  a.low_confidence = d.at("low_confidence");
  if (j.contains("oracle_alpha") && !j.at("oracle_alpha").is_null()) a.oracle_alpha = j.at("oracle_alpha").get<double>();
}

}  // namespace sidehole
