#include "sidehole/tube3d.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "sidehole/secular.hpp"

namespace sidehole {

using nlohmann::json;

std::vector<std::string> Tube3DConfig::violations() const {
  std::vector<std::string> v;
  const auto need = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  need(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0,1)");
  need(hole.delta >= 0.0, "hole delta must be nonnegative");
  need(hole.position_a > 0.0 && hole.position_a < 1.0, "hole position_a must lie in (0,1)");
  need(modes >= 1, "modes must be at least 1");
  need(grid.cells_width >= 4, "need at least 4 cells across the tube");
  need(grid.hole_cells >= 4, "need at least 4 cells across the hole");
  need(grid.mouth_cells >= 1, "mouth_cells must be positive");
  need(grid.growth > 1.0 && grid.growth <= 1.5, "growth must lie in (1, 1.5]");
  need(grid.hmax_x1 > 0.0, "hmax_x1 must be positive");
  need(grid.refine >= 1, "refine must be at least 1");
  if (!v.empty()) return v;
  const double s = hole_side();
  if (hole.delta > 0.0) {
    need(s < epsilon, "hole side delta*epsilon^2 must be smaller than epsilon");
    need(!mouth || hole.position_a - s / 2 > epsilon, "hole must be disjoint from the mouth patch (a - side/2 > epsilon)");
    need(hole.position_a + s / 2 < 1.0, "hole must end before x1 = 1");
  }
  return v;
}

namespace {

std::string budget_message(std::size_t needed, std::size_t budget) {
  std::ostringstream os;
  os << "grid needs " << needed << " nodes but the node budget is " << budget << "; minimal budget: " << needed;
  return os.str();
}

}  // namespace

BudgetError::BudgetError(std::size_t needed_, std::size_t budget_)
    : std::invalid_argument(budget_message(needed_, budget_)), needed(needed_), budget(budget_) {}

StudyError::StudyError(const std::string& what, SweepReport partial_) : SolverError(what), partial(std::move(partial_)) {}

double Grid3D::max_grading_ratio() const {
  double r = 1.0;
  for (const auto* x : {&x1, &x2, &x3})
    for (std::size_t i = 2; i < x->size(); ++i) {
      const double a = (*x)[i - 1] - (*x)[i - 2], b = (*x)[i] - (*x)[i - 1];
      r = std::max({r, a / b, b / a});
    }
  return r;
}

// ---------------------------------------------------------------------------
// Grids

namespace {

struct FineZone {
  double lo, hi, h;
};

// Target cell size: fine inside zones, growing linearly with distance, capped.
double size_at(double x, const std::vector<FineZone>& zones, double hmax, double growth) {
  double h = hmax;
  for (const auto& z : zones) {
    const double d = x < z.lo ? z.lo - x : (x > z.hi ? x - z.hi : 0.0);
    h = std::min(h, z.h + (growth - 1.0) * d);
  }
  return h;
}

// Nodes on [p, q] following the size function, scaled to a whole cell count.
std::vector<double> mesh_segment(double p, double q, const std::vector<FineZone>& zones, double hmax,
                                 double growth) {
  constexpr int kSamples = 4000;
  std::vector<double> xs(kSamples + 1), phi(kSamples + 1, 0.0);
  for (int i = 0; i <= kSamples; ++i) xs[i] = p + (q - p) * i / kSamples;
  for (int i = 1; i <= kSamples; ++i) {
    const double mid = 0.5 * (xs[i - 1] + xs[i]);
    phi[i] = phi[i - 1] + (xs[i] - xs[i - 1]) / size_at(mid, zones, hmax, growth);
  }
  // Whole cell count closest to phi in ratio; the stretch is below sqrt(2).
  const double total = phi.back();
  const int lo = std::max(1, static_cast<int>(std::floor(total + 1e-6)));
  const int n = (total / lo <= (lo + 1) / total) ? lo : lo + 1;
  std::vector<double> out{p};
  std::size_t s = 1;
  for (int c = 1; c < n; ++c) {
    const double target = phi.back() * c / n;
    while (phi[s] < target) ++s;
    const double t = (target - phi[s - 1]) / (phi[s] - phi[s - 1]);
    out.push_back(xs[s - 1] + t * (xs[s] - xs[s - 1]));
  }
  out.push_back(q);
  return out;
}

std::vector<double> mesh_axis(std::vector<double> breaks, const std::vector<FineZone>& zones, double hmax,
                              double growth) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> axis{breaks.front()};
  for (std::size_t b = 1; b < breaks.size(); ++b) {
    const auto seg = mesh_segment(breaks[b - 1], breaks[b], zones, hmax, growth);
    axis.insert(axis.end(), seg.begin() + 1, seg.end());
  }
  return axis;
}

}  // namespace

std::vector<double> graded_axis(const std::vector<double>& breaks, const std::vector<double>& fine, double hmax,
                                double growth) {
  if (breaks.size() < 2 || fine.size() != breaks.size())
    throw std::invalid_argument("graded_axis: need matching breakpoint and size lists with at least 2 entries");
  std::vector<FineZone> zones;
  for (std::size_t b = 0; b < breaks.size(); ++b) zones.push_back({breaks[b], breaks[b], fine[b]});
  return mesh_axis(breaks, zones, hmax, growth);
}

Grid3D with_patches(Grid3D g, const Tube3DConfig& cfg) {
  // Patch edges lie on dual-cell faces, halfway between node lines, so the
  // strict inequalities below select whole dual cells.
  const double eps = cfg.epsilon, s = cfg.hole_side(), a = cfg.hole.position_a;
  g.dirichlet.assign(g.nodes(), 0);
  const std::size_t top = g.n2() - 1;
  for (std::size_t k = 0; k < g.n3(); ++k)
    for (std::size_t j = 0; j < g.n2(); ++j)
      for (std::size_t i = 0; i < g.n1(); ++i) {
        bool d = false;
        if (cfg.right_end_dirichlet && i + 1 == g.n1()) d = true;
        if (j == top) {
          if (cfg.mouth && g.x1[i] < eps) d = true;
          if (s > 0.0 && std::abs(g.x1[i] - a) < s / 2 && std::abs(g.x3[k]) < s / 2) d = true;
        }
        g.dirichlet[g.index(i, j, k)] = d ? 1 : 0;
      }
  return g;
}

Grid3D build_grid(const Tube3DConfig& cfg) {
  const auto v = cfg.violations();
  if (!v.empty()) throw std::invalid_argument("invalid tube configuration: " + v.front());

  const double eps = cfg.epsilon, s = cfg.hole_side(), a = cfg.hole.position_a;
  const GridControls& gc = cfg.grid;
  const int r = gc.refine;
  const bool hole = s > 0.0;
  const double h_cross = eps / (gc.cells_width * r);
  const double hmax_x1 = std::min(gc.hmax_x1, 0.25) / r;
  // Fine zones never exceed the caps of their axes, or rounding would split
  // the patch-edge cells.
  const int n_hole = std::max(gc.hole_cells * r, static_cast<int>(std::ceil(s / std::min(h_cross, hmax_x1) - 1e-9)));
  const double h_hole = hole ? s / n_hole : h_cross;
  // Mouth nodes 0, h, ..., eps - h/2 so their dual cells tile [0, eps].
  const int n_mouth = std::max(gc.mouth_cells * r, static_cast<int>(std::ceil(eps / hmax_x1 - 0.5 - 1e-9)));
  const double h_mouth = eps / (n_mouth + 0.5);

  if (hole && !(s + h_hole < eps)) throw std::invalid_argument("invalid tube configuration: hole too wide for the grid");
  if (hole && cfg.mouth && !(a - s / 2 - h_hole / 2 > eps + h_mouth / 2))
    throw std::invalid_argument("invalid tube configuration: hole and mouth cells overlap");
  if (hole && !(a + s / 2 + h_hole / 2 < 1.0))
    throw std::invalid_argument("invalid tube configuration: hole cells reach x1 = 1");

  Grid3D g;
  // Lower the growth until the grading bound holds (whole-cell rounding can
  // squeeze a short graded segment).
  for (double growth = gc.growth;; growth = 1.0 + 0.5 * (growth - 1.0)) {
    std::vector<double> b1{0.0, 1.0};
    std::vector<FineZone> z1;
    if (cfg.mouth) {
      b1.insert(b1.end(), {eps - h_mouth / 2, eps + h_mouth / 2});
      z1.push_back({0.0, eps + h_mouth / 2, h_mouth});
    }
    if (hole) {
      b1.insert(b1.end(), {a - s / 2 - h_hole / 2, a - s / 2 + h_hole / 2, a + s / 2 - h_hole / 2, a + s / 2 + h_hole / 2});
      z1.push_back({a - s / 2 - h_hole / 2, a + s / 2 + h_hole / 2, h_hole});
    }
    g.x1 = mesh_axis(b1, z1, hmax_x1, growth);

    std::vector<FineZone> z2{{0.0, 0.0, h_hole}};
    g.x2 = mesh_axis({-eps, 0.0}, z2, h_cross, growth);

    std::vector<double> b3{-eps / 2, eps / 2};
    std::vector<FineZone> z3;
    if (hole) {
      b3.insert(b3.end(), {-s / 2 - h_hole / 2, -s / 2 + h_hole / 2, s / 2 - h_hole / 2, s / 2 + h_hole / 2});
      z3.push_back({-s / 2 - h_hole / 2, s / 2 + h_hole / 2, h_hole});
    }
    g.x3 = mesh_axis(b3, z3, h_cross, growth);

    if (g.max_grading_ratio() <= 1.5) break;
    if (growth < 1.01) throw SolverError("build_grid: could not meet the grading bound 1.5");
  }

  const std::size_t nodes = g.nodes();
  if (nodes > cfg.node_budget) throw BudgetError(nodes, cfg.node_budget);
  return with_patches(std::move(g), cfg);
}

Grid3D box_grid(double l1, double l2, double l3, int cells, bool dirichlet_faces) {
  if (cells < 2 || !(l1 > 0 && l2 > 0 && l3 > 0)) throw std::invalid_argument("box_grid: need positive sizes and >= 2 cells");
  Grid3D g;
  for (int i = 0; i <= cells; ++i) {
    g.x1.push_back(l1 * i / cells);
    g.x2.push_back(l2 * i / cells);
    g.x3.push_back(l3 * i / cells);
  }
  g.dirichlet.assign(g.nodes(), 0);
  if (dirichlet_faces)
    for (std::size_t k = 0; k < g.n3(); ++k)
      for (std::size_t j = 0; j < g.n2(); ++j)
        for (std::size_t i = 0; i < g.n1(); ++i)
          if (i == 0 || j == 0 || k == 0 || i + 1 == g.n1() || j + 1 == g.n2() || k + 1 == g.n3())
            g.dirichlet[g.index(i, j, k)] = 1;
  return g;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

std::vector<double> dual_widths(const std::vector<double>& x) {
  std::vector<double> d(x.size());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? x[0] : 0.5 * (x[i - 1] + x[i]);
    const double hi = i + 1 == n ? x[n - 1] : 0.5 * (x[i] + x[i + 1]);
    d[i] = hi - lo;
  }
  return d;
}

template <typename Visit>
void for_each_edge(const Grid3D& g, Visit&& visit) {
  const auto d1 = dual_widths(g.x1), d2 = dual_widths(g.x2), d3 = dual_widths(g.x3);
  for (std::size_t k = 0; k < g.n3(); ++k)
    for (std::size_t j = 0; j < g.n2(); ++j)
      for (std::size_t i = 0; i < g.n1(); ++i) {
        const std::size_t p = g.index(i, j, k);
        if (i + 1 < g.n1()) visit(p, g.index(i + 1, j, k), d2[j] * d3[k] / (g.x1[i + 1] - g.x1[i]));
        if (j + 1 < g.n2()) visit(p, g.index(i, j + 1, k), d1[i] * d3[k] / (g.x2[j + 1] - g.x2[j]));
        if (k + 1 < g.n3()) visit(p, g.index(i, j, k + 1), d1[i] * d2[j] / (g.x3[k + 1] - g.x3[k]));
      }
}

constexpr std::size_t kFixed = static_cast<std::size_t>(-1);

std::vector<std::size_t> unknown_map(const Grid3D& g) {
  std::vector<std::size_t> map(g.nodes(), kFixed);
  std::size_t n = 0;
  for (std::size_t p = 0; p < g.nodes(); ++p)
    if (!g.dirichlet[p]) map[p] = n++;
  return map;
}

// Uniform double in [-1, 1) from raw generator bits (platform independent).
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-52 - 1.0; }

}  // namespace

Operator3D assemble(const Grid3D& g) {
  if (g.dirichlet.size() != g.nodes()) throw std::invalid_argument("assemble: Dirichlet flags do not match the grid");
  const auto map = unknown_map(g);
  Operator3D op;
  op.total_nodes = g.nodes();
  for (std::size_t p = 0; p < g.nodes(); ++p)
    if (map[p] != kFixed) op.free_nodes.push_back(p);
  const auto n = static_cast<Eigen::Index>(op.free_nodes.size());
  if (n == 0) throw std::invalid_argument("assemble: every node is Dirichlet");
  op.has_dirichlet = static_cast<std::size_t>(n) < g.nodes();

  const auto d1 = dual_widths(g.x1), d2 = dual_widths(g.x2), d3 = dual_widths(g.x3);
  op.mass.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t p = op.free_nodes[static_cast<std::size_t>(r)];
    const std::size_t i = p % g.n1(), j = (p / g.n1()) % g.n2(), k = p / (g.n1() * g.n2());
    op.mass(r) = d1[i] * d2[j] * d3[k];
  }

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * 7);
  for_each_edge(g, [&](std::size_t p, std::size_t q, double w) {
    const std::size_t a = map[p], b = map[q];
    if (a != kFixed) t.emplace_back(a, a, w);
    if (b != kFixed) t.emplace_back(b, b, w);
    if (a != kFixed && b != kFixed) {
      t.emplace_back(a, b, -w);
      t.emplace_back(b, a, -w);
    }
  });
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(t.begin(), t.end());
  op.stiffness.makeCompressed();

  // Exact symmetry of the stored entries.
  const Eigen::SparseMatrix<double> kt = op.stiffness.transpose();
  if (kt.nonZeros() != op.stiffness.nonZeros()) throw SolverError("assemble: stiffness pattern is not symmetric");
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::SparseMatrix<double>::InnerIterator a(op.stiffness, c), b(kt, c);
    for (; a; ++a, ++b)
      if (!b || a.index() != b.index() || a.value() != b.value())
        throw SolverError("assemble: stiffness is not exactly symmetric");
  }

  // Nonnegative form on random vectors.
  std::mt19937_64 rng(20240917);
  Eigen::VectorXd v(n);
  for (int trial = 0; trial < 100; ++trial) {
    for (Eigen::Index r = 0; r < n; ++r) v(r) = unit(rng);
    const double form = v.dot(op.stiffness * v);
    const double scale = v.cwiseAbs().dot(op.stiffness.cwiseAbs() * v.cwiseAbs());
    if (form < -1e-13 * scale) throw SolverError("assemble: quadratic form is negative on a random vector");
  }
  return op;
}

Operator3D assemble(const Tube3DConfig& cfg, const Grid3D& grid) { return assemble(with_patches(grid, cfg)); }

double edge_energy(const Grid3D& g, const Operator3D& op, const Eigen::VectorXd& u) {
  std::vector<double> full(g.nodes(), 0.0);
  for (std::size_t r = 0; r < op.free_nodes.size(); ++r) full[op.free_nodes[r]] = u(static_cast<Eigen::Index>(r));
  double e = 0.0;
  for_each_edge(g, [&](std::size_t p, std::size_t q, double w) {
    const double d = full[p] - full[q];
    e += w * d * d;
  });
  return e;
}

// ---------------------------------------------------------------------------
// Eigensolver

EigenResult3D smallest_eigs(const Operator3D& op, int m, const EigenOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = op.stiffness.rows();
  if (m < 1) throw std::invalid_argument("smallest_eigs: m must be at least 1");
  if (m > n) throw std::invalid_argument("smallest_eigs: more eigenpairs requested than unknowns");
  const Eigen::Index p = std::min<Eigen::Index>(n, opt.block > 0 ? opt.block : std::max(2 * m + 2, m + 4));

  // Without Dirichlet nodes K is singular; shift by the mass.
  const double sigma = op.has_dirichlet ? 0.0 : 1.0;
  const Eigen::VectorXd sq = op.mass.cwiseSqrt();
  const Eigen::VectorXd isq = sq.cwiseInverse();
  Eigen::SparseMatrix<double> a = op.stiffness;
  if (sigma != 0.0)
    for (Eigen::Index r = 0; r < n; ++r) a.coeffRef(r, r) += sigma * op.mass(r);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(a);
  if (llt.info() != Eigen::Success) throw SolverError("smallest_eigs: Cholesky factorization failed");

  const auto apply_b = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return isq.asDiagonal() * (op.stiffness * (isq.asDiagonal() * x));
  };
  const auto orth = [](const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
  };

  std::mt19937_64 rng(opt.seed);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) = unit(rng);
  x = orth(x);

  EigenResult3D out;
  out.unknowns = static_cast<std::size_t>(n);
  out.nodes = op.total_nodes;
  Eigen::VectorXd theta;
  std::vector<double> res(static_cast<std::size_t>(m));
  bool done = false;
  for (int it = 1; it <= opt.max_iterations && !done; ++it) {
    const Eigen::MatrixXd y = sq.asDiagonal() * llt.solve(sq.asDiagonal() * x);
    const Eigen::MatrixXd q = orth(y);
    const Eigen::MatrixXd bq = apply_b(q);
    Eigen::MatrixXd h = q.transpose() * bq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    theta = es.eigenvalues();
    x = q * es.eigenvectors();
    const Eigen::MatrixXd bx = bq * es.eigenvectors();
    done = true;
    for (int i = 0; i < m; ++i) {
      res[static_cast<std::size_t>(i)] = (bx.col(i) - theta(i) * x.col(i)).norm() / x.col(i).norm();
      done = done && res[static_cast<std::size_t>(i)] < opt.tol;
    }
    out.iterations = it;
  }
  if (!done) {
    std::ostringstream os;
    os.precision(3);
    os << "smallest_eigs: no convergence after " << opt.max_iterations << " iterations; last residuals:";
    for (double r : res) os << " " << r;
    throw SolverError(os.str());
  }

  const Eigen::MatrixXd w = x.leftCols(m);
  out.orthonormality_error = (w.transpose() * w - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  out.vectors = isq.asDiagonal() * w;
  for (int i = 0; i < m; ++i) out.eigenvalues.push_back(theta(i));
  out.residuals = res;
  out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Study

std::vector<double> limit_eigenvalues(const Tube3DConfig& cfg, int m) {
  GeneralizedProblem gp;
  gp.bore = BoreProfile::constant_profile(1.0);
  gp.left_end = cfg.mouth ? EndCondition::open : EndCondition::closed;
  gp.right_end = cfg.right_end_dirichlet ? EndCondition::open : EndCondition::closed;
  // The 3-D hole is fully open; open_fraction has no geometric meaning here.
  if (cfg.hole.delta > 0.0)
    gp.holes.push_back({cfg.hole.position_a, cfg.hole.alpha_override.value_or(cfg.alpha) * cfg.hole.delta});
  std::vector<double> out;
  if (!cfg.mouth && !cfg.right_end_dirichlet && gp.holes.empty()) out.push_back(0.0);
  const int rest = m - static_cast<int>(out.size());
  if (rest > 0) {
    const Spectrum1D s = shooting_spectrum(gp, rest);
    for (double mu : s.mu) out.push_back(mu * mu);
  }
  return out;
}

double SweepReport::deviation(std::size_t row, std::size_t k) const {
  const double ref = lambda_1d.at(k), val = rows.at(row).lambda_3d.at(k);
  return ref == 0.0 ? std::abs(val) : std::abs(val - ref) / ref;
}

bool SweepReport::monotone_ok(double rel_tol) const {
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.lambda_no_hole.size(); ++k)
      if (r.lambda_3d[k] < r.lambda_no_hole[k] * (1.0 - rel_tol)) return false;
  return true;
}

SweepReport convergence_study(const Tube3DConfig& base, const std::vector<double>& epsilons, int m,
                              const StudyOptions& opt) {
  if (epsilons.empty()) throw std::invalid_argument("convergence_study: empty epsilon ladder");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1]))
      throw std::invalid_argument("convergence_study: epsilon ladder must be strictly decreasing");
  if (m < 1) throw std::invalid_argument("convergence_study: m must be at least 1");

  SweepReport rep;
  rep.base = base;
  rep.modes = m;
  rep.slack = opt.slack;
  rep.lambda_1d = limit_eigenvalues(base, m);

  // Build every grid first so budget problems surface before any solve.
  std::vector<Tube3DConfig> cfgs;
  std::vector<Grid3D> grids;
  for (double eps : epsilons) {
    Tube3DConfig c = base;
    c.epsilon = eps;
    grids.push_back(build_grid(c));
    cfgs.push_back(c);
  }

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepRow row;
    row.epsilon = cfgs[i].epsilon;
    row.nodes = grids[i].nodes();
    try {
      const EigenResult3D r = smallest_eigs(assemble(grids[i]), m, opt.eig);
      row.lambda_3d = r.eigenvalues;
      row.residuals = r.residuals;
      if (opt.compare_without_hole && cfgs[i].hole.delta > 0.0) {
        Tube3DConfig plain = cfgs[i];
        plain.hole.delta = 0.0;
        row.lambda_no_hole = smallest_eigs(assemble(plain, grids[i]), m, opt.eig).eigenvalues;
      }
    } catch (const SolverError& e) {
      std::ostringstream os;
      os << "convergence_study: epsilon=" << cfgs[i].epsilon << ": " << e.what();
      throw StudyError(os.str(), rep);
    }
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.rows.push_back(std::move(row));
  }

  if (rep.rows.size() < 2) {
    rep.warnings.push_back("single epsilon: trend check skipped");
  } else {
    rep.trend_checked = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (rep.deviation(i, 0) > opt.slack * rep.deviation(i - 1, 0)) rep.trend_ok = false;
  }
  return rep;
}

std::string sweep_csv(const SweepReport& r) {
  std::string out = "epsilon,nodes,k,lambda_3d,lambda_1d,rel_dev,wall_s\n";
  char buf[256];
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    for (std::size_t k = 0; k < r.rows[i].lambda_3d.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.12g,%zu,%zu,%.12g,%.12g,%.12g,%.12g\n", r.rows[i].epsilon, r.rows[i].nodes,
                    k + 1, r.rows[i].lambda_3d[k], r.lambda_1d[k], r.deviation(i, k), r.rows[i].wall_s);
      out += buf;
    }
  return out;
}

void to_json(json& j, const Tube3DConfig& c) {
  j = json{{"epsilon", c.epsilon},
           {"hole", {{"position_a", c.hole.position_a}, {"delta", c.hole.delta}}},
           {"mouth", c.mouth},
           {"right_end_dirichlet", c.right_end_dirichlet},
           {"modes", c.modes},
           {"grid",
            {{"cells_width", c.grid.cells_width},
             {"hole_cells", c.grid.hole_cells},
             {"mouth_cells", c.grid.mouth_cells},
             {"growth", c.grid.growth},
             {"hmax_x1", c.grid.hmax_x1},
             {"refine", c.grid.refine}}},
           {"node_budget", c.node_budget},
           {"alpha", c.alpha}};
  if (c.hole.alpha_override) j["hole"]["alpha_override"] = *c.hole.alpha_override;
}

void from_json(const json& j, Tube3DConfig& c) {
  c = Tube3DConfig{};
  c.epsilon = j.value("epsilon", c.epsilon);
  if (j.contains("hole")) {
    const json& h = j.at("hole");
    c.hole.position_a = h.value("position_a", c.hole.position_a);
    c.hole.delta = h.value("delta", c.hole.delta);
    if (h.contains("alpha_override")) c.hole.alpha_override = h.at("alpha_override").get<double>();
  }
  c.mouth = j.value("mouth", c.mouth);
  c.right_end_dirichlet = j.value("right_end_dirichlet", c.right_end_dirichlet);
  c.modes = j.value("modes", c.modes);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    c.grid.cells_width = g.value("cells_width", c.grid.cells_width);
    c.grid.hole_cells = g.value("hole_cells", c.grid.hole_cells);
    c.grid.mouth_cells = g.value("mouth_cells", c.grid.mouth_cells);
    c.grid.growth = g.value("growth", c.grid.growth);
    c.grid.hmax_x1 = g.value("hmax_x1", c.grid.hmax_x1);
    c.grid.refine = g.value("refine", c.grid.refine);
  }
  c.node_budget = j.value("node_budget", c.node_budget);
  c.alpha = j.value("alpha", c.alpha);
}

void to_json(json& j, const SweepReport& r) {
  j = json::object();
  j["base"] = r.base;
  j["modes"] = r.modes;
  j["lambda_1d"] = r.lambda_1d;
  json rows = json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const SweepRow& row = r.rows[i];
    std::vector<double> dev;
    for (std::size_t k = 0; k < row.lambda_3d.size(); ++k) dev.push_back(r.deviation(i, k));
    json jr{{"epsilon", row.epsilon},
            {"nodes", row.nodes},
            {"lambda_3d", row.lambda_3d},
            {"residuals", row.residuals},
            {"rel_dev", dev},
            {"wall_s", row.wall_s}};
    if (!row.lambda_no_hole.empty()) jr["lambda_no_hole"] = row.lambda_no_hole;
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  j["trend"] = {{"checked", r.trend_checked}, {"ok", r.trend_ok}, {"slack", r.slack}};
  j["warnings"] = r.warnings;
}

}  // namespace sidehole
