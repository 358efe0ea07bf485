#pragma once

// Brute-force 3-D check of the thin-tube limit. The tube
//   (0,1) x (-eps,0) x (-eps/2,eps/2)
// carries Dirichlet patches on the mouth (top face, x1 in [0,eps]), on the
// square side hole of side delta eps^2 centred at (a, 0, 0) and optionally on
// the far face x1 = 1; every other face is Neumann. The Laplacian is
// discretized by vertex-centred finite volumes on a graded tensor grid, which
// gives a symmetric stiffness K and a diagonal lumped mass M.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidehole/errors.hpp"
#include "sidehole/model.hpp"

namespace sidehole {

struct GridControls {
  int cells_width = 8;          ///< cells across the tube width away from the hole
  int hole_cells = 8;           ///< cells across the hole side (at least 4)
  int mouth_cells = 8;          ///< cells along x1 over the mouth patch
  double growth = 1.25;         ///< target ratio of adjacent cells while grading
  double hmax_x1 = 1.0 / 64.0;  ///< largest cell along the tube axis
  int refine = 1;               ///< multiplies every resolution control
};

struct Tube3DConfig {
  double epsilon = 0.25;
  HoleSpec hole{0.7, 0.0, 1.0, std::nullopt};
  bool mouth = true;
  bool right_end_dirichlet = true;
  int modes = 3;
  GridControls grid;
  std::size_t node_budget = 500000;
  double alpha = kSquareHoleAlpha;  ///< for the 1-D comparison only

  double hole_side() const { return hole.delta * epsilon * epsilon; }
  std::vector<std::string> violations() const;
};

/// Raised when a grid would exceed the node budget.
class BudgetError : public std::invalid_argument {
 public:
  BudgetError(std::size_t needed, std::size_t budget);
  std::size_t needed;
  std::size_t budget;
};

struct Grid3D {
  std::vector<double> x1, x2, x3;
  /// Per node, true if the value is prescribed (zero). Index (k n2 + j) n1 + i.
  std::vector<std::uint8_t> dirichlet;

  std::size_t n1() const { return x1.size(); }
  std::size_t n2() const { return x2.size(); }
  std::size_t n3() const { return x3.size(); }
  std::size_t nodes() const { return n1() * n2() * n3(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (k * n2() + j) * n1() + i; }
  /// Largest ratio between adjacent cell widths over all three axes.
  double max_grading_ratio() const;
};

/// Graded axis through the given breakpoints: cells of width `fine[b]` at
/// breakpoint b, growing by at most `growth` per cell up to `hmax`.
std::vector<double> graded_axis(const std::vector<double>& breaks, const std::vector<double>& fine, double hmax,
                                double growth);

/// Tube grid whose Dirichlet patches are unions of whole dual cells: each
/// patch edge sits halfway between two node lines, so the first-order
/// patch-size error of a vertex-centred scheme vanishes. Flags from `cfg`.
Grid3D build_grid(const Tube3DConfig& cfg);

/// Re-flags the Dirichlet nodes of `grid` for `cfg` (same geometry, possibly
/// another hole size, e.g. delta = 0 for the comparison without hole).
Grid3D with_patches(Grid3D grid, const Tube3DConfig& cfg);

/// Uniform box grid, every boundary node Dirichlet or every face Neumann.
Grid3D box_grid(double l1, double l2, double l3, int cells, bool dirichlet_faces);

struct Operator3D {
  Eigen::SparseMatrix<double> stiffness;  ///< free nodes only
  Eigen::VectorXd mass;                   ///< dual-cell volumes of free nodes
  std::vector<std::size_t> free_nodes;    ///< grid index of each unknown
  std::size_t total_nodes = 0;
  bool has_dirichlet = false;
};

/// Finite-volume assembly; asserts exact symmetry and nonnegativity of the
/// form on 100 random vectors (throws SolverError).
Operator3D assemble(const Grid3D& grid);
Operator3D assemble(const Tube3DConfig& cfg, const Grid3D& grid);

/// Sum over grid edges of w_e (u_p - u_q)^2 on free-node values (Dirichlet
/// values are zero); equals u^T K u.
double edge_energy(const Grid3D& grid, const Operator3D& op, const Eigen::VectorXd& u);

struct EigenOptions {
  double tol = 1e-8;        ///< absolute residual of the standard-form pair
  int max_iterations = 400;
  std::uint64_t seed = 1;
  int block = 0;            ///< 0: max(2m + 2, m + 4)
};

struct EigenResult3D {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;  ///< ||B w - lambda w|| / ||w||, B = M^-1/2 K M^-1/2
  Eigen::MatrixXd vectors;        ///< free-node values, M-orthonormal columns
  double orthonormality_error = 0.0;
  int iterations = 0;
  std::size_t unknowns = 0;
  std::size_t nodes = 0;
  double wall_s = 0.0;
};

/// m smallest eigenpairs of K v = lambda M v by block inverse subspace
/// iteration with Rayleigh-Ritz, inner solves by sparse Cholesky.
EigenResult3D smallest_eigs(const Operator3D& op, int m, const EigenOptions& opt = {});

/// 1-D limit problem of a tube configuration.
std::vector<double> limit_eigenvalues(const Tube3DConfig& cfg, int m);

struct SweepRow {
  double epsilon = 0.0;
  std::size_t nodes = 0;
  std::vector<double> lambda_3d;
  std::vector<double> residuals;
  std::vector<double> lambda_no_hole;  ///< same grid, delta = 0 (empty if not requested)
  double wall_s = 0.0;
};

struct SweepReport {
  Tube3DConfig base;
  int modes = 0;
  std::vector<double> lambda_1d;
  std::vector<SweepRow> rows;
  bool trend_checked = false;
  bool trend_ok = true;
  double slack = 1.1;
  std::vector<std::string> warnings;

  double deviation(std::size_t row, std::size_t k) const;
  /// lambda^k with hole >= lambda^k without, per row (true if not computed).
  bool monotone_ok(double rel_tol = 1e-10) const;
};

class StudyError : public SolverError {
 public:
  StudyError(const std::string& what, SweepReport partial);
  SweepReport partial;
};

struct StudyOptions {
  EigenOptions eig;
  bool compare_without_hole = false;
  double slack = 1.1;  ///< allowed growth factor of the k = 1 deviation per step
};

/// Runs each epsilon (strictly decreasing) and pairs the results with the
/// 1-D spectrum by index. The trend flag is computed, never thrown.
SweepReport convergence_study(const Tube3DConfig& base, const std::vector<double>& epsilons, int m,
                              const StudyOptions& opt = {});

std::string sweep_csv(const SweepReport& r);
void to_json(nlohmann::json& j, const SweepReport& r);
void to_json(nlohmann::json& j, const Tube3DConfig& c);
void from_json(const nlohmann::json& j, Tube3DConfig& c);

}  // namespace sidehole
