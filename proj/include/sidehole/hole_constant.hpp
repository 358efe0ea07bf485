#pragma once

// The hole constant alpha: Dirichlet energy of the harmonic function zeta on
// the half-space {x2 < 0} that vanishes on the unit-square hole in the plane
// x2 = 0, has zero normal derivative on the rest of that plane and tends to 1
// far away.
//
// Finite-difference route: 7-point Laplacian on the truncated box
// [-R,R] x [-R,0] x [-R,R] with zeta = 1 on the five far faces, then a
// two-ladder extrapolation R -> infinity, h -> 0.
//
// Independent route: method-of-subareas capacitance of the square plate in
// free space. Reflecting 1 - zeta evenly across the plane turns the mixed
// problem into the unit-potential plate problem, so alpha = Q / 2.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidehole/errors.hpp"

namespace sidehole {

struct HalfSpaceGrid {
  double box_radius_R = 4.0;
  double spacing_h = 0.25;
  /// Side of the square hole. Zero means a single-node hole at the origin.
  double hole_side = 1.0;

  int cells_x() const;  ///< cells along x1 and x3
  int cells_y() const;  ///< cells along x2 (depth)

  /// Grid with every invariant checked (throws std::invalid_argument).
  static HalfSpaceGrid make(double R, double h, double hole_side = 1.0);
  std::vector<std::string> violations() const;
};

enum class NodeKind : std::uint8_t { free, hole, far };

struct ZetaField {
  HalfSpaceGrid grid;
  int nx = 0, ny = 0, nz = 0;  ///< nodes per axis
  std::vector<double> values;
  std::vector<NodeKind> kind;
  int iterations = 0;
  double relative_residual = 0.0;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }

  /// Field with boundary values set and free nodes at 1 (unsolved).
  static ZetaField boundary_only(const HalfSpaceGrid& grid);
};

/// Conjugate-gradient solve of the discrete mixed problem to
/// ||r|| <= tol ||b||. Throws SolverError after `max_iterations`.
ZetaField solve_zeta(const HalfSpaceGrid& grid, double tol = 1e-10, int max_iterations = 50000);

/// Sum over grid edges of w_e (u_i - u_j)^2 with finite-volume edge weights
/// h * (dual face share); edges in the top plane carry half weight.
double energy(const ZetaField& field);

/// <u, L u> with L the full-box weighted graph Laplacian applied node-wise.
/// Algebraically identical to energy().
double form_energy(const ZetaField& field);

/// Largest deviation from the square's symmetries x1 -> -x1 and x1 <-> x3.
double symmetry_defect(const ZetaField& field);

struct LadderEntry {
  double R = 0.0;
  double h = 0.0;
  double energy = 0.0;
  int iterations = 0;
  double relative_residual = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  double symmetry_defect = 0.0;
};

LadderEntry solve_ladder_entry(double R, double h, double tol);

struct AlphaEstimate {
  double alpha = 0.0;
  std::vector<LadderEntry> ladder_R;  ///< R varies at h = ladder_h.front()
  std::vector<LadderEntry> ladder_h;  ///< h varies at R = ladder_R.front()
  double order_R = 0.0;               ///< observed order of 1/E in 1/R
  double order_h = 0.0;               ///< observed order in h
  double limit_R = 0.0;               ///< E(R -> inf, h0)
  double limit_h = 0.0;               ///< E(R0, h -> 0)
  double anchor_energy = 0.0;         ///< E(R0, h0)
  bool low_confidence = false;
  std::optional<double> oracle_alpha;
};

/// Runs both ladders (sharing the anchor (R0, h0)) and combines the two
/// extrapolations. The far-face truncation behaves like a series capacitance,
/// 1/E(R, h) ~ 1/E(inf, h) - beta/R, so the R ladder is fitted in 1/E and
/// 1/alpha = 1/E(R0, 0) + 1/E(inf, h0) - 1/E(R0, h0).
/// Needs at least three entries per ladder with constant ratios; throws
/// std::invalid_argument otherwise and SolverError for non-monotone energies.
AlphaEstimate estimate_alpha(const std::vector<double>& ladder_R, const std::vector<double>& ladder_h,
                             double tol = 1e-10);

/// Same combination from precomputed ladders (no solves).
AlphaEstimate combine_ladders(std::vector<LadderEntry> ladder_R, std::vector<LadderEntry> ladder_h,
                              double monotone_tol = 1e-9);

struct PlateSolution {
  int n = 0;
  std::vector<double> charge;  ///< per patch, row-major n x n
  double total_charge = 0.0;
  double alpha() const { return 0.5 * total_charge; }
};

/// Unit-potential square plate split into n x n patches.
PlateSolution plate_charges(int n);

/// alpha from plate_charges(n) and plate_charges(2n), extrapolated with an
/// O(1/n) error model.
double capacitance_oracle(int n_patches);

void to_json(nlohmann::json& j, const LadderEntry& e);
void to_json(nlohmann::json& j, const AlphaEstimate& a);
void from_json(const nlohmann::json& j, LadderEntry& e);
void from_json(const nlohmann::json& j, AlphaEstimate& a);

}  // namespace sidehole
