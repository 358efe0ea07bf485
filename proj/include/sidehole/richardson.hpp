#pragma once

#include <cmath>
#include <stdexcept>

namespace sidehole {

/// Two-level Richardson extrapolation for an error model c * h^order, with
/// `fine` computed at spacing h / ratio.
template <typename Scalar>
Scalar richardson(Scalar coarse, Scalar fine, Scalar ratio, Scalar order) {
  const Scalar f = std::pow(ratio, order);
  return fine + (fine - coarse) / (f - Scalar(1));
}

/// Observed convergence order and extrapolated limit of a three-level
/// sequence v0, v1, v2 taken at parameters shrinking by a constant `ratio`.
template <typename Scalar>
struct ThreeLevelFit {
  Scalar order;
  Scalar limit;
  bool ok;  ///< false when the increments change sign (no power-law fit)
};

template <typename Scalar>
ThreeLevelFit<Scalar> fit_three_level(Scalar v0, Scalar v1, Scalar v2, Scalar ratio) {
  const Scalar d1 = v0 - v1;
  const Scalar d2 = v1 - v2;
  if (d1 == Scalar(0) || d2 == Scalar(0) || (d1 > 0) != (d2 > 0)) return {Scalar(0), v2, false};
  const Scalar order = std::log(d1 / d2) / std::log(ratio);
  return {order, richardson(v1, v2, ratio, order), true};
}

}  // namespace sidehole
