#pragma once

#include <stdexcept>

namespace sidehole {

/// A numerical solve failed to converge or produced an inconsistent result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sidehole
