#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpgame::testing {

struct DerivativeCheck {
  std::string name;
  int points = 0;
  double max_error = 0.0;  // ||analytic - fd||_inf / (1 + ||analytic||_inf)
};

// Compares every analytic Jacobian shipped by the library (dynamics
// models, constraint types, quadratic cost expansions) against central
// differences computed here, at `points` random points each.
std::vector<DerivativeCheck> run_derivative_checks(int points, std::uint64_t seed);

}  // namespace dpgame::testing
