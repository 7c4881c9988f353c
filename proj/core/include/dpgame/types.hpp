#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dpgame {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using StateSequence = std::vector<Vec>;
using ControlSequence = std::vector<Vec>;

// Base for every error this library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: dimension mismatch, bad index, unparsable file.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite state or objective, or a backward pass that could not be
// regularized.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// The game does not have the separable cost structure required for the
// single-OCP reduction.
class StructureError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace dpgame
