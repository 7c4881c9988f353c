#pragma once

#include <functional>

#include "dpgame/types.hpp"

namespace dpgame::numerics {

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;

// Step used for coordinate j: rel_step * (1 + |x_j|).
double fd_step(double xj, double rel_step);

// Central-difference gradient of a scalar function.
Vec central_gradient(const ScalarFn& f, const Vec& x, double rel_step = 1e-6);

// Central-difference Jacobian (rows = output dim, cols = x.size()).
Mat central_jacobian(const VectorFn& f, const Vec& x, double rel_step = 1e-6);

// Second-order central differences on function values, symmetrized.
Mat central_hessian(const ScalarFn& f, const Vec& x, double rel_step = 1e-4);

// ||a - b||_inf / (1 + ||a||_inf); the relative metric used by the
// derivative checks.
double relative_inf_error(const Mat& analytic, const Mat& reference);

}  // namespace dpgame::numerics
