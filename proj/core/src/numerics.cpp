#include "dpgame/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace dpgame::numerics {

double fd_step(double xj, double rel_step) {
  return rel_step * (1.0 + std::abs(xj));
}

Vec central_gradient(const ScalarFn& f, const Vec& x, double rel_step) {
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j], rel_step);
    probe[j] = x[j] + h;
    const double fp = f(probe);
    probe[j] = x[j] - h;
    const double fm = f(probe);
    probe[j] = x[j];
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Mat central_jacobian(const VectorFn& f, const Vec& x, double rel_step) {
  Vec probe = x;
  Mat jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j], rel_step);
    probe[j] = x[j] + h;
    const Vec fp = f(probe);
    probe[j] = x[j] - h;
    const Vec fm = f(probe);
    probe[j] = x[j];
    if (j == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  if (x.size() == 0) jac.resize(f(x).size(), 0);
  return jac;
}

Mat central_hessian(const ScalarFn& f, const Vec& x, double rel_step) {
  const Eigen::Index n = x.size();
  Mat hess = Mat::Zero(n, n);
  Vec probe = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = fd_step(x[i], rel_step);
    probe[i] = x[i] + hi;
    const double fp = f(probe);
    probe[i] = x[i] - hi;
    const double fm = f(probe);
    probe[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = fd_step(x[j], rel_step);
      probe[i] = x[i] + hi;
      probe[j] = x[j] + hj;
      const double fpp = f(probe);
      probe[j] = x[j] - hj;
      const double fpm = f(probe);
      probe[i] = x[i] - hi;
      const double fmm = f(probe);
      probe[j] = x[j] + hj;
      const double fmp = f(probe);
      probe[i] = x[i];
      probe[j] = x[j];
      hess(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      hess(j, i) = hess(i, j);
    }
  }
  return hess;
}

double relative_inf_error(const Mat& analytic, const Mat& reference) {
  if (analytic.size() == 0) return 0.0;
  const double scale = 1.0 + analytic.cwiseAbs().maxCoeff();
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

}  // namespace dpgame::numerics
