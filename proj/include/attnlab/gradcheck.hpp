// Central finite-difference verification of analytic gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "attnlab/error.hpp"

namespace attnlab {

// Compares the analytic gradient of a deterministic scalar objective
// against central differences, perturbing the parameters in place. The
// objective must evaluate in float64; verification therefore runs the
// kernels at their Mat<double> instantiation, which shares every line
// of arithmetic with the float32 production path. Relative error per
// element uses a max(|a|,|b|,1e-8) denominator; the worst element is
// returned.
template <typename T>
double finite_difference_check(std::span<T> params, std::span<const T> analytic_grad,
                               const std::function<double()>& objective, double h = 1e-3) {
  if (params.size() != analytic_grad.size()) {
    throw ShapeError("finite_difference_check: gradient size mismatch");
  }
  if (!(h >= 1e-4 && h <= 1e-2)) {
    throw RangeError("finite_difference_check: h outside [1e-4, 1e-2]");
  }
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const T saved = params[i];
    params[i] = static_cast<T>(saved + h);
    const double f_plus = objective();
    params[i] = static_cast<T>(saved - h);
    const double f_minus = objective();
    params[i] = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double analytic = analytic_grad[i];
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
    worst = std::max(worst, std::fabs(numeric - analytic) / denom);
  }
  return worst;
}

}  // namespace attnlab
