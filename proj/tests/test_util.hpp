#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "sensor/tensor.hpp"

namespace sensor::test {

/// Central finite difference of a re-evaluated scalar function with respect
/// to one element of a leaf tensor.
inline double finite_diff(const std::function<double()>& f, Tensor param, int idx,
                          double h = 1e-5) {
  const double orig = param.value()[static_cast<std::size_t>(idx)];
  param.value()[static_cast<std::size_t>(idx)] = orig + h;
  const double up = f();
  param.value()[static_cast<std::size_t>(idx)] = orig - h;
  const double down = f();
  param.value()[static_cast<std::size_t>(idx)] = orig;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

/// Checks autodiff gradients of every element of `param` against central
/// finite differences of `loss_fn` (which must rebuild the graph and return
/// the loss value). Returns the worst relative error.
inline double max_grad_err(const std::function<double()>& loss_fn, const Tensor& param,
                           const std::vector<double>& autodiff_grad, double h = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < param.size(); ++i) {
    const double fd = finite_diff(loss_fn, param, i, h);
    worst = std::max(worst, rel_err(autodiff_grad[static_cast<std::size_t>(i)], fd));
  }
  return worst;
}

}  // namespace sensor::test
