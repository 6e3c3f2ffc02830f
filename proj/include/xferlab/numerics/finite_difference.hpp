#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "xferlab/util/error.hpp"

namespace xferlab::numerics {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h at the requested
// coordinates. `f` takes the full parameter vector by const reference.
template <typename F>
std::vector<double> finite_difference_gradient(F&& f, std::span<const double> theta,
                                               std::span<const std::size_t> indices, double h) {
  if (!(h > 0)) throw ContractError("finite difference step must be positive");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (i >= x.size()) throw IndexError("coordinate " + std::to_string(i) + " outside parameter vector");
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(static_cast<const std::vector<double>&>(x));
    x[i] = orig - h;
    const double down = f(static_cast<const std::vector<double>&>(x));
    x[i] = orig;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

// |analytic - numeric| / (|analytic| + floor), the gradient-check statistic.
inline double gradient_relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + floor);
}

}  // namespace xferlab::numerics
