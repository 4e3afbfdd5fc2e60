#pragma once

#include <cmath>
#include <span>

namespace ltprune::detail {

// Neumaier-compensated sum; keeps the 1e-12 sum-to-one checks meaningful for
// large uniform-weight selections.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace ltprune::detail
