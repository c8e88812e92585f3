#pragma once

#include <cmath>
#include <vector>

#include "mixlab/spectral.hpp"

namespace testutil {

inline double rel_l2(const mixlab::ScalarField& a, const mixlab::ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double max_diff(const mixlab::ScalarField& a, const mixlab::ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
