#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "secu/numerics.hpp"

namespace secu::testing {

inline Mat random_unit_rows(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vec u = rng.unit_vector(cols);
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
  return m;
}

inline Vec random_vec(std::size_t n, SeededRng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// max |a - b| / max(max |b|, tiny), the usual norm-wise gradient-check error.
inline double max_rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

// Central differences of f with respect to every entry of v (restored afterwards).
inline Vec central_diff(std::span<double> v, const std::function<double()>& f, double h = 1e-5) {
  Vec g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f();
    v[i] = keep - h;
    const double down = f();
    v[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace secu::testing
