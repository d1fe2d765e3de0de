#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bsvie/path_engine.hpp"
#include "bsvie/time_grid.hpp"

namespace testing {

inline bsvie::PathEnsemble brownian(std::size_t steps, std::size_t paths, std::uint64_t seed, double T = 1.0,
                                    std::size_t dim = 1) {
  return bsvie::generate_paths(bsvie::TimeGrid::uniform(T, steps), paths, dim, seed);
}

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSE mean_se(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double s = 0.0, s2 = 0.0;
  for (double v : x) s += v;
  const double m = s / n;
  for (double v : x) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1) / n)};
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace testing
