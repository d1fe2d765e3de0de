#include "bsvie/weights.hpp"

#include <cmath>
#include <string>

#include "bsvie/errors.hpp"

namespace bsvie {

double WeightProfile::weight(std::size_t i) const { return std::exp(exponent(i)); }

double WeightProfile::normalized_weight(std::size_t i) const {
  const auto a = active();
  return std::exp(beta * (a[i] - a.back()));
}

WeightProfile WeightProfile::with_beta(double new_beta) const {
  WeightProfile w = *this;
  w.beta = new_beta;
  return w;
}

WeightProfile build_weight_profile(const std::function<double(double)>& alpha2, const TimeGrid& grid, double p,
                                   double beta, WeightMode mode, double delta) {
  if (!(p > 1.0 && p < 2.0)) throw ConfigError("weight exponent p must lie in (1, 2), got " + std::to_string(p));
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(delta > 0.0)) throw ConfigError("alpha^2 floor delta must be positive");

  const std::size_t n = grid.steps();
  WeightProfile w;
  w.floor = delta;
  w.p = p;
  w.beta = beta;
  w.mode = mode;
  w.alpha2.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double a2 = alpha2(grid.node(i));
    if (!(a2 >= delta) || !std::isfinite(a2)) {
      throw PreconditionError("alpha^2(" + std::to_string(grid.node(i)) + ") = " + std::to_string(a2) +
                              " violates alpha^2 >= delta = " + std::to_string(delta));
    }
    w.alpha2[i] = a2;
  }

  const double star_power = p / (2.0 - p);  // alpha^{2p/(2-p)} = (alpha^2)^{p/(2-p)}
  w.A.assign(n + 1, 0.0);
  w.A_star.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = grid.step(i);
    w.A[i + 1] = w.A[i] + 0.5 * h * (w.alpha2[i] + w.alpha2[i + 1]);
    w.A_star[i + 1] =
        w.A_star[i] + 0.5 * h * (std::pow(w.alpha2[i], star_power) + std::pow(w.alpha2[i + 1], star_power));
  }
  return w;
}

}  // namespace bsvie
