#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bsvie/time_grid.hpp"

namespace bsvie {

enum class WeightMode {
  kA,      ///< exponent beta * A(t),  A(t)  = int_0^t alpha^2
  kAStar,  ///< exponent beta * A*(t), A*(t) = int_0^t alpha^{2p/(2-p)}
};

/// Exponential weights of the equivalent norms, tabulated on the grid.
struct WeightProfile {
  std::vector<double> alpha2;  ///< alpha^2 at the nodes
  std::vector<double> A;       ///< trapezoid cumulative integral of alpha^2
  std::vector<double> A_star;  ///< trapezoid cumulative integral of alpha^{2p/(2-p)}
  double floor = 0.0;          ///< delta with alpha^2 >= delta
  double p = 1.5;
  double beta = 1.0;
  WeightMode mode = WeightMode::kA;

  std::span<const double> active() const { return mode == WeightMode::kA ? A : A_star; }
  /// beta * A(t_i) (or beta * A*(t_i)).
  double exponent(std::size_t i) const { return beta * active()[i]; }
  /// exp(beta * A(t_i)).
  double weight(std::size_t i) const;
  /// exp(beta * (A(t_i) - A(T))) <= 1; same norm up to a constant factor.
  double normalized_weight(std::size_t i) const;

  WeightProfile with_beta(double new_beta) const;
};

/// Tabulates A and A* by the trapezoid rule. Requires alpha2 >= delta > 0 at
/// every node (PreconditionError) and 1 < p < 2, beta > 0 (ConfigError).
WeightProfile build_weight_profile(const std::function<double(double)>& alpha2, const TimeGrid& grid, double p,
                                   double beta, WeightMode mode = WeightMode::kA, double delta = 1e-12);

}  // namespace bsvie
