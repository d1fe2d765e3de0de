#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bsvie {

/// Discrete time axis 0 = t_0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  static TimeGrid uniform(double horizon, std::size_t steps);

  /// Nodes must start at 0 and be strictly increasing.
  explicit TimeGrid(std::vector<double> nodes);

  double horizon() const { return nodes_.back(); }
  std::size_t steps() const { return nodes_.size() - 1; }
  double node(std::size_t i) const { return nodes_[i]; }
  double step(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  bool is_uniform(double rel_tol = 1e-12) const;

  /// Trapezoid weights on [t_from, t_to] for the nodes from..to (inclusive).
  /// Size is to - from + 1; all zeros when from == to.
  std::vector<double> trapezoid_weights(std::size_t from, std::size_t to) const;

  /// Trapezoid rule for node values h_0..h_N over [t_from, T].
  double integrate(std::span<const double> values, std::size_t from = 0) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> nodes_;
};

}  // namespace bsvie
