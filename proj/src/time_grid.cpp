#include "bsvie/time_grid.hpp"

#include <cmath>
#include <string>

#include "bsvie/errors.hpp"

namespace bsvie {

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("grid horizon T must be positive");
  if (steps == 0) throw ConfigError("grid step count N must be positive");
  std::vector<double> nodes(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  nodes[steps] = horizon;
  return TimeGrid(std::move(nodes));
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw ConfigError("time grid needs at least two nodes");
  if (nodes_.front() != 0.0) throw ConfigError("time grid must start at 0");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i + 1] > nodes_[i])) {
      throw ConfigError("time grid nodes must be strictly increasing (index " + std::to_string(i + 1) + ")");
    }
  }
}

bool TimeGrid::is_uniform(double rel_tol) const {
  const double h = horizon() / static_cast<double>(steps());
  for (std::size_t i = 0; i < steps(); ++i) {
    if (std::abs(step(i) - h) > rel_tol * h) return false;
  }
  return true;
}

std::vector<double> TimeGrid::trapezoid_weights(std::size_t from, std::size_t to) const {
  std::vector<double> w(to - from + 1, 0.0);
  for (std::size_t k = from; k < to; ++k) {
    const double half = 0.5 * step(k);
    w[k - from] += half;
    w[k + 1 - from] += half;
  }
  return w;
}

double TimeGrid::integrate(std::span<const double> values, std::size_t from) const {
  double sum = 0.0;
  for (std::size_t k = from; k < steps(); ++k) sum += 0.5 * step(k) * (values[k] + values[k + 1]);
  return sum;
}

}  // namespace bsvie
