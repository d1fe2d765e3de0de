#include "bsvie/processes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsvie/errors.hpp"
#include "bsvie/paths.hpp"

namespace bsvie {

Process1P::Process1P(std::size_t paths, std::size_t steps, std::size_t dim, bool adapted)
    : paths_(paths), steps_(steps), dim_(dim), adapted_(adapted) {
  require_capacity(paths * (steps + 1) * dim, "one-parameter process");
  values_.assign(paths * (steps + 1) * dim, 0.0);
}

double Process1P::mean(std::size_t i, std::size_t k) const {
  const auto slice = at(i);
  double sum = 0.0;
  for (std::size_t p = 0; p < paths_; ++p) sum += slice[p * dim_ + k];
  return sum / static_cast<double>(paths_);
}

double Process1P::stddev(std::size_t i, std::size_t k) const {
  if (paths_ < 2) return 0.0;
  const double mu = mean(i, k);
  const auto slice = at(i);
  double sum = 0.0;
  for (std::size_t p = 0; p < paths_; ++p) {
    const double e = slice[p * dim_ + k] - mu;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(paths_ - 1));
}

std::size_t Process2P::storage(std::size_t paths, std::size_t steps, std::size_t m, std::size_t d, Domain domain) {
  const std::size_t n1 = steps + 1;
  const std::size_t slices = domain == Domain::kFull ? n1 * n1 : n1 * (n1 + 1) / 2;
  return slices * paths * m * d;
}

Process2P::Process2P(std::size_t paths, std::size_t steps, std::size_t m, std::size_t d, Domain domain)
    : paths_(paths), steps_(steps), m_(m), d_(d), domain_(domain) {
  const std::size_t count = storage(paths, steps, m, d, domain);
  require_capacity(count, "two-parameter process");
  values_.assign(count, 0.0);
}

std::size_t Process2P::slice_index(std::size_t i, std::size_t j) const {
  const std::size_t n1 = steps_ + 1;
  if (i > steps_ || j > steps_) throw ContractError("two-parameter index out of range");
  if (domain_ == Domain::kFull) return i * n1 + j;
  if (j < i) {
    throw ContractError("Z(t_" + std::to_string(i) + ", t_" + std::to_string(j) +
                        ") lies in the lower triangle, which upper storage does not hold");
  }
  return i * n1 - i * (i - 1) / 2 + (j - i);
}

std::span<double> Process2P::at(std::size_t i, std::size_t j) {
  const std::size_t slice = paths_ * entry_dim();
  return {values_.data() + slice_index(i, j) * slice, slice};
}

std::span<const double> Process2P::at(std::size_t i, std::size_t j) const {
  const std::size_t slice = paths_ * entry_dim();
  return {values_.data() + slice_index(i, j) * slice, slice};
}

Process2P Process2P::to_full() const {
  Process2P out(paths_, steps_, m_, d_, Domain::kFull);
  for (std::size_t i = 0; i <= steps_; ++i) {
    for (std::size_t j = 0; j <= steps_; ++j) {
      if (!contains(i, j)) continue;
      const auto src = at(i, j);
      std::copy(src.begin(), src.end(), out.at(i, j).begin());
    }
  }
  return out;
}

Process2P Process2P::to_upper() const {
  Process2P out(paths_, steps_, m_, d_, Domain::kUpper);
  for (std::size_t i = 0; i <= steps_; ++i) {
    for (std::size_t j = i; j <= steps_; ++j) {
      const auto src = at(i, j);
      std::copy(src.begin(), src.end(), out.at(i, j).begin());
    }
  }
  return out;
}

double Process2P::mean_abs(std::size_t i, std::size_t j) const {
  const auto slice = at(i, j);
  const std::size_t e = entry_dim();
  double sum = 0.0;
  for (std::size_t p = 0; p < paths_; ++p) {
    double sq = 0.0;
    for (std::size_t k = 0; k < e; ++k) sq += slice[p * e + k] * slice[p * e + k];
    sum += std::sqrt(sq);
  }
  return sum / static_cast<double>(paths_);
}

double Process2P::mean(std::size_t i, std::size_t j, std::size_t k) const {
  const auto slice = at(i, j);
  const std::size_t e = entry_dim();
  double sum = 0.0;
  for (std::size_t p = 0; p < paths_; ++p) sum += slice[p * e + k];
  return sum / static_cast<double>(paths_);
}

}  // namespace bsvie
