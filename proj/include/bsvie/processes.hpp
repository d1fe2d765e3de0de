#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bsvie {

/// One-parameter process Y(t_i) sampled on every path, values [N+1][M][dim]
/// (slice-major; the logical index is [path][node][component]).
class Process1P {
 public:
  Process1P() = default;
  Process1P(std::size_t paths, std::size_t steps, std::size_t dim, bool adapted = true);

  std::size_t paths() const { return paths_; }
  std::size_t steps() const { return steps_; }
  std::size_t dim() const { return dim_; }
  bool adapted() const { return adapted_; }
  void set_adapted(bool adapted) { adapted_ = adapted; }

  std::span<double> at(std::size_t i) { return {values_.data() + i * paths_ * dim_, paths_ * dim_}; }
  std::span<const double> at(std::size_t i) const { return {values_.data() + i * paths_ * dim_, paths_ * dim_}; }
  std::span<double> at(std::size_t i, std::size_t p) { return {values_.data() + (i * paths_ + p) * dim_, dim_}; }
  std::span<const double> at(std::size_t i, std::size_t p) const {
    return {values_.data() + (i * paths_ + p) * dim_, dim_};
  }

  std::span<double> raw() { return values_; }
  std::span<const double> raw() const { return values_; }

  /// Path mean and standard deviation of component k at node i.
  double mean(std::size_t i, std::size_t k = 0) const;
  double stddev(std::size_t i, std::size_t k = 0) const;

 private:
  std::size_t paths_ = 0;
  std::size_t steps_ = 0;
  std::size_t dim_ = 0;
  bool adapted_ = true;
  std::vector<double> values_;
};

/// Which part of [0,T]^2 a two-parameter process stores.
enum class Domain {
  kUpper,  ///< t <= s (entries j >= i)
  kFull,   ///< the whole square
};

/// Two-parameter process Z(t_i, t_j) with entries in R^{m x d} (row-major,
/// entry (k, l) at k * d + l). Z(t_i, t_j) is the integrand on [t_j, t_{j+1});
/// the column j = N carries no increment and copies column N - 1.
/// Upper storage is a packed triangle, full storage a dense square.
class Process2P {
 public:
  Process2P() = default;
  Process2P(std::size_t paths, std::size_t steps, std::size_t m, std::size_t d, Domain domain);

  /// Number of doubles such a process holds.
  static std::size_t storage(std::size_t paths, std::size_t steps, std::size_t m, std::size_t d, Domain domain);

  std::size_t paths() const { return paths_; }
  std::size_t steps() const { return steps_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return d_; }
  std::size_t entry_dim() const { return m_ * d_; }
  Domain domain() const { return domain_; }
  bool contains(std::size_t i, std::size_t j) const { return domain_ == Domain::kFull || j >= i; }

  /// All paths at (t_i, t_j), [M][m*d]. Throws ContractError outside the domain.
  std::span<double> at(std::size_t i, std::size_t j);
  std::span<const double> at(std::size_t i, std::size_t j) const;
  std::span<const double> at(std::size_t i, std::size_t j, std::size_t p) const {
    return at(i, j).subspan(p * entry_dim(), entry_dim());
  }

  /// Copy into full-square storage; the lower triangle starts at zero.
  Process2P to_full() const;
  /// Copy of the upper triangle only.
  Process2P to_upper() const;

  /// Mean over paths of the Frobenius norm at (t_i, t_j).
  double mean_abs(std::size_t i, std::size_t j) const;
  /// Mean over paths of entry k at (t_i, t_j).
  double mean(std::size_t i, std::size_t j, std::size_t k = 0) const;

 private:
  std::size_t slice_index(std::size_t i, std::size_t j) const;

  std::size_t paths_ = 0;
  std::size_t steps_ = 0;
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  Domain domain_ = Domain::kUpper;
  std::vector<double> values_;
};

}  // namespace bsvie
