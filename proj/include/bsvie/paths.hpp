#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "bsvie/time_grid.hpp"

namespace bsvie {

/// Byte budget checked before large allocations (ensembles, two-parameter
/// processes). Defaults to 4 GiB.
std::size_t memory_budget_bytes();
void set_memory_budget_bytes(std::size_t bytes);
/// Throws CapacityError when `count` doubles exceed the budget.
void require_capacity(std::size_t count, const char* what);

/// Path features a functional may read through a PathView.
enum class Feature : unsigned {
  kState = 1u,     ///< W at the evaluation node
  kTerminal = 2u,  ///< W(T)
  kHistory = 4u,   ///< W(t_k) for k up to the evaluation node
  kPath = 8u,      ///< anything on the path
};

class FeatureSet {
 public:
  constexpr FeatureSet() = default;
  constexpr FeatureSet(std::initializer_list<Feature> features) {
    for (Feature f : features) bits_ |= static_cast<unsigned>(f);
  }
  constexpr bool contains(Feature f) const { return (bits_ & static_cast<unsigned>(f)) != 0; }
  constexpr FeatureSet& add(Feature f) {
    bits_ |= static_cast<unsigned>(f);
    return *this;
  }
  constexpr unsigned bits() const { return bits_; }

  static constexpr FeatureSet all() { return {Feature::kState, Feature::kTerminal, Feature::kHistory, Feature::kPath}; }

 private:
  unsigned bits_ = 0;
};

std::string to_string(Feature f);
Feature feature_from_string(const std::string& tag);

/// Read-only window on one Brownian path, evaluated at node `index`.
/// Access outside the declared feature set raises ContractError.
class PathView {
 public:
  PathView(const TimeGrid& grid, const double* states, std::size_t stride, std::size_t dim, std::size_t index,
           std::size_t path, FeatureSet allowed)
      : grid_(&grid), states_(states), stride_(stride), dim_(dim), index_(index), path_(path), allowed_(allowed) {}

  std::span<const double> W(std::size_t k) const;
  std::span<const double> W() const { return W(index_); }
  std::span<const double> terminal() const { return W(grid_->steps()); }
  /// First component shortcuts for d = 1 functionals.
  double w(std::size_t k) const { return W(k)[0]; }
  double w() const { return W()[0]; }
  double w_terminal() const { return terminal()[0]; }

  double time() const { return grid_->node(index_); }
  std::size_t index() const { return index_; }
  std::size_t path() const { return path_; }
  std::size_t dim() const { return dim_; }
  const TimeGrid& grid() const { return *grid_; }
  FeatureSet allowed() const { return allowed_; }

  PathView at_index(std::size_t k) const { return {*grid_, states_, stride_, dim_, k, path_, allowed_}; }
  PathView with_features(FeatureSet allowed) const { return {*grid_, states_, stride_, dim_, index_, path_, allowed}; }

 private:
  const TimeGrid* grid_;
  const double* states_;
  std::size_t stride_;
  std::size_t dim_;
  std::size_t index_;
  std::size_t path_;
  FeatureSet allowed_;
};

/// Seeded Brownian sample paths on a grid. Storage is slice-major: all paths
/// at node j are contiguous, which is the access pattern of the per-slice
/// regressions.
class PathEnsemble {
 public:
  PathEnsemble(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
               std::vector<double> increments);

  const TimeGrid& grid() const { return grid_; }
  std::size_t paths() const { return paths_; }
  std::size_t dim() const { return dim_; }
  std::size_t steps() const { return grid_.steps(); }
  std::uint64_t seed() const { return seed_; }

  /// Increments over [t_j, t_{j+1}] for all paths, [M][d].
  std::span<const double> increments_at(std::size_t j) const {
    return {increments_.data() + j * paths_ * dim_, paths_ * dim_};
  }
  std::span<const double> increment(std::size_t p, std::size_t j) const {
    return {increments_.data() + (j * paths_ + p) * dim_, dim_};
  }
  /// W(t_j) for all paths, [M][d].
  std::span<const double> states_at(std::size_t j) const { return {states_.data() + j * paths_ * dim_, paths_ * dim_}; }
  std::span<const double> state(std::size_t p, std::size_t j) const {
    return {states_.data() + (j * paths_ + p) * dim_, dim_};
  }

  PathView view(std::size_t p, std::size_t index, FeatureSet allowed = FeatureSet::all()) const {
    return {grid_, states_.data() + p * dim_, paths_ * dim_, dim_, index, p, allowed};
  }

  std::span<const double> raw_increments() const { return increments_; }
  std::span<const double> raw_states() const { return states_; }

 private:
  TimeGrid grid_;
  std::size_t paths_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> increments_;
  std::vector<double> states_;
};

}  // namespace bsvie
