#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "bsvie/paths.hpp"
#include "bsvie/processes.hpp"

namespace bsvie {

/// Standard normal quantile.
double normal_quantile(double u);

/// Gaussian stream of one path: normal number n of path `path` under `key`
/// is a pure function of (key, path, n).
class PathStream {
 public:
  PathStream(std::uint64_t key, std::uint64_t path, std::uint32_t branch = 0) : key_(key), path_(path), branch_(branch) {}
  /// Fills out[k] with normals number first + k.
  void normals(std::uint64_t first, std::span<double> out) const;

 private:
  std::uint64_t key_;
  std::uint64_t path_;
  std::uint32_t branch_;
};

/// M paths of d-dimensional Brownian motion on the grid. Increments are
/// centered Gaussians with variance step(j) per component, drawn by
/// inverse-CDF from a counter-based stream keyed by (seed, path), so the
/// output is bit-identical for any worker count.
PathEnsemble generate_paths(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed);

/// Partial R^2 of the future increments dW_j, ..., dW_{N-1} in the
/// least-squares regression of proc(t_j) on [1, W(t_j), future increments]:
/// the share of the variance left by the linear past fit that the future
/// explains. Maximised over components. Adapted processes score near
/// (N - j) d / M, W(T) scores 1; constant processes return 0.
double check_adapted(const Process1P& proc, const PathEnsemble& ens, std::size_t j);

/// Threshold 3 / sqrt(M) used to accept check_adapted residuals.
double adaptedness_threshold(std::size_t paths);

/// Binary dump: u64 M, N, d, seed; N+1 f64 node times; M*N*d f64 increments
/// ordered [path][step][component]; all little-endian.
void save_ensemble(const PathEnsemble& ens, const std::filesystem::path& file);
PathEnsemble load_ensemble(const std::filesystem::path& file);

}  // namespace bsvie
