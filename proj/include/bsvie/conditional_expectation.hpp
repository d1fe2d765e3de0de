#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsvie/driver.hpp"
#include "bsvie/paths.hpp"
#include "bsvie/processes.hpp"

namespace bsvie {

/// Scalar regressors available at slice t_j.
enum class BasisFeature {
  kState,         ///< components of W(t_j)
  kTimeIntegral,  ///< components of int_0^{t_j} W(s) ds (trapezoid)
};

std::string to_string(BasisFeature f);
BasisFeature basis_feature_from_string(const std::string& tag);

struct RegressionConfig {
  int basis_degree = 3;  ///< total degree of the monomials
  std::vector<BasisFeature> features{BasisFeature::kState};
  /// Tikhonov weight relative to trace(G) / K, not applied to the constant.
  /// Zero disables regularisation.
  double ridge = 1e-8;
};

/// Least-squares approximation of E[X | F_{t_j}] on every slice of an
/// ensemble. Features are standardised per slice; features with no spread
/// (t_0) drop out, so slice 0 reduces to the sample mean. The normal
/// equations of each slice are factored once at construction.
class ConditionalExpectation {
 public:
  /// Throws ConfigError when a slice needs K >= M / 10 basis functions and
  /// NumericalRankError when ridge == 0 and some normal matrix is singular.
  ConditionalExpectation(const PathEnsemble& ens, RegressionConfig cfg);
  /// Only slice j is prepared.
  ConditionalExpectation(const PathEnsemble& ens, RegressionConfig cfg, std::size_t j);

  const PathEnsemble& ensemble() const { return *ens_; }
  const RegressionConfig& config() const { return cfg_; }
  std::size_t basis_size(std::size_t j) const;

  /// Fitted values of samples [M][k] regressed on the slice-j basis.
  /// Inputs constant across paths are returned unchanged.
  void project(std::size_t j, std::span<const double> samples, std::size_t k, std::span<double> out) const;
  std::vector<double> project(std::size_t j, std::span<const double> samples, std::size_t k = 1) const;

  /// Z_j = E[(X_{j+1} - X_j) dW_j^T | F_{t_j}] / step(j), samples [M][m],
  /// result [M][m*d]. Subtracting X_j leaves the target's conditional mean
  /// unchanged and removes most of its variance.
  void integrand(std::size_t j, std::span<const double> next, std::span<const double> current, std::size_t m,
                 std::span<double> out) const;

 private:
  struct Slice {
    Eigen::MatrixXd basis;  // M x K, column 0 is the constant
    Eigen::LLT<Eigen::MatrixXd> factor;
  };

  const Slice& slice(std::size_t j) const;
  Slice build(std::size_t j) const;

  const PathEnsemble* ens_;
  RegressionConfig cfg_;
  std::vector<std::optional<Slice>> slices_;
};

/// One-shot projection at slice j.
std::vector<double> project(std::span<const double> samples, std::size_t k, std::size_t j, const PathEnsemble& ens,
                            const RegressionConfig& cfg = {});

/// Integrand of a sampled martingale mart [N+1][M][m]; result has dimension
/// m*d, column N copies column N - 1.
Process1P martingale_integrand(const Process1P& mart, const PathEnsemble& ens, const RegressionConfig& cfg = {});
Process1P martingale_integrand(const Process1P& mart, const ConditionalExpectation& ce);

struct OracleEstimate {
  std::vector<double> value;           ///< [M][dim]
  std::vector<double> standard_error;  ///< [M][dim]
};

/// Nested Monte Carlo estimate of E[X | F_{t_j}]: every path keeps its history
/// up to t_j and gets `branches` fresh futures. The functional only sees its
/// declared features, so undeclared access raises ContractError.
OracleEstimate nested_mc_oracle(const PathFunctional& x, std::size_t j, const PathEnsemble& ens,
                                std::size_t branches, std::uint64_t seed);

}  // namespace bsvie
