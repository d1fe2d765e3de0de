#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsvie/conditional_expectation.hpp"
#include "bsvie/driver.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/simple_bsvie.hpp"
#include "bsvie/weights.hpp"

namespace bsvie {

enum class SolveMode {
  kMSolution,  ///< full BSVIE, Z on the whole square
  kAdapted,    ///< g independent of zeta, Z on the upper triangle only
};

std::string to_string(SolveMode m);
SolveMode solve_mode_from_string(const std::string& s);

struct SolverConfig {
  double beta = 0.0;  ///< <= 0 picks max(8, 4 sup L^2 sup alpha^2 T)
  WeightMode weight_mode = WeightMode::kA;
  double p = 1.5;            ///< exponent of A*
  double alpha_floor = 1.0;  ///< alpha^2 = max(r1^2 + r2^2 + r3^2, floor)
  double tol = 1e-8;         ///< stop once the weighted step distance drops below
  std::size_t max_iter = 60;
  SolveMode mode = SolveMode::kMSolution;
  std::size_t max_beta_doublings = 5;
  std::size_t divergence_window = 3;
  RegressionConfig regression;
};

/// Per-iteration record; factor is NaN where the previous distance is below
/// 10 machine epsilon.
struct IterationRecord {
  std::size_t iteration = 0;
  double distance = 0.0;
  double factor = std::numeric_limits<double>::quiet_NaN();
};

struct SolverReport {
  std::string solver;
  std::size_t iterations = 0;
  bool converged = false;
  double beta = 0.0;
  std::size_t beta_doublings = 0;
  std::vector<IterationRecord> history;
  std::vector<std::string> warnings;
  std::vector<std::string> tags;

  // Picard only
  std::vector<double> outer_distances;  ///< E int |Y_n - Y_{n-1}|^2
  std::vector<double> norm_seq;         ///< E int |Y_n|^2
  std::vector<std::size_t> inner_iterations;

  std::vector<double> distances() const;
  /// Defined factors only.
  std::vector<double> contraction_factors() const;
  double max_factor() const;
};

/// Divergence with the report of the failed run attached.
class SolverDivergenceError : public DivergenceError {
 public:
  SolverDivergenceError(const std::string& what, SolverReport report)
      : DivergenceError(what), report_(std::move(report)) {}
  const SolverReport& report() const { return report_; }

 private:
  SolverReport report_;
};

struct LipschitzResult {
  Process1P Y;
  Process2P Z;
  SolverReport report;
};

/// Which part of the square the z-integral of a norm covers.
enum class NormDomain {
  kSquare,  ///< [0,T]^2, needs full storage
  kUpper,   ///< t <= s
};

/// [E int e^{beta A(t)} |y|^2 dt + E int int e^{beta A(s)} |z|^2 ds dt]^{1/2}
/// with trapezoid sums in t and left-point sums in s. `normalized` uses
/// e^{beta (A - A(T))}, an equivalent norm that cannot overflow.
double weighted_norm(const Process1P& y, const Process2P& z, const WeightProfile& w, const TimeGrid& grid,
                     NormDomain domain, bool normalized = false);

/// alpha^2 envelope of a driver with the configured floor.
WeightProfile driver_weights(const Driver& g, const TimeGrid& grid, const SolverConfig& cfg, double beta);
/// The default beta for a driver on a grid.
double default_beta(const Driver& g, const TimeGrid& grid, const SolverConfig& cfg);
/// sup_t (int_t^T L(t,s)^q ds)^{2/q} by trapezoid quadrature on the grid.
double kernel_condition(const Driver& g, const TimeGrid& grid);

/// g(t_i, s_j, y(s_j), z(t_i, s_j), z(s_j, t_i)) on all paths, out [M][m].
/// zeta is zero when z has no lower triangle; that is an error if g uses it.
void driver_along(const Driver& g, const Process1P& y, const Process2P& z, const PathEnsemble& ens, std::size_t i,
                  std::size_t j, std::span<double> out);

/// f(t,s) = g(t, s, Y(s), Z(t,s), Z(s,t)) as a simple generator. A solution
/// (Y, Z) of the BSVIE solves the simple BSVIE with this f. The processes
/// are captured by reference.
SimpleDriver along_solution(const Driver& g, const Process1P& Y, const Process2P& Z);

/// One application of the map Theta: freeze (y, z) inside g, solve the simple
/// BSVIE, and M-extend in M-solution mode.
SimpleSolution theta_map(const Process1P& y, const Process2P& z, const Driver& g, const Process1P& psi,
                         const ConditionalExpectation& ce, SolveMode mode);
SimpleSolution theta_map(const Process1P& y, const Process2P& z, const Driver& g, const FreeTerm& psi,
                         const PathEnsemble& ens, const SolverConfig& cfg);

/// Iterates Theta from (0, 0), or from `start`, until the weighted distance
/// of successive iterates is below tol. Throws DivergenceError when factors
/// stay >= 1 for `divergence_window` iterations even after doubling beta
/// `max_beta_doublings` times.
LipschitzResult solve_lipschitz(const Driver& g, const FreeTerm& psi, const ConditionalExpectation& ce,
                                const SolverConfig& cfg, const SimpleSolution* start = nullptr);
LipschitzResult solve_lipschitz(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens,
                                const SolverConfig& cfg = {});

struct StabilityGap {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of the stability estimate on [S, T]^2 (S is a grid index):
/// lhs = E int |dY|^2 + E int int |dZ|^2,
/// rhs = C E int |dpsi|^2 + C E int (int_t^T |g - gbar| ds)^2 dt,
/// with g and gbar both evaluated along solution 1.
StabilityGap stability_gap(const Process1P& Y1, const Process2P& Z1, const Process1P& Y2, const Process2P& Z2,
                           const FreeTerm& psi1, const FreeTerm& psi2, const Driver& g1, const Driver& g2,
                           const PathEnsemble& ens, std::size_t S, double C = 64.0);

}  // namespace bsvie
