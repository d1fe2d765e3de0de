#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bsvie/conditional_expectation.hpp"
#include "bsvie/driver.hpp"
#include "bsvie/lipschitz_solver.hpp"
#include "bsvie/modulus.hpp"
#include "bsvie/time_grid.hpp"

namespace bsvie {

struct PicardConfig {
  SolverConfig inner;            ///< z-Lipschitz solve at each outer step
  double tol = 1e-6;             ///< on E int |Y_n - Y_{n-1}|^2
  std::size_t max_outer = 40;
  std::size_t divergence_window = 3;
  bool warm_start_inner = true;  ///< start each inner solve from the last (Y_n, Z_n)
};

/// Outer recursion
///   Y_n(t) = psi(t) + int_t^T g(t, s, Y_{n-1}(s), Z_n(t,s), Z_n(s,t)) ds - int_t^T Z_n(t,s) dW(s)
/// from Y_0 = 0 (or `initial`), each step solved by solve_lipschitz with the
/// y argument frozen. The driver must carry a Modulus (ConfigError).
/// Throws SolverDivergenceError when the outer distance fails to decrease
/// `divergence_window` times in a row.
LipschitzResult picard_solve(const Driver& g, const FreeTerm& psi, const ConditionalExpectation& ce,
                             const PicardConfig& cfg, const Process1P* initial = nullptr);
LipschitzResult picard_solve(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens,
                             const PicardConfig& cfg = {});

/// g with its y argument replaced by y_frozen(s) on each path; L and r_i are inherited.
Driver freeze_y(const Driver& g, const Process1P& y_frozen);

enum class Quadrature { kTrapezoid, kLeft };

struct JensenSides {
  double lhs = 0.0;  ///< (1/(T-t)) int_t^T c(f(s)) ds
  double rhs = 0.0;  ///< c((1/(T-t)) int_t^T f(s) ds)
};

/// Both sides of the averaged Jensen inequality on [t, T] with the grid
/// nodes above t as quadrature points. Throws ContractError when c fails the
/// midpoint test on the range of f, PreconditionError when f < 0 or t >= T.
JensenSides concavity_lemma_check(const std::function<double(double)>& c, const std::function<double(double)>& f,
                                  double t, const TimeGrid& grid, Quadrature rule = Quadrature::kTrapezoid);

struct Verdict {
  bool consistent = true;
  std::string reason;
};

/// Discrete Bihari check on an outer distance sequence: after `burn_in`
/// steps, phi_n <= phi_{n-1}, phi_n <= C rho(phi_{n-1}), and the last value
/// is below tol.
Verdict bihari_monitor(std::span<const double> phi, const Modulus& rho, double C, double tol = 1e-4,
                       std::size_t burn_in = 2);

struct GronwallCheck {
  bool bounded = true;
  double sup = 0.0;
  double bound = 0.0;
};

/// sup_n norm_seq[n] <= (C a Lambda T^2 + C data_mass) exp(C b Lambda T),
/// where Lambda = sup L^2 r1^2 and data_mass = E int |psi|^2 + E int int |g0|^2.
/// This is the Gronwall closure of
/// S_n <= C a Lambda T^2 + C data_mass + C b Lambda int S_{n-1}.
GronwallCheck gronwall_bound_check(std::span<const double> norm_seq, double a, double b, double data_mass,
                                   double lambda, double horizon, double C = 64.0);

/// sup over the grid of L(t,s)^2 r1(s)^2.
double picard_lambda(const Driver& g, const TimeGrid& grid);
/// E int |psi|^2 dt + E int int_{t<=s} |g(t,s,0,0,0)|^2 ds dt on the ensemble.
double data_mass(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens);

}  // namespace bsvie
