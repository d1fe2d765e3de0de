#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "bsvie/conditional_expectation.hpp"
#include "bsvie/driver.hpp"
#include "bsvie/paths.hpp"
#include "bsvie/processes.hpp"

namespace bsvie {

struct SimpleSolution {
  Process1P Y;
  Process2P Z;
};

/// Fills f(t_i, s_j) on all paths, out [M][m], for j >= i.
using RowDriver = std::function<void(std::size_t i, std::size_t j, std::span<double> out)>;

/// Family of BSDEs indexed by t_i: for each i and j >= i
///
///   lambda(t_i, t_j) = E[psi(t_i) + int_{t_j}^T f(t_i, s) ds | F_{t_j}],
///   Y(t_i) = lambda(t_i, t_i),
///   Z(t_i, t_j) = E[dM_j dW_j^T | F_{t_j}] / step(j),
///
/// with M_j = lambda(t_i, t_j) + int_{t_i}^{t_j} f(t_i, s) ds. The ds
/// integrals are trapezoid sums. Writes Y and the entries j >= i of Z; in
/// upper mode Z(t_N, t_N) = 0.
void solve_rows(const Process1P& psi, std::size_t m, const RowDriver& f, const ConditionalExpectation& ce, Process1P& Y,
                Process2P& Z);

/// Solution of Y(t) = psi(t) + int_t^T f(t,s) ds - int_t^T Z(t,s) dW(s) with
/// Z on the upper triangle. Throws InputError on non-finite f.
SimpleSolution solve_simple(const FreeTerm& psi, const SimpleDriver& f, const ConditionalExpectation& ce);
SimpleSolution solve_simple(const FreeTerm& psi, const SimpleDriver& f, const PathEnsemble& ens,
                            const RegressionConfig& cfg = {});

/// f(t_i, s_j) tabulated for j >= i, as a RowDriver.
RowDriver tabulate_rows(const SimpleDriver& f, const PathEnsemble& ens);

struct ExtendOptions {
  std::size_t S = 0;            ///< representation starts at t_S
  bool verify_adapted = true;  ///< run check_adapted on every Y(t_i)
};

/// Lower triangle Z(t_i, t_j), S <= j < i, from the martingale
/// j -> E[Y(t_i) | F_{t_j}], so that
/// Y(t_i) = E[Y(t_i) | F_{t_S}] + sum_{S <= j < i} Z(t_i, t_j) dW_j.
/// Z must be in full mode; entries j >= i are left untouched except
/// Z(t_N, t_N), which copies Z(t_N, t_{N-1}). Throws ContractError when Y is
/// not adapted (flag, or check_adapted above 3 / sqrt(M) with verify_adapted).
void m_extend(const Process1P& Y, const ConditionalExpectation& ce, Process2P& Z, const ExtendOptions& opt = {});
/// Full-mode Z holding only the lower triangle.
Process2P m_extend(const Process1P& Y, const PathEnsemble& ens, const RegressionConfig& cfg = {},
                   const ExtendOptions& opt = {});

}  // namespace bsvie
