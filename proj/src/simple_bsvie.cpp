#include "bsvie/simple_bsvie.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/path_engine.hpp"

namespace bsvie {

void solve_rows(const Process1P& psi, std::size_t m, const RowDriver& f, const ConditionalExpectation& ce, Process1P& Y,
                Process2P& Z) {
  const PathEnsemble& ens = ce.ensemble();
  const TimeGrid& grid = ens.grid();
  const std::size_t n = ens.steps();
  const std::size_t mp = ens.paths();
  const std::size_t md = m * ens.dim();
  const std::size_t slice = mp * m;
  if (psi.dim() != m || psi.paths() != mp || psi.steps() != n) throw ContractError("free term does not match solver");
  if (Y.dim() != m || Y.paths() != mp || Y.steps() != n) throw ContractError("Y does not match solver");
  if (Z.entry_dim() != md || Z.paths() != mp || Z.steps() != n) throw ContractError("Z does not match solver");

  parallel_for(n + 1, [&](std::size_t i) {
    const std::size_t len = n + 1 - i;
    std::vector<double> fv(len * slice, 0.0), tail(len * slice, 0.0), lambda(len * slice), buf(slice);
    auto fs = [&](std::size_t j) { return std::span<double>(fv.data() + (j - i) * slice, slice); };
    auto ts = [&](std::size_t j) { return std::span<double>(tail.data() + (j - i) * slice, slice); };
    auto ls = [&](std::size_t j) { return std::span<double>(lambda.data() + (j - i) * slice, slice); };

    if (f) {
      for (std::size_t j = i; j <= n; ++j) {
        f(i, j, fs(j));
        for (double v : fs(j)) {
          if (!std::isfinite(v)) {
            throw InputError("driver is not finite at (t_" + std::to_string(i) + ", s_" + std::to_string(j) + ")");
          }
        }
      }
    }
    // tail_j = int_{t_j}^T f(t_i, s) ds
    for (std::size_t j = n; j-- > i;) {
      const double h = 0.5 * grid.step(j);
      auto a = ts(j), b = ts(j + 1), fa = fs(j), fb = fs(j + 1);
      for (std::size_t q = 0; q < slice; ++q) a[q] = b[q] + h * (fa[q] + fb[q]);
    }
    const auto p_i = psi.at(i);
    std::copy(p_i.begin(), p_i.end(), ls(n).begin());
    for (std::size_t j = i; j < n; ++j) {
      auto t = ts(j);
      for (std::size_t q = 0; q < slice; ++q) buf[q] = p_i[q] + t[q];
      ce.project(j, buf, m, ls(j));
    }
    std::copy(ls(i).begin(), ls(i).end(), Y.at(i).begin());

    for (std::size_t j = i; j < n; ++j) {
      const double h = 0.5 * grid.step(j);
      auto next = ls(j + 1), fa = fs(j), fb = fs(j + 1);
      for (std::size_t q = 0; q < slice; ++q) buf[q] = next[q] + h * (fa[q] + fb[q]);
      ce.integrand(j, buf, ls(j), m, Z.at(i, j));
    }
    if (i < n) {
      const auto last = Z.at(i, n - 1);
      std::copy(last.begin(), last.end(), Z.at(i, n).begin());
    } else if (Z.domain() == Domain::kUpper) {
      std::fill(Z.at(n, n).begin(), Z.at(n, n).end(), 0.0);
    }
  });
  Y.set_adapted(true);
}

RowDriver tabulate_rows(const SimpleDriver& f, const PathEnsemble& ens) {
  if (!f.eval) return {};
  return [&f, &ens](std::size_t i, std::size_t j, std::span<double> out) {
    const std::size_t m = f.dim;
    for (std::size_t p = 0; p < ens.paths(); ++p) f.eval(i, j, ens.view(p, j, f.features), out.subspan(p * m, m));
  };
}

SimpleSolution solve_simple(const FreeTerm& psi, const SimpleDriver& f, const ConditionalExpectation& ce) {
  const PathEnsemble& ens = ce.ensemble();
  if (f.eval && f.dim != psi.dim) throw ConfigError("free term and driver dimensions differ");
  const Process1P tab = tabulate(psi, ens);
  SimpleSolution sol{Process1P(ens.paths(), ens.steps(), psi.dim),
                     Process2P(ens.paths(), ens.steps(), psi.dim, ens.dim(), Domain::kUpper)};
  solve_rows(tab, psi.dim, tabulate_rows(f, ens), ce, sol.Y, sol.Z);
  return sol;
}

SimpleSolution solve_simple(const FreeTerm& psi, const SimpleDriver& f, const PathEnsemble& ens,
                            const RegressionConfig& cfg) {
  return solve_simple(psi, f, ConditionalExpectation(ens, cfg));
}

void m_extend(const Process1P& Y, const ConditionalExpectation& ce, Process2P& Z, const ExtendOptions& opt) {
  const PathEnsemble& ens = ce.ensemble();
  const std::size_t n = ens.steps();
  const std::size_t mp = ens.paths();
  const std::size_t m = Y.dim();
  if (Z.domain() != Domain::kFull) throw ContractError("m_extend needs a full-domain Z");
  if (Y.paths() != mp || Y.steps() != n || Z.entry_dim() != m * ens.dim()) throw ContractError("Y/Z do not match");
  if (opt.S > n) throw ConfigError("S beyond the horizon");
  if (!Y.adapted()) throw ContractError("m_extend needs an adapted Y");
  if (opt.verify_adapted) {
    const double threshold = adaptedness_threshold(mp);
    for (std::size_t i = opt.S + 1; i < n; ++i) {
      const double r2 = check_adapted(Y, ens, i);
      if (r2 > threshold) {
        throw ContractError("Y(t_" + std::to_string(i) + ") depends on future increments (R^2 = " + std::to_string(r2) +
                            ")");
      }
    }
  }

  const std::size_t slice = mp * m;
  parallel_for(n + 1, [&](std::size_t i) {
    if (i <= opt.S) return;
    std::vector<double> mart((i + 1 - opt.S) * slice);
    auto ms = [&](std::size_t j) { return std::span<double>(mart.data() + (j - opt.S) * slice, slice); };
    std::copy(Y.at(i).begin(), Y.at(i).end(), ms(i).begin());
    for (std::size_t j = opt.S; j < i; ++j) ce.project(j, Y.at(i), m, ms(j));
    for (std::size_t j = opt.S; j < i; ++j) ce.integrand(j, ms(j + 1), ms(j), m, Z.at(i, j));
  });
  if (n > opt.S) {
    const auto last = Z.at(n, n - 1);
    std::copy(last.begin(), last.end(), Z.at(n, n).begin());
  }
}

Process2P m_extend(const Process1P& Y, const PathEnsemble& ens, const RegressionConfig& cfg,
                   const ExtendOptions& opt) {
  Process2P Z(ens.paths(), ens.steps(), Y.dim(), ens.dim(), Domain::kFull);
  m_extend(Y, ConditionalExpectation(ens, cfg), Z, opt);
  return Z;
}

}  // namespace bsvie
