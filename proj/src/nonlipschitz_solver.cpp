#include "bsvie/nonlipschitz_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"

namespace bsvie {

Driver freeze_y(const Driver& g, const Process1P& y_frozen) {
  Driver out = g;
  out.name = g.name + ":frozen_y";
  out.modulus.reset();
  if (g.eval) {
    const Process1P* yp = &y_frozen;
    out.eval = [inner = g.eval, yp](const DriverPoint& at, std::span<const double>, std::span<const double> z,
                                    std::span<const double> zeta, const PathView& view, std::span<double> o) {
      inner(at, yp->at(at.si, view.path()), z, zeta, view, o);
    };
  }
  return out;
}

namespace {

double mean_square_integral(const Process1P& a, const Process1P* b, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  std::vector<double> v(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    const auto x = a.at(i);
    double s = 0.0;
    if (b) {
      const auto y = b->at(i);
      for (std::size_t q = 0; q < x.size(); ++q) s += (x[q] - y[q]) * (x[q] - y[q]);
    } else {
      for (double e : x) s += e * e;
    }
    v[i] = s / static_cast<double>(a.paths());
  }
  return grid.integrate(v);
}

}  // namespace

LipschitzResult picard_solve(const Driver& g, const FreeTerm& psi, const ConditionalExpectation& ce,
                             const PicardConfig& cfg, const Process1P* initial) {
  const PathEnsemble& ens = ce.ensemble();
  const TimeGrid& grid = ens.grid();
  if (!g.modulus) throw ConfigError("driver '" + g.name + "' has no modulus of continuity; picard_solve needs one");
  if (!(cfg.tol > 0)) throw ConfigError("outer tol must be positive");
  if (cfg.max_outer < 1) throw ConfigError("max_outer must be at least 1");
  if (cfg.inner.mode == SolveMode::kAdapted && g.uses_zeta) {
    throw ModeError("driver '" + g.name + "' depends on Z(s,t); adapted mode needs a zeta-free driver");
  }
  if (g.stochastic() && cfg.inner.mode == SolveMode::kMSolution) {
    throw ConfigError("stochastic coefficients are only supported in adapted mode");
  }

  SolverReport report;
  report.solver = "picard";
  if (g.stochastic()) report.tags.push_back("unproven regime");
  const WeightProfile w = driver_weights(g, grid, cfg.inner, 1.0);
  if (!std::isfinite(w.A.back())) throw PreconditionError("A(t) is not bounded on the grid");

  const std::size_t n = ens.steps();
  const Domain domain = cfg.inner.mode == SolveMode::kMSolution ? Domain::kFull : Domain::kUpper;
  // the inner working set plus the warm start
  require_capacity(3 * Process2P::storage(ens.paths(), n, g.m, g.d, domain), "Picard solver working set");
  auto y_prev = std::make_unique<Process1P>(initial ? *initial : Process1P(ens.paths(), n, g.m));
  if (y_prev->paths() != ens.paths() || y_prev->steps() != n || y_prev->dim() != g.m) {
    throw ContractError("initial iterate does not match the ensemble");
  }
  std::unique_ptr<SimpleSolution> last;
  std::size_t rising = 0;

  for (std::size_t k = 1; k <= cfg.max_outer; ++k) {
    const Driver frozen = freeze_y(g, *y_prev);
    LipschitzResult inner;
    try {
      inner = solve_lipschitz(frozen, psi, ce, cfg.inner, cfg.warm_start_inner ? last.get() : nullptr);
    } catch (const SolverDivergenceError& e) {
      report.warnings.push_back(fmt::format("inner solve {} diverged: {}", k, e.what()));
      throw SolverDivergenceError(e.what(), report);
    }
    report.beta = inner.report.beta;
    report.beta_doublings = std::max(report.beta_doublings, inner.report.beta_doublings);
    for (const auto& msg : inner.report.warnings) {
      if (std::find(report.warnings.begin(), report.warnings.end(), msg) == report.warnings.end()) {
        report.warnings.push_back(msg);
      }
    }
    report.inner_iterations.push_back(inner.report.iterations);
    if (!inner.report.converged) report.warnings.push_back(fmt::format("inner solve {} hit max_iter", k));

    const double dist = mean_square_integral(inner.Y, y_prev.get(), grid);
    report.outer_distances.push_back(dist);
    report.norm_seq.push_back(mean_square_integral(inner.Y, nullptr, grid));
    IterationRecord rec;
    rec.iteration = k;
    rec.distance = dist;
    if (report.history.size() > 0 && report.history.back().distance > 10.0 * std::numeric_limits<double>::epsilon()) {
      rec.factor = dist / report.history.back().distance;
    }
    rising = (!report.history.empty() && dist >= report.history.back().distance) ? rising + 1 : 0;
    report.history.push_back(rec);
    report.iterations = k;

    last = std::make_unique<SimpleSolution>(SimpleSolution{std::move(inner.Y), std::move(inner.Z)});
    *y_prev = last->Y;
    if (dist < cfg.tol) {
      report.converged = true;
      break;
    }
    if (rising >= cfg.divergence_window) {
      throw SolverDivergenceError(
          fmt::format("Picard distance did not decrease for {} consecutive steps", cfg.divergence_window), report);
    }
  }
  return {std::move(last->Y), std::move(last->Z), std::move(report)};
}

LipschitzResult picard_solve(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens, const PicardConfig& cfg) {
  return picard_solve(g, psi, ConditionalExpectation(ens, cfg.inner.regression), cfg);
}

JensenSides concavity_lemma_check(const std::function<double(double)>& c, const std::function<double(double)>& f,
                                  double t, const TimeGrid& grid, Quadrature rule) {
  const double T = grid.horizon();
  if (!(t < T)) throw PreconditionError("Jensen check needs t < T");
  std::vector<double> q{t};
  for (double node : grid.nodes()) {
    if (node > t + 1e-14 * (1.0 + std::abs(t))) q.push_back(node);
  }
  std::vector<double> fv(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    fv[k] = f(q[k]);
    if (!(fv[k] >= 0.0)) throw PreconditionError(fmt::format("f({}) = {} is not nonnegative", q[k], fv[k]));
  }
  const auto [lo, hi] = std::minmax_element(fv.begin(), fv.end());
  if (*hi > *lo && midpoint_concavity_defect(c, *lo, *hi) > 1e-12) {
    throw ContractError("c fails the midpoint concavity test on the range of f");
  }
  std::vector<double> wq(q.size(), 0.0);
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    const double h = q[k + 1] - q[k];
    if (rule == Quadrature::kTrapezoid) {
      wq[k] += 0.5 * h;
      wq[k + 1] += 0.5 * h;
    } else {
      wq[k] += h;
    }
  }
  const double len = T - t;
  double avg = 0.0, lhs = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    avg += wq[k] * fv[k];
    lhs += wq[k] * c(fv[k]);
  }
  return {lhs / len, c(avg / len)};
}

Verdict bihari_monitor(std::span<const double> phi, const Modulus& rho, double C, double tol, std::size_t burn_in) {
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!std::isfinite(phi[k]) || phi[k] < 0) return {false, fmt::format("phi[{}] = {} is not a distance", k, phi[k])};
  }
  for (std::size_t k = burn_in + 1; k < phi.size(); ++k) {
    if (phi[k] > phi[k - 1]) return {false, fmt::format("phi increases at step {}", k)};
    const double bound = C * rho(phi[k - 1]);
    if (phi[k] > bound) {
      return {false, fmt::format("phi[{}] = {} exceeds C rho(phi[{}]) = {}", k, phi[k], k - 1, bound)};
    }
  }
  if (phi.empty()) return {true, "empty sequence"};
  if (!(phi.back() < tol) && phi.back() != 0.0) {
    return {false, fmt::format("final distance {} is not below {}", phi.back(), tol)};
  }
  return {true, "non-increasing after burn-in, dominated by C rho, converged"};
}

GronwallCheck gronwall_bound_check(std::span<const double> norm_seq, double a, double b, double data_mass,
                                   double lambda, double horizon, double C) {
  GronwallCheck out;
  bool finite = true;
  for (double v : norm_seq) {
    finite = finite && std::isfinite(v);
    out.sup = std::isnan(v) ? v : std::max(out.sup, v);
    if (std::isnan(out.sup)) break;
  }
  out.bound = (C * a * lambda * horizon * horizon + C * data_mass) * std::exp(C * b * lambda * horizon);
  out.bounded = finite && out.sup <= out.bound;
  return out;
}

double picard_lambda(const Driver& g, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  double sup = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = i; j <= n; ++j) {
      const double l = g.L(grid.node(i), grid.node(j)) * g.r(0, grid.node(j));
      sup = std::max(sup, l * l);
    }
  }
  return sup;
}

double data_mass(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  const Process1P tab = tabulate(psi, ens);
  const double psi_mass = mean_square_integral(tab, nullptr, grid);
  const SimpleDriver g0 = free_part(g);
  if (!g0.eval) return psi_mass;
  std::vector<double> row(n + 1, 0.0);
  parallel_for(n + 1, [&](std::size_t i) {
    std::vector<double> e(n + 1, 0.0), out(g.m);
    for (std::size_t j = i; j <= n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < mp; ++p) {
        g0.eval(i, j, ens.view(p, j), out);
        for (double v : out) s += v * v;
      }
      e[j] = s / static_cast<double>(mp);
    }
    row[i] = grid.integrate(e, i);
  });
  return psi_mass + grid.integrate(row);
}

}  // namespace bsvie
