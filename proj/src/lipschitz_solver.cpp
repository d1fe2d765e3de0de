#include "bsvie/lipschitz_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"

namespace bsvie {

std::string to_string(SolveMode m) { return m == SolveMode::kMSolution ? "m_solution" : "adapted"; }

SolveMode solve_mode_from_string(const std::string& s) {
  if (s == "m_solution") return SolveMode::kMSolution;
  if (s == "adapted") return SolveMode::kAdapted;
  throw ConfigError("unknown solver mode '" + s + "'");
}

std::vector<double> SolverReport::distances() const {
  std::vector<double> out;
  for (const auto& h : history) out.push_back(h.distance);
  return out;
}

std::vector<double> SolverReport::contraction_factors() const {
  std::vector<double> out;
  for (const auto& h : history) {
    if (!std::isnan(h.factor)) out.push_back(h.factor);
  }
  return out;
}

double SolverReport::max_factor() const {
  double m = 0.0;
  for (double f : contraction_factors()) m = std::max(m, f);
  return m;
}

namespace {

constexpr double kFactorFloor = 10.0 * std::numeric_limits<double>::epsilon();

// E|dY(t_i)|^2 per node and E|dZ(t_i,t_j)|^2 per stored entry
struct Profile {
  std::vector<double> dy;
  std::vector<double> dz;  // (N+1)^2, zero where not stored
  bool square = false;
};

double mean_sq_diff(std::span<const double> a, std::span<const double> b, std::size_t paths) {
  double s = 0.0;
  if (b.empty()) {
    for (double v : a) s += v * v;
  } else {
    for (std::size_t q = 0; q < a.size(); ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
  }
  return s / static_cast<double>(paths);
}

Profile profile(const Process1P& y1, const Process2P& z1, const Process1P* y0, const Process2P* z0) {
  const std::size_t n = y1.steps();
  const std::size_t mp = y1.paths();
  Profile pr;
  pr.dy.assign(n + 1, 0.0);
  pr.dz.assign((n + 1) * (n + 1), 0.0);
  pr.square = z1.domain() == Domain::kFull && (!z0 || z0->domain() == Domain::kFull);
  parallel_for(n + 1, [&](std::size_t i) {
    pr.dy[i] = mean_sq_diff(y1.at(i), y0 ? y0->at(i) : std::span<const double>{}, mp);
    for (std::size_t j = 0; j <= n; ++j) {
      if (!z1.contains(i, j) || (z0 && !z0->contains(i, j))) continue;
      pr.dz[i * (n + 1) + j] = mean_sq_diff(z1.at(i, j), z0 ? z0->at(i, j) : std::span<const double>{}, mp);
    }
  });
  return pr;
}

double profile_norm(const Profile& pr, const TimeGrid& grid, const WeightProfile& w, NormDomain domain,
                    bool normalized) {
  const std::size_t n = grid.steps();
  if (domain == NormDomain::kSquare && !pr.square) throw ContractError("square-domain norm needs full Z storage");
  const auto wt = grid.trapezoid_weights(0, n);
  auto weight = [&](std::size_t k) { return normalized ? w.normalized_weight(k) : w.weight(k); };
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    double inner = weight(i) * pr.dy[i];
    for (std::size_t j = domain == NormDomain::kSquare ? 0 : i; j < n; ++j) {
      inner += grid.step(j) * weight(j) * pr.dz[i * (n + 1) + j];
    }
    total += wt[i] * inner;
  }
  return std::sqrt(std::max(total, 0.0));
}

}  // namespace

double weighted_norm(const Process1P& y, const Process2P& z, const WeightProfile& w, const TimeGrid& grid,
                     NormDomain domain, bool normalized) {
  if (y.paths() != z.paths() || y.steps() != z.steps() || y.steps() != grid.steps()) {
    throw ContractError("y, z and grid do not match");
  }
  if (w.A.size() != grid.steps() + 1) throw ContractError("weight profile does not match the grid");
  return profile_norm(profile(y, z, nullptr, nullptr), grid, w, domain, normalized);
}


WeightProfile driver_weights(const Driver& g, const TimeGrid& grid, const SolverConfig& cfg, double beta) {
  const double floor = cfg.alpha_floor;
  auto alpha2 = [&g, floor](double s) { return std::max(g.alpha2(s), floor); };
  if (cfg.weight_mode == WeightMode::kAStar) {
    for (double t : grid.nodes()) {
      if (alpha2(t) < 1.0) {
        throw PreconditionError(fmt::format("A* weights need alpha^2 >= 1; alpha^2({}) = {}", t, alpha2(t)));
      }
    }
  }
  return build_weight_profile(alpha2, grid, cfg.p, beta, cfg.weight_mode, floor > 0 ? floor : 1e-12);
}

double default_beta(const Driver& g, const TimeGrid& grid, const SolverConfig& cfg) {
  const std::size_t n = grid.steps();
  double sup_l2 = 0.0, sup_a2 = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    sup_a2 = std::max(sup_a2, std::max(g.alpha2(grid.node(i)), cfg.alpha_floor));
    for (std::size_t j = i; j <= n; ++j) {
      const double l = g.L(grid.node(i), grid.node(j));
      sup_l2 = std::max(sup_l2, l * l);
    }
  }
  return std::max(8.0, 4.0 * sup_l2 * sup_a2 * grid.horizon());
}

double kernel_condition(const Driver& g, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  const double q = g.kernel_exponent;
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> lq(n + 1, 0.0);
    for (std::size_t j = i; j <= n; ++j) lq[j] = std::pow(g.L(grid.node(i), grid.node(j)), q);
    sup = std::max(sup, std::pow(grid.integrate(lq, i), 2.0 / q));
  }
  return sup;
}

void driver_along(const Driver& g, const Process1P& y, const Process2P& z, const PathEnsemble& ens, std::size_t i,
                  std::size_t j, std::span<double> out) {
  const std::size_t m = g.m;
  const std::size_t md = g.m * g.d;
  const std::size_t mp = ens.paths();
  if (y.dim() != m || z.entry_dim() != md) throw ContractError("driver '" + g.name + "' does not match (y, z)");
  if (out.size() != mp * m) throw ContractError("driver output does not match [M][m]");
  if (!g.eval) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const bool have_zeta = z.contains(j, i);
  if (g.uses_zeta && !have_zeta) throw ModeError("driver '" + g.name + "' needs Z(s,t) on the lower triangle");
  const std::vector<double> zeros(md, 0.0);
  const TimeGrid& grid = ens.grid();
  const DriverPoint at{i, j, grid.node(i), grid.node(j)};
  const auto ys = y.at(j);
  const auto zs = z.at(i, j);
  const std::span<const double> es = have_zeta ? z.at(j, i) : std::span<const double>{};
  for (std::size_t p = 0; p < mp; ++p) {
    g(at, ys.subspan(p * m, m), zs.subspan(p * md, md),
      have_zeta ? es.subspan(p * md, md) : std::span<const double>(zeros), ens.view(p, j), out.subspan(p * m, m));
  }
}

SimpleDriver along_solution(const Driver& g, const Process1P& Y, const Process2P& Z) {
  SimpleDriver f;
  f.name = g.name + ":along_solution";
  f.dim = g.m;
  f.features = FeatureSet::all();
  if (!g.eval) return f;
  if (g.uses_zeta && Z.domain() != Domain::kFull) {
    throw ModeError("driver '" + g.name + "' needs Z(s,t) on the lower triangle");
  }
  const std::size_t md = g.m * g.d;
  f.eval = [&g, &Y, &Z, md](std::size_t ti, std::size_t si, const PathView& view, std::span<double> out) {
    const std::size_t p = view.path();
    const std::vector<double> zeros(md, 0.0);
    const TimeGrid& grid = view.grid();
    g({ti, si, grid.node(ti), grid.node(si)}, Y.at(si, p), Z.at(ti, si, p),
      Z.contains(si, ti) ? Z.at(si, ti, p) : std::span<const double>(zeros), view, out);
  };
  return f;
}

SimpleSolution theta_map(const Process1P& y, const Process2P& z, const Driver& g, const Process1P& psi,
                         const ConditionalExpectation& ce, SolveMode mode) {
  const PathEnsemble& ens = ce.ensemble();
  if (mode == SolveMode::kAdapted && g.uses_zeta) {
    throw ModeError("driver '" + g.name + "' depends on Z(s,t); adapted mode needs a zeta-free driver");
  }
  if (mode == SolveMode::kMSolution && z.domain() != Domain::kFull) {
    throw ContractError("M-solution mode needs (y, z) with Z on the whole square");
  }
  const Domain domain = mode == SolveMode::kMSolution ? Domain::kFull : Domain::kUpper;
  SimpleSolution out{Process1P(ens.paths(), ens.steps(), g.m), Process2P(ens.paths(), ens.steps(), g.m, g.d, domain)};
  RowDriver f;
  if (g.eval) f = [&](std::size_t i, std::size_t j, std::span<double> o) { driver_along(g, y, z, ens, i, j, o); };
  solve_rows(psi, g.m, f, ce, out.Y, out.Z);
  if (mode == SolveMode::kMSolution) m_extend(out.Y, ce, out.Z, {0, false});
  return out;
}

SimpleSolution theta_map(const Process1P& y, const Process2P& z, const Driver& g, const FreeTerm& psi,
                         const PathEnsemble& ens, const SolverConfig& cfg) {
  return theta_map(y, z, g, tabulate(psi, ens), ConditionalExpectation(ens, cfg.regression), cfg.mode);
}

namespace {

void fill_history(SolverReport& report, const std::vector<Profile>& profiles, const TimeGrid& grid,
                  const WeightProfile& w, NormDomain domain) {
  report.history.clear();
  double prev = 0.0;
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    IterationRecord rec;
    rec.iteration = k + 1;
    rec.distance = profile_norm(profiles[k], grid, w, domain, true);
    if (k > 0 && prev > kFactorFloor) rec.factor = rec.distance / prev;
    prev = rec.distance;
    report.history.push_back(rec);
  }
}

bool stalled(const SolverReport& report, std::size_t window) {
  if (report.history.size() < window) return false;
  for (std::size_t k = report.history.size() - window; k < report.history.size(); ++k) {
    const double f = report.history[k].factor;
    if (std::isnan(f) || f < 1.0) return false;
  }
  return true;
}

}  // namespace

LipschitzResult solve_lipschitz(const Driver& g, const FreeTerm& psi, const ConditionalExpectation& ce,
                                const SolverConfig& cfg, const SimpleSolution* start) {
  const PathEnsemble& ens = ce.ensemble();
  const TimeGrid& grid = ens.grid();
  if (!(cfg.tol > 0)) throw ConfigError("tol must be positive");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (cfg.divergence_window < 1) throw ConfigError("divergence_window must be at least 1");
  if (!(g.kernel_exponent > 2)) throw ConfigError("kernel exponent q must exceed 2");
  if (g.non_lipschitz()) throw ConfigError("driver '" + g.name + "' is non-Lipschitz in y; use picard_solve");
  if (g.stochastic() && cfg.mode == SolveMode::kMSolution) {
    throw ConfigError("stochastic Lipschitz coefficients are only supported in adapted mode");
  }
  if (cfg.mode == SolveMode::kAdapted && g.uses_zeta) {
    throw ModeError("driver '" + g.name + "' depends on Z(s,t); adapted mode needs a zeta-free driver");
  }
  if (g.m != psi.dim || g.d != ens.dim()) throw ConfigError("driver, free term and ensemble dimensions differ");

  SolverReport report;
  report.solver = "lipschitz";
  report.beta = cfg.beta > 0 ? cfg.beta : default_beta(g, grid, cfg);
  WeightProfile w = driver_weights(g, grid, cfg, report.beta);
  const double kc = kernel_condition(g, grid);
  if (!std::isfinite(kc) || kc > 1e8) {
    report.warnings.push_back(fmt::format("kernel condition sup_t (int L^q)^(2/q) = {} is close to violation", kc));
  }

  const Domain domain = cfg.mode == SolveMode::kMSolution ? Domain::kFull : Domain::kUpper;
  // current and next iterate
  require_capacity(2 * Process2P::storage(ens.paths(), ens.steps(), g.m, g.d, domain), "Lipschitz solver working set");
  const NormDomain norm_domain = cfg.mode == SolveMode::kMSolution ? NormDomain::kSquare : NormDomain::kUpper;
  const Process1P psi_tab = tabulate(psi, ens);

  SimpleSolution current{Process1P(ens.paths(), ens.steps(), g.m),
                         Process2P(ens.paths(), ens.steps(), g.m, g.d, domain)};
  if (start) {
    current.Y = start->Y;
    if (start->Z.domain() == domain) {
      current.Z = start->Z;
    } else if (domain == Domain::kUpper) {
      current.Z = start->Z.to_upper();
    } else {
      current.Z = start->Z.to_full();
      m_extend(current.Y, ce, current.Z, {0, false});
    }
  }

  std::vector<Profile> profiles;
  for (std::size_t k = 1; k <= cfg.max_iter; ++k) {
    SimpleSolution next = theta_map(current.Y, current.Z, g, psi_tab, ce, cfg.mode);
    profiles.push_back(profile(next.Y, next.Z, &current.Y, &current.Z));
    current = std::move(next);
    fill_history(report, profiles, grid, w, norm_domain);
    report.iterations = k;
    if (report.history.back().distance < cfg.tol) {
      report.converged = true;
      break;
    }
    while (stalled(report, cfg.divergence_window) && report.beta_doublings < cfg.max_beta_doublings) {
      report.beta *= 2.0;
      ++report.beta_doublings;
      w = w.with_beta(report.beta);
      fill_history(report, profiles, grid, w, norm_domain);
    }
    if (stalled(report, cfg.divergence_window)) {
      throw SolverDivergenceError(
          fmt::format("Theta did not contract for {} iterations at beta = {} after {} doublings; increase beta",
                      cfg.divergence_window, report.beta, report.beta_doublings),
          report);
    }
  }
  return {std::move(current.Y), std::move(current.Z), std::move(report)};
}

LipschitzResult solve_lipschitz(const Driver& g, const FreeTerm& psi, const PathEnsemble& ens,
                                const SolverConfig& cfg) {
  return solve_lipschitz(g, psi, ConditionalExpectation(ens, cfg.regression), cfg);
}

StabilityGap stability_gap(const Process1P& Y1, const Process2P& Z1, const Process1P& Y2, const Process2P& Z2,
                           const FreeTerm& psi1, const FreeTerm& psi2, const Driver& g1, const Driver& g2,
                           const PathEnsemble& ens, std::size_t S, double C) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  if (S > n) throw ConfigError("S beyond the horizon");
  if (Y1.steps() != n || Y2.steps() != n || Y1.paths() != mp || Y2.paths() != mp) {
    throw ContractError("solutions live on different grids");
  }
  const auto wt = grid.trapezoid_weights(S, n);
  const Profile pr = profile(Y2, Z2, &Y1, &Z1);
  StabilityGap gap;
  for (std::size_t i = S; i <= n; ++i) {
    double inner = pr.dy[i];
    for (std::size_t j = pr.square ? S : i; j < n; ++j) inner += grid.step(j) * pr.dz[i * (n + 1) + j];
    gap.lhs += wt[i - S] * inner;
  }

  const Process1P p1 = tabulate(psi1, ens);
  const Process1P p2 = tabulate(psi2, ens);
  std::vector<double> dpsi(n + 1, 0.0), dg(n + 1, 0.0);
  parallel_for(n + 1 - S, [&](std::size_t r) {
    const std::size_t i = S + r;
    dpsi[i] = mean_sq_diff(p1.at(i), p2.at(i), mp);
    const std::size_t m = g1.m;
    std::vector<double> a(mp * m), b(mp * m), gap_norm((n + 1 - i) * mp, 0.0), integral(mp, 0.0);
    for (std::size_t j = i; j <= n; ++j) {
      driver_along(g1, Y1, Z1, ens, i, j, a);
      driver_along(g2, Y1, Z1, ens, i, j, b);
      for (std::size_t p = 0; p < mp; ++p) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += (a[p * m + c] - b[p * m + c]) * (a[p * m + c] - b[p * m + c]);
        gap_norm[(j - i) * mp + p] = std::sqrt(s);
      }
    }
    const auto tw = grid.trapezoid_weights(i, n);
    for (std::size_t j = i; j <= n; ++j) {
      for (std::size_t p = 0; p < mp; ++p) integral[p] += tw[j - i] * gap_norm[(j - i) * mp + p];
    }
    double e = 0.0;
    for (double v : integral) e += v * v;
    dg[i] = e / static_cast<double>(mp);
  });
  double psi_term = 0.0, g_term = 0.0;
  for (std::size_t i = S; i <= n; ++i) {
    psi_term += wt[i - S] * dpsi[i];
    g_term += wt[i - S] * dg[i];
  }
  gap.rhs = C * psi_term + C * g_term;
  return gap;
}

}  // namespace bsvie
