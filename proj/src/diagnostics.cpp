#include "bsvie/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"

namespace bsvie {

namespace {

using Fill = std::function<void(std::size_t i, std::size_t j, std::span<double> out)>;

std::vector<double> residual_core(const Process1P& Y, const Process2P& Z, const Process1P& psi, const Fill& g,
                                  const PathEnsemble& ens) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  const std::size_t m = Y.dim();
  const std::size_t d = ens.dim();
  if (Y.paths() != mp || Y.steps() != n || Z.entry_dim() != m * d) throw ContractError("solution does not match");
  std::vector<double> out(n + 1, 0.0);
  parallel_for(n + 1, [&](std::size_t i) {
    std::vector<double> r(mp * m), gv(mp * m);
    const auto y = Y.at(i);
    const auto p = psi.at(i);
    for (std::size_t q = 0; q < mp * m; ++q) r[q] = y[q] - p[q];
    if (g) {
      const auto tw = grid.trapezoid_weights(i, n);
      for (std::size_t j = i; j <= n; ++j) {
        if (tw[j - i] == 0.0) continue;
        g(i, j, gv);
        for (std::size_t q = 0; q < mp * m; ++q) r[q] -= tw[j - i] * gv[q];
      }
    }
    for (std::size_t j = i; j < n; ++j) {
      const auto z = Z.at(i, j);
      const auto dw = ens.increments_at(j);
      for (std::size_t pp = 0; pp < mp; ++pp) {
        for (std::size_t a = 0; a < m; ++a) {
          double s = 0.0;
          for (std::size_t l = 0; l < d; ++l) s += z[(pp * m + a) * d + l] * dw[pp * d + l];
          r[pp * m + a] += s;
        }
      }
    }
    double e = 0.0;
    for (double v : r) e += v * v;
    out[i] = e / static_cast<double>(mp);
  });
  return out;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments mo;
  const double n = static_cast<double>(v.size());
  for (double x : v) mo.mean += x;
  mo.mean /= n;
  double s = 0.0;
  for (double x : v) s += (x - mo.mean) * (x - mo.mean);
  mo.se = v.size() > 1 ? std::sqrt(s / (n - 1.0) / n) : 0.0;
  return mo;
}

double sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

std::vector<double> bsvie_residual(const Process1P& Y, const Process2P& Z, const Driver& g, const FreeTerm& psi,
                                   const PathEnsemble& ens) {
  Fill fill;
  if (g.eval) fill = [&](std::size_t i, std::size_t j, std::span<double> o) { driver_along(g, Y, Z, ens, i, j, o); };
  return residual_core(Y, Z, tabulate(psi, ens), fill, ens);
}

std::vector<double> bsvie_residual(const Process1P& Y, const Process2P& Z, const SimpleDriver& f, const FreeTerm& psi,
                                   const PathEnsemble& ens) {
  return residual_core(Y, Z, tabulate(psi, ens), tabulate_rows(f, ens), ens);
}

std::vector<double> m_identity_residual(const Process1P& Y, const Process2P& Z, const PathEnsemble& ens) {
  const std::size_t n = ens.steps();
  const std::size_t mp = ens.paths();
  const std::size_t m = Y.dim();
  const std::size_t d = ens.dim();
  if (Z.domain() != Domain::kFull) throw ContractError("m_identity_residual needs Z with its lower triangle");
  if (Y.paths() != mp || Y.steps() != n || Z.entry_dim() != m * d) throw ContractError("solution does not match");
  std::vector<double> out(n + 1, 0.0);
  parallel_for(n + 1, [&](std::size_t i) {
    std::vector<double> r(mp * m);
    const auto y = Y.at(i);
    for (std::size_t a = 0; a < m; ++a) {
      const double mu = Y.mean(i, a);
      for (std::size_t p = 0; p < mp; ++p) r[p * m + a] = y[p * m + a] - mu;
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto z = Z.at(i, j);
      const auto dw = ens.increments_at(j);
      for (std::size_t p = 0; p < mp; ++p) {
        for (std::size_t a = 0; a < m; ++a) {
          double s = 0.0;
          for (std::size_t l = 0; l < d; ++l) s += z[(p * m + a) * d + l] * dw[p * d + l];
          r[p * m + a] -= s;
        }
      }
    }
    out[i] = sq(r) / static_cast<double>(mp);
  });
  return out;
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double EstimateCheck::slack() const { return 3.0 * std::sqrt(se_lhs * se_lhs + se_rhs * se_rhs); }

double EstimateCheck::ratio() const {
  if (rhs > 0) return lhs / rhs;
  return lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

bool EstimateCheck::pass() const { return lhs <= rhs + slack(); }

EstimateCheck verify_estimate_6(const Process1P& Y, const Process2P& Z, const FreeTerm& psi, const SimpleDriver& f,
                                const WeightProfile& w, const PathEnsemble& ens) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  const std::size_t m = Y.dim();
  if (w.A.size() != n + 1) throw ContractError("weight profile does not match the grid");
  const Process1P tab = tabulate(psi, ens);
  const auto wt = grid.trapezoid_weights(0, n);
  std::vector<double> nw(n + 1);
  for (std::size_t k = 0; k <= n; ++k) nw[k] = w.normalized_weight(k);

  std::vector<double> lhs(mp), rhs(mp);
  parallel_for(mp, [&](std::size_t p) {
    double l = 0.0, psi_mass = 0.0, f_mass = 0.0;
    std::vector<double> fv(m);
    for (std::size_t i = 0; i <= n; ++i) {
      double inner = nw[i] * sq(Y.at(i, p));
      for (std::size_t j = i; j < n; ++j) inner += grid.step(j) * nw[j] * sq(Z.at(i, j, p));
      l += wt[i] * inner;
      psi_mass += wt[i] * sq(tab.at(i, p));
      if (f.eval) {
        const auto tw = grid.trapezoid_weights(i, n);
        double row = 0.0;
        for (std::size_t j = i; j <= n; ++j) {
          f.eval(i, j, ens.view(p, j, f.features), fv);
          row += tw[j - i] * nw[j] * sq(fv) / w.alpha2[j];
        }
        f_mass += wt[i] * row;
      }
    }
    lhs[p] = l;
    rhs[p] = 20.0 * nw[n] * psi_mass + (47.0 / w.beta) * f_mass;
  });
  const Moments a = moments(lhs), b = moments(rhs);
  return {a.mean, b.mean, a.se, b.se};
}

bool PointwiseEstimate::pass() const {
  return std::all_of(per_t.begin(), per_t.end(), [](const EstimateCheck& e) { return e.pass(); });
}

double PointwiseEstimate::max_ratio() const {
  double r = 0.0;
  for (const auto& e : per_t) r = std::max(r, e.ratio());
  return r;
}

PointwiseEstimate verify_estimate_30(const Process1P& Y, const Process2P& Z, const FreeTerm& psi,
                                     const SimpleDriver& f, const WeightProfile& w, const PathEnsemble& ens,
                                     double C) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  const std::size_t m = Y.dim();
  if (w.A.size() != n + 1) throw ContractError("weight profile does not match the grid");
  const Process1P tab = tabulate(psi, ens);
  std::vector<double> nw(n + 1);
  for (std::size_t k = 0; k <= n; ++k) nw[k] = w.normalized_weight(k);

  PointwiseEstimate out;
  out.C = C;
  out.per_t.resize(n);
  out.unit_constant_ratio.resize(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> lhs(mp), base(mp), fv(m);
    const auto tw = grid.trapezoid_weights(i, n);
    for (std::size_t p = 0; p < mp; ++p) {
      double l = nw[i] * sq(Y.at(i, p));
      for (std::size_t j = i; j < n; ++j) l += grid.step(j) * nw[j] * sq(Z.at(i, j, p));
      double fm = 0.0;
      if (f.eval) {
        for (std::size_t j = i; j <= n; ++j) {
          f.eval(i, j, ens.view(p, j, f.features), fv);
          fm += tw[j - i] * nw[j] * sq(fv) / w.alpha2[j];
        }
      }
      lhs[p] = l;
      base[p] = nw[n] * sq(tab.at(i, p)) + fm / w.beta;
    }
    const Moments a = moments(lhs), b = moments(base);
    out.per_t[i] = {a.mean, C * b.mean, a.se, C * b.se};
    out.unit_constant_ratio[i] = b.mean > 0 ? a.mean / b.mean : (a.mean > 0 ? INFINITY : 0.0);
  });
  for (double r : out.unit_constant_ratio) out.smallest_passing_C = std::max(out.smallest_passing_C, r);
  return out;
}

EstimateCheck lower_triangle_energy(const Process1P& Y, const Process2P& Z, const WeightProfile& w,
                                    const PathEnsemble& ens) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = ens.paths();
  if (Z.domain() != Domain::kFull) throw ContractError("lower_triangle_energy needs Z with its lower triangle");
  const auto wt = grid.trapezoid_weights(0, n);
  std::vector<double> nw(n + 1);
  for (std::size_t k = 0; k <= n; ++k) nw[k] = w.normalized_weight(k);
  std::vector<double> lhs(mp), rhs(mp);
  parallel_for(mp, [&](std::size_t p) {
    double l = 0.0, r = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < i; ++j) inner += grid.step(j) * nw[j] * sq(Z.at(i, j, p));
      l += wt[i] * inner;
      r += wt[i] * nw[i] * sq(Y.at(i, p));
    }
    lhs[p] = l;
    rhs[p] = r;
  });
  const Moments a = moments(lhs), b = moments(rhs);
  return {a.mean, b.mean, a.se, b.se};
}

bool VerificationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["pass"] = pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                           {"detail", c.detail}});
  }
  return j;
}

nlohmann::json to_json(const SolverReport& r) {
  nlohmann::json j;
  j["solver"] = r.solver;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["beta"] = r.beta;
  j["beta_doublings"] = r.beta_doublings;
  j["history"] = nlohmann::json::array();
  for (const auto& h : r.history) {
    nlohmann::json e{{"iteration", h.iteration}, {"distance", h.distance}};
    e["factor"] = std::isnan(h.factor) ? nlohmann::json(nullptr) : nlohmann::json(h.factor);
    j["history"].push_back(e);
  }
  j["max_contraction_factor"] = r.max_factor();
  j["warnings"] = r.warnings;
  j["tags"] = r.tags;
  if (!r.outer_distances.empty()) {
    j["outer_distances"] = r.outer_distances;
    j["norm_seq"] = r.norm_seq;
    j["inner_iterations"] = r.inner_iterations;
  }
  return j;
}

nlohmann::json to_json(const EstimateCheck& e) {
  return {{"lhs", e.lhs}, {"rhs", e.rhs}, {"se_lhs", e.se_lhs}, {"se_rhs", e.se_rhs},
          {"ratio", e.ratio()}, {"pass", e.pass()}};
}

}  // namespace bsvie
