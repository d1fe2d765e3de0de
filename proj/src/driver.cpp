#include "bsvie/driver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bsvie/errors.hpp"

namespace bsvie {

double Driver::alpha2(double s) const {
  double a2 = 0.0;
  for (std::size_t k = 0; k < 3; ++k) a2 += r(k, s) * r(k, s);
  return a2;
}

void Driver::operator()(const DriverPoint& at, std::span<const double> y, std::span<const double> z,
                        std::span<const double> zeta, const PathView& path, std::span<double> out) const {
  if (!eval) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  eval(at, y, z, zeta, path, out);
}

namespace {
double norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}
}  // namespace

double lipschitz_excess(const Driver& g, const PathEnsemble& ens, std::size_t pairs, std::uint64_t seed,
                        double range) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t md = g.m * g.d;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> arg(-range, range);
  std::uniform_int_distribution<std::size_t> node(0, n);
  std::uniform_int_distribution<std::size_t> path(0, ens.paths() - 1);
  std::bernoulli_distribution near(0.5);

  std::vector<double> y1(g.m), y2(g.m), z1(md), z2(md), e1(md), e2(md), o1(g.m), o2(g.m);
  double excess = 0.0;
  for (std::size_t q = 0; q < pairs; ++q) {
    std::size_t ti = node(rng), si = node(rng);
    if (si < ti) std::swap(ti, si);
    const DriverPoint at{ti, si, grid.node(ti), grid.node(si)};
    const PathView view = ens.view(path(rng), si);
    // half of the pairs are close together, where moduli are steepest
    const double scale = near(rng) ? 1e-3 : 1.0;
    for (auto* v : {&y1, &z1, &e1}) std::generate(v->begin(), v->end(), [&] { return arg(rng); });
    for (std::size_t k = 0; k < g.m; ++k) y2[k] = y1[k] + scale * arg(rng);
    for (std::size_t k = 0; k < md; ++k) {
      z2[k] = z1[k] + scale * arg(rng);
      e2[k] = e1[k] + scale * arg(rng);
    }
    g(at, y1, z1, e1, view, o1);
    g(at, y2, z2, e2, view, o2);
    const double lhs = norm(o1, o2);

    std::array<double, 3> r{g.r(0, at.s), g.r(1, at.s), g.r(2, at.s)};
    if (g.stochastic()) r = g.stochastic_coeffs(at.s, view);
    const double dy = norm(y1, y2);
    const double y_term = g.modulus ? std::sqrt((*g.modulus)(dy * dy)) : dy;
    const double rhs = g.L(at.t, at.s) * (r[0] * y_term + r[1] * norm(z1, z2) + r[2] * norm(e1, e2));
    excess = std::max(excess, lhs - rhs - 1e-12 * (1.0 + rhs));
  }
  return std::max(excess, 0.0);
}

PathFunctional FreeTerm::at(std::size_t i) const {
  PathFunctional f;
  f.dim = dim;
  f.features = features;
  auto fn = eval;
  f.eval = [fn, i](const PathView& view, std::span<double> out) { fn(i, view.at_index(i), out); };
  return f;
}

Process1P tabulate(const FreeTerm& psi, const PathEnsemble& ens) {
  const std::size_t n = ens.steps();
  Process1P out(ens.paths(), n, psi.dim, false);
  if (!psi.eval) return out;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t p = 0; p < ens.paths(); ++p) {
      auto dst = out.at(i, p);
      psi.eval(i, ens.view(p, i, psi.features), dst);
      for (double v : dst) {
        if (!std::isfinite(v)) throw InputError("free term '" + psi.name + "' is not finite at t_" + std::to_string(i));
      }
    }
  }
  return out;
}

SimpleDriver free_part(const Driver& g) {
  SimpleDriver f;
  f.name = g.name + ":g0";
  f.dim = g.m;
  f.features = FeatureSet::all();
  if (!g.eval) return f;
  const std::size_t md = g.m * g.d;
  f.eval = [g, md](std::size_t ti, std::size_t si, const PathView& view, std::span<double> out) {
    const std::vector<double> y(g.m, 0.0), z(md, 0.0);
    const TimeGrid& grid = view.grid();
    g({ti, si, grid.node(ti), grid.node(si)}, y, z, z, view, out);
  };
  return f;
}

}  // namespace bsvie
