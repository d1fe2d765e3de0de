#include <doctest.h>

#include <cmath>

#include "bsvie/builtins.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/lipschitz_solver.hpp"
#include "bsvie/paths.hpp"
#include "support.hpp"

using namespace bsvie;
using nlohmann::json;

namespace {

WeightProfile unit_weights(const TimeGrid& g, double beta) {
  return build_weight_profile([](double) { return 1.0; }, g, 1.5, beta);
}

FreeTerm constant(double c) { return make_free_term(json{{"name", "constant"}, {"value", c}}); }

}  // namespace

TEST_CASE("weighted norm examples") {
  const PathEnsemble ens = testing::brownian(256, 20, 1);
  const auto& g = ens.grid();
  Process1P y(20, 256, 1);
  Process2P z(20, 256, 1, 1, Domain::kFull);
  CHECK(weighted_norm(y, z, unit_weights(g, 3.0), g, NormDomain::kSquare) == 0.0);

  for (std::size_t i = 0; i <= 256; ++i) {
    for (std::size_t p = 0; p < 20; ++p) y.at(i, p)[0] = 1.0;
  }
  for (double beta : {0.5, 3.0}) {
    const double expect = std::sqrt(std::expm1(beta) / beta);
    CHECK(weighted_norm(y, z, unit_weights(g, beta), g, NormDomain::kSquare) == doctest::Approx(expect).epsilon(1e-4));
    CHECK(weighted_norm(y, z, unit_weights(g, beta), g, NormDomain::kSquare, true) ==
          doctest::Approx(expect * std::exp(-beta / 2)).epsilon(1e-4));
  }
  CHECK(weighted_norm(y, z, unit_weights(g, 1e-8), g, NormDomain::kSquare) == doctest::Approx(1.0).epsilon(1e-6));

  // unit z on the upper triangle: int_0^1 (1 - t) dt = 1/2
  Process1P y0(20, 256, 1);
  for (std::size_t i = 0; i <= 256; ++i) {
    for (std::size_t j = 0; j <= 256; ++j) {
      for (double& v : z.at(i, j)) v = 1.0;
    }
  }
  CHECK(weighted_norm(y0, z, unit_weights(g, 1e-8), g, NormDomain::kUpper) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-2));
  CHECK(weighted_norm(y0, z, unit_weights(g, 1e-8), g, NormDomain::kSquare) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weighted norm rejects mismatched inputs") {
  const PathEnsemble ens = testing::brownian(8, 10, 2);
  Process1P y(10, 4, 1);
  Process2P z(10, 4, 1, 1, Domain::kFull);
  CHECK_THROWS_AS(weighted_norm(y, z, unit_weights(ens.grid(), 1.0), ens.grid(), NormDomain::kSquare), ContractError);
}

TEST_CASE("Theta with the zero driver solves the simple equation with f = 0") {
  const PathEnsemble ens = testing::brownian(8, 2000, 3);
  const ConditionalExpectation ce(ens, {});
  const FreeTerm psi = make_free_term(json{{"name", "t_times_WT"}});
  const Process1P tab = tabulate(psi, ens);
  Process1P y(2000, 8, 1);
  Process2P z(2000, 8, 1, 1, Domain::kFull);
  for (std::size_t i = 0; i <= 8; ++i) {
    for (std::size_t p = 0; p < 2000; ++p) y.at(i, p)[0] = std::sin(ens.state(p, i)[0]);
  }
  const SimpleSolution th = theta_map(y, z, make_driver(json{{"name", "zero"}}), tab, ce, SolveMode::kAdapted);
  const SimpleSolution direct = solve_simple(psi, SimpleDriver::zero(), ce);
  for (std::size_t i = 0; i <= 8; ++i) CHECK(testing::max_abs_diff(th.Y.at(i), direct.Y.at(i)) <= 1e-12);
}

TEST_CASE("Theta iterates of g = y with psi = 1") {
  const PathEnsemble ens = testing::brownian(16, 50, 4);
  const ConditionalExpectation ce(ens, {});
  const Driver g = make_driver(json{{"name", "linear"}, {"ay", 1.0}});
  const Process1P one = tabulate(constant(1.0), ens);
  Process1P y(50, 16, 1);
  Process2P z(50, 16, 1, 1, Domain::kFull);
  const SimpleSolution first = theta_map(y, z, g, one, ce, SolveMode::kMSolution);
  const SimpleSolution second = theta_map(first.Y, first.Z, g, one, ce, SolveMode::kMSolution);
  for (std::size_t i = 0; i <= 16; ++i) {
    const double t = ens.grid().node(i);
    for (double v : first.Y.at(i)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : second.Y.at(i)) CHECK(v == doctest::Approx(2.0 - t).epsilon(1e-12));
  }
}

TEST_CASE("zero driver converges to the projection of psi") {
  const PathEnsemble ens = testing::brownian(8, 1000, 5);
  const LipschitzResult r = solve_lipschitz(make_driver(json{{"name", "zero"}}), constant(2.0), ens);
  CHECK(r.report.converged);
  CHECK(r.report.iterations <= 2);
  for (std::size_t i = 0; i <= 8; ++i) {
    for (double v : r.Y.at(i)) CHECK(v == 2.0);
  }
}

TEST_CASE("linear Volterra equation Y(t) = 1 + int_t^T Y(s) ds") {
  const PathEnsemble ens = testing::brownian(32, 100, 6);
  const LipschitzResult r = solve_lipschitz(make_driver(json{{"name", "linear"}, {"ay", 1.0}}), constant(1.0), ens);
  CHECK(r.report.converged);
  for (std::size_t i = 0; i <= 32; ++i) {
    const double t = ens.grid().node(i);
    // trapezoid error of the fixed point is below h^2 e / 6
    CHECK(std::abs(r.Y.mean(i) - std::exp(1.0 - t)) <= std::exp(1.0) / (6.0 * 32 * 32));
  }
  for (double f : r.report.contraction_factors()) CHECK(f < 1.0);
}

TEST_CASE("adapted and M-solution modes agree for zeta-free drivers") {
  const PathEnsemble ens = testing::brownian(8, 2000, 7);
  const Driver g = make_driver(json{{"name", "bounded_mix"}, {"a3", 0.0}});
  const FreeTerm psi = make_free_term(json{{"name", "cos_WT"}});
  SolverConfig cfg;
  cfg.tol = 1e-11;
  const LipschitzResult m = solve_lipschitz(g, psi, ens, cfg);
  cfg.mode = SolveMode::kAdapted;
  const LipschitzResult a = solve_lipschitz(g, psi, ens, cfg);
  CHECK(m.Z.domain() == Domain::kFull);
  CHECK(a.Z.domain() == Domain::kUpper);
  for (std::size_t i = 0; i <= 8; ++i) {
    CHECK(testing::max_abs_diff(m.Y.at(i), a.Y.at(i)) <= 1e-8);
    for (std::size_t j = i; j <= 8 && !(i == 8 && j == 8); ++j) CHECK(testing::max_abs_diff(m.Z.at(i, j), a.Z.at(i, j)) <= 1e-8);
  }
}

TEST_CASE("bounded_mix contracts at the default beta") {
  const PathEnsemble ens = testing::brownian(16, 2000, 8);
  const LipschitzResult r =
      solve_lipschitz(make_driver(json{{"name", "bounded_mix"}}), make_free_term(json{{"name", "cos_WT"}}), ens);
  CHECK(r.report.converged);
  CHECK(r.report.beta >= 8.0);
  CHECK_FALSE(r.report.contraction_factors().empty());
  CHECK(r.report.max_factor() < 1.0);
}

TEST_CASE("solver preconditions") {
  const PathEnsemble ens = testing::brownian(8, 200, 9);
  SolverConfig cfg;
  cfg.mode = SolveMode::kAdapted;
  CHECK_THROWS_AS(solve_lipschitz(make_driver(json{{"name", "bounded_mix"}}), constant(1.0), ens, cfg), ModeError);

  CHECK_THROWS_AS(solve_lipschitz(make_driver(json{{"name", "eq33"}}), constant(1.0), ens), ConfigError);
  CHECK_THROWS_AS(
      solve_lipschitz(make_driver(json{{"name", "linear"}, {"ay", 1.0}, {"modulus", "sqrt"}}), constant(1.0), ens),
      ConfigError);

  SolverConfig star;
  star.weight_mode = WeightMode::kAStar;
  star.alpha_floor = 0.0;
  CHECK_THROWS_AS(solve_lipschitz(make_driver(json{{"name", "linear"}, {"ay", 0.5}}), constant(1.0), ens, star),
                  PreconditionError);
  star.alpha_floor = 1.0;
  CHECK_NOTHROW(solve_lipschitz(make_driver(json{{"name", "linear"}, {"ay", 0.5}}), constant(1.0), ens, star));

  SolverConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(solve_lipschitz(make_driver(json{{"name", "zero"}}), constant(1.0), ens, bad), ConfigError);
  CHECK_THROWS_AS(solve_mode_from_string("both"), ConfigError);
}

TEST_CASE("a non-contracting weight raises divergence with the report") {
  const PathEnsemble ens = testing::brownian(8, 100, 10);
  SolverConfig cfg;
  cfg.beta = 1e-3;
  cfg.max_beta_doublings = 0;
  cfg.divergence_window = 2;
  const Driver g = make_driver(json{{"name", "linear"}, {"ay", 50.0}});
  try {
    solve_lipschitz(g, constant(1.0), ens, cfg);
    FAIL("expected divergence");
  } catch (const SolverDivergenceError& e) {
    CHECK(e.report().history.size() >= 2);
    CHECK(e.report().max_factor() >= 1.0);
    CHECK_FALSE(e.report().converged);
  }
}

TEST_CASE("beta doubling rescues a slow start") {
  const PathEnsemble ens = testing::brownian(8, 100, 11);
  SolverConfig cfg;
  cfg.beta = 1e-3;
  cfg.max_beta_doublings = 20;
  cfg.divergence_window = 1;
  cfg.max_iter = 200;
  const LipschitzResult r = solve_lipschitz(make_driver(json{{"name", "linear"}, {"ay", 4.0}}), constant(1.0), ens, cfg);
  CHECK(r.report.converged);
  CHECK(r.report.beta_doublings > 0);
  CHECK(r.report.beta == doctest::Approx(1e-3 * std::pow(2.0, r.report.beta_doublings)));
}

TEST_CASE("along_solution reproduces Y through the simple equation") {
  const PathEnsemble ens = testing::brownian(8, 2000, 12);
  const ConditionalExpectation ce(ens, {});
  const Driver g = make_driver(json{{"name", "bounded_mix"}});
  const FreeTerm psi = make_free_term(json{{"name", "cos_WT"}});
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const LipschitzResult r = solve_lipschitz(g, psi, ce, cfg);
  const SimpleSolution again = solve_simple(psi, along_solution(g, r.Y, r.Z), ce);
  for (std::size_t i = 0; i <= 8; ++i) CHECK(testing::max_abs_diff(again.Y.at(i), r.Y.at(i)) <= 1e-9);

  Process2P upper = r.Z.to_upper();
  CHECK_THROWS_AS(along_solution(g, r.Y, upper), ModeError);
}

TEST_CASE("stability gap") {
  const PathEnsemble ens = testing::brownian(8, 2000, 13);
  const Driver g1 = make_driver(json{{"name", "bounded_mix"}});
  const Driver g2 = make_driver(json{{"name", "bounded_mix"}, {"c", 0.7}});
  const FreeTerm psi1 = make_free_term(json{{"name", "cos_WT"}});
  const FreeTerm psi2 = make_free_term(json{{"name", "cos_WT"}, {"scale", 1.2}});
  const LipschitzResult a = solve_lipschitz(g1, psi1, ens);
  const LipschitzResult b = solve_lipschitz(g2, psi2, ens);

  const StabilityGap same = stability_gap(a.Y, a.Z, a.Y, a.Z, psi1, psi1, g1, g1, ens, 0);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  for (std::size_t S : {0u, 4u, 8u}) {
    const StabilityGap gap = stability_gap(a.Y, a.Z, b.Y, b.Z, psi1, psi2, g1, g2, ens, S);
    CHECK(gap.lhs <= gap.rhs);
    if (S < 8) CHECK(gap.lhs > 0.0);
  }
  CHECK_THROWS_AS(stability_gap(a.Y, a.Z, b.Y, b.Z, psi1, psi2, g1, g2, ens, 9), ConfigError);
}

TEST_CASE("the working set is checked against the memory budget") {
  const PathEnsemble ens = testing::brownian(16, 1000, 14);
  const std::size_t saved = memory_budget_bytes();
  set_memory_budget_bytes(Process2P::storage(1000, 16, 1, 1, Domain::kFull) * sizeof(double) * 3 / 2);
  CHECK_THROWS_AS(solve_lipschitz(make_driver(json{{"name", "zero"}}), constant(1.0), ens), CapacityError);
  set_memory_budget_bytes(saved);
  CHECK_NOTHROW(solve_lipschitz(make_driver(json{{"name", "zero"}}), constant(1.0), ens));
}
