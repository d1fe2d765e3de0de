#include <doctest.h>

#include <cmath>

#include "bsvie/builtins.hpp"
#include "bsvie/diagnostics.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/simple_bsvie.hpp"
#include "support.hpp"

using namespace bsvie;
using nlohmann::json;

namespace {

FreeTerm constant(double c) { return make_free_term(json{{"name", "constant"}, {"value", c}}); }

WeightProfile unit_weights(const TimeGrid& g, double beta) {
  return build_weight_profile([](double) { return 1.0; }, g, 1.5, beta);
}

// Y = t W(t) and Z(t, s) = t on whichever part `lower` / `upper` selects
struct TW {
  Process1P Y;
  Process2P Z;
};
TW t_times_w(const PathEnsemble& ens, bool upper, bool lower) {
  const std::size_t n = ens.steps(), M = ens.paths();
  TW out{Process1P(M, n, 1), Process2P(M, n, 1, 1, Domain::kFull)};
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = ens.grid().node(i);
    for (std::size_t p = 0; p < M; ++p) out.Y.at(i, p)[0] = t * ens.state(p, i)[0];
    for (std::size_t j = 0; j <= n; ++j) {
      if ((j >= i && upper) || (j < i && lower)) {
        for (double& v : out.Z.at(i, j)) v = t;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("residual of an exact constant solution is zero") {
  const PathEnsemble ens = testing::brownian(8, 500, 1);
  const SimpleSolution s = solve_simple(constant(3.0), SimpleDriver::zero(), ens);
  for (double r : bsvie_residual(s.Y, s.Z, make_driver(json{{"name", "zero"}}), constant(3.0), ens)) CHECK(r == 0.0);
}

TEST_CASE("residual of a deterministic simple solution") {
  const PathEnsemble ens = testing::brownian(16, 200, 2);
  const SimpleDriver f = make_simple_driver(json{{"name", "constant"}, {"value", 1.0}});
  const SimpleSolution s = solve_simple(constant(0.0), f, ens);
  for (double r : bsvie_residual(s.Y, s.Z, f, constant(0.0), ens)) CHECK(r <= 1e-28);
}

TEST_CASE("residual of the analytic t W(T) solution and of a corrupted Z") {
  const std::size_t M = 20000, N = 16;
  const PathEnsemble ens = testing::brownian(N, M, 3);
  TW a = t_times_w(ens, true, false);
  const FreeTerm psi = make_free_term(json{{"name", "t_times_WT"}});
  const Driver zero = make_driver(json{{"name", "zero"}});
  for (double r : bsvie_residual(a.Y, a.Z, zero, psi, ens)) CHECK(r <= 1e-24);

  for (std::size_t i = 0; i <= N; ++i) {
    for (std::size_t j = i; j <= N; ++j) {
      for (double& v : a.Z.at(i, j)) v += 1.0;
    }
  }
  const auto r = bsvie_residual(a.Y, a.Z, zero, psi, ens);
  for (std::size_t i = 0; i <= N; ++i) {
    const double rem = 1.0 - ens.grid().node(i);
    CHECK(std::abs(r[i] - rem) <= 5.0 * rem * std::sqrt(2.0 / M));
  }
  CHECK(max_of(r) == doctest::Approx(r[0]).epsilon(0.1));
}

TEST_CASE("M-identity residual examples") {
  const std::size_t M = 20000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 4);

  Process1P det(M, N, 1);
  for (std::size_t i = 0; i <= N; ++i) {
    for (double& v : det.at(i)) v = std::exp(ens.grid().node(i));
  }
  Process2P z0(M, N, 1, 1, Domain::kFull);
  for (double r : m_identity_residual(det, z0, ens)) CHECK(r <= 1e-20);

  const TW exact = t_times_w(ens, true, true);
  const auto r1 = m_identity_residual(exact.Y, exact.Z, ens);
  const TW zeroed = t_times_w(ens, true, false);
  const auto r2 = m_identity_residual(zeroed.Y, zeroed.Z, ens);
  for (std::size_t i = 0; i <= N; ++i) {
    const double t = ens.grid().node(i);
    // only the squared sample mean of t W(t) remains
    CHECK(r1[i] <= 25.0 * t * t * t / M + 1e-28);
    CHECK(std::abs(r2[i] - t * t * t) <= 5.0 * t * t * t * std::sqrt(2.0 / M));
  }

  Process2P upper(M, N, 1, 1, Domain::kUpper);
  CHECK_THROWS_AS(m_identity_residual(det, upper, ens), ContractError);
}

TEST_CASE("estimate checks on simple solutions") {
  const PathEnsemble ens = testing::brownian(16, 4000, 5);
  const FreeTerm psis[] = {make_free_term(json{{"name", "t_times_WT"}}), make_free_term(json{{"name", "cos_WT"}}),
                           constant(0.0)};
  const SimpleDriver fs[] = {SimpleDriver::zero(), make_simple_driver(json{{"name", "Ws"}}),
                             make_simple_driver(json{{"name", "poly"}, {"c0", 1.0}, {"c3", -2.0}})};
  for (const auto& psi : psis) {
    for (const auto& f : fs) {
      const SimpleSolution s = solve_simple(psi, f, ens);
      for (double beta : {1.0, 10.0}) {
        const WeightProfile w = unit_weights(ens.grid(), beta);
        const EstimateCheck e6 = verify_estimate_6(s.Y, s.Z, psi, f, w, ens);
        CHECK(e6.pass());
        CHECK(e6.ratio() <= 1.0);
        const PointwiseEstimate e30 = verify_estimate_30(s.Y, s.Z, psi, f, w, ens);
        CHECK(e30.pass());
        CHECK(e30.per_t.size() == 16);
        CHECK(e30.unit_constant_ratio.size() == 16);
        CHECK(e30.smallest_passing_C <= 64.0);
        CHECK(e30.max_ratio() <= 1.0);
      }
    }
  }
}

TEST_CASE("estimate ratio is zero for zero data and infinite without data") {
  const PathEnsemble ens = testing::brownian(4, 100, 6);
  Process1P y(100, 4, 1);
  Process2P z(100, 4, 1, 1, Domain::kUpper);
  const WeightProfile w = unit_weights(ens.grid(), 1.0);
  const EstimateCheck zero = verify_estimate_6(y, z, constant(0.0), SimpleDriver::zero(), w, ens);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.ratio() == 0.0);
  CHECK(zero.pass());
  for (std::size_t i = 0; i <= 4; ++i) {
    for (double& v : y.at(i)) v = 1.0;
  }
  const EstimateCheck bad = verify_estimate_6(y, z, constant(0.0), SimpleDriver::zero(), w, ens);
  CHECK(std::isinf(bad.ratio()));
  CHECK_FALSE(bad.pass());
}

TEST_CASE("lower-triangle energy closed form") {
  const std::size_t M = 20000, N = 64;
  const PathEnsemble ens = testing::brownian(N, M, 7);
  Process1P y(M, N, 1);
  Process2P z(M, N, 1, 1, Domain::kFull);
  for (std::size_t i = 0; i <= N; ++i) {
    for (std::size_t p = 0; p < M; ++p) y.at(i, p)[0] = ens.state(p, i)[0];
    for (std::size_t j = 0; j < i; ++j) {
      for (double& v : z.at(i, j)) v = 1.0;
    }
  }
  for (double beta : {1e-8, 2.0}) {
    // int_0^1 int_0^t e^{b s} ds dt over int_0^1 t e^{b t} dt
    const double lhs = beta < 1e-6 ? 0.5 : (std::expm1(beta) / beta - 1.0) / beta;
    const double rhs = beta < 1e-6 ? 0.5 : std::exp(beta) / 4.0 * (2.0 * beta - 2.0) / beta + 1.0 / (beta * beta);
    const EstimateCheck e = lower_triangle_energy(y, z, unit_weights(ens.grid(), beta), ens);
    CHECK(e.ratio() == doctest::Approx(lhs / rhs).epsilon(0.02 + 3.0 * e.se_rhs / e.rhs));
  }
  Process2P upper(M, N, 1, 1, Domain::kUpper);
  CHECK_THROWS_AS(lower_triangle_energy(y, upper, unit_weights(ens.grid(), 1.0), ens), ContractError);
}

TEST_CASE("report serialization") {
  VerificationReport rep;
  rep.scenario = "s";
  rep.seed = 9;
  CHECK(rep.pass());
  rep.checks.push_back({"a", true, 0.1, 1.0, json::object()});
  CHECK(rep.pass());
  rep.checks.push_back({"b", false, 2.0, 1.0, json{{"k", 1}}});
  CHECK_FALSE(rep.pass());
  const json j = rep.to_json();
  CHECK(j["pass"] == false);
  CHECK(j["checks"].size() == 2);
  CHECK(j["checks"][1]["detail"]["k"] == 1);

  SolverReport sr;
  sr.solver = "lipschitz";
  sr.history = {{1, 0.5, std::nan("")}, {2, 0.25, 0.5}};
  const json js = to_json(sr);
  CHECK(js["history"][0]["factor"].is_null());
  CHECK(js["history"][1]["factor"] == 0.5);
  CHECK(js["max_contraction_factor"] == 0.5);
}
