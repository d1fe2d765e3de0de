#include <doctest.h>

#include <cmath>

#include "bsvie/builtins.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/simple_bsvie.hpp"
#include "support.hpp"

using namespace bsvie;
using nlohmann::json;

namespace {

FreeTerm constant(double c) { return make_free_term(json{{"name", "constant"}, {"value", c}}); }
FreeTerm t_times_WT() { return make_free_term(json{{"name", "t_times_WT"}}); }

Process1P from_fn(const PathEnsemble& ens, const std::function<double(std::size_t, std::size_t)>& f) {
  Process1P y(ens.paths(), ens.steps(), 1);
  for (std::size_t i = 0; i <= ens.steps(); ++i) {
    for (std::size_t p = 0; p < ens.paths(); ++p) y.at(i, p)[0] = f(i, p);
  }
  return y;
}

}  // namespace

TEST_CASE("zero generator and constant free term") {
  const PathEnsemble ens = testing::brownian(8, 1000, 1);
  const SimpleSolution s = solve_simple(constant(1.75), SimpleDriver::zero(), ens);
  CHECK(s.Z.domain() == Domain::kUpper);
  for (std::size_t i = 0; i <= 8; ++i) {
    for (double v : s.Y.at(i)) CHECK(v == 1.75);
    for (std::size_t j = i; j <= 8; ++j) {
      for (double v : s.Z.at(i, j)) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("unit generator integrates deterministically") {
  const PathEnsemble ens = testing::brownian(16, 500, 2, 2.0);
  const SimpleSolution s = solve_simple(constant(0.0), make_simple_driver(json{{"name", "constant"}, {"value", 1.0}}), ens);
  for (std::size_t i = 0; i <= 16; ++i) {
    const double expect = 2.0 - ens.grid().node(i);
    for (double v : s.Y.at(i)) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    for (std::size_t j = i; j <= 16; ++j) {
      for (double v : s.Z.at(i, j)) CHECK(std::abs(v) <= 1e-12);
    }
  }
}

TEST_CASE("free term t W(T) gives Y = t W(t), Z = t") {
  const std::size_t M = 20000, N = 16;
  const PathEnsemble ens = testing::brownian(N, M, 3);
  const SimpleSolution s = solve_simple(t_times_WT(), SimpleDriver::zero(), ens);
  for (std::size_t i = 0; i <= N; ++i) {
    const double t = ens.grid().node(i);
    double mse = 0.0;
    for (std::size_t p = 0; p < M; ++p) mse += std::pow(s.Y.at(i, p)[0] - t * ens.state(p, i)[0], 2);
    mse /= M;
    // K = 4 fit of noise with variance t^2 (T - t)
    CHECK(mse <= 9.0 * 4.0 * t * t * (1.0 - t) / M + 1e-12);
    for (std::size_t j = i; j < N; ++j) {
      // path mean of (dW^2 / h) has standard error sqrt(2 / M), scaled by t
      CHECK(std::abs(s.Z.mean(i, j) - t) <= 3.0 * t * std::sqrt(2.0 / M) + 4.0 * t * std::sqrt(1.0 / (M * std::max(ens.grid().node(j), ens.grid().step(0)))));
    }
    if (i < N) CHECK(s.Z.mean(i, N) == s.Z.mean(i, N - 1));
  }
  for (double v : s.Z.at(N, N)) CHECK(v == 0.0);
}

TEST_CASE("Y(t_i) is the projection of psi(t_i) plus the trapezoid tail") {
  const std::size_t M = 3000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 4);
  const ConditionalExpectation ce(ens, {});
  const SimpleDriver f = make_simple_driver(json{{"name", "poly"}, {"c0", 0.3}, {"c1", 1.0}, {"c2", -0.5}, {"c3", 0.7}});
  const FreeTerm psi = make_free_term(json{{"name", "cos_WT"}});
  const SimpleSolution s = solve_simple(psi, f, ce);
  const Process1P tab = tabulate(psi, ens);
  for (std::size_t i = 0; i <= N; ++i) {
    const auto w = ens.grid().trapezoid_weights(i, N);
    std::vector<double> target(M);
    std::vector<double> o(1);
    for (std::size_t p = 0; p < M; ++p) {
      double tail = 0.0;
      for (std::size_t j = i; j <= N; ++j) {
        f.eval(i, j, ens.view(p, j), o);
        tail += w[j - i] * o[0];
      }
      target[p] = tab.at(i, p)[0] + tail;
    }
    const auto direct = i == N ? target : ce.project(i, target);
    CHECK(testing::max_abs_diff(s.Y.at(i), direct) <= 1e-10);
  }
}

TEST_CASE("lambda(t, .) is a martingale in the regression sense") {
  const std::size_t M = 20000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 5);
  const ConditionalExpectation ce(ens, {});
  const Process1P tab = tabulate(t_times_WT(), ens);
  const std::size_t i = 4;
  std::vector<std::vector<double>> lambda(N + 1);
  lambda[N].assign(tab.at(i).begin(), tab.at(i).end());
  for (std::size_t j = N; j-- > i;) lambda[j] = ce.project(j, lambda[N]);
  const double t = ens.grid().node(i);
  for (std::size_t j = i; j < N; ++j) {
    const auto back = ce.project(j, lambda[j + 1]);
    double d = 0.0;
    for (std::size_t p = 0; p < M; ++p) d += std::pow(back[p] - lambda[j][p], 2);
    CHECK(std::sqrt(d / M) <= 3.0 * 2.0 * t * std::sqrt(4.0 / M));
  }
}

TEST_CASE("M-extension examples") {
  const std::size_t M = 20000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 6);
  const ConditionalExpectation ce(ens, {});
  const auto& g = ens.grid();

  const Process1P det = from_fn(ens, [&](std::size_t i, std::size_t) { return std::exp(g.node(i)); });
  const Process2P z0 = m_extend(det, ens);
  for (std::size_t i = 0; i <= N; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      for (double v : z0.at(i, j)) CHECK(v == 0.0);
    }
  }

  const Process1P tw = from_fn(ens, [&](std::size_t i, std::size_t p) { return g.node(i) * ens.state(p, i)[0]; });
  Process2P z1(M, N, 1, 1, Domain::kFull);
  m_extend(tw, ce, z1);
  for (std::size_t i = 1; i <= N; ++i) {
    for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(z1.mean(i, j) - g.node(i)) <= 3.0 * g.node(i) * std::sqrt(2.0 / M) + 0.02);
  }

  const Process1P sq = from_fn(ens, [&](std::size_t i, std::size_t p) { return std::pow(ens.state(p, i)[0], 2); });
  const Process2P z2 = m_extend(sq, ens);
  for (std::size_t i = 2; i <= N; ++i) {
    for (std::size_t j = 1; j < i; ++j) {
      // 2 W(t_j) lies in the basis, so only regression noise remains
      const double h = g.step(j);
      double d = 0.0, second = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        d += std::pow(z2.at(i, j, p)[0] - 2.0 * ens.state(p, j)[0], 2);
        const double dw = ens.state(p, j + 1)[0] - ens.state(p, j)[0];
        second += std::pow(sq.at(i, p)[0] * dw / h, 2);
      }
      CHECK(d / M <= 9.0 * 4.0 * (second / M) / M);
    }
  }
}

TEST_CASE("M-extension keeps the upper triangle and mirrors the corner") {
  const std::size_t M = 2000, N = 4;
  const PathEnsemble ens = testing::brownian(N, M, 7);
  const ConditionalExpectation ce(ens, {});
  SimpleSolution s = solve_simple(t_times_WT(), SimpleDriver::zero(), ce);
  Process2P full = s.Z.to_full();
  m_extend(s.Y, ce, full);
  for (std::size_t i = 0; i <= N; ++i) {
    for (std::size_t j = i; j <= N; ++j) {
      if (i == N && j == N) continue;
      CHECK(testing::max_abs_diff(full.at(i, j), s.Z.at(i, j)) == 0.0);
    }
  }
  CHECK(testing::max_abs_diff(full.at(N, N), full.at(N, N - 1)) == 0.0);
}

TEST_CASE("M-extension rejects anticipating Y") {
  const std::size_t M = 2000, N = 4;
  const PathEnsemble ens = testing::brownian(N, M, 8);
  const ConditionalExpectation ce(ens, {});
  const Process1P wt = from_fn(ens, [&](std::size_t, std::size_t p) { return ens.state(p, N)[0]; });
  Process2P z(M, N, 1, 1, Domain::kFull);
  CHECK_THROWS_AS(m_extend(wt, ce, z), ContractError);
  Process1P flagged = from_fn(ens, [&](std::size_t i, std::size_t p) { return ens.state(p, i)[0]; });
  flagged.set_adapted(false);
  CHECK_THROWS_AS(m_extend(flagged, ce, z), ContractError);
  Process2P upper(M, N, 1, 1, Domain::kUpper);
  flagged.set_adapted(true);
  CHECK_THROWS_AS(m_extend(flagged, ce, upper), ContractError);
}

TEST_CASE("non-finite generator values are rejected") {
  const PathEnsemble ens = testing::brownian(4, 200, 9);
  SimpleDriver f;
  f.features = {};
  f.eval = [](std::size_t, std::size_t s, const PathView&, std::span<double> o) { o[0] = s == 2 ? INFINITY : 1.0; };
  CHECK_THROWS_AS(solve_simple(constant(0.0), f, ens), InputError);
}

TEST_CASE("solve_simple is independent of the worker count") {
  const PathEnsemble ens = testing::brownian(8, 3000, 10);
  const FreeTerm psi = make_free_term(json{{"name", "cos_WT"}});
  const SimpleDriver f = make_simple_driver(json{{"name", "Ws"}});
  SimpleSolution a, b;
  {
    ThreadScope t(1);
    a = solve_simple(psi, f, ens);
  }
  {
    ThreadScope t(8);
    b = solve_simple(psi, f, ens);
  }
  for (std::size_t i = 0; i <= 8; ++i) {
    CHECK(std::equal(a.Y.at(i).begin(), a.Y.at(i).end(), b.Y.at(i).begin()));
    for (std::size_t j = i; j <= 8; ++j) CHECK(std::equal(a.Z.at(i, j).begin(), a.Z.at(i, j).end(), b.Z.at(i, j).begin()));
  }
}
