#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/path_engine.hpp"
#include "support.hpp"

using namespace bsvie;

TEST_CASE("single path telescopes") {
  for (std::uint64_t seed : {0ull, 1ull, 77ull, 0xdeadbeefull}) {
    const PathEnsemble ens = testing::brownian(16, 1, seed);
    double w = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(ens.state(0, j)[0] == w);
      w += ens.increment(0, j)[0];
    }
    CHECK(ens.state(0, 16)[0] == w);
  }
}

TEST_CASE("construction identity holds exactly in every component") {
  const PathEnsemble ens = testing::brownian(10, 50, 4, 2.0, 3);
  for (std::size_t p = 0; p < 50; ++p) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(ens.state(p, 0)[k] == 0.0);
      for (std::size_t j = 0; j < 10; ++j) CHECK(ens.state(p, j + 1)[k] == ens.state(p, j)[k] + ens.increment(p, j)[k]);
    }
  }
}

TEST_CASE("terminal variance within chi-square standard error") {
  const std::size_t M = 50000;
  const PathEnsemble ens = testing::brownian(16, M, 2024);
  std::vector<double> wt(M), sq(M);
  for (std::size_t p = 0; p < M; ++p) {
    wt[p] = ens.state(p, 16)[0];
    sq[p] = wt[p] * wt[p];
  }
  const auto m = testing::mean_se(wt);
  CHECK(std::abs(m.mean) <= 5.0 / std::sqrt(double(M)));
  const double var = testing::mean_se(sq).mean - m.mean * m.mean;
  CHECK(std::abs(var - 1.0) <= 5.0 * std::sqrt(2.0 / M));
}

TEST_CASE("moments at intermediate nodes and increment independence") {
  const std::size_t M = 40000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 99, 1.0, 2);
  for (std::size_t j = 1; j <= N; ++j) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        const double w = ens.state(p, j)[k];
        s += w;
        s2 += w * w;
      }
      const double tj = ens.grid().node(j);
      CHECK(std::abs(s / M) <= 5.0 * std::sqrt(tj / M));
      CHECK(std::abs(s2 / M - tj) <= 5.0 * tj * std::sqrt(2.0 / M));
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      for (std::size_t ka = 0; ka < 2; ++ka) {
        for (std::size_t kb = 0; kb < 2; ++kb) {
          if (a == b && ka == kb) continue;
          double sab = 0.0;
          for (std::size_t p = 0; p < M; ++p) sab += ens.increment(p, a)[ka] * ens.increment(p, b)[kb];
          const double corr = sab / M / std::sqrt(ens.grid().step(a) * ens.grid().step(b));
          worst = std::max(worst, std::abs(corr));
        }
      }
    }
  }
  CHECK(worst <= 5.0 / std::sqrt(double(M)));
}

TEST_CASE("same seed gives identical ensembles for any worker count") {
  const TimeGrid g = TimeGrid::uniform(1.0, 12);
  PathEnsemble a = [&] {
    ThreadScope t(1);
    return generate_paths(g, 3001, 2, 5);
  }();
  PathEnsemble b = [&] {
    ThreadScope t(8);
    return generate_paths(g, 3001, 2, 5);
  }();
  const PathEnsemble c = generate_paths(g, 3001, 2, 5);
  CHECK(std::equal(a.raw_increments().begin(), a.raw_increments().end(), b.raw_increments().begin()));
  CHECK(std::equal(a.raw_increments().begin(), a.raw_increments().end(), c.raw_increments().begin()));
  const PathEnsemble d = generate_paths(g, 3001, 2, 6);
  CHECK_FALSE(std::equal(a.raw_increments().begin(), a.raw_increments().end(), d.raw_increments().begin()));
}

TEST_CASE("a path does not depend on how many paths are drawn") {
  const TimeGrid g = TimeGrid::uniform(1.0, 6);
  const PathEnsemble small = generate_paths(g, 10, 1, 42);
  const PathEnsemble big = generate_paths(g, 1000, 1, 42);
  for (std::size_t p = 0; p < 10; ++p) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(small.increment(p, j)[0] == big.increment(p, j)[0]);
  }
}

TEST_CASE("bad sizes and budget") {
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  CHECK_THROWS_AS(generate_paths(g, 0, 1, 1), ConfigError);
  CHECK_THROWS_AS(generate_paths(g, 5, 0, 1), ConfigError);
  const std::size_t old = memory_budget_bytes();
  set_memory_budget_bytes(1 << 20);
  CHECK_THROWS_AS(generate_paths(g, 100000, 1, 1), CapacityError);
  set_memory_budget_bytes(old);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
}

TEST_CASE("check_adapted separates adapted from anticipating processes") {
  const std::size_t M = 4000, N = 8;
  const PathEnsemble ens = testing::brownian(N, M, 8);
  Process1P adapted(M, N, 1), future(M, N, 1), constant(M, N, 1);
  for (std::size_t j = 0; j <= N; ++j) {
    for (std::size_t p = 0; p < M; ++p) {
      adapted.at(j, p)[0] = ens.state(p, j)[0];
      future.at(j, p)[0] = ens.state(p, N)[0];
      constant.at(j, p)[0] = 3.0;
    }
  }
  const double thr = adaptedness_threshold(M);
  CHECK(thr == doctest::Approx(3.0 / std::sqrt(double(M))));
  for (std::size_t j = 0; j <= N; ++j) {
    CHECK(check_adapted(adapted, ens, j) < thr);
    CHECK(check_adapted(constant, ens, j) == 0.0);
  }
  for (std::size_t j = 0; j < N; ++j) CHECK(check_adapted(future, ens, j) > 0.99);
  CHECK(check_adapted(future, ens, N) < thr);
}

TEST_CASE("ensemble dump round trip") {
  const PathEnsemble ens = testing::brownian(5, 17, 3, 0.5, 2);
  const auto file = std::filesystem::temp_directory_path() / "bsvie_test_ensemble.bin";
  save_ensemble(ens, file);
  const PathEnsemble back = load_ensemble(file);
  CHECK(back.paths() == 17);
  CHECK(back.dim() == 2);
  CHECK(back.seed() == 3);
  CHECK(back.grid() == ens.grid());
  CHECK(std::equal(back.raw_states().begin(), back.raw_states().end(), ens.raw_states().begin()));
  std::filesystem::resize_file(file, 40);
  CHECK_THROWS_AS(load_ensemble(file), InputError);
  std::filesystem::remove(file);
}
