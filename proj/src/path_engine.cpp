#include "bsvie/path_engine.hpp"

#include <Eigen/Dense>
#include <bit>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/philox.hpp"

namespace bsvie {

double normal_quantile(double u) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, u);
}

void PathStream::normals(std::uint64_t first, std::span<double> out) const {
  const Philox4x32 gen(key_);
  // two normals per Philox block (64 bits each)
  std::uint64_t block = first / 2;
  std::size_t lane = first % 2;
  std::size_t k = 0;
  while (k < out.size()) {
    const auto words = gen({static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32),
                            static_cast<std::uint32_t>(block), branch_ ^ static_cast<std::uint32_t>(block >> 32)});
    for (; lane < 2 && k < out.size(); ++lane, ++k) {
      out[k] = normal_quantile(to_open_unit(words[2 * lane], words[2 * lane + 1]));
    }
    lane = 0;
    ++block;
  }
}

PathEnsemble generate_paths(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed) {
  if (paths == 0) throw ConfigError("path count M must be positive");
  if (dim == 0) throw ConfigError("Brownian dimension d must be positive");
  const std::size_t n = grid.steps();
  // increments and states
  require_capacity(2 * paths * (n + 1) * dim, "path ensemble");

  std::vector<double> increments(n * paths * dim);
  std::vector<double> sqrt_step(n);
  for (std::size_t j = 0; j < n; ++j) sqrt_step[j] = std::sqrt(grid.step(j));
  const std::uint64_t key = mix64(seed);

  parallel_for(paths, [&](std::size_t p) {
    std::vector<double> z(n * dim);
    PathStream(key, p).normals(0, z);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < dim; ++k) increments[(j * paths + p) * dim + k] = sqrt_step[j] * z[j * dim + k];
    }
  });
  return PathEnsemble(grid, paths, dim, seed, std::move(increments));
}

double adaptedness_threshold(std::size_t paths) { return 3.0 / std::sqrt(static_cast<double>(paths)); }

double check_adapted(const Process1P& proc, const PathEnsemble& ens, std::size_t j) {
  const std::size_t n = ens.steps();
  const std::size_t mpaths = ens.paths();
  const std::size_t d = ens.dim();
  if (proc.paths() != mpaths || proc.steps() != n) throw ContractError("process is not defined on this ensemble");
  if (j > n) throw ContractError("time index out of range");

  // Past block [1, W(t_j)], then the future increments.
  const std::size_t past = 1 + d;
  const std::size_t k_cols = past + (n - j) * d;
  Eigen::MatrixXd x(mpaths, k_cols);
  x.col(0).setOnes();
  const auto w = ens.states_at(j);
  for (std::size_t l = 0; l < d; ++l) {
    for (std::size_t p = 0; p < mpaths; ++p) x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(1 + l)) = w[p * d + l];
  }
  for (std::size_t step = j; step < n; ++step) {
    const auto inc = ens.increments_at(step);
    for (std::size_t l = 0; l < d; ++l) {
      const std::size_t c = past + (step - j) * d + l;
      for (std::size_t p = 0; p < mpaths; ++p) x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = inc[p * d + l];
    }
  }
  // At t_0 the state column is zero; keep the past block full rank.
  const Eigen::Index past_cols = j == 0 ? 1 : static_cast<Eigen::Index>(past);
  const Eigen::MatrixXd xp = x.leftCols(past_cols);
  Eigen::MatrixXd xf(mpaths, past_cols + static_cast<Eigen::Index>((n - j) * d));
  xf << xp, x.rightCols(static_cast<Eigen::Index>((n - j) * d));
  const Eigen::LDLT<Eigen::MatrixXd> ldlt_p(xp.transpose() * xp);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt_f(xf.transpose() * xf);

  double worst = 0.0;
  const auto slice = proc.at(j);
  for (std::size_t k = 0; k < proc.dim(); ++k) {
    Eigen::VectorXd y(mpaths);
    for (std::size_t p = 0; p < mpaths; ++p) y(static_cast<Eigen::Index>(p)) = slice[p * proc.dim() + k];
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    if (!(sst > 1e-24 * static_cast<double>(mpaths) * (1.0 + mean * mean))) continue;
    if (j == n) continue;
    const double ssr_past = (y - xp * ldlt_p.solve(xp.transpose() * y)).squaredNorm();
    if (!(ssr_past > 1e-20 * sst)) continue;
    const double ssr_full = (y - xf * ldlt_f.solve(xf.transpose() * y)).squaredNorm();
    worst = std::max(worst, std::max(0.0, 1.0 - ssr_full / ssr_past));
  }
  return worst;
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw InputError("truncated ensemble file");
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

}  // namespace

void save_ensemble(const PathEnsemble& ens, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw InputError("cannot open " + file.string() + " for writing");
  const std::size_t n = ens.steps();
  put<std::uint64_t>(os, ens.paths());
  put<std::uint64_t>(os, n);
  put<std::uint64_t>(os, ens.dim());
  put<std::uint64_t>(os, ens.seed());
  for (double t : ens.grid().nodes()) put<double>(os, t);
  for (std::size_t p = 0; p < ens.paths(); ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      for (double v : ens.increment(p, j)) put<double>(os, v);
    }
  }
  if (!os) throw InputError("failed writing " + file.string());
}

PathEnsemble load_ensemble(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw InputError("cannot open " + file.string());
  const auto m = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  const auto d = get<std::uint64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  if (m == 0 || n == 0 || d == 0) throw InputError("ensemble header has a zero dimension");
  require_capacity(2 * m * (n + 1) * d, "path ensemble");
  std::vector<double> nodes(n + 1);
  for (auto& t : nodes) t = get<double>(is);
  std::vector<double> increments(n * m * d);
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) increments[(j * m + p) * d + k] = get<double>(is);
    }
  }
  return PathEnsemble(TimeGrid(std::move(nodes)), m, d, seed, std::move(increments));
}

}  // namespace bsvie
