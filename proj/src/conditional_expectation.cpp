#include "bsvie/conditional_expectation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>

#include "bsvie/errors.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/path_engine.hpp"
#include "bsvie/philox.hpp"

namespace bsvie {

std::string to_string(BasisFeature f) { return f == BasisFeature::kState ? "state" : "time_integral"; }

BasisFeature basis_feature_from_string(const std::string& tag) {
  if (tag == "state" || tag == "W(t)") return BasisFeature::kState;
  if (tag == "time_integral") return BasisFeature::kTimeIntegral;
  throw ConfigError("unknown regression feature '" + tag + "'");
}

namespace {

// exponent vectors over `n` variables with total degree <= degree, graded order
std::vector<std::vector<int>> monomials(std::size_t n, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  for (int total = 0; total <= degree; ++total) {
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
      if (pos + 1 == n || n == 0) {
        if (n > 0) e[pos] = left;
        if (n > 0 || left == 0) out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, total);
  }
  return out;
}

bool constant_column(const double* y, std::size_t n, std::size_t stride) {
  for (std::size_t p = 1; p < n; ++p) {
    if (y[p * stride] != y[0]) return false;
  }
  return true;
}

}  // namespace

ConditionalExpectation::ConditionalExpectation(const PathEnsemble& ens, RegressionConfig cfg)
    : ens_(&ens), cfg_(std::move(cfg)), slices_(ens.steps() + 1) {
  if (cfg_.basis_degree < 0) throw ConfigError("basis_degree must be nonnegative");
  if (cfg_.ridge < 0) throw ConfigError("ridge must be nonnegative");
  std::vector<Slice> built(slices_.size());
  parallel_for(slices_.size(), [&](std::size_t j) { built[j] = build(j); });
  for (std::size_t j = 0; j < built.size(); ++j) slices_[j] = std::move(built[j]);
}

ConditionalExpectation::ConditionalExpectation(const PathEnsemble& ens, RegressionConfig cfg, std::size_t j)
    : ens_(&ens), cfg_(std::move(cfg)), slices_(ens.steps() + 1) {
  if (cfg_.basis_degree < 0) throw ConfigError("basis_degree must be nonnegative");
  if (cfg_.ridge < 0) throw ConfigError("ridge must be nonnegative");
  if (j > ens.steps()) throw ContractError("time index out of range");
  slices_[j] = build(j);
}

const ConditionalExpectation::Slice& ConditionalExpectation::slice(std::size_t j) const {
  if (j >= slices_.size() || !slices_[j]) throw ContractError("regression slice " + std::to_string(j) + " not prepared");
  return *slices_[j];
}

std::size_t ConditionalExpectation::basis_size(std::size_t j) const {
  return static_cast<std::size_t>(slice(j).basis.cols());
}

ConditionalExpectation::Slice ConditionalExpectation::build(std::size_t j) const {
  const std::size_t mp = ens_->paths();
  const std::size_t d = ens_->dim();
  const auto n = static_cast<Eigen::Index>(mp);

  std::vector<Eigen::VectorXd> raw;
  for (BasisFeature f : cfg_.features) {
    for (std::size_t l = 0; l < d; ++l) {
      Eigen::VectorXd col(n);
      if (f == BasisFeature::kState) {
        const auto w = ens_->states_at(j);
        for (std::size_t p = 0; p < mp; ++p) col(static_cast<Eigen::Index>(p)) = w[p * d + l];
      } else {
        col.setZero();
        for (std::size_t k = 0; k < j; ++k) {
          const auto a = ens_->states_at(k);
          const auto b = ens_->states_at(k + 1);
          const double h = 0.5 * ens_->grid().step(k);
          for (std::size_t p = 0; p < mp; ++p) col(static_cast<Eigen::Index>(p)) += h * (a[p * d + l] + b[p * d + l]);
        }
      }
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) continue;
      raw.push_back((col.array() - mean) / sd);
    }
  }

  const auto exps = monomials(raw.size(), cfg_.basis_degree);
  const std::size_t k = raw.empty() ? 1 : exps.size();
  if (10 * k >= mp && k > 1) {
    throw ConfigError("regression basis of size " + std::to_string(k) + " over-fits " + std::to_string(mp) +
                      " paths (need K < M/10)");
  }

  Slice s;
  s.basis.resize(n, static_cast<Eigen::Index>(k));
  if (raw.empty()) {
    s.basis.col(0).setOnes();
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::ArrayXd col = Eigen::ArrayXd::Ones(n);
      for (std::size_t v = 0; v < raw.size(); ++v) {
        for (int e = 0; e < exps[c][v]; ++e) col *= raw[v].array();
      }
      s.basis.col(static_cast<Eigen::Index>(c)) = col.matrix();
    }
  }

  Eigen::MatrixXd gram = s.basis.transpose() * s.basis;
  if (cfg_.ridge > 0) {
    const double lambda = cfg_.ridge * gram.trace() / static_cast<double>(k);
    gram.diagonal().tail(static_cast<Eigen::Index>(k) - 1).array() += lambda;
  } else {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-13 * ev.maxCoeff())) {
      throw NumericalRankError("normal equations at slice " + std::to_string(j) +
                               " are singular; use ridge > 0 or a smaller basis");
    }
  }
  s.factor.compute(gram);
  if (s.factor.info() != Eigen::Success) {
    throw NumericalRankError("normal equations at slice " + std::to_string(j) +
                             " are not positive definite; use ridge > 0");
  }
  return s;
}

void ConditionalExpectation::project(std::size_t j, std::span<const double> samples, std::size_t k,
                                     std::span<double> out) const {
  const std::size_t mp = ens_->paths();
  if (samples.size() != mp * k || out.size() != mp * k) throw ContractError("sample array does not match [M][k]");
  const Slice& s = slice(j);
  const auto n = static_cast<Eigen::Index>(mp);
  using Strided = Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>>;
  using StridedOut = Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<>>;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t p = 0; p < mp; ++p) {
      if (!std::isfinite(samples[p * k + c])) throw InputError("non-finite sample in projection");
    }
    if (constant_column(samples.data() + c, mp, k)) {
      const double v = samples[c];
      for (std::size_t p = 0; p < mp; ++p) out[p * k + c] = v;
      continue;
    }
    const Eigen::VectorXd y = Strided(samples.data() + c, n, Eigen::InnerStride<>(static_cast<Eigen::Index>(k)));
    const Eigen::VectorXd coef = s.factor.solve(s.basis.transpose() * y);
    StridedOut(out.data() + c, n, Eigen::InnerStride<>(static_cast<Eigen::Index>(k))) = s.basis * coef;
  }
}

std::vector<double> ConditionalExpectation::project(std::size_t j, std::span<const double> samples,
                                                    std::size_t k) const {
  std::vector<double> out(samples.size());
  project(j, samples, k, out);
  return out;
}

void ConditionalExpectation::integrand(std::size_t j, std::span<const double> next, std::span<const double> current,
                                       std::size_t m, std::span<double> out) const {
  const std::size_t mp = ens_->paths();
  const std::size_t d = ens_->dim();
  if (j >= ens_->steps()) throw ContractError("integrand needs j < N");
  const auto dw = ens_->increments_at(j);
  std::vector<double> target(mp * m * d);
  for (std::size_t p = 0; p < mp; ++p) {
    for (std::size_t a = 0; a < m; ++a) {
      const double dm = next[p * m + a] - current[p * m + a];
      for (std::size_t l = 0; l < d; ++l) target[(p * m + a) * d + l] = dm * dw[p * d + l];
    }
  }
  project(j, target, m * d, out);
  const double inv = 1.0 / ens_->grid().step(j);
  for (double& v : out) v *= inv;
}

std::vector<double> project(std::span<const double> samples, std::size_t k, std::size_t j, const PathEnsemble& ens,
                            const RegressionConfig& cfg) {
  return ConditionalExpectation(ens, cfg, j).project(j, samples, k);
}

Process1P martingale_integrand(const Process1P& mart, const ConditionalExpectation& ce) {
  const PathEnsemble& ens = ce.ensemble();
  const std::size_t n = ens.steps();
  const std::size_t m = mart.dim();
  if (mart.paths() != ens.paths() || mart.steps() != n) throw ContractError("martingale is not defined on this ensemble");
  Process1P out(ens.paths(), n, m * ens.dim(), true);
  parallel_for(n, [&](std::size_t j) { ce.integrand(j, mart.at(j + 1), mart.at(j), m, out.at(j)); });
  std::copy(out.at(n - 1).begin(), out.at(n - 1).end(), out.at(n).begin());
  return out;
}

Process1P martingale_integrand(const Process1P& mart, const PathEnsemble& ens, const RegressionConfig& cfg) {
  return martingale_integrand(mart, ConditionalExpectation(ens, cfg));
}

OracleEstimate nested_mc_oracle(const PathFunctional& x, std::size_t j, const PathEnsemble& ens, std::size_t branches,
                                std::uint64_t seed) {
  const TimeGrid& grid = ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t d = ens.dim();
  const std::size_t mp = ens.paths();
  if (j > n) throw ContractError("time index out of range");
  if (branches == 0) throw ConfigError("nested oracle needs at least one branch");
  if (!x.eval) throw ConfigError("nested oracle functional is empty");
  require_capacity(2 * mp * x.dim, "nested oracle output");

  OracleEstimate est{std::vector<double>(mp * x.dim), std::vector<double>(mp * x.dim)};
  const std::uint64_t key = mix64(mix64(seed) + 1);
  std::vector<double> sqrt_step(n);
  for (std::size_t k = 0; k < n; ++k) sqrt_step[k] = std::sqrt(grid.step(k));

  parallel_for(mp, [&](std::size_t p) {
    std::vector<double> w((n + 1) * d), z((n - j) * d), val(x.dim), sum(x.dim, 0.0), sum2(x.dim, 0.0);
    for (std::size_t k = 0; k <= j; ++k) std::copy_n(ens.state(p, k).begin(), d, w.begin() + k * d);
    const PathView view(grid, w.data(), d, d, j, p, x.features);
    for (std::size_t b = 0; b < branches; ++b) {
      PathStream(key, p, static_cast<std::uint32_t>(b)).normals(0, z);
      for (std::size_t k = j; k < n; ++k) {
        for (std::size_t l = 0; l < d; ++l) w[(k + 1) * d + l] = w[k * d + l] + sqrt_step[k] * z[(k - j) * d + l];
      }
      x.eval(view, val);
      for (std::size_t c = 0; c < x.dim; ++c) {
        sum[c] += val[c];
        sum2[c] += val[c] * val[c];
      }
    }
    const double nb = static_cast<double>(branches);
    for (std::size_t c = 0; c < x.dim; ++c) {
      const double mean = sum[c] / nb;
      const double var = branches > 1 ? std::max(0.0, (sum2[c] - nb * mean * mean) / (nb - 1.0)) : 0.0;
      est.value[p * x.dim + c] = mean;
      est.standard_error[p * x.dim + c] = std::sqrt(var / nb);
    }
  });
  return est;
}

}  // namespace bsvie
