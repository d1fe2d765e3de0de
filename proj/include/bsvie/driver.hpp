#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "bsvie/modulus.hpp"
#include "bsvie/paths.hpp"
#include "bsvie/processes.hpp"

namespace bsvie {

/// Grid location (t_i, s_j) at which a generator is evaluated.
struct DriverPoint {
  std::size_t ti = 0;
  std::size_t si = 0;
  double t = 0.0;
  double s = 0.0;
};

using DriverFn = std::function<void(const DriverPoint&, std::span<const double> y, std::span<const double> z,
                                    std::span<const double> zeta, const PathView& path, std::span<double> out)>;

/// Generator g(t, s, y, z, zeta) of a BSVIE with its regularity metadata:
///
///   |g(..., y, z, zeta) - g(..., y', z', zeta')|
///       <= L(t,s) (r1(s) |y - y'| + r2(s) |z - z'| + r3(s) |zeta - zeta'|)
///
/// and, when `modulus` is set, r1 |y - y'| replaced by r1 rho(|y - y'|^2)^{1/2}.
/// The path view handed to `eval` sits at node s_j.
struct Driver {
  std::string name;
  std::size_t m = 1;  ///< dimension of y
  std::size_t d = 1;  ///< Brownian dimension; z, zeta are m x d
  DriverFn eval;      ///< empty means g == 0
  bool uses_zeta = false;

  std::function<double(double t, double s)> kernel;        ///< L(t,s) >= 0; empty means 1
  std::array<std::function<double(double s)>, 3> coeffs;  ///< r1, r2, r3; empty means 0
  /// Optional per-path coefficients r_i(s, omega). When set, `coeffs` must be
  /// a deterministic envelope used for the weights.
  std::function<std::array<double, 3>(double s, const PathView&)> stochastic_coeffs;
  double kernel_exponent = 4.0;  ///< q > 2 of the kernel integrability condition
  std::optional<Modulus> modulus;

  double L(double t, double s) const { return kernel ? kernel(t, s) : 1.0; }
  double r(std::size_t k, double s) const { return coeffs[k] ? coeffs[k](s) : 0.0; }
  double alpha2(double s) const;
  bool stochastic() const { return static_cast<bool>(stochastic_coeffs); }
  bool non_lipschitz() const { return modulus.has_value(); }

  void operator()(const DriverPoint& at, std::span<const double> y, std::span<const double> z,
                  std::span<const double> zeta, const PathView& path, std::span<double> out) const;
};

/// Largest excess of |g(a) - g(b)| over the declared Lipschitz (or modulus)
/// bound across random argument pairs in [-range, range]. Zero when the
/// metadata is honest.
double lipschitz_excess(const Driver& g, const PathEnsemble& ens, std::size_t pairs, std::uint64_t seed,
                        double range = 2.0);

/// Functional of a whole path (measurable w.r.t. F_T) with declared features.
struct PathFunctional {
  std::size_t dim = 1;
  FeatureSet features;
  std::function<void(const PathView&, std::span<double> out)> eval;
};

/// Free term psi(t), F_T-measurable for every t. The view passed to `eval`
/// sits at node t_i and only exposes `features`.
struct FreeTerm {
  std::string name;
  std::size_t dim = 1;
  FeatureSet features{Feature::kState, Feature::kTerminal};
  std::function<void(std::size_t i, const PathView& path, std::span<double> out)> eval;

  /// psi(t_i) as a path functional.
  PathFunctional at(std::size_t i) const;
};

/// psi(t_i) on every path. Throws InputError on non-finite values.
Process1P tabulate(const FreeTerm& psi, const PathEnsemble& ens);

/// Driver-free generator f(t_i, s_j, path) of a simple BSVIE.
struct SimpleDriver {
  std::string name;
  std::size_t dim = 1;
  FeatureSet features{Feature::kState, Feature::kHistory};
  std::function<void(std::size_t ti, std::size_t si, const PathView& path, std::span<double> out)> eval;

  static SimpleDriver zero(std::size_t dim = 1) { return {"zero", dim, {}, {}}; }
};

/// f(t,s) = g(t, s, 0, 0, 0), the free part of a generator.
SimpleDriver free_part(const Driver& g);

}  // namespace bsvie
