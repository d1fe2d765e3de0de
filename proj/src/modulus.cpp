#include "bsvie/modulus.hpp"

#include <algorithm>
#include <cmath>

#include "bsvie/errors.hpp"

namespace bsvie {

std::pair<double, double> linear_bound(const std::function<double(double)>& rho) {
  constexpr double kHeadroom = 1.1;
  constexpr double kUMax = 100.0;
  // Tail slope: any b at least the slope beyond u_max keeps rho(u) - b u
  // decreasing past the scan window.
  const double tail = (rho(kUMax) - rho(0.5 * kUMax)) / (0.5 * kUMax);
  const double b = std::max(kHeadroom * tail, 1e-3);
  double excess = 0.0;
  // geometric scan near zero, linear scan on the bulk
  for (double u = 1e-12; u < 1.0; u *= 1.05) excess = std::max(excess, rho(u) - b * u);
  for (int k = 1; k <= 10000; ++k) {
    const double u = kUMax * k / 10000.0;
    excess = std::max(excess, rho(u) - b * u);
  }
  const double a = std::max(kHeadroom * excess, 1e-12);
  return {a, b};
}

Modulus log_modulus(double delta) {
  if (!(delta > 0.0 && delta < 1.0 / std::exp(1.0))) throw ConfigError("rho1 cap delta must lie in (0, 1/e)");
  const double value = delta * std::log(1.0 / delta);
  const double slope = std::log(1.0 / delta) - 1.0;
  Modulus m;
  m.name = "rho1";
  m.rho = [=](double x) {
    if (x <= 0.0) return 0.0;
    if (x <= delta) return x * std::log(1.0 / x);
    return value + slope * (x - delta);
  };
  std::tie(m.a, m.b) = linear_bound(m.rho);
  return m;
}

Modulus loglog_modulus(double delta) {
  if (!(delta > 0.0 && delta < 1.0 / std::exp(1.0))) throw ConfigError("rho2 cap delta must lie in (0, 1/e)");
  const double l = std::log(1.0 / delta);
  const double ll = std::log(l);
  const double value = delta * l * ll;
  const double slope = l * ll - ll - 1.0;
  if (!(slope > 0.0)) throw ConfigError("rho2 cap delta too large: modulus would stop increasing");
  Modulus m;
  m.name = "rho2";
  m.rho = [=](double x) {
    if (x <= 0.0) return 0.0;
    if (x <= delta) {
      const double lx = std::log(1.0 / x);
      return x * lx * std::log(lx);
    }
    return value + slope * (x - delta);
  };
  std::tie(m.a, m.b) = linear_bound(m.rho);
  return m;
}

Modulus log1p_modulus() {
  Modulus m;
  m.name = "x_log_1p_inv";
  m.rho = [](double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1.0) return x * std::log1p(1.0 / x);
    return std::log(2.0);
  };
  std::tie(m.a, m.b) = linear_bound(m.rho);
  return m;
}

std::vector<Modulus> standard_moduli(double delta) { return {log_modulus(delta), loglog_modulus(delta), log1p_modulus()}; }

Modulus modulus_by_name(const std::string& name, double delta) {
  if (name == "rho1") return log_modulus(delta);
  if (name == "rho2") return loglog_modulus(delta);
  if (name == "x_log_1p_inv") return log1p_modulus();
  throw ConfigError("unknown modulus '" + name + "'");
}

double f_example(double x, double delta) {
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  const double r = std::min(ax, delta);
  return r * std::sqrt(std::log1p(1.0 / r));
}

double midpoint_concavity_defect(const std::function<double(double)>& c, double lo, double hi, int n) {
  std::vector<double> u(n), cu(n);
  for (int k = 0; k < n; ++k) {
    u[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    cu[k] = c(u[k]);
  }
  double defect = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      defect = std::max(defect, 0.5 * (cu[i] + cu[j]) - c(0.5 * (u[i] + u[j])));
    }
  }
  return defect;
}

}  // namespace bsvie
