#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bsvie {

/// Increasing concave modulus of continuity rho with rho(0) = 0, together with
/// a linear majorant rho(u) <= a + b u.
struct Modulus {
  std::string name;
  std::function<double(double)> rho;
  double a = 0.0;
  double b = 0.0;

  double operator()(double u) const { return rho(u); }
};

/// Linear majorant from a scan of u in (0, 100] with 10% headroom.
/// Valid for all u >= 0 whenever rho is concave.
std::pair<double, double> linear_bound(const std::function<double(double)>& rho);

/// rho_1(x) = x ln(1/x) on [0, delta], continued linearly with the left slope.
Modulus log_modulus(double delta = 0.1);
/// rho_2(x) = x ln(1/x) ln ln(1/x) on [0, delta], continued linearly.
Modulus loglog_modulus(double delta = 0.1);
/// rho(x) = x ln(1 + 1/x) for 0 < x < 1 and ln 2 beyond.
Modulus log1p_modulus();

/// The three moduli above, with the given cap for the first two.
std::vector<Modulus> standard_moduli(double delta = 0.1);

/// Looks a modulus up by name: "rho1", "rho2", "x_log_1p_inv".
Modulus modulus_by_name(const std::string& name, double delta = 0.1);

/// Non-Lipschitz scalar nonlinearity |x| ln(1 + 1/|x|)^{1/2}, frozen at its
/// value at `delta` for |x| >= delta. Satisfies
/// |f(y) - f(y')| <= log1p_modulus()(|y - y'|^2)^{1/2}.
double f_example(double x, double delta = 0.1);

/// Largest value of (c(u) + c(v)) / 2 - c((u + v) / 2) over an n x n grid on
/// [lo, hi], clamped at zero. Zero for concave c.
double midpoint_concavity_defect(const std::function<double(double)>& c, double lo, double hi, int n = 100);

}  // namespace bsvie
