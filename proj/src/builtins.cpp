#include "bsvie/builtins.hpp"

#include <cmath>

#include "bsvie/errors.hpp"

namespace bsvie {

namespace {

using nlohmann::json;

std::string name_of(const json& spec, const char* what) {
  if (spec.is_string()) return spec.get<std::string>();
  if (!spec.is_object() || !spec.contains("name") || !spec["name"].is_string()) {
    throw ConfigError(std::string(what) + " spec needs a string \"name\"");
  }
  return spec["name"].get<std::string>();
}

double num(const json& spec, const char* key, double fallback) {
  if (!spec.is_object() || !spec.contains(key)) return fallback;
  if (!spec[key].is_number()) throw ConfigError(std::string("parameter \"") + key + "\" must be a number");
  return spec[key].get<double>();
}

std::function<double(double)> constant_fn(double v) {
  return [v](double) { return v; };
}

std::function<double(double, double)> make_kernel(const json& spec, double k_default, double rate_default) {
  std::string type = "exp_decay";
  if (spec.is_object() && spec.contains("type")) type = spec["type"].get<std::string>();
  const double k = num(spec, "k", k_default);
  const double rate = num(spec, "rate", rate_default);
  if (k < 0) throw ConfigError("kernel scale k must be nonnegative");
  if (type == "constant") return [k](double, double) { return k; };
  if (type == "exp_decay") return [k, rate](double t, double s) { return k * std::exp(-rate * (s - t)); };
  throw ConfigError("unknown kernel type '" + type + "'");
}

void attach_modulus(Driver& g, const json& spec) {
  if (spec.is_object() && spec.contains("modulus")) {
    g.modulus = named_modulus(spec["modulus"].get<std::string>(), num(spec, "modulus_delta", 0.1));
  }
}

}  // namespace

Modulus linear_modulus() {
  Modulus m;
  m.name = "linear";
  m.rho = [](double x) { return x > 0 ? x : 0.0; };
  std::tie(m.a, m.b) = linear_bound(m.rho);
  return m;
}

Modulus named_modulus(const std::string& name, double delta) {
  if (name == "linear") return linear_modulus();
  return modulus_by_name(name, delta);
}

FreeTerm make_free_term(const json& spec) {
  const std::string name = name_of(spec, "free term");
  FreeTerm psi;
  psi.name = name;
  psi.dim = 1;
  if (name == "constant") {
    const double c = num(spec, "value", 1.0);
    psi.features = {};
    psi.eval = [c](std::size_t, const PathView&, std::span<double> o) { o[0] = c; };
  } else if (name == "t_times_WT") {
    const double a = num(spec, "scale", 1.0);
    psi.features = {Feature::kTerminal};
    psi.eval = [a](std::size_t, const PathView& v, std::span<double> o) { o[0] = a * v.time() * v.w_terminal(); };
  } else if (name == "t_times_Wt") {
    psi.features = {Feature::kState};
    psi.eval = [](std::size_t, const PathView& v, std::span<double> o) { o[0] = v.time() * v.w(); };
  } else if (name == "WT") {
    psi.features = {Feature::kTerminal};
    psi.eval = [](std::size_t, const PathView& v, std::span<double> o) { o[0] = v.w_terminal(); };
  } else if (name == "WT_squared") {
    psi.features = {Feature::kTerminal};
    psi.eval = [](std::size_t, const PathView& v, std::span<double> o) { o[0] = v.w_terminal() * v.w_terminal(); };
  } else if (name == "affine") {
    const double a = num(spec, "a", 0.0), b = num(spec, "b", 0.0), c = num(spec, "c", 0.0);
    psi.features = {Feature::kTerminal};
    psi.eval = [a, b, c](std::size_t, const PathView& v, std::span<double> o) {
      o[0] = a + b * v.time() + c * v.w_terminal();
    };
  } else if (name == "cos_WT") {
    const double a = num(spec, "scale", 1.0);
    psi.features = {Feature::kTerminal};
    psi.eval = [a](std::size_t, const PathView& v, std::span<double> o) { o[0] = std::cos(a * v.w_terminal()); };
  } else {
    throw ConfigError("unknown free term '" + name + "'");
  }
  return psi;
}

Driver make_driver(const json& spec, std::size_t d) {
  const std::string name = name_of(spec, "driver");
  Driver g;
  g.name = name;
  g.m = 1;
  g.d = d;
  if (name == "zero") {
    // eval stays empty
  } else if (name == "linear") {
    const double ay = num(spec, "ay", 0.0), az = num(spec, "az", 0.0), ae = num(spec, "azeta", 0.0);
    const double c = num(spec, "c", 0.0), cw = num(spec, "cw", 0.0);
    g.kernel = make_kernel(spec.is_object() && spec.contains("kernel") ? spec["kernel"] : json{{"type", "constant"}},
                           1.0, 0.0);
    auto L = g.kernel;
    g.eval = [=](const DriverPoint& at, std::span<const double> y, std::span<const double> z,
                 std::span<const double> zeta, const PathView& v, std::span<double> o) {
      o[0] = L(at.t, at.s) * (ay * y[0] + az * z[0] + ae * zeta[0]) + c + cw * v.w();
    };
    g.coeffs = {constant_fn(std::abs(ay)), constant_fn(std::abs(az)), constant_fn(std::abs(ae))};
    g.uses_zeta = ae != 0.0;
  } else if (name == "bounded_mix") {
    const double a1 = num(spec, "a1", 0.5), a2 = num(spec, "a2", 0.3), a3 = num(spec, "a3", 0.2);
    const double c = num(spec, "c", 0.5);
    g.kernel = make_kernel(spec, num(spec, "k", 1.0), num(spec, "rate", 1.0));
    auto L = g.kernel;
    g.eval = [=](const DriverPoint& at, std::span<const double> y, std::span<const double> z,
                 std::span<const double> zeta, const PathView& v, std::span<double> o) {
      o[0] = L(at.t, at.s) * (a1 * std::sin(y[0]) + a2 * std::tanh(z[0]) + a3 * zeta[0] / (1.0 + std::abs(zeta[0]))) +
             c * std::cos(v.w());
    };
    g.coeffs = {constant_fn(std::abs(a1)), constant_fn(std::abs(a2)), constant_fn(std::abs(a3))};
    g.uses_zeta = a3 != 0.0;
  } else if (name == "eq33") {
    const double delta = num(spec, "delta", 0.1);
    if (!(delta > 0 && delta < 1)) throw ConfigError("eq33 cap delta must lie in (0, 1)");
    g.kernel = make_kernel(spec, num(spec, "k", 0.2), num(spec, "rate", 1.0));
    auto L = g.kernel;
    g.eval = [=](const DriverPoint& at, std::span<const double> y, std::span<const double> z,
                 std::span<const double> zeta, const PathView&, std::span<double> o) {
      double zn = 0.0, en = 0.0;
      for (double v : z) zn += v * v;
      for (double v : zeta) en += v * v;
      o[0] = L(at.t, at.s) * (f_example(std::abs(y[0]), delta) + std::sqrt(zn) + std::sqrt(en));
    };
    g.coeffs = {constant_fn(1.0), constant_fn(1.0), constant_fn(1.0)};
    g.uses_zeta = true;
    g.modulus = log1p_modulus();
  } else if (name == "sin_y") {
    const double k = num(spec, "k", 0.5), c = num(spec, "c", 0.0);
    g.eval = [=](const DriverPoint&, std::span<const double> y, std::span<const double>, std::span<const double>,
                 const PathView&, std::span<double> o) { o[0] = k * std::sin(y[0]) + c; };
    g.coeffs = {constant_fn(std::abs(k)), {}, {}};
  } else {
    throw ConfigError("unknown driver '" + name + "'");
  }
  if (spec.is_object() && spec.contains("q")) g.kernel_exponent = num(spec, "q", 4.0);
  attach_modulus(g, spec);
  return g;
}

SimpleDriver make_simple_driver(const json& spec) {
  const std::string name = name_of(spec, "simple driver");
  SimpleDriver f;
  f.name = name;
  f.dim = 1;
  if (name == "zero") {
    f.features = {};
  } else if (name == "constant") {
    const double c = num(spec, "value", 1.0);
    f.features = {};
    f.eval = [c](std::size_t, std::size_t, const PathView&, std::span<double> o) { o[0] = c; };
  } else if (name == "Ws") {
    const double a = num(spec, "scale", 1.0);
    f.features = {Feature::kState};
    f.eval = [a](std::size_t, std::size_t, const PathView& v, std::span<double> o) { o[0] = a * v.w(); };
  } else if (name == "poly") {
    const double c0 = num(spec, "c0", 0.0), c1 = num(spec, "c1", 0.0), c2 = num(spec, "c2", 0.0),
                 c3 = num(spec, "c3", 0.0);
    f.features = {Feature::kState};
    f.eval = [=](std::size_t ti, std::size_t, const PathView& v, std::span<double> o) {
      const double w = v.w();
      o[0] = c0 + c1 * w + c2 * v.grid().node(ti) + c3 * std::cos(w);
    };
  } else {
    throw ConfigError("unknown simple driver '" + name + "'");
  }
  return f;
}

std::vector<std::string> free_term_names() {
  return {"constant", "t_times_WT", "t_times_Wt", "WT", "WT_squared", "affine", "cos_WT"};
}
std::vector<std::string> driver_names() { return {"zero", "linear", "bounded_mix", "eq33", "sin_y"}; }
std::vector<std::string> simple_driver_names() { return {"zero", "constant", "Ws", "poly"}; }

}  // namespace bsvie
