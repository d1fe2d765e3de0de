#include "bsvie/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bsvie/builtins.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/nonlipschitz_solver.hpp"
#include "bsvie/parallel.hpp"
#include "bsvie/path_engine.hpp"
#include "bsvie_builtin_scenarios.inc"

namespace bsvie {

namespace {

using nlohmann::json;

void allow_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& section) {
  if (!obj.is_object()) throw ConfigError("\"" + section + "\" must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError("unknown key \"" + k + "\" in " + section);
    }
  }
}

json section(const json& cfg, const char* key) {
  if (!cfg.contains(key)) return json::object();
  return cfg[key];
}

double num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  return obj[key].get<double>();
}

std::size_t count(const json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned()) throw ConfigError(std::string("\"") + key + "\" must be a nonnegative integer");
  return obj[key].get<std::size_t>();
}

bool flag(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ConfigError(std::string("\"") + key + "\" must be true or false");
  return obj[key].get<bool>();
}

std::string text(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError(std::string("\"") + key + "\" must be a string");
  return obj[key].get<std::string>();
}

WeightMode weight_mode_from(const std::string& s) {
  if (s == "A") return WeightMode::kA;
  if (s == "A_star") return WeightMode::kAStar;
  throw ConfigError("weight mode must be \"A\" or \"A_star\", got '" + s + "'");
}

enum class Kind { kSimple, kLipschitz, kPicard };

struct Parsed {
  std::string name, description, exercises;
  double T = 1.0;
  std::size_t N = 32;
  std::size_t M = 10000;
  std::size_t d = 1;
  std::uint64_t seed = 1;
  Kind kind = Kind::kSimple;
  bool m_ext = false;
  SolverConfig solver;
  PicardConfig picard;
  json free_term, driver, simple_driver, weights, checks;
};

Parsed parse(const json& cfg, const RunOptions& opt) {
  allow_keys(cfg,
             {"name", "description", "exercises", "grid", "ensemble", "solver", "regression", "free_term", "driver",
              "simple_driver", "weights", "checks"},
             "scenario");
  if (!cfg.contains("name") || !cfg["name"].is_string()) throw ConfigError("scenario needs a string \"name\"");
  Parsed p;
  p.name = cfg["name"].get<std::string>();
  p.description = text(cfg, "description", "");
  p.exercises = text(cfg, "exercises", "");

  const json grid = section(cfg, "grid");
  allow_keys(grid, {"T", "N"}, "grid");
  p.T = num(grid, "T", 1.0);
  p.N = count(grid, "N", 32);
  if (!(p.T > 0) || p.N < 1) throw ConfigError("grid needs T > 0 and N >= 1");

  const json e = section(cfg, "ensemble");
  allow_keys(e, {"M", "d", "seed"}, "ensemble");
  p.M = count(e, "M", 10000);
  p.d = count(e, "d", 1);
  if (e.contains("seed") && !e["seed"].is_number_unsigned()) throw ConfigError("ensemble.seed must be a nonnegative integer");
  p.seed = e.contains("seed") ? e["seed"].get<std::uint64_t>() : 1;
  if (opt.seed) p.seed = *opt.seed;
  if (p.M < 2 || p.d < 1) throw ConfigError("ensemble needs M >= 2 and d >= 1");

  RegressionConfig reg;
  const json r = section(cfg, "regression");
  allow_keys(r, {"degree", "features", "ridge"}, "regression");
  reg.basis_degree = count(r, "degree", reg.basis_degree);
  reg.ridge = num(r, "ridge", reg.ridge);
  if (r.contains("features")) {
    if (!r["features"].is_array()) throw ConfigError("regression.features must be an array");
    reg.features.clear();
    for (const auto& f : r["features"]) {
      try {
        reg.features.push_back(basis_feature_from_string(f.get<std::string>()));
      } catch (const json::exception&) {
        throw ConfigError("regression.features entries must be strings");
      }
    }
  }

  const json s = section(cfg, "solver");
  allow_keys(s,
             {"kind", "mode", "beta", "weight_mode", "p", "alpha_floor", "tol", "max_iter", "max_beta_doublings",
              "divergence_window", "outer_tol", "max_outer", "warm_start", "m_extend"},
             "solver");
  const std::string kind = text(s, "kind", "simple");
  if (kind == "simple") {
    p.kind = Kind::kSimple;
  } else if (kind == "lipschitz") {
    p.kind = Kind::kLipschitz;
  } else if (kind == "picard") {
    p.kind = Kind::kPicard;
  } else {
    throw ConfigError("solver.kind must be simple, lipschitz or picard, got '" + kind + "'");
  }
  SolverConfig& sc = p.solver;
  sc.mode = solve_mode_from_string(text(s, "mode", "m_solution"));
  sc.beta = num(s, "beta", 0.0);
  sc.weight_mode = weight_mode_from(text(s, "weight_mode", "A"));
  sc.p = num(s, "p", sc.p);
  sc.alpha_floor = num(s, "alpha_floor", sc.alpha_floor);
  sc.tol = num(s, "tol", sc.tol);
  sc.max_iter = count(s, "max_iter", sc.max_iter);
  sc.max_beta_doublings = count(s, "max_beta_doublings", sc.max_beta_doublings);
  sc.divergence_window = count(s, "divergence_window", sc.divergence_window);
  sc.regression = reg;
  p.picard.inner = sc;
  p.picard.tol = num(s, "outer_tol", p.picard.tol);
  p.picard.max_outer = count(s, "max_outer", p.picard.max_outer);
  p.picard.divergence_window = sc.divergence_window;
  p.picard.warm_start_inner = flag(s, "warm_start", true);
  p.m_ext = flag(s, "m_extend", false);

  if (!cfg.contains("free_term")) throw ConfigError("scenario needs a \"free_term\"");
  p.free_term = cfg["free_term"];
  if (p.kind == Kind::kSimple) {
    if (cfg.contains("driver")) throw ConfigError("solver kind simple takes \"simple_driver\", not \"driver\"");
    p.simple_driver = cfg.contains("simple_driver") ? cfg["simple_driver"] : json("zero");
  } else {
    if (cfg.contains("simple_driver")) throw ConfigError("solver kind " + kind + " takes \"driver\"");
    if (!cfg.contains("driver")) throw ConfigError("solver kind " + kind + " needs a \"driver\"");
    p.driver = cfg["driver"];
  }
  p.weights = section(cfg, "weights");
  allow_keys(p.weights, {"beta", "p", "mode", "alpha2"}, "weights");
  p.checks = section(cfg, "checks");
  if (!p.checks.is_object()) throw ConfigError("\"checks\" must be an object");
  return p;
}

// Everything a check may look at.
struct Context {
  const Parsed& cfg;
  const PathEnsemble& ens;
  const ConditionalExpectation& ce;
  const FreeTerm& psi;
  const Driver* g = nullptr;
  const SimpleDriver* f = nullptr;
  const LipschitzResult& sol;
  std::optional<Process2P> extended;
  std::optional<SimpleDriver> along;

  const Process2P& full_z() {
    if (sol.Z.domain() == Domain::kFull) return sol.Z;
    if (!extended) {
      extended = sol.Z.to_full();
      m_extend(sol.Y, ce, *extended);
    }
    return *extended;
  }

  const SimpleDriver& generator() {
    if (f) return *f;
    if (!along) along = along_solution(*g, sol.Y, sol.Z);
    return *along;
  }

  WeightProfile weights() const {
    const json& w = cfg.weights;
    const TimeGrid& grid = ens.grid();
    double beta = num(w, "beta", 0.0);
    if (!(beta > 0)) beta = sol.report.beta > 0 ? sol.report.beta : 1.0;
    const WeightMode mode = weight_mode_from(text(w, "mode", "A"));
    const double p = num(w, "p", 1.5);
    if (g && !w.contains("alpha2")) {
      SolverConfig sc = cfg.solver;
      sc.weight_mode = mode;
      sc.p = p;
      return driver_weights(*g, grid, sc, beta);
    }
    const double a2 = num(w, "alpha2", 1.0);
    return build_weight_profile([a2](double) { return a2; }, grid, p, beta, mode);
  }

  std::vector<double> residual() {
    return g ? bsvie_residual(sol.Y, sol.Z, *g, psi, ens) : bsvie_residual(sol.Y, sol.Z, *f, psi, ens);
  }
};

CheckResult estimate_result(const std::string& name, const EstimateCheck& e) {
  CheckResult c{name, e.pass(), e.ratio(), 1.0, to_json(e)};
  return c;
}

std::function<double(std::size_t, double, double)> reference_y(const json& spec, double T) {
  const std::string kind = text(spec, "kind", "");
  if (kind == "constant") {
    const double v = num(spec, "value", 0.0);
    return [v](std::size_t, double, double) { return v; };
  }
  if (kind == "exp") {
    const double v = num(spec, "value", 1.0), rate = num(spec, "rate", 1.0);
    return [v, rate, T](std::size_t, double t, double) { return v * std::exp(rate * (T - t)); };
  }
  if (kind == "t_times_Wt") return [](std::size_t, double t, double w) { return t * w; };
  if (kind == "Wt_minus_remaining") return [T](std::size_t, double t, double w) { return w - (T - t); };
  throw ConfigError("unknown reference kind '" + kind + "'");
}

std::function<double(double, double)> reference_z(const json& spec) {
  const std::string kind = text(spec, "kind", "");
  if (kind == "constant") {
    const double v = num(spec, "value", 0.0);
    return [v](double, double) { return v; };
  }
  if (kind == "t") return [](double t, double) { return t; };
  throw ConfigError("unknown Z reference kind '" + kind + "'");
}

// Y: max_i E|Y(t_i) - ref|^2 ("mse") or its square root ("rms").
// Z: max over the chosen triangle of |mean Z(t_i,t_j) - ref|, j < N.
CheckResult check_reference(Context& cx, const json& spec) {
  allow_keys(spec, {"kind", "value", "rate", "tol", "metric", "z"}, "checks.reference");
  const TimeGrid& grid = cx.ens.grid();
  const std::size_t n = grid.steps();
  const std::size_t mp = cx.ens.paths();
  CheckResult c{"reference", true, 0.0, num(spec, "tol", 1e-3), json::object()};
  const std::string metric = text(spec, "metric", "mse");
  if (metric != "mse" && metric != "rms") throw ConfigError("reference.metric must be mse or rms");
  const auto ref = reference_y(spec, grid.horizon());
  double worst = 0.0;
  std::vector<double> per_t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < mp; ++p) {
      const double e = cx.sol.Y.at(i, p)[0] - ref(i, grid.node(i), cx.ens.state(p, i)[0]);
      s += e * e;
    }
    per_t[i] = s / static_cast<double>(mp);
    if (metric == "rms") per_t[i] = std::sqrt(per_t[i]);
    worst = std::max(worst, per_t[i]);
  }
  c.value = worst;
  c.pass = worst <= c.threshold;
  c.detail["metric"] = metric;
  c.detail["per_t"] = per_t;
  if (spec.contains("z")) {
    const json& z = spec["z"];
    allow_keys(z, {"kind", "value", "tol", "domain"}, "checks.reference.z");
    const auto zref = reference_z(z);
    const std::string dom = text(z, "domain", "upper");
    if (dom != "upper" && dom != "lower" && dom != "both") throw ConfigError("reference.z.domain must be upper, lower or both");
    const Process2P& Z = dom == "upper" ? cx.sol.Z : cx.full_z();
    const double tol = num(z, "tol", 0.05);
    double zw = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const bool upper = j >= i;
        if ((dom == "upper" && !upper) || (dom == "lower" && upper)) continue;
        zw = std::max(zw, std::abs(Z.mean(i, j) - zref(grid.node(i), grid.node(j))));
      }
    }
    c.detail["z_max_error"] = zw;
    c.detail["z_tol"] = tol;
    c.detail["z_domain"] = dom;
    c.pass = c.pass && zw <= tol;
  }
  return c;
}

CheckResult run_check(Context& cx, const std::string& name, const json& spec) {
  const SolverReport& rep = cx.sol.report;
  const TimeGrid& grid = cx.ens.grid();
  if (name == "residual") {
    allow_keys(spec, {"max"}, "checks.residual");
    const auto r = cx.residual();
    CheckResult c{name, false, max_of(r), num(spec, "max", 1e-3), json::object()};
    c.pass = c.value <= c.threshold;
    c.detail["per_t"] = r;
    return c;
  }
  if (name == "m_identity") {
    allow_keys(spec, {"max"}, "checks.m_identity");
    const auto r = m_identity_residual(cx.sol.Y, cx.full_z(), cx.ens);
    CheckResult c{name, false, max_of(r), num(spec, "max", 1e-3), json::object()};
    c.pass = c.value <= c.threshold;
    c.detail["per_t"] = r;
    return c;
  }
  if (name == "estimate_6") {
    allow_keys(spec, {}, "checks.estimate_6");
    return estimate_result(name, verify_estimate_6(cx.sol.Y, cx.sol.Z, cx.psi, cx.generator(), cx.weights(), cx.ens));
  }
  if (name == "estimate_30") {
    allow_keys(spec, {"C"}, "checks.estimate_30");
    const auto pe = verify_estimate_30(cx.sol.Y, cx.sol.Z, cx.psi, cx.generator(), cx.weights(), cx.ens,
                                       num(spec, "C", 64.0));
    CheckResult c{name, pe.pass(), pe.max_ratio(), 1.0, json::object()};
    c.detail["C"] = pe.C;
    c.detail["smallest_passing_C"] = pe.smallest_passing_C;
    c.detail["unit_constant_ratio"] = pe.unit_constant_ratio;
    json per = json::array();
    for (const auto& e : pe.per_t) per.push_back(to_json(e));
    c.detail["per_t"] = per;
    return c;
  }
  if (name == "lower_triangle") {
    allow_keys(spec, {}, "checks.lower_triangle");
    return estimate_result(name, lower_triangle_energy(cx.sol.Y, cx.full_z(), cx.weights(), cx.ens));
  }
  if (name == "contraction") {
    allow_keys(spec, {"max_factor"}, "checks.contraction");
    const auto f = rep.contraction_factors();
    CheckResult c{name, false, f.empty() ? 0.0 : rep.max_factor(), num(spec, "max_factor", 1.0), json::object()};
    c.pass = !f.empty() && std::all_of(f.begin(), f.end(), [&](double x) { return x < c.threshold; });
    c.detail["factors"] = f;
    return c;
  }
  if (name == "converged") {
    allow_keys(spec, {}, "checks.converged");
    return {name, rep.converged, static_cast<double>(rep.iterations), 0.0, json::object()};
  }
  if (name == "reference") return check_reference(cx, spec);
  if (name == "picard_monotone" || name == "bihari" || name == "gronwall" || name == "uniqueness") {
    if (cx.cfg.kind != Kind::kPicard) throw ConfigError("check '" + name + "' needs solver kind picard");
  }
  const auto& phi = rep.outer_distances;
  if (name == "picard_monotone") {
    allow_keys(spec, {"burn_in"}, "checks.picard_monotone");
    const std::size_t burn = count(spec, "burn_in", 2);
    std::size_t bad = 0;
    for (std::size_t k = burn + 1; k < phi.size(); ++k) bad += phi[k] < phi[k - 1] ? 0 : 1;
    CheckResult c{name, !phi.empty() && bad == 0, static_cast<double>(bad), 0.0, json::object()};
    c.detail["burn_in"] = burn;
    c.detail["distances"] = phi;
    return c;
  }
  if (name == "bihari") {
    allow_keys(spec, {"C", "tol", "burn_in"}, "checks.bihari");
    const double C = num(spec, "C", 64.0), tol = num(spec, "tol", 1e-4);
    const Verdict v = bihari_monitor(phi, *cx.g->modulus, C, tol, count(spec, "burn_in", 2));
    CheckResult c{name, v.consistent, phi.empty() ? 0.0 : phi.back(), tol, json::object()};
    c.detail["reason"] = v.reason;
    c.detail["C"] = C;
    return c;
  }
  if (name == "gronwall") {
    allow_keys(spec, {"C"}, "checks.gronwall");
    const double C = num(spec, "C", 64.0);
    const Modulus& rho = *cx.g->modulus;
    const double lambda = picard_lambda(*cx.g, grid);
    const double mass = data_mass(*cx.g, cx.psi, cx.ens);
    const GronwallCheck gc = gronwall_bound_check(rep.norm_seq, rho.a, rho.b, mass, lambda, grid.horizon(), C);
    CheckResult c{name, gc.bounded, gc.sup, gc.bound, json::object()};
    c.detail["a"] = rho.a;
    c.detail["b"] = rho.b;
    c.detail["lambda"] = lambda;
    c.detail["data_mass"] = mass;
    c.detail["C"] = C;
    return c;
  }
  if (name == "uniqueness") {
    allow_keys(spec, {"factor"}, "checks.uniqueness");
    const double factor = num(spec, "factor", 4.0);
    const Process1P start = solve_simple(cx.psi, SimpleDriver::zero(cx.psi.dim), cx.ce).Y;
    const LipschitzResult other = picard_solve(*cx.g, cx.psi, cx.ce, cx.cfg.picard, &start);
    const std::size_t n = grid.steps();
    std::vector<double> v(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      const auto a = cx.sol.Y.at(i), b = other.Y.at(i);
      double s = 0.0;
      for (std::size_t q = 0; q < a.size(); ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
      v[i] = s / static_cast<double>(cx.ens.paths());
    }
    CheckResult c{name, false, grid.integrate(v), factor * cx.cfg.picard.tol, json::object()};
    c.pass = other.report.converged && c.value <= c.threshold;
    c.detail["second_start"] = "simple solution with zero driver";
    c.detail["second_iterations"] = other.report.iterations;
    return c;
  }
  throw ConfigError("unknown check '" + name + "'");
}


const std::set<std::string>& known_checks() {
  static const std::set<std::string> names{"residual",   "m_identity",      "estimate_6", "estimate_30",
                                           "lower_triangle", "contraction", "converged",  "reference",
                                           "picard_monotone", "bihari",     "gronwall",   "uniqueness"};
  return names;
}

std::string csv_y(const Process1P& Y, const TimeGrid& grid) {
  std::string s = "t";
  const std::size_t m = Y.dim();
  for (std::size_t k = 0; k < m; ++k) {
    s += m == 1 ? std::string(",mean,sd") : fmt::format(",mean_{0},sd_{0}", k);
  }
  s += '\n';
  for (std::size_t i = 0; i <= grid.steps(); ++i) {
    s += format_number(grid.node(i));
    for (std::size_t k = 0; k < m; ++k) s += "," + format_number(Y.mean(i, k)) + "," + format_number(Y.stddev(i, k));
    s += '\n';
  }
  return s;
}

std::string csv_z(const Process2P& Z, const TimeGrid& grid) {
  std::string s = "t,s,mean_abs\n";
  const std::size_t n = grid.steps();
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (!Z.contains(i, j)) continue;
      s += format_number(grid.node(i)) + "," + format_number(grid.node(j)) + "," + format_number(Z.mean_abs(i, j)) +
           "\n";
    }
  }
  return s;
}

std::string csv_iterates(const SolverReport& r) {
  std::string s = "iteration,distance,factor\n";
  for (const auto& h : r.history) {
    s += fmt::format("{},{},{}\n", h.iteration, format_number(h.distance), format_number(h.factor));
  }
  return s;
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write " + file.string());
  os << content;
}

void write_outputs(const RunOutcome& out, const RunOptions& opt, const TimeGrid* grid) {
  if (!opt.out) return;
  std::filesystem::create_directories(*opt.out);
  write_file(*opt.out / "report.json", out.report.dump(2) + "\n");
  if (!out.solver.solver.empty()) write_file(*opt.out / "iterates.csv", csv_iterates(out.solver));
  if (out.solution && grid) {
    write_file(*opt.out / "solution_Y.csv", csv_y(out.solution->Y, *grid));
    write_file(*opt.out / "solution_Z.csv", csv_z(out.solution->Z, *grid));
  }
}

json parse_text(const std::string& content, const std::string& origin) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + origin + ": " + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

std::vector<std::string> parse_check_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.size() == 1 && out[0] == "none") out.clear();
  return out;
}

RunOutcome run_scenario(const json& config, const RunOptions& opt) {
  RunOutcome out;
  out.report = json::object();
  if (config.is_object() && config.contains("name")) out.report["scenario"] = config["name"];
  std::optional<Parsed> cfg;
  std::vector<std::string> selected;
  try {
    cfg = parse(config, opt);
    for (const auto& [k, v] : cfg->checks.items()) {
      if (!known_checks().count(k)) throw ConfigError("unknown check '" + k + "'");
    }
    if (opt.checks) {
      for (const auto& c : *opt.checks) {
        if (!cfg->checks.contains(c)) throw ConfigError("check '" + c + "' is not configured in " + cfg->name);
        if (std::find(selected.begin(), selected.end(), c) == selected.end()) selected.push_back(c);
      }
    } else {
      for (const auto& [k, v] : cfg->checks.items()) selected.push_back(k);
    }
  } catch (const Error& e) {
    out.exit_code = kExitConfigError;
    out.error = e.what();
    out.report["exit_code"] = out.exit_code;
    out.report["error"] = out.error;
    out.report["pass"] = false;
    write_outputs(out, opt, nullptr);
    return out;
  }

  out.report["scenario"] = cfg->name;
  out.report["description"] = cfg->description;
  out.report["exercises"] = cfg->exercises;
  out.report["seed"] = cfg->seed;
  out.report["config"] = config;
  out.verification.scenario = cfg->name;
  out.verification.seed = cfg->seed;

  const ThreadScope threads(std::max<std::size_t>(opt.threads, 1));
  const TimeGrid grid = TimeGrid::uniform(cfg->T, cfg->N);
  try {
    const PathEnsemble ens = generate_paths(grid, cfg->M, cfg->d, cfg->seed);
    const ConditionalExpectation ce(ens, cfg->solver.regression);
    const FreeTerm psi = make_free_term(cfg->free_term);
    std::optional<Driver> g;
    std::optional<SimpleDriver> f;
    if (cfg->kind == Kind::kSimple) {
      f = make_simple_driver(cfg->simple_driver);
      SimpleSolution s = solve_simple(psi, *f, ce);
      if (cfg->m_ext) {
        Process2P full = s.Z.to_full();
        m_extend(s.Y, ce, full);
        s.Z = std::move(full);
      }
      SolverReport rep;
      rep.solver = "simple";
      rep.iterations = 1;
      rep.converged = true;
      out.solution = LipschitzResult{std::move(s.Y), std::move(s.Z), rep};
    } else {
      g = make_driver(cfg->driver, cfg->d);
      if (cfg->kind == Kind::kLipschitz) {
        out.solution = solve_lipschitz(*g, psi, ce, cfg->solver);
      } else {
        out.solution = picard_solve(*g, psi, ce, cfg->picard);
      }
    }
    out.solver = out.solution->report;

    Context cx{*cfg, ens, ce, psi, g ? &*g : nullptr, f ? &*f : nullptr, *out.solution, {}, {}};
    for (const auto& name : selected) {
      try {
        out.verification.checks.push_back(run_check(cx, name, cfg->checks[name]));
      } catch (const ConfigError&) {
        throw;
      } catch (const DivergenceError&) {
        throw;
      } catch (const Error& e) {
        CheckResult c{name, false, std::nan(""), std::nan(""), json::object()};
        c.detail["error"] = e.what();
        out.verification.checks.push_back(c);
      }
    }
    out.exit_code = out.verification.pass() ? kExitPass : kExitCheckFailed;
  } catch (const SolverDivergenceError& e) {
    out.exit_code = kExitDiverged;
    out.error = e.what();
    out.solver = e.report();
    out.solution.reset();
  } catch (const DivergenceError& e) {
    out.exit_code = kExitDiverged;
    out.error = e.what();
    out.solution.reset();
  } catch (const Error& e) {
    out.exit_code = kExitConfigError;
    out.error = e.what();
    out.solution.reset();
  }

  if (!out.solver.solver.empty()) out.report["solver"] = to_json(out.solver);
  out.report["checks"] = out.verification.to_json()["checks"];
  out.report["pass"] = out.exit_code == kExitPass;
  out.report["exit_code"] = out.exit_code;
  if (!out.error.empty()) out.report["error"] = out.error;
  write_outputs(out, opt, &grid);
  return out;
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& b : kBuiltinScenarios) names.emplace_back(b.name);
  return names;
}

json builtin_scenario(const std::string& name) {
  for (const auto& b : kBuiltinScenarios) {
    if (name == b.name) return parse_text(b.text, "bundled scenario " + name);
  }
  throw ConfigError("no bundled scenario named '" + name + "'");
}

json load_scenario(const std::string& what) {
  const std::filesystem::path p(what);
  std::error_code ec;
  if (std::filesystem::is_regular_file(p, ec)) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_text(ss.str(), what);
  }
  for (const auto& b : kBuiltinScenarios) {
    if (what == b.name) return builtin_scenario(what);
  }
  throw ConfigError("'" + what + "' is neither a scenario file nor a bundled scenario");
}

std::vector<CatalogEntry> list_scenarios(const std::optional<std::filesystem::path>& dir) {
  std::vector<CatalogEntry> out;
  auto describe = [](const json& j, CatalogEntry& e) {
    if (j.is_object()) {
      if (j.contains("name") && j["name"].is_string()) e.name = j["name"].get<std::string>();
      if (j.contains("description") && j["description"].is_string()) e.description = j["description"];
      if (j.contains("exercises") && j["exercises"].is_string()) e.exercises = j["exercises"];
    }
  };
  for (const auto& b : kBuiltinScenarios) {
    CatalogEntry e{b.name, "", "", "builtin", ""};
    describe(parse_text(b.text, b.name), e);
    out.push_back(e);
  }
  if (!dir) return out;
  std::error_code ec;
  if (!std::filesystem::is_directory(*dir, ec)) throw ConfigError("not a directory: " + dir->string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    CatalogEntry e{file.stem().string(), "", "", file.string(), ""};
    try {
      const json j = load_scenario(file.string());
      describe(j, e);
      if (!j.is_object() || !j.contains("name")) e.warning = "no scenario name";
    } catch (const ConfigError& err) {
      e.warning = err.what();
    }
    out.push_back(e);
  }
  return out;
}

std::string format_catalog(const std::vector<CatalogEntry>& entries) {
  std::string s;
  for (const auto& e : entries) {
    if (!e.warning.empty()) {
      s += fmt::format("{:<16} [parse warning] {} ({})\n", e.name, e.warning, e.source);
      continue;
    }
    s += fmt::format("{:<16} {}\n", e.name, e.description);
    if (!e.exercises.empty()) s += fmt::format("{:<16}   exercises: {}\n", "", e.exercises);
    if (e.source != "builtin") s += fmt::format("{:<16}   file: {}\n", "", e.source);
  }
  return s;
}

}  // namespace bsvie
