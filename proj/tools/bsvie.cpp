#include <CLI11.hpp>
#include <cstdint>
#include <fmt/format.h>
#include <iostream>
#include <optional>
#include <string>

#include "bsvie/errors.hpp"
#include "bsvie/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for backward stochastic Volterra integral equations"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and its checks");
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out = "out";
  std::optional<std::string> checks;
  run->add_option("--config", config, "scenario file, or the name of a bundled scenario")->required();
  run->add_option("--seed", seed, "override the ensemble seed");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_option("--checks", checks, "comma-separated subset of the configured checks, or none");

  auto* list = app.add_subcommand("list", "list bundled scenarios and those in a directory");
  std::optional<std::string> dir;
  list->add_option("--dir", dir, "extra scenario directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      std::optional<std::filesystem::path> d;
      if (dir) d = *dir;
      std::cout << bsvie::format_catalog(bsvie::list_scenarios(d));
      return 0;
    }
    bsvie::RunOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    opt.out = out;
    if (checks) opt.checks = bsvie::parse_check_list(*checks);
    nlohmann::json cfg;
    try {
      cfg = bsvie::load_scenario(config);
    } catch (const bsvie::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return bsvie::kExitConfigError;
    }
    const bsvie::RunOutcome r = bsvie::run_scenario(cfg, opt);
    for (const auto& c : r.verification.checks) {
      std::cout << fmt::format("{:<16} {}  value={:.6g} threshold={:.6g}\n", c.name, c.pass ? "pass" : "FAIL", c.value,
                               c.threshold);
    }
    if (!r.error.empty()) std::cerr << (r.exit_code == bsvie::kExitDiverged ? "diverged: " : "error: ") << r.error << "\n";
    std::cout << fmt::format("{}: exit {}, artifacts in {}\n", cfg.value("name", config), r.exit_code, out);
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
