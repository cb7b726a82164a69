// Command-line front end: run catalog scenarios or config files, list the
// catalog, and precompute calibration records. Each run owns its output
// directory, so concurrent invocations are safe at the process level.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "plharnack/diagnostics.hpp"
#include "plharnack/experiments.hpp"
#include "plharnack/params.hpp"

namespace {

using namespace plharnack;

int cmd_run(const std::string& target, const std::string& out_flag, int grid_override,
            bool force_calibrate) {
  Scenario s;
  if (std::filesystem::exists(target)) {
    s = parse_config(target);
  } else {
    try {
      s = find_scenario(target);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (grid_override > 0) {
    s.K = grid_override;
    validate_scenario(s);
  }
  std::string out = out_flag;
  if (out.empty()) out = s.out_dir;
  if (out.empty()) out = "out/" + s.name;

  std::printf("scenario %s  (N=%d, p=%g)  ->  %s\n", s.name.c_str(), s.N, s.p,
              out.c_str());
  const RunReport rep = run_scenario(s, out, force_calibrate);
  if (!rep.solver_error.empty()) {
    std::fprintf(stderr, "solver failure: %s\n", rep.solver_error.c_str());
    return rep.exit_code;
  }
  for (const CheckResult& c : rep.checks) {
    std::printf("  %-18s %s  [expect %s, observed %s]  %s\n", c.name.c_str(),
                c.passed ? "PASS" : "FAIL", c.expected ? "positive" : "negative",
                c.observed ? "positive" : "negative", c.detail.c_str());
  }
  std::printf("result: %s\n", rep.all_passed ? "PASS" : "FAIL");
  return rep.exit_code;
}

int cmd_catalog() {
  for (const Scenario& s : scenario_catalog()) {
    std::string checks;
    for (const CheckSpec& c : s.checks) {
      if (!checks.empty()) checks += " ";
      checks += (c.expect_positive ? "+" : "-") + c.name;
    }
    std::printf("%-24s N=%d p=%-5g %-12s L=%-5g K=%-5d %s\n", s.name.c_str(), s.N,
                s.p, s.datum_kind.c_str(), s.L, s.K, checks.c_str());
  }
  return 0;
}

int cmd_calibrate(const std::string& params_arg, const std::string& out_flag) {
  const auto comma = params_arg.find(',');
  if (comma == std::string::npos) {
    throw ConfigError("expected --params N,p (e.g. --params 1,1.5)");
  }
  int N = 0;
  double p = 0.0;
  try {
    N = std::stoi(params_arg.substr(0, comma));
    p = std::stod(params_arg.substr(comma + 1));
  } catch (const std::exception&) {
    throw ConfigError("expected --params N,p (e.g. --params 1,1.5)");
  }
  GoodRangeParams pr;
  try {
    pr = with_b1(N, p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const std::string out = out_flag.empty() ? "out/calibration" : out_flag;
  std::filesystem::create_directories(out);
  const CalibrationRecord cal = calibrate(pr);
  save_calibration(cal, out + "/calibration.json");
  std::printf("N=%d p=%g: C1=%.12g kappa1=%.6g kappa2=%.6g kappa1_tail=%.6g\n", N, p,
              cal.C1_smoothing, cal.kappa1_local, cal.kappa2_local, cal.kappa1_tail);
  std::printf("saved %s/calibration.json\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fast p-Laplacian evolution scenarios"};
  app.require_subcommand(1);

  std::string target, out_flag, params_arg;
  int grid_override = 0;
  bool force_calibrate = false;

  CLI::App* run = app.add_subcommand("run", "run a catalog scenario or config file");
  run->add_option("target", target, "scenario name or config path")->required();
  run->add_option("--out", out_flag, "output directory");
  run->add_option("--grid", grid_override, "override the cell count");
  run->add_flag("--calibrate", force_calibrate, "recompute calibration even if cached");

  CLI::App* cat = app.add_subcommand("catalog", "list the scenario catalog");

  CLI::App* cal = app.add_subcommand("calibrate", "precompute a calibration record");
  cal->add_option("--params", params_arg, "exponent pair N,p")->required();
  cal->add_option("--out", out_flag, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(target, out_flag, grid_override, force_calibrate);
    if (cat->parsed()) return cmd_catalog();
    if (cal->parsed()) return cmd_calibrate(params_arg, out_flag);
  } catch (const plharnack::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
