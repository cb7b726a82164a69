#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "plharnack/calibration.hpp"
#include "plharnack/params.hpp"
#include "plharnack/solver.hpp"

namespace plharnack {

// A named verification step with the polarity the scenario expects: negative
// scenarios (heavy tails) pass precisely when the underlying verdict fails.
struct CheckSpec {
  std::string name;
  bool expect_positive = true;
};

// Fully resolved description of one experiment: parameters, datum family,
// grid, snapshot schedule, boundary handling, and the checks to run.
struct Scenario {
  std::string name;
  int N = 1;
  double p = 1.5;
  double epsilon = 0.1;  // sandwich profile constants
  double C2 = 1.0;
  double C4 = 1.0;
  std::string datum_kind;  // indicator | barenblatt | power_tail | spikes |
                           // gaussian | subsolution | sign_change
  std::map<std::string, double> datum_args;
  GridMode mode = GridMode::radial;
  double L = 0.0;
  int K = 0;
  double grading = 1.0;
  std::string bc = "zero_flux";  // zero_flux | dirichlet_tail
  double t0 = 1.0;               // snapshots at {t0 2^k} below t_end, plus t_end
  double t_end = 16.0;
  double datum_time = 0.0;    // profile age at solver time zero
  double envelope_R0 = 2.0;   // core-ball radius for the lower envelope
  std::vector<CheckSpec> checks;
  std::string out_dir;  // empty: the CLI defaults to out/<name>
};

// The built-in experiments. Every entry validates and runs at desk scale.
const std::vector<Scenario>& scenario_catalog();
const Scenario& find_scenario(const std::string& name);  // throws std::invalid_argument

// Raised for malformed configuration; what() names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws ConfigError when fields are missing, out of range, or reference
// unknown datum kinds / check names.
void validate_scenario(const Scenario& s);

// Reads a scenario from key=value sections or from the JSON mirror of the
// same tree (a .json suffix or a leading '{' selects JSON). `scenario.base`
// may name a catalog entry to inherit from; remaining keys override.
Scenario parse_config(const std::string& path);

// The resolved JSON mirror of a scenario, also written as config.json next
// to the run outputs.
std::string scenario_to_json(const Scenario& s);

struct CheckResult {
  std::string name;
  bool expected = true;
  bool observed = false;
  bool passed = false;  // observed == expected
  double value = 0.0;   // headline number, check-specific
  std::string detail;
  std::vector<double> series;
};

struct RunReport {
  Scenario scenario;
  std::vector<CheckResult> checks;
  bool all_passed = false;
  int exit_code = 0;  // 0 pass, 1 check failure, 3 solver failure
  std::string solver_error;
  std::vector<Snapshot> run;  // evolution snapshots (datum excluded)
  Snapshot datum;
  double mass = 0.0;  // discrete datum mass
};

// Smoothing and tail constants fitted on sampled source-solution runs at
// masses {1, 4} across two time decades; kappa1_tail from the exterior-mass
// scan of the mass-1 run. Deterministic for fixed (N, p).
CalibrationRecord calibrate(const GoodRangeParams& params);

// Executes init -> advance -> checks and writes under out_dir:
//   snapshots/snap_###.csv  (r,value rows) with snap_###.json sidecars,
//   metrics.csv, verdicts.json, config.json, and calibration.json when an
//   envelope check runs (loaded instead if already present, unless
//   force_calibrate). Identical scenarios produce byte-identical files.
RunReport run_scenario(const Scenario& s, const std::string& out_dir,
                       bool force_calibrate = false);

}  // namespace plharnack
