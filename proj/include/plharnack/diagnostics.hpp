#pragma once

#include <string>
#include <vector>

#include "plharnack/calibration.hpp"
#include "plharnack/params.hpp"
#include "plharnack/solver.hpp"

namespace plharnack {

// A solver run bundled with everything the calibration fits need: the grid it
// ran on, the initial state (t = 0), and the snapshots. `mass` is the datum
// mass; runs with zero mass are skipped by the fits as degenerate.
struct LabeledRun {
    std::string label;
    RadialGrid grid;
    Snapshot datum;
    std::vector<Snapshot> snapshots;
    double mass = 0.0;
};

// Scaled-clock monotonicity and the L1 time-difference rate bound.
//
// The scaled clock w = t^{-1/(2-p)} u must be cellwise non-increasing along
// the run; a cell counts as a violation when w(t2) - w(t1) exceeds rel_tol
// times sup w(t1). The rate check compares ||u(t2) - u(t1)||_1 / (t2 - t1)
// against 2 (2-p) mass / t1 for consecutive snapshot pairs.
struct MonotoneReport {
    int benilan_violations = 0;       // (pair, cell) entries over tolerance
    double max_benilan_excess = 0.0;  // worst scaled-clock increase / sup w(t1)
    int first_violation_step = -1;    // later snapshot index of the first bad pair
    int first_violation_cell = -1;
    std::vector<double> rate_series;   // L1 difference quotient per pair
    std::vector<double> rate_bounds;   // 2 (2-p) mass / t1 per pair
    int rate_violations = 0;
    bool passed = false;  // no violations of either kind
};

// Requires at least 3 snapshots with increasing positive times.
MonotoneReport monotone_invariants(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                   const GoodRangeParams& params, double rel_tol = 1e-8);

// L1 contraction and order preservation between two runs on the same grid
// with matching snapshot times.
struct SemigroupReport {
    std::vector<double> contraction_series;  // ||u(t_k) - v(t_k)||_1
    bool contraction_monotone = false;       // non-increasing within tolerance
    bool initially_ordered = false;          // u <= v cellwise at the first snapshot
    bool order_preserved = false;            // ordering held at every later snapshot
    int order_violations = 0;
    double max_order_excess = 0.0;  // worst (u - v) / sup v over later snapshots
};

// Throws std::invalid_argument on grid or snapshot-time mismatch.
SemigroupReport semigroup_invariants(const RadialGrid& grid,
                                     const std::vector<Snapshot>& run_u,
                                     const std::vector<Snapshot>& run_v,
                                     double rel_tol = 1e-8);

// Fits the smoothing constants from measurement runs.
//
// C1_smoothing is the max over runs and snapshots of
// sup u(t) * t^{N beta} / mass^{p beta}; the self-similar profile attains
// b1^{-(p-1)/(2-p)} exactly, the analytic lower bound for the fit. kappa1 and
// kappa2 come from a nonnegative least-squares fit of annulus suprema against
// the two-term local bound
//   sup_{B_{R0}(x0)} u(t) <= kappa1 (int_{B_{2 R0}(x0)} u0)^{p beta} t^{-N beta}
//                            + kappa2 (t / R0^p)^{1/(2-p)}
// sampled at |x0| spanning the grid and R0 = |x0| / 4. kappa1_tail is not
// fitted here (see tail_control_check); it is left at 0.
//
// Requires at least two distinct masses and two decades of snapshot time
// across the non-degenerate runs; throws std::invalid_argument otherwise.
CalibrationRecord smoothing_fit(const std::vector<LabeledRun>& runs,
                                const GoodRangeParams& params);

// Exterior and interior mass control ratios of the Herrero-Pierre form.
struct TailControlEntry {
    double R = 0.0;
    double T = 0.0;
    double outer_sup = 0.0;       // sup_{tau <= T} mass beyond 2R
    double outer_terminal = 0.0;  // mass beyond R at T
    double inner_sup = 0.0;       // sup_{tau <= T} mass inside R
    double inner_terminal = 0.0;  // mass inside 2R at T
    double time_term = 0.0;       // (T / R^{1/beta})^{1/(2-p)}
    double outer_ratio = 0.0;     // outer_sup / (outer_terminal + time_term)
    double inner_ratio = 0.0;     // inner_sup / (inner_terminal + time_term)
};

struct TailControlReport {
    std::vector<TailControlEntry> entries;  // one per (R, T = snapshot time)
    double kappa1_tail = 0.0;               // max outer ratio
    double outer_stability = 0.0;           // max / min outer ratio
    double kappa2_inner = 0.0;              // max inner ratio
    double inner_stability = 0.0;
    bool positive = false;  // every ratio strictly positive
};

// T runs over the snapshot times of `run`; the sup over tau <= T uses the
// recorded snapshots. Requires a non-empty run and non-empty positive radii.
TailControlReport tail_control_check(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                     const std::vector<double>& radii,
                                     const GoodRangeParams& params);

// Interpolation inequality and Holder-seminorm decay surrogate.
struct HolderEntry {
    double t = 0.0;
    double seminorm = 0.0;      // discrete C^nu seminorm (max over cell pairs)
    double sup_norm = 0.0;
    double p_norm_value = 0.0;  // discrete L^{p_norm} norm
    double bound = 0.0;         // C * seminorm^{N/(N+p nu)} * pnorm^{p nu/(N+p nu)}
    double slack = 0.0;         // bound / sup_norm (0 when sup_norm = 0)
    bool holds = false;         // sup_norm <= bound
};

struct HolderReport {
    std::vector<HolderEntry> entries;
    double constant = 0.0;          // closed-form C_{N, nu, p_norm}
    double eta_fit = 0.0;           // fitted decay rate of the seminorm in t
    double surrogate_bound = 0.0;   // max seminorm * t^{eta_fit} / mass^{p beta}
    bool all_hold = false;
};

// The discrete seminorm underestimates the continuum one, so the inequality
// check is one-sided and sound. eta_fit is least-squares on log seminorm vs
// log t and needs >= 2 snapshots at distinct times (0 otherwise). nu in (0,1],
// p_norm >= 1; throws std::invalid_argument outside those ranges or on an
// empty run.
HolderReport holder_interpolation_check(const RadialGrid& grid,
                                        const std::vector<Snapshot>& run, double nu,
                                        double p_norm, const GoodRangeParams& params);

// Closed-form constant of the interpolation inequality; C_{1,1,1} = 6.
double interpolation_constant(int N, double nu, double p_norm);

// Reflection-principle surrogate: for a datum supported in r <= support_radius,
// every cell with |center| >= 2 support_radius must sit below the innermost
// cell's value, at every snapshot.
struct AleksandrovReport {
    int violations = 0;
    double max_excess = 0.0;  // worst (u_i - u_center) / sup u
    bool passed = false;
};

AleksandrovReport aleksandrov_check(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                    double support_radius, double rel_tol = 1e-8);

// True when every fitted constant is finite, nonnegative, and above its known
// analytic lower bound (C1_smoothing >= b1^{-(p-1)/(2-p)}, up to 1e-9 slack
// for discrete sampling of the extremal profile).
bool calibration_valid(const CalibrationRecord& cal, const GoodRangeParams& params);

// JSON object text for reports (keyed composition is done by callers) and
// round-trip persistence for the calibration record.
std::string to_json(const MonotoneReport& rep);
std::string to_json(const SemigroupReport& rep);
std::string to_json(const TailControlReport& rep);
std::string to_json(const HolderReport& rep);
std::string to_json(const AleksandrovReport& rep);
std::string to_json(const CalibrationRecord& cal);

void save_calibration(const CalibrationRecord& cal, const std::string& path);
CalibrationRecord load_calibration(const std::string& path);

}  // namespace plharnack
