#pragma once

#include <functional>
#include <vector>

#include "plharnack/params.hpp"
#include "plharnack/tailspace.hpp"

namespace plharnack {

enum class GridMode { radial, line };

// Finite-volume grid. Radial mode covers [0, L] with cell volumes measured in
// the full N-dimensional Lebesgue measure, omega_N (r_out^N - r_in^N) / N;
// line mode covers [-L, L] with plain interval lengths.
//
// face_dist[k] is the center-to-center distance across interior face k; at the
// two boundary faces it is the distance to a ghost center mirrored across the
// boundary (used by the Dirichlet closure).
struct RadialGrid {
    GridMode mode = GridMode::radial;
    int N = 1;     // spatial dimension; always 1 in line mode
    double L = 0.0;
    double omega = 0.0;  // |S^{N-1}| in radial mode, 1 in line mode
    std::vector<double> edges;      // K+1
    std::vector<double> centers;    // K, edge midpoints
    std::vector<double> volumes;    // K
    std::vector<double> face_area;  // K+1
    std::vector<double> face_dist;  // K+1
    int cells() const { return static_cast<int>(centers.size()); }
};

// grading is the geometric growth ratio of consecutive cell widths, 1 for a
// uniform mesh, at most 1.2; widths grow outward from r = 0 (radial) or from
// x = 0 symmetrically (line mode, K even). K >= 16.
RadialGrid build_grid(GridMode mode, int N, double L, int K, double grading = 1.0);

// One stored time level: cell averages plus bookkeeping. `leak` is the
// cumulative mass that left the domain through the outer boundary (Dirichlet
// runs record the discrete face flux; zero-flux runs record the analytic
// truncation estimate, see advance()).
struct Snapshot {
    double t = 0.0;
    std::vector<double> values;
    double mass = 0.0;  // sum of values[i] * volumes[i]
    double leak = 0.0;
    // run metadata, carried forward by advance()
    long steps = 0;          // accepted backward-Euler steps so far
    long newton_iterations = 0;
    long dt_backoffs = 0;    // Newton failures that forced a dt halving
    double dt_last = 0.0;
};

enum class OuterBC { zero_flux, dirichlet_tail };

struct SolverConfig {
    // Flux regularization phi_delta(s) = (s^2 + delta^2)^{(p-2)/2} s.
    // 0 selects the default 1e-8 * sup|u0| / L.
    double delta = 0.0;
    double dt_init = 1e-4;
    double dt_max = 0.25;
    double dt_growth = 2.0;  // applied after every accepted step
    // Newton stop: max_i |F_i| / V_i <= newton_tol * sup|u^n|.
    double newton_tol = 1e-12;
    int newton_max_iter = 60;
    OuterBC bc = OuterBC::zero_flux;
    // Ghost value for dirichlet_tail, as (coordinate, solver time) -> value.
    // Line mode applies it at both ends with signed coordinates.
    std::function<double(double, double)> tail_profile;
    std::vector<double> snapshot_times;  // emitted when inside (t0, t_end]
    bool nonneg = true;  // cellwise u >= -1e-12 sup|u| enforced per step
    // Pointwise tail bound u0 <= A r^{-p/(2-p)} feeding the zero-flux leak
    // estimate; 0 derives A from the initial cell data.
    double tail_bound_A = 0.0;
};

// Cell averages of a radial profile; exterior-mass differences where the
// datum provides them (exact for spike and indicator data), adaptive
// quadrature otherwise. Line grids use the even extension f(|x|).
// Throws std::runtime_error if quadrature fails on a cell.
Snapshot init_state(const RadialProfile& f, const RadialGrid& grid);

// Same, for arbitrary (possibly signed) pointwise data; always quadrature.
Snapshot init_state(const std::function<double(double)>& f, const RadialGrid& grid);

// Backward-Euler evolution of u_t = div(|grad u|^{p-2} grad u) from state.t to
// t_end. Fully implicit faces, damped Newton with a tridiagonal direct solve,
// dt doubling on success up to dt_max and halving on failure; a step that
// still fails at dt_init/1024 throws std::runtime_error with diagnostics.
// Returns snapshots at the requested times plus t_end.
std::vector<Snapshot> advance(const RadialGrid& grid, const Snapshot& state,
                              const GoodRangeParams& params, const SolverConfig& cfg,
                              double t_end);

// Mass-preserving self-similar rescale u_lambda(x) = lambda^alpha u(lambda^beta x),
// remapped onto the same grid by a conservative, slope-limited (hence
// monotonicity-preserving) reconstruction; the result carries t/lambda.
// Total mass is preserved exactly for lambda >= 1 (the preimage of the domain
// covers it); lambda < 1 truncates honestly at the outer boundary.
// Throws std::invalid_argument if lambda^beta L falls below the second cell.
Snapshot rescale_snapshot(const RadialGrid& grid, const Snapshot& state, double lambda,
                          const GoodRangeParams& params);

// One-step backward-Euler defect of a closed-form space-time profile: exact
// cell averages at t and t+dt, residual_i = (avg(t+dt) - avg(t))/dt minus the
// discrete flux divergence at avg(t+dt), unregularized (delta = 0). The outer
// ghost takes the exact profile value. scale is max_i |avg(t+dt) - avg(t)|/dt;
// max_scaled excludes the outermost two cells (ghost-closure pollution).
// A profile non-integrable at r = 0 gets its innermost cell valued at the
// cell center instead of averaged (that cell is for neighbours only).
struct ResidualReport {
    std::vector<double> residual;
    double scale = 0.0;
    double max_scaled = 0.0;
};
ResidualReport discrete_residual(const std::function<double(double, double)>& f,
                                 const RadialGrid& grid, const GoodRangeParams& params,
                                 double t, double dt);

}  // namespace plharnack
