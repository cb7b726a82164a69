#pragma once

#include <vector>

#include "plharnack/params.hpp"
#include "plharnack/solver.hpp"

namespace plharnack {

// Parameters of the weighted fast-diffusion image of the radial evolution:
// m = p-1, artificial dimension n_bar = 2N(p-1)/p + 2 (> 2 whenever p > 1),
// weight exponent gamma = N - n_bar, negative on the whole good range.
struct WfdeParams {
    int N = 0;
    double p = 0.0;
    double m = 0.0;
    double n_bar = 0.0;
    double gamma = 0.0;
    double D = 0.0;           // derivative-to-field constant ((2m)^2 / (m (m+1)^2))^{1/(m-1)}
    double kappa_mass = 0.0;  // weighted-mass ratio p N / (2 (p-1) D)
    double theta = 0.0;       // self-similar rate, 1/theta = n_bar m - (n_bar - 2)
    double a0 = 0.0;          // profile normalization fixed by weighted mass = M_bar
    double a1 = 0.0;          // profile normalization fixed by the far-field match
};

// a1 comes from matching the far-field coefficient of the transformed
// Barenblatt derivative; a0 from weighted-mass normalization, evaluated by
// quadrature of the profile shape (integrable precisely because the
// diffusion exponent sits above the weighted critical value).
WfdeParams derive_wfde_params(const GoodRangeParams& params);

// Source solution of the weighted equation,
//   t^{1/(1-m)} / (a0 t^{2 theta} / M_bar^{2 theta (1-m)} + a1 r^2)^{1/(1-m)},
// normalized so its weighted mass is M_bar for every t > 0.
// Throws std::invalid_argument for t <= 0, M_bar <= 0, or an unresolved
// normalization (default-constructed WfdeParams).
double wfde_barenblatt(double x_radius, double t, double M_bar, const WfdeParams& wp);

// Image of a radial run under r_bar = r^{(m+1)/(2m)},
// u_bar = (d_r u) / (D r_bar^{2/(m+1)}). radii/edges are the mapped cell
// centers and edges; weighted_volumes[i] = sigma_N (e_{i+1}^n_bar -
// e_i^n_bar) / n_bar, so each snapshot's mass is the signed weighted mass
// sum values[i] * weighted_volumes[i].
struct TransformedRun {
    std::vector<double> radii;
    std::vector<double> edges;
    std::vector<double> weighted_volumes;
    std::vector<Snapshot> snapshots;
};

// The derivative is differenced in the variable xi = r^q (centered
// three-point, one-sided at the ends). In that variable the whole map
// collapses to u_bar = (q/D) dU/dxi: the r_bar^{2/(m+1)} quotient cancels
// against the xi chain rule, so the image stays finite and second-order
// accurate through r_bar = 0, where profiles are smooth functions of xi.
// Requires a radial grid and a nonempty run of matching widths.
TransformedRun ple_to_wfde_transform(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                     const GoodRangeParams& params, const WfdeParams& wp);

// One-step backward defect of the transformed field under a conservative
// finite-volume form of the weighted equation, with face fluxes
// r_bar^{n_bar-1} d_r_bar(|u|^{m-1} u) / m. Uses snapshots[step] and
// snapshots[step+1]; conventions match discrete_residual (scale is the
// largest |du/dt|, the outermost two cells are excluded from max_scaled).
ResidualReport wfde_residual(const TransformedRun& run, int step, const WfdeParams& wp);

// Per-snapshot sup over cells of |d_r u / d_r B(., t; M) - 1| against the
// matched-mass Barenblatt. The innermost radial cell and the one-sided end
// cells are excluded (derivative and comparison vanish together at r = 0).
// Line grids compare against the odd extension of d_r B.
struct GradientErrorReport {
    std::vector<double> series;
    bool monotone = true;         // first snapshot non-increasing away from the origin
    double decay_constant = 0.0;  // sup over |x| >= 1 of |d_r u| |x|^{2/(2-p)}, first snapshot
};
GradientErrorReport gradient_relative_error(const RadialGrid& grid,
                                            const std::vector<Snapshot>& run, double M,
                                            const GoodRangeParams& params);

// Fitted constants of the two gradient decay bounds:
//   c1: sup_x |d_r u| t^{(N+1) beta} / mass^{2 beta}
//   c2: |d_r u| (1+|x|)^{2/(2-p)} t^{(N+1) beta}
//         / (mass^{2 beta} + x_norm^{2 beta} + t^{2 beta / (2-p)})
// c1_series / c2_series are the per-snapshot suprema (the fits are their
// maxima over the run); c2_profile is the per-cell max of the c2 quantity
// over all snapshots, the curve on which growth across radius decades shows
// up when the space decay fails.
struct GradientDecayReport {
    double c1_fit = 0.0;
    double c2_fit = 0.0;
    std::vector<double> c1_series;
    std::vector<double> c2_series;
    std::vector<double> c2_profile;
};
GradientDecayReport gradient_decay_report(const RadialGrid& grid,
                                          const std::vector<Snapshot>& run,
                                          const GoodRangeParams& params, double mass,
                                          double x_norm_value);

// One-dimensional counterexample to gradient convergence without radial
// monotonicity: an odd compactly supported slope v0, centered away from the
// origin so the persistent zero of d_x u never meets the zero of d_x B,
// with datum u0 = int_0^x v0 >= 0. Evolved with the zero-flux line solver;
// snapshots double from t = 1 up to t_end. Records the datum checks, the
// mass books, the zero-slope cell per snapshot, and the relative gradient
// error at that cell.
struct SignChangeBundle {
    RadialGrid grid;
    std::vector<Snapshot> run;
    double datum_mass = 0.0;
    double v0_integral = 0.0;             // int v0, zero by the odd symmetry
    double max_mass_drift = 0.0;          // max over snapshots of |mass(t) - mass(0)|
    double max_slope_integral = 0.0;      // max over snapshots of |sum d_x u dx|
    std::vector<double> crossing_radius;  // location of the vanishing slope
    std::vector<double> crossing_error;   // |d_x u / d_x B - 1| there
    std::vector<double> gradient_error;   // full series, matched-mass comparison
    bool crossing_persists = true;
};
// Requires N = 1 parameters; K and L follow build_grid's line conventions.
SignChangeBundle sign_change_counterexample(const GoodRangeParams& params, int K, double L,
                                            double t_end);

}  // namespace plharnack
