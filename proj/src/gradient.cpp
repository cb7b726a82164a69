#include "plharnack/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plharnack/numerics.hpp"
#include "plharnack/profiles.hpp"

namespace plharnack {

namespace {

// Centered three-point first derivative on an unevenly spaced axis,
// second order at interior nodes, one-sided at the two ends.
std::vector<double> axis_slopes(const std::vector<double>& x, const std::vector<double>& u) {
    const int n = static_cast<int>(x.size());
    std::vector<double> v(n);
    for (int i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        v[i] = (-hp / (hm * (hm + hp))) * u[i - 1] + ((hp - hm) / (hm * hp)) * u[i] +
               (hm / (hp * (hm + hp))) * u[i + 1];
    }
    auto one_sided = [&](int i0, int i1, int i2) {
        const double d1 = x[i1] - x[i0], d2 = x[i2] - x[i0];
        return (u[i1] - u[i0]) * d2 / (d1 * (d2 - d1)) -
               (u[i2] - u[i0]) * d1 / (d2 * (d2 - d1));
    };
    v[0] = n > 2 ? one_sided(0, 1, 2) : (u[1] - u[0]) / (x[1] - x[0]);
    v[n - 1] = n > 2 ? one_sided(n - 1, n - 2, n - 3) : v[0];
    return v;
}

// d_r u at the cell centers. Line grids difference in x directly. Radial
// grids difference in xi = r^q: radial profiles of this flow are smooth
// functions of r^q near the origin (Barenblatt is analytic in it), so the
// chain rule d_r u = q r^{q-1} dU/dxi keeps the innermost cells at full
// accuracy where plain r-differencing loses the leading order.
std::vector<double> center_slopes(const RadialGrid& grid, const std::vector<double>& u,
                                  const GoodRangeParams& pr) {
    if (grid.mode == GridMode::line) return axis_slopes(grid.centers, u);
    const int K = grid.cells();
    std::vector<double> xi(K);
    for (int i = 0; i < K; ++i) xi[i] = std::pow(grid.centers[i], pr.q);
    std::vector<double> v = axis_slopes(xi, u);
    for (int i = 0; i < K; ++i) v[i] *= pr.q * std::pow(grid.centers[i], pr.q - 1.0);
    return v;
}

void check_run(const std::vector<Snapshot>& run, int K, const char* who) {
    if (run.empty()) throw std::invalid_argument(std::string(who) + ": empty run");
    for (const Snapshot& s : run) {
        if (static_cast<int>(s.values.size()) != K)
            throw std::invalid_argument(std::string(who) + ": snapshot width mismatch");
        if (!(s.t > 0.0))
            throw std::invalid_argument(std::string(who) + ": snapshots need t > 0");
    }
}

}  // namespace

WfdeParams derive_wfde_params(const GoodRangeParams& pr) {
    WfdeParams wp;
    wp.N = pr.N;
    wp.p = pr.p;
    wp.m = pr.p - 1.0;
    wp.n_bar = 2.0 * pr.N * (pr.p - 1.0) / pr.p + 2.0;
    wp.gamma = pr.N - wp.n_bar;
    const double m = wp.m;
    wp.D = std::pow(4.0 * m / ((m + 1.0) * (m + 1.0)), 1.0 / (m - 1.0));
    wp.kappa_mass = pr.p * pr.N / (2.0 * (pr.p - 1.0) * wp.D);
    wp.theta = 1.0 / (wp.n_bar * m - (wp.n_bar - 2.0));

    // Far-field match: the transformed Barenblatt derivative decays like
    // (D / (s b2 q))^{... } b2 r^2 inside the profile bracket.
    wp.a1 = std::pow(wp.D / (pr.s_exp * pr.b2 * pr.q), 2.0 - pr.p) * pr.b2;

    // Weighted-mass normalization at t = 1, M_bar = 1: substituting
    // y = sqrt(a1/a0) r gives mass = sigma_N I a1^{-n_bar/2} a0^{n_bar/2 - 1/(1-m)}
    // with I = int_0^inf y^{n_bar-1} (1+y^2)^{-1/(1-m)} dy. Near the critical
    // exponent the integrand tail decays too slowly for block quadrature, so
    // evaluate I exactly: u = y^2 turns it into (1/2) B(n_bar/2, 1/(1-m) - n_bar/2),
    // whose second argument is positive precisely on the good range.
    const double inv1m = 1.0 / (1.0 - m);
    const double shape = 0.5 * std::exp(std::lgamma(0.5 * wp.n_bar) +
                                        std::lgamma(inv1m - 0.5 * wp.n_bar) -
                                        std::lgamma(inv1m));
    wp.a0 = std::pow(sphere_area(pr.N) * shape * std::pow(wp.a1, -0.5 * wp.n_bar),
                     1.0 / (inv1m - 0.5 * wp.n_bar));
    return wp;
}

double wfde_barenblatt(double x_radius, double t, double M_bar, const WfdeParams& wp) {
    if (!(wp.a0 > 0.0) || !(wp.a1 > 0.0))
        throw std::invalid_argument("wfde_barenblatt: unresolved normalization (a0, a1)");
    if (!(t > 0.0)) throw std::invalid_argument("wfde_barenblatt: t must be positive");
    if (!(M_bar > 0.0)) throw std::invalid_argument("wfde_barenblatt: M_bar must be positive");
    const double inv1m = 1.0 / (1.0 - wp.m);
    const double core = wp.a0 * std::pow(t, 2.0 * wp.theta) /
                        std::pow(M_bar, 2.0 * wp.theta * (1.0 - wp.m));
    return std::pow(t, inv1m) * std::pow(core + wp.a1 * x_radius * x_radius, -inv1m);
}

TransformedRun ple_to_wfde_transform(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                     const GoodRangeParams& pr, const WfdeParams& wp) {
    if (grid.mode != GridMode::radial)
        throw std::invalid_argument("ple_to_wfde_transform: radial grids only");
    const int K = grid.cells();
    check_run(run, K, "ple_to_wfde_transform");

    // map r_bar = r^{(m+1)/(2m)}; note xi = r^q = r_bar^2
    const double ex = (wp.m + 1.0) / (2.0 * wp.m);
    TransformedRun tr;
    tr.radii.resize(K);
    tr.edges.resize(K + 1);
    tr.weighted_volumes.resize(K);
    for (int i = 0; i < K; ++i) tr.radii[i] = std::pow(grid.centers[i], ex);
    for (int i = 0; i <= K; ++i) tr.edges[i] = std::pow(grid.edges[i], ex);
    const double sigma = sphere_area(pr.N);
    for (int i = 0; i < K; ++i)
        tr.weighted_volumes[i] =
            sigma * (std::pow(tr.edges[i + 1], wp.n_bar) - std::pow(tr.edges[i], wp.n_bar)) /
            wp.n_bar;

    std::vector<double> xi(K);
    for (int i = 0; i < K; ++i) xi[i] = std::pow(grid.centers[i], pr.q);
    tr.snapshots.reserve(run.size());
    for (const Snapshot& s : run) {
        Snapshot out = s;  // keeps t and the run metadata
        out.values = axis_slopes(xi, s.values);
        out.mass = 0.0;
        for (int i = 0; i < K; ++i) {
            out.values[i] *= pr.q / wp.D;  // u_bar = (q/D) dU/dxi exactly
            out.mass += out.values[i] * tr.weighted_volumes[i];
        }
        tr.snapshots.push_back(std::move(out));
    }
    return tr;
}

ResidualReport wfde_residual(const TransformedRun& run, int step, const WfdeParams& wp) {
    const int n = static_cast<int>(run.snapshots.size());
    if (step < 0 || step + 1 >= n)
        throw std::invalid_argument("wfde_residual: step out of range");
    const int K = static_cast<int>(run.radii.size());
    const Snapshot& s0 = run.snapshots[step];
    const Snapshot& s1 = run.snapshots[step + 1];
    const double dt = s1.t - s0.t;
    if (!(dt > 0.0)) throw std::invalid_argument("wfde_residual: snapshots out of order");

    // implicit face fluxes r_bar^{n_bar-1} |u|^{m-1} u_r, via differences of
    // phi(u)/m with phi(u) = |u|^{m-1} u; both boundary fluxes vanish
    auto phi = [&](double v) { return std::copysign(std::pow(std::abs(v), wp.m), v); };
    std::vector<double> flux(K + 1, 0.0);
    for (int j = 1; j < K; ++j)
        flux[j] = std::pow(run.edges[j], wp.n_bar - 1.0) *
                  (phi(s1.values[j]) - phi(s1.values[j - 1])) /
                  (wp.m * (run.radii[j] - run.radii[j - 1]));

    ResidualReport rep;
    rep.residual.resize(K);
    for (int i = 0; i < K; ++i) {
        const double w =
            (std::pow(run.edges[i + 1], wp.n_bar) - std::pow(run.edges[i], wp.n_bar)) / wp.n_bar;
        const double dudt = (s1.values[i] - s0.values[i]) / dt;
        rep.residual[i] = dudt - (flux[i + 1] - flux[i]) / w;
        rep.scale = std::max(rep.scale, std::abs(dudt));
    }
    if (rep.scale > 0.0)
        for (int i = 0; i + 2 < K; ++i)
            rep.max_scaled = std::max(rep.max_scaled, std::abs(rep.residual[i]) / rep.scale);
    return rep;
}

GradientErrorReport gradient_relative_error(const RadialGrid& grid,
                                            const std::vector<Snapshot>& run, double M,
                                            const GoodRangeParams& pr) {
    const int K = grid.cells();
    check_run(run, K, "gradient_relative_error");
    if (!(M > 0.0)) throw std::invalid_argument("gradient_relative_error: M must be positive");
    const bool line = grid.mode == GridMode::line;

    GradientErrorReport rep;
    {
        const std::vector<double> v0 = center_slopes(grid, run.front().values, pr);
        double vsup = 0.0;
        for (double v : v0) vsup = std::max(vsup, std::abs(v));
        const double mono_tol = 1e-10 * vsup;
        for (int i = 0; i < K; ++i) {
            const double outward = (line && grid.centers[i] < 0.0) ? -v0[i] : v0[i];
            if (outward > mono_tol) {
                rep.monotone = false;
                break;
            }
        }
        const double sb = 2.0 / (2.0 - pr.p);
        for (int i = 0; i < K; ++i) {
            const double r = std::abs(grid.centers[i]);
            if (r >= 1.0)
                rep.decay_constant =
                    std::max(rep.decay_constant, std::abs(v0[i]) * std::pow(r, sb));
        }
    }

    rep.series.reserve(run.size());
    for (const Snapshot& s : run) {
        const std::vector<double> v = center_slopes(grid, s.values, pr);
        double worst = 0.0;
        // end cells carry one-sided differences; the innermost radial cell
        // is a 0/0 of derivative against comparison
        for (int i = 1; i + 1 < K; ++i) {
            const double c = grid.centers[i];
            double dB = barenblatt_radial_derivative(std::abs(c), s.t, M, pr);
            if (line && c < 0.0) dB = -dB;
            if (dB == 0.0) continue;
            worst = std::max(worst, std::abs(v[i] / dB - 1.0));
        }
        rep.series.push_back(worst);
    }
    return rep;
}

GradientDecayReport gradient_decay_report(const RadialGrid& grid,
                                          const std::vector<Snapshot>& run,
                                          const GoodRangeParams& pr, double mass,
                                          double x_norm_value) {
    const int K = grid.cells();
    check_run(run, K, "gradient_decay_report");
    if (mass < 0.0 || x_norm_value < 0.0)
        throw std::invalid_argument("gradient_decay_report: negative normalizer");

    GradientDecayReport rep;
    rep.c2_profile.assign(K, 0.0);
    const double tb = (pr.N + 1.0) * pr.beta;
    const double sb = 2.0 / (2.0 - pr.p);
    const double den1 = std::pow(mass, 2.0 * pr.beta);
    const double den_x = std::pow(x_norm_value, 2.0 * pr.beta);
    for (const Snapshot& s : run) {
        const std::vector<double> v = center_slopes(grid, s.values, pr);
        const double tpow = std::pow(s.t, tb);
        const double den2 = den1 + den_x + std::pow(s.t, 2.0 * pr.beta / (2.0 - pr.p));
        double c1 = 0.0, c2 = 0.0;
        for (int i = 0; i < K; ++i) {
            const double av = std::abs(v[i]);
            if (av == 0.0) continue;
            c1 = std::max(c1, av * tpow / den1);
            const double q2 = av * std::pow(1.0 + std::abs(grid.centers[i]), sb) * tpow / den2;
            c2 = std::max(c2, q2);
            rep.c2_profile[i] = std::max(rep.c2_profile[i], q2);
        }
        rep.c1_series.push_back(c1);
        rep.c2_series.push_back(c2);
        rep.c1_fit = std::max(rep.c1_fit, c1);
        rep.c2_fit = std::max(rep.c2_fit, c2);
    }
    return rep;
}

SignChangeBundle sign_change_counterexample(const GoodRangeParams& pr, int K, double L,
                                            double t_end) {
    if (pr.N != 1)
        throw std::invalid_argument("sign_change_counterexample: one-dimensional construction");
    if (!(L >= 8.0))
        throw std::invalid_argument("sign_change_counterexample: box too small for the datum");
    if (!(t_end >= 1.0))
        throw std::invalid_argument("sign_change_counterexample: t_end must be >= 1");

    SignChangeBundle b;
    b.grid = build_grid(GridMode::line, 1, L, K);

    // v0(x) = -(pi/2) sin(pi (x-2)) on [1,3]: compactly supported, odd about
    // x = 2, zero integral. Its primitive u0 = cos^2(pi (x-2)/2) on [1,3] is
    // nonnegative with mass 1. Centering away from 0 keeps the persistent
    // zero slope at x = 2, where the comparison derivative never vanishes.
    auto u0 = [](double x) {
        if (x <= 1.0 || x >= 3.0) return 0.0;
        const double c = std::cos(0.5 * M_PI * (x - 2.0));
        return c * c;
    };
    const Snapshot state = init_state(u0, b.grid);
    b.datum_mass = state.mass;
    b.v0_integral =
        integrate([](double x) { return -0.5 * M_PI * std::sin(M_PI * (x - 2.0)); }, 1.0, 3.0,
                  1e-13, 1e-15)
            .value;

    SolverConfig cfg;
    for (double t = 1.0; t < t_end; t *= 2.0) cfg.snapshot_times.push_back(t);
    b.run = advance(b.grid, state, pr, cfg, t_end);

    const double M = b.datum_mass;
    b.gradient_error = gradient_relative_error(b.grid, b.run, M, pr).series;

    for (const Snapshot& s : b.run) {
        b.max_mass_drift = std::max(b.max_mass_drift, std::abs(s.mass - b.datum_mass));
        const std::vector<double> v = center_slopes(b.grid, s.values, pr);
        double slope_integral = 0.0, usup = 0.0;
        for (int i = 0; i < K; ++i) {
            slope_integral += v[i] * b.grid.volumes[i];
            usup = std::max(usup, s.values[i]);
        }
        b.max_slope_integral = std::max(b.max_slope_integral, std::abs(slope_integral));

        // the crossing: the slope flips + to - at the bump's crest, where the
        // solution is near its sup (sign noise in the flat far field never is)
        int best = -1;
        for (int i = 0; i + 1 < K; ++i) {
            if (b.grid.centers[i] < 0.5 || s.values[i] < 0.5 * usup) continue;
            if (v[i] > 0.0 && v[i + 1] <= 0.0) {
                const int cand = std::abs(v[i]) <= std::abs(v[i + 1]) ? i : i + 1;
                if (best < 0 || std::abs(v[cand]) < std::abs(v[best])) best = cand;
            }
        }
        if (best < 0) {
            b.crossing_persists = false;
            b.crossing_radius.push_back(std::numeric_limits<double>::quiet_NaN());
            b.crossing_error.push_back(0.0);
            continue;
        }
        const double dB = barenblatt_radial_derivative(b.grid.centers[best], s.t, M, pr);
        b.crossing_radius.push_back(b.grid.centers[best]);
        b.crossing_error.push_back(std::abs(v[best] / dB - 1.0));
    }
    return b;
}

}  // namespace plharnack
