#include "plharnack/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "plharnack/numerics.hpp"

namespace plharnack {

namespace {

void check_run_shape(const std::vector<Snapshot>& run, int K, std::size_t min_len,
                     const char* who) {
    if (run.size() < min_len)
        throw std::invalid_argument(std::string(who) + ": needs at least " +
                                    std::to_string(min_len) + " snapshots");
    double prev_t = 0.0;
    for (const Snapshot& s : run) {
        if (int(s.values.size()) != K)
            throw std::invalid_argument(std::string(who) + ": snapshot width mismatch");
        if (!(s.t > prev_t))
            throw std::invalid_argument(std::string(who) + ": snapshot times must increase");
        prev_t = s.t;
    }
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double l1_difference(const RadialGrid& grid, const std::vector<double>& a,
                     const std::vector<double>& b) {
    double s = 0.0;
    for (int i = 0; i < grid.cells(); ++i) s += std::abs(a[i] - b[i]) * grid.volumes[i];
    return s;
}

// Mass held in cells whose center radius lies in [lo, hi).
double band_mass(const RadialGrid& grid, const std::vector<double>& u, double lo, double hi) {
    double s = 0.0;
    for (int i = 0; i < grid.cells(); ++i) {
        const double r = std::abs(grid.centers[i]);
        if (r >= lo && r < hi) s += u[i] * grid.volumes[i];
    }
    return s;
}

}  // namespace

MonotoneReport monotone_invariants(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                   const GoodRangeParams& params, double rel_tol) {
    const int K = grid.cells();
    check_run_shape(run, K, 3, "monotone_invariants");

    MonotoneReport rep;
    const double clock = -1.0 / (2.0 - params.p);
    for (std::size_t k = 0; k + 1 < run.size(); ++k) {
        const Snapshot& s1 = run[k];
        const Snapshot& s2 = run[k + 1];
        const double w1 = std::pow(s1.t, clock);
        const double w2 = std::pow(s2.t, clock);
        double wsup = 0.0;
        for (int i = 0; i < K; ++i) wsup = std::max(wsup, w1 * s1.values[i]);
        const double floor = std::max(wsup, std::numeric_limits<double>::min());
        for (int i = 0; i < K; ++i) {
            const double excess = (w2 * s2.values[i] - w1 * s1.values[i]) / floor;
            if (excess > rel_tol) {
                ++rep.benilan_violations;
                if (rep.first_violation_step < 0) {
                    rep.first_violation_step = int(k) + 1;
                    rep.first_violation_cell = i;
                }
            }
            rep.max_benilan_excess = std::max(rep.max_benilan_excess, excess);
        }
        const double rate = l1_difference(grid, s1.values, s2.values) / (s2.t - s1.t);
        const double bound = 2.0 * (2.0 - params.p) * s1.mass / s1.t;
        rep.rate_series.push_back(rate);
        rep.rate_bounds.push_back(bound);
        if (rate > bound) ++rep.rate_violations;
    }
    rep.passed = rep.benilan_violations == 0 && rep.rate_violations == 0;
    return rep;
}

SemigroupReport semigroup_invariants(const RadialGrid& grid,
                                     const std::vector<Snapshot>& run_u,
                                     const std::vector<Snapshot>& run_v, double rel_tol) {
    const int K = grid.cells();
    check_run_shape(run_u, K, 1, "semigroup_invariants");
    check_run_shape(run_v, K, 1, "semigroup_invariants");
    if (run_u.size() != run_v.size())
        throw std::invalid_argument("semigroup_invariants: snapshot count mismatch");
    for (std::size_t k = 0; k < run_u.size(); ++k)
        if (std::abs(run_u[k].t - run_v[k].t) > 1e-9 * std::max(1.0, run_u[k].t))
            throw std::invalid_argument("semigroup_invariants: snapshot time mismatch");

    SemigroupReport rep;
    for (std::size_t k = 0; k < run_u.size(); ++k)
        rep.contraction_series.push_back(l1_difference(grid, run_u[k].values, run_v[k].values));

    rep.contraction_monotone = true;
    const double ctol = rel_tol * std::max(rep.contraction_series.front(),
                                           std::numeric_limits<double>::min());
    for (std::size_t k = 0; k + 1 < rep.contraction_series.size(); ++k)
        if (rep.contraction_series[k + 1] > rep.contraction_series[k] + ctol)
            rep.contraction_monotone = false;

    const double vsup0 = sup_abs(run_v.front().values);
    rep.initially_ordered = true;
    for (int i = 0; i < K; ++i)
        if (run_u.front().values[i] > run_v.front().values[i] + rel_tol * vsup0)
            rep.initially_ordered = false;

    for (std::size_t k = 1; k < run_u.size(); ++k) {
        const double vsup = std::max(sup_abs(run_v[k].values),
                                     std::numeric_limits<double>::min());
        for (int i = 0; i < K; ++i) {
            const double excess = (run_u[k].values[i] - run_v[k].values[i]) / vsup;
            if (excess > rel_tol) ++rep.order_violations;
            rep.max_order_excess = std::max(rep.max_order_excess, excess);
        }
    }
    rep.order_preserved = rep.initially_ordered && rep.order_violations == 0;
    return rep;
}

CalibrationRecord smoothing_fit(const std::vector<LabeledRun>& runs,
                                const GoodRangeParams& params) {
    std::vector<const LabeledRun*> usable;
    for (const LabeledRun& run : runs) {
        if (!(run.mass > 0.0) || run.snapshots.empty()) continue;  // degenerate
        check_run_shape(run.snapshots, run.grid.cells(), 1, "smoothing_fit");
        if (int(run.datum.values.size()) != run.grid.cells())
            throw std::invalid_argument("smoothing_fit: datum width mismatch");
        usable.push_back(&run);
    }

    double mass_lo = std::numeric_limits<double>::infinity(), mass_hi = 0.0;
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = 0.0;
    for (const LabeledRun* run : usable) {
        mass_lo = std::min(mass_lo, run->mass);
        mass_hi = std::max(mass_hi, run->mass);
        t_lo = std::min(t_lo, run->snapshots.front().t);
        t_hi = std::max(t_hi, run->snapshots.back().t);
    }
    if (usable.size() < 2 || mass_hi < mass_lo * (1.0 + 1e-9) || t_hi < t_lo * 99.999)
        throw std::invalid_argument("smoothing_fit: insufficient span");

    CalibrationRecord cal;
    const double nb = params.N * params.beta;
    const double pb = params.p * params.beta;
    std::vector<double> f1, f2, y;
    for (const LabeledRun* run : usable) {
        cal.provenance.push_back(run->label);
        const double mpow = std::pow(run->mass, pb);
        const double L = run->grid.edges.back();
        for (const Snapshot& s : run->snapshots) {
            cal.C1_smoothing =
                std::max(cal.C1_smoothing, sup_abs(s.values) * std::pow(s.t, nb) / mpow);
            for (double x0 : {L / 24.0, L / 12.0, L / 6.0, L / 3.0}) {
                const double R0 = x0 / 4.0;
                double annulus_sup = 0.0;
                for (int i = 0; i < run->grid.cells(); ++i) {
                    const double r = std::abs(run->grid.centers[i]);
                    if (r >= x0 - R0 && r <= x0 + R0)
                        annulus_sup = std::max(annulus_sup, s.values[i]);
                }
                const double datum_mass =
                    band_mass(run->grid, run->datum.values, x0 - 2.0 * R0, x0 + 2.0 * R0);
                f1.push_back(std::pow(datum_mass, pb) * std::pow(s.t, -nb));
                f2.push_back(std::pow(s.t / std::pow(R0, params.p), 1.0 / (2.0 - params.p)));
                y.push_back(annulus_sup);
            }
        }
    }
    auto [k1, k2] = fit_nonnegative_pair(f1, f2, y);
    cal.kappa1_local = k1;
    cal.kappa2_local = k2;
    return cal;
}

TailControlReport tail_control_check(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                     const std::vector<double>& radii,
                                     const GoodRangeParams& params) {
    const int K = grid.cells();
    check_run_shape(run, K, 1, "tail_control_check");
    if (radii.empty()) throw std::invalid_argument("tail_control_check: no radii");
    for (double R : radii)
        if (!(R > 0.0)) throw std::invalid_argument("tail_control_check: radii must be positive");

    const double inf = std::numeric_limits<double>::infinity();
    TailControlReport rep;
    double outer_lo = inf, outer_hi = 0.0, inner_lo = inf, inner_hi = 0.0;
    for (double R : radii) {
        double outer_running = 0.0, inner_running = 0.0;
        for (std::size_t k = 0; k < run.size(); ++k) {
            outer_running = std::max(outer_running, band_mass(grid, run[k].values, 2.0 * R, inf));
            inner_running = std::max(inner_running, band_mass(grid, run[k].values, 0.0, R));
            TailControlEntry e;
            e.R = R;
            e.T = run[k].t;
            e.outer_sup = outer_running;
            e.outer_terminal = band_mass(grid, run[k].values, R, inf);
            e.inner_sup = inner_running;
            e.inner_terminal = band_mass(grid, run[k].values, 0.0, 2.0 * R);
            e.time_term = std::pow(e.T / std::pow(R, params.inv_beta), 1.0 / (2.0 - params.p));
            e.outer_ratio = e.outer_sup / (e.outer_terminal + e.time_term);
            e.inner_ratio = e.inner_sup / (e.inner_terminal + e.time_term);
            outer_lo = std::min(outer_lo, e.outer_ratio);
            outer_hi = std::max(outer_hi, e.outer_ratio);
            inner_lo = std::min(inner_lo, e.inner_ratio);
            inner_hi = std::max(inner_hi, e.inner_ratio);
            rep.entries.push_back(e);
        }
    }
    rep.kappa1_tail = outer_hi;
    rep.kappa2_inner = inner_hi;
    rep.outer_stability = outer_lo > 0.0 ? outer_hi / outer_lo : inf;
    rep.inner_stability = inner_lo > 0.0 ? inner_hi / inner_lo : inf;
    rep.positive = outer_lo > 0.0 && inner_lo > 0.0;
    return rep;
}

double interpolation_constant(int N, double nu, double p_norm) {
    if (N < 1 || !(nu > 0.0) || nu > 1.0 || !(p_norm >= 1.0))
        throw std::invalid_argument("interpolation_constant: need N >= 1, nu in (0,1], p >= 1");
    const double n = N, p = p_norm;
    const double d = n + p * nu;
    return std::pow(2.0, ((p - 1.0) * d + n * p) / (p * d)) *
           std::pow(1.0 + n / sphere_area(N), 1.0 / p) *
           std::pow(1.0 + std::pow(n / (p * nu), 1.0 / p), n / d) *
           std::pow(std::pow(n / (p * nu), p * nu / d) + std::pow(p * nu / n, n / d),
                    1.0 / p);
}

HolderReport holder_interpolation_check(const RadialGrid& grid,
                                        const std::vector<Snapshot>& run, double nu,
                                        double p_norm, const GoodRangeParams& params) {
    const int K = grid.cells();
    check_run_shape(run, K, 1, "holder_interpolation_check");

    HolderReport rep;
    rep.constant = interpolation_constant(params.N, nu, p_norm);
    rep.all_hold = true;
    const double a = params.N / (params.N + p_norm * nu);
    const double b = 1.0 - a;

    std::vector<double> log_t, log_semi;
    for (const Snapshot& s : run) {
        HolderEntry e;
        e.t = s.t;
        for (int i = 0; i < K; ++i) {
            e.sup_norm = std::max(e.sup_norm, std::abs(s.values[i]));
            for (int j = i + 1; j < K; ++j) {
                const double gap = std::abs(grid.centers[j] - grid.centers[i]);
                e.seminorm = std::max(
                    e.seminorm, std::abs(s.values[j] - s.values[i]) / std::pow(gap, nu));
            }
        }
        double psum = 0.0;
        for (int i = 0; i < K; ++i)
            psum += std::pow(std::abs(s.values[i]), p_norm) * grid.volumes[i];
        e.p_norm_value = std::pow(psum, 1.0 / p_norm);
        e.bound = rep.constant * std::pow(e.seminorm, a) * std::pow(e.p_norm_value, b);
        e.holds = e.sup_norm <= e.bound * (1.0 + 1e-12) + 1e-300;
        e.slack = e.sup_norm > 0.0 ? e.bound / e.sup_norm : 0.0;
        rep.all_hold = rep.all_hold && e.holds;
        if (e.seminorm > 0.0) {
            log_t.push_back(std::log(s.t));
            log_semi.push_back(std::log(e.seminorm));
        }
        rep.entries.push_back(e);
    }

    const double mass = run.front().mass;
    if (log_t.size() >= 2 && mass > 0.0) {
        rep.eta_fit = -fit_affine(log_t, log_semi).slope;
        const double mpow = std::pow(mass, params.p * params.beta);
        for (const HolderEntry& e : rep.entries)
            rep.surrogate_bound = std::max(
                rep.surrogate_bound, e.seminorm * std::pow(e.t, rep.eta_fit) / mpow);
    }
    return rep;
}

AleksandrovReport aleksandrov_check(const RadialGrid& grid, const std::vector<Snapshot>& run,
                                    double support_radius, double rel_tol) {
    const int K = grid.cells();
    check_run_shape(run, K, 1, "aleksandrov_check");
    if (!(support_radius > 0.0))
        throw std::invalid_argument("aleksandrov_check: support radius must be positive");

    AleksandrovReport rep;
    for (const Snapshot& s : run) {
        // innermost cell stands in for the value at 0+
        double center = s.values[0];
        double cr = std::abs(grid.centers[0]);
        for (int i = 1; i < K; ++i)
            if (std::abs(grid.centers[i]) < cr) {
                cr = std::abs(grid.centers[i]);
                center = s.values[i];
            }
        const double floor = std::max(sup_abs(s.values), std::numeric_limits<double>::min());
        for (int i = 0; i < K; ++i) {
            if (std::abs(grid.centers[i]) < 2.0 * support_radius) continue;
            const double excess = (s.values[i] - center) / floor;
            if (excess > rel_tol) ++rep.violations;
            rep.max_excess = std::max(rep.max_excess, excess);
        }
    }
    rep.passed = rep.violations == 0;
    return rep;
}

bool calibration_valid(const CalibrationRecord& cal, const GoodRangeParams& params) {
    for (double v : {cal.C1_smoothing, cal.kappa1_local, cal.kappa2_local, cal.kappa1_tail})
        if (!std::isfinite(v) || v < 0.0) return false;
    const double lower = std::pow(params.b1, -params.s_exp);
    return cal.C1_smoothing >= lower * (1.0 - 1e-9);
}

namespace {

using nlohmann::json;

json entry_json(const TailControlEntry& e) {
    return json{{"R", e.R},
                {"T", e.T},
                {"outer_sup", e.outer_sup},
                {"outer_terminal", e.outer_terminal},
                {"inner_sup", e.inner_sup},
                {"inner_terminal", e.inner_terminal},
                {"time_term", e.time_term},
                {"outer_ratio", e.outer_ratio},
                {"inner_ratio", e.inner_ratio}};
}

}  // namespace

std::string to_json(const MonotoneReport& rep) {
    return json{{"benilan_violations", rep.benilan_violations},
                {"max_benilan_excess", rep.max_benilan_excess},
                {"first_violation_step", rep.first_violation_step},
                {"first_violation_cell", rep.first_violation_cell},
                {"rate_series", rep.rate_series},
                {"rate_bounds", rep.rate_bounds},
                {"rate_violations", rep.rate_violations},
                {"passed", rep.passed}}
        .dump();
}

std::string to_json(const SemigroupReport& rep) {
    return json{{"contraction_series", rep.contraction_series},
                {"contraction_monotone", rep.contraction_monotone},
                {"initially_ordered", rep.initially_ordered},
                {"order_preserved", rep.order_preserved},
                {"order_violations", rep.order_violations},
                {"max_order_excess", rep.max_order_excess}}
        .dump();
}

std::string to_json(const TailControlReport& rep) {
    json entries = json::array();
    for (const TailControlEntry& e : rep.entries) entries.push_back(entry_json(e));
    return json{{"entries", entries},
                {"kappa1_tail", rep.kappa1_tail},
                {"outer_stability", rep.outer_stability},
                {"kappa2_inner", rep.kappa2_inner},
                {"inner_stability", rep.inner_stability},
                {"positive", rep.positive}}
        .dump();
}

std::string to_json(const HolderReport& rep) {
    json entries = json::array();
    for (const HolderEntry& e : rep.entries)
        entries.push_back(json{{"t", e.t},
                               {"seminorm", e.seminorm},
                               {"sup_norm", e.sup_norm},
                               {"p_norm_value", e.p_norm_value},
                               {"bound", e.bound},
                               {"slack", e.slack},
                               {"holds", e.holds}});
    return json{{"entries", entries},
                {"constant", rep.constant},
                {"eta_fit", rep.eta_fit},
                {"surrogate_bound", rep.surrogate_bound},
                {"all_hold", rep.all_hold}}
        .dump();
}

std::string to_json(const AleksandrovReport& rep) {
    return json{{"violations", rep.violations},
                {"max_excess", rep.max_excess},
                {"passed", rep.passed}}
        .dump();
}

std::string to_json(const CalibrationRecord& cal) {
    return json{{"C1_smoothing", cal.C1_smoothing},
                {"kappa1_local", cal.kappa1_local},
                {"kappa2_local", cal.kappa2_local},
                {"kappa1_tail", cal.kappa1_tail},
                {"provenance", cal.provenance}}
        .dump(2);
}

void save_calibration(const CalibrationRecord& cal, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_calibration: cannot open " + path);
    out << to_json(cal) << "\n";
    if (!out) throw std::runtime_error("save_calibration: write failed for " + path);
}

CalibrationRecord load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_calibration: cannot open " + path);
    CalibrationRecord cal;
    try {
        const json j = json::parse(in);
        cal.C1_smoothing = j.at("C1_smoothing").get<double>();
        cal.kappa1_local = j.at("kappa1_local").get<double>();
        cal.kappa2_local = j.at("kappa2_local").get<double>();
        cal.kappa1_tail = j.at("kappa1_tail").get<double>();
        cal.provenance = j.at("provenance").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw std::runtime_error("load_calibration: malformed " + path + ": " + e.what());
    }
    return cal;
}

}  // namespace plharnack
