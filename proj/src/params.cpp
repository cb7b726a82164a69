#include "plharnack/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "plharnack/numerics.hpp"

namespace plharnack {

GoodRangeParams derive_params(int N, double p) {
    if (N < 1) throw std::invalid_argument("derive_params: dimension N must be >= 1");
    const double p_c = 2.0 * N / (N + 1.0);
    // (N+1)p - 2N == (N+1)(p - p_c): positive exactly on the good range.
    // fma gives a single rounding; the two-step form loses relative accuracy
    // near p_c, where this difference underflows gradually.
    const double inv_beta = std::fma(N + 1.0, p, -2.0 * N);
    if (!(inv_beta > 0.0) || !(p < 2.0)) {
        std::ostringstream msg;
        msg << "derive_params: p = " << p << " outside the good range (p_c, 2) with p_c = "
            << p_c << " for N = " << N;
        throw std::invalid_argument(msg.str());
    }
    GoodRangeParams pr;
    pr.N = N;
    pr.p = p;
    pr.p_c = p_c;
    pr.inv_beta = inv_beta;
    pr.beta = 1.0 / inv_beta;
    pr.alpha = N * pr.beta;
    pr.q = p / (p - 1.0);
    pr.tail_exp = p / (2.0 - p);
    pr.x_weight_exp = inv_beta / (2.0 - p);
    pr.s_exp = (p - 1.0) / (2.0 - p);
    pr.b2 = ((2.0 - p) / p) * std::pow(pr.beta, 1.0 / (p - 1.0));
    pr.omega_N = sphere_area(N);
    pr.b1 = 0.0;
    return pr;
}

namespace {

double profile_mass(const GoodRangeParams& pr, double b1) {
    auto integrand = [&](double r) {
        return std::exp(-pr.s_exp * std::log(b1 + pr.b2 * std::pow(r, pr.q))) *
               std::pow(r, pr.N - 1.0);
    };
    const QuadratureResult head = integrate(integrand, 0.0, 1.0, 1e-12);
    const QuadratureResult tail = integrate_to_infinity(integrand, 1.0, 1e-12);
    return pr.omega_N * (head.value + tail.value);
}

}  // namespace

double compute_b1(const GoodRangeParams& params) {
    // mass is strictly decreasing in b1, so the unit-mass level is a simple root
    auto objective = [&](double b1) { return profile_mass(params, b1) - 1.0; };
    const double b1 = solve_bisection(objective, 1e-3, 1e3, 1e-12);
    const double achieved = std::abs(profile_mass(params, b1) - 1.0);
    if (achieved > 1e-8) {
        throw std::runtime_error("compute_b1: normalization converged only to " +
                                 std::to_string(achieved));
    }
    return b1;
}

double b1_closed_form(const GoodRangeParams& params) {
    // substituting y = b2 r^q / b1 reduces the unit-mass integral to a Beta function:
    // b1^{s - N/q} = omega_N Beta(N/q, s - N/q) / (q b2^{N/q})
    const double a = params.N / params.q;
    const double b = params.s_exp - a;
    const double log_rhs = std::log(params.omega_N) - std::log(params.q) -
                           a * std::log(params.b2) + log_beta(a, b);
    return std::exp(log_rhs / b);
}

GoodRangeParams with_b1(int N, double p) {
    GoodRangeParams pr = derive_params(N, p);
    pr.b1 = compute_b1(pr);
    return pr;
}

SubSuperParams derive_sub_super(double epsilon, double C2, double C4,
                                const GoodRangeParams& params) {
    const double p = params.p;
    const double bound_super = params.inv_beta / (p * (2.0 - p));  // 1/(beta p (2-p))
    const double bound_sub = params.s_exp;
    const double bound = std::min(bound_super, bound_sub);
    if (!(epsilon > 0.0) || !(epsilon < bound)) {
        std::ostringstream msg;
        msg << "derive_sub_super: epsilon = " << epsilon
            << " outside (0, " << bound << ") for N = " << params.N << ", p = " << p;
        throw std::invalid_argument(msg.str());
    }
    if (!(C2 > 0.0) || !(C4 > 0.0))
        throw std::invalid_argument("derive_sub_super: C2 and C4 must be positive");
    SubSuperParams sp;
    sp.epsilon = epsilon;
    sp.C2 = C2;
    sp.C4 = C4;
    sp.s_eps = params.s_exp - epsilon;
    sp.kappa_pe = std::pow(sp.s_eps, p - 2.0) * std::pow(params.q, p - 1.0);
    sp.C1_sub = params.N * epsilon * (2.0 - p) * sp.kappa_pe;
    sp.C3_super = p * (p - 1.0) * (bound_super - epsilon) * sp.kappa_pe;
    return sp;
}

}  // namespace plharnack
