#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace plharnack {

// log(e^a + e^b) without overflow; tolerates -inf arguments.
double logaddexp(double a, double b);

// Surface area of the unit sphere S^{N-1}: 2 pi^{N/2} / Gamma(N/2).
double sphere_area(int N);

double log_beta(double a, double b);
double beta_function(double a, double b);

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;  // accumulated error estimate
};

// Adaptive Simpson on a finite interval. Throws std::runtime_error if the
// tolerance cannot be met within max_depth refinement levels.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-12, double abs_tol = 0.0, int max_depth = 48);

// Integral over [a, inf), a > 0, by dyadic blocks [a 2^j, a 2^{j+1}].
// Stops once two consecutive blocks are negligible against the running sum;
// throws std::domain_error if the blocks keep growing (non-integrable tail).
QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       double rel_tol = 1e-10);

// Root of f by bisection on [lo, hi]; the bracket is expanded geometrically
// first if f(lo) and f(hi) share a sign. f must be monotone across the root.
double solve_bisection(const std::function<double(double)>& f, double lo, double hi,
                       double x_rel_tol = 1e-14, int max_iter = 400);

// Tridiagonal system: lower[i-1]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i].
// Sizes: diag = rhs = n, lower = upper = n-1. Thomas algorithm, no pivoting
// (callers supply strictly diagonally dominant systems).
std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      std::vector<double> rhs);

struct AffineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

// Least-squares line y = intercept + slope*x.
AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y);

// min ||c1*a + c2*b - y||_2 subject to c1, c2 >= 0 (two-column NNLS).
std::pair<double, double> fit_nonnegative_pair(const std::vector<double>& a,
                                               const std::vector<double>& b,
                                               const std::vector<double>& y);

// Units-in-the-last-place distance, saturated at INT64_MAX; 0 for a == b.
std::int64_t ulp_distance(double a, double b);

}  // namespace plharnack
