#pragma once

namespace plharnack {

// Self-similar constants of u_t = div(|grad u|^{p-2} grad u) on the
// mass-conserving exponent window 2N/(N+1) < p < 2.
//
// inv_beta and x_weight_exp are stored in the cancellation-free forms
// (N+1)p - 2N and ((N+1)p - 2N)/(2-p); the naive N(p-2)+p and p/(2-p)-N
// lose all significant digits near the window endpoints.
struct GoodRangeParams {
    int N = 0;
    double p = 0.0;
    double p_c = 0.0;          // 2N/(N+1)
    double alpha = 0.0;        // 1/(p-2+p/N) = N*beta
    double beta = 0.0;         // 1/(N(p-2)+p)
    double b2 = 0.0;           // ((2-p)/p) * beta^{1/(p-1)}
    double b1 = 0.0;           // unit-mass normalization; 0 until compute_b1
    double q = 0.0;            // p/(p-1)
    double tail_exp = 0.0;     // p/(2-p)
    double x_weight_exp = 0.0; // p/(2-p) - N
    double omega_N = 0.0;      // |S^{N-1}|
    double s_exp = 0.0;        // (p-1)/(2-p)
    double inv_beta = 0.0;     // N(p-2)+p
};

// Throws std::invalid_argument (naming the critical exponent) outside the window.
GoodRangeParams derive_params(int N, double p);

// Unit-mass normalization constant: bisection on b1 with adaptive quadrature of
// omega_N * int_0^inf (b1 + b2 r^q)^{-s} r^{N-1} dr = 1.
double compute_b1(const GoodRangeParams& params);

// Independent route: the same normalization reduced to a Beta function.
double b1_closed_form(const GoodRangeParams& params);

// derive_params + compute_b1 in one call.
GoodRangeParams with_b1(int N, double p);

// Constants of the explicit algebraic sub/supersolution pair.
struct SubSuperParams {
    double epsilon = 0.0;
    double C2 = 1.0;          // subsolution integration constant
    double C4 = 1.0;          // supersolution integration constant
    double C1_sub = 0.0;      // N eps (2-p) kappa_pe
    double C3_super = 0.0;    // p (p-1) (1/(beta p (2-p)) - eps) kappa_pe
    double kappa_pe = 0.0;    // ((p-1)/(2-p) - eps)^{p-2} (p/(p-1))^{p-1}
    double s_eps = 0.0;       // (p-1)/(2-p) - eps, the profile exponent
};

// Validates eps in (0, min(1/(beta p (2-p)), (p-1)/(2-p))), C2 > 0, C4 > 0.
SubSuperParams derive_sub_super(double epsilon, double C2, double C4,
                                const GoodRangeParams& params);

}  // namespace plharnack
