#pragma once

#include "plharnack/params.hpp"

namespace plharnack {

// Source-type self-similar solution with mass M, evaluated in log form so that
// radii up to ~1e100 neither overflow nor lose the tail asymptotics.
//   B(r,t;M) = t^{1/(2-p)} [ b1 t^{beta p/(p-1)} M^{-(2-p) beta p/(p-1)} + b2 r^q ]^{-s}
double barenblatt(double x_radius, double t, double M, const GoodRangeParams& params);

// Analytic radial derivative of barenblatt; <= 0, vanishing at r = 0.
double barenblatt_radial_derivative(double x_radius, double t, double M,
                                    const GoodRangeParams& params);

// Self-similar shape: F1(y) = (b1 + b2 y^q)^{-s}, so that
// B(r,t;M) = t^{-N beta} M^{p beta} F1(r (t M^{p-2})^{-beta}).
double barenblatt_profile_f1(double y, const GoodRangeParams& params);

// M -> infinity envelope profile, an exact solution away from the origin:
//   U(r,t;S) = b2^{-s} (t+S)^{1/(2-p)} r^{-p/(2-p)}.
// Throws std::domain_error at r = 0 (the profile is singular there).
double singular_barenblatt(double x_radius, double t, double S, const GoodRangeParams& params);

// Algebraic subsolution (D(t) + r^q)^{-s_eps} with D(t) = (C1 t + C2)^{1/(eps(2-p))}.
double explicit_subsolution(double x_radius, double t, const SubSuperParams& sp,
                            const GoodRangeParams& params);

// Algebraic supersolution G(t)^{s_eps} (G(t) + r^q)^{-s_eps} with
// G(t) = (C3 t + C4^{p-1})^{1/(p-1)}.
double explicit_supersolution(double x_radius, double t, const SubSuperParams& sp,
                              const GoodRangeParams& params);

// The two time laws, exposed for direct inspection in tests and reports.
double subsolution_D(double t, const SubSuperParams& sp, const GoodRangeParams& params);
double supersolution_G(double t, const SubSuperParams& sp, const GoodRangeParams& params);

}  // namespace plharnack
