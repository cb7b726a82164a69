#include "plharnack/profiles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "plharnack/numerics.hpp"

namespace plharnack {

namespace {

void require_b1(const GoodRangeParams& params) {
  if (!(params.b1 > 0.0)) {
    throw std::logic_error("profile evaluation needs b1; call with_b1/compute_b1 first");
  }
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be positive");
  }
}

// log of the bracket b1 t^{beta p/(p-1)} M^{-(2-p) beta p/(p-1)} + b2 r^q.
// r = 0 contributes -inf to the second slot, which logaddexp absorbs.
double log_bracket(double x_radius, double t, double M, const GoodRangeParams& pr) {
  const double e_t = pr.beta * pr.q;              // beta p/(p-1)
  const double e_m = -(2.0 - pr.p) * pr.beta * pr.q;
  const double core = std::log(pr.b1) + e_t * std::log(t) + e_m * std::log(M);
  const double tail = x_radius > 0.0
                          ? std::log(pr.b2) + pr.q * std::log(x_radius)
                          : -std::numeric_limits<double>::infinity();
  return logaddexp(core, tail);
}

}  // namespace

double barenblatt(double x_radius, double t, double M, const GoodRangeParams& params) {
  require_b1(params);
  require_positive(t, "t");
  require_positive(M, "M");
  if (x_radius < 0.0) throw std::invalid_argument("x_radius must be nonnegative");
  const double e_out = 1.0 / (2.0 - params.p);
  return std::exp(e_out * std::log(t) - params.s_exp * log_bracket(x_radius, t, M, params));
}

double barenblatt_radial_derivative(double x_radius, double t, double M,
                                    const GoodRangeParams& params) {
  require_b1(params);
  require_positive(t, "t");
  require_positive(M, "M");
  if (x_radius < 0.0) throw std::invalid_argument("x_radius must be nonnegative");
  if (x_radius == 0.0) return 0.0;  // r^{1/(p-1)} prefactor vanishes
  const double e_out = 1.0 / (2.0 - params.p);
  // d/dr of bracket^{-s}: s q = p/(2-p) and s + 1 = 1/(2-p).
  const double log_mag = std::log(params.s_exp * params.b2 * params.q) +
                         (params.q - 1.0) * std::log(x_radius) + e_out * std::log(t) -
                         (params.s_exp + 1.0) * log_bracket(x_radius, t, M, params);
  return -std::exp(log_mag);
}

double barenblatt_profile_f1(double y, const GoodRangeParams& params) {
  require_b1(params);
  if (y < 0.0) throw std::invalid_argument("y must be nonnegative");
  const double tail = y > 0.0 ? std::log(params.b2) + params.q * std::log(y)
                              : -std::numeric_limits<double>::infinity();
  return std::exp(-params.s_exp * logaddexp(std::log(params.b1), tail));
}

double singular_barenblatt(double x_radius, double t, double S, const GoodRangeParams& params) {
  if (x_radius == 0.0) throw std::domain_error("singular profile is infinite at the origin");
  if (x_radius < 0.0) throw std::invalid_argument("x_radius must be nonnegative");
  if (t < 0.0 || S < 0.0) throw std::invalid_argument("t and S must be nonnegative");
  const double e_out = 1.0 / (2.0 - params.p);
  if (t + S == 0.0) return 0.0;
  const double log_val = -params.s_exp * std::log(params.b2) + e_out * std::log(t + S) -
                         params.tail_exp * std::log(x_radius);
  return std::exp(log_val);
}

double subsolution_D(double t, const SubSuperParams& sp, const GoodRangeParams& params) {
  if (t < 0.0) throw std::invalid_argument("t must be nonnegative");
  const double e = 1.0 / (sp.epsilon * (2.0 - params.p));
  return std::pow(sp.C1_sub * t + sp.C2, e);
}

double supersolution_G(double t, const SubSuperParams& sp, const GoodRangeParams& params) {
  if (t < 0.0) throw std::invalid_argument("t must be nonnegative");
  const double pm1 = params.p - 1.0;
  return std::pow(sp.C3_super * t + std::pow(sp.C4, pm1), 1.0 / pm1);
}

double explicit_subsolution(double x_radius, double t, const SubSuperParams& sp,
                            const GoodRangeParams& params) {
  if (x_radius < 0.0) throw std::invalid_argument("x_radius must be nonnegative");
  const double log_d = std::log(subsolution_D(t, sp, params));
  const double tail = x_radius > 0.0 ? params.q * std::log(x_radius)
                                     : -std::numeric_limits<double>::infinity();
  return std::exp(-sp.s_eps * logaddexp(log_d, tail));
}

double explicit_supersolution(double x_radius, double t, const SubSuperParams& sp,
                              const GoodRangeParams& params) {
  if (x_radius < 0.0) throw std::invalid_argument("x_radius must be nonnegative");
  const double log_g = std::log(supersolution_G(t, sp, params));
  const double tail = x_radius > 0.0 ? params.q * std::log(x_radius)
                                     : -std::numeric_limits<double>::infinity();
  return std::exp(sp.s_eps * (log_g - logaddexp(log_g, tail)));
}

}  // namespace plharnack
