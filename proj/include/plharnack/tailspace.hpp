#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plharnack/params.hpp"

namespace plharnack {

// Radial datum f(|x|). Beyond the closed-form evaluator the struct can carry
// an exact exterior-mass function (spiky or piecewise data defeat adaptive
// quadrature) and a list of radii any sup-scan must visit (spike tips).
struct RadialProfile {
  std::function<double(double)> evaluator;
  double domain_hint = std::numeric_limits<double>::infinity();
  std::function<double(double)> exterior_mass;  // optional exact value of the integral over {|x| > R}
  std::vector<double> sample_hints;
};

// Certificate of the pointwise bound f(r) <= A r^{-p/(2-p)} for r >= R0.
struct ApFit {
  double A = 0.0;
  double R0 = 0.0;
};

struct XNormScan {
  double value = 0.0;       // max over the scan of R^{p/(2-p)-N} * exterior mass
  bool diverged = false;    // still rising > 1% per decade at the scan edge
  double sup_radius = 0.0;  // scan radius achieving the max
};

struct TailReport {
  XNormScan x_norm;
  std::optional<ApFit> ap_fit;
  std::vector<std::pair<double, double>> vazquez_ratio;  // (|x|, ball-mass ratio)
  bool vazquez_bounded = true;
  bool in_X = false;
  std::string method_note;
};

// Log-spaced grid including both endpoints.
std::vector<double> log_spaced(double r_min, double r_max, int per_decade);

// Integral of f over {|x| > R}; exact function if the profile carries one,
// adaptive quadrature of f(r) omega_N r^{N-1} otherwise.
double exterior_mass(const RadialProfile& f, double R, const GoodRangeParams& params);
double profile_mass(const RadialProfile& f, const GoodRangeParams& params);

// Max of R^{p/(2-p)-N} * exterior_mass(R) over the scan, with a trend test at
// the top edge standing in for the supremum over all R.
XNormScan x_norm(const RadialProfile& f, const GoodRangeParams& params,
                 const std::vector<double>& scan);

TailReport tail_classification(const RadialProfile& f, const GoodRangeParams& params);
TailReport tail_classification(const RadialProfile& f, const GoodRangeParams& params,
                               const std::vector<double>& scan);

// Data families.
RadialProfile power_tail_datum(double sigma, const GoodRangeParams& params);
RadialProfile g_alpha_beta(double alpha, double beta_spike, int K,
                           const GoodRangeParams& params);
RadialProfile indicator_datum(double radius, const GoodRangeParams& params);
RadialProfile barenblatt_datum(double t, double M, const GoodRangeParams& params);
RadialProfile subsolution_datum(const SubSuperParams& sp, const GoodRangeParams& params);
RadialProfile supersolution_datum(const SubSuperParams& sp, const GoodRangeParams& params);

// Piecewise-linear profile through (radii, values), zero beyond the last
// sample; exterior masses are exact integrals of the interpolant.
RadialProfile profile_from_samples(std::vector<double> radii, std::vector<double> values,
                                   const GoodRangeParams& params);

}  // namespace plharnack
