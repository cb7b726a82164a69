#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plharnack/calibration.hpp"
#include "plharnack/params.hpp"
#include "plharnack/solver.hpp"
#include "plharnack/tailspace.hpp"

namespace plharnack {

enum class EnvelopeSide { upper, lower };

// Time-shifted source-solution bound: B(., t + tau; M) dominates from above
// (side = upper) or B(., t - tau; M) supports from below (side = lower, only
// meaningful for t > tau).
struct Envelope {
  EnvelopeSide side = EnvelopeSide::upper;
  double tau = 0.0;  // time-shift magnitude, applied with the side's sign
  double M = 1.0;
  double valid_from = 0.0;
  std::string provenance = "constructed";  // "inflated" after a-posteriori adjustment
  double inflation = 1.0;                  // total mass factor applied afterwards
};

// Intermediates of the upper construction, kept for reporting.
struct UpperBoundData {
  double A = 0.0;   // datum tail coefficient: u0 <= A r^{-p/(2-p)}
  double S = 0.0;   // time shift of the dominating singular profile
  double R1 = 0.0;  // matching radius between core and tail estimates
  double K = 0.0;   // core coefficient entering the shift equation
};

// Intermediates of the lower construction.
struct LowerBoundData {
  double R0 = 0.0;           // core ball radius
  double M_R = 0.0;          // datum mass inside the core ball
  double t_c = 0.0;          // critical time
  double a = 0.0;            // time-shift fraction, in (0,1)
  double b = 0.0;            // mass fraction
  double kappa_cal = 0.0;    // critical-time constant derived from calibration
  double C_lower_cal = 0.0;  // positivity constant derived from calibration
};

// Evaluates the envelope profile at radius x_radius and run time t.
// Throws std::invalid_argument for a lower envelope at t <= tau.
double envelope_value(const Envelope& env, double x_radius, double t,
                      const GoodRangeParams& params);

// Upper envelope from a pointwise tail bound A on the datum, anchored at t0.
// cal must supply a positive smoothing constant.
std::pair<Envelope, UpperBoundData> upper_envelope(double A, double t0,
                                                   const CalibrationRecord& cal,
                                                   double R0_cfg,
                                                   const GoodRangeParams& params);

// Lower envelope from the datum mass in the ball of radius R0, anchored at t0.
// cal must supply positive smoothing and local-smoothing constants.
std::pair<Envelope, LowerBoundData> lower_envelope(const RadialProfile& u0, double R0,
                                                   double t0,
                                                   const CalibrationRecord& cal,
                                                   const GoodRangeParams& params);

// Margin report of verify_envelope. margins[k] is the minimum signed margin
// over cells at times[k]: envelope - u for the upper side, u - envelope for
// the lower side. If the constructed envelope fails, the mass is rescaled by
// the minimal factor restoring validity at the first snapshot and re-verified;
// `envelope` then carries provenance "inflated" and the factor. `impossible`
// is set when no mass choice can restore the failing side (a cell exceeds the
// mass-independent tail bound, or a lower envelope meets a nonpositive cell).
struct EnvelopeCheck {
  std::vector<double> times;
  std::vector<double> margins;
  bool valid = false;
  bool impossible = false;
  Envelope envelope;
};

EnvelopeCheck verify_envelope(const RadialGrid& grid, const std::vector<Snapshot>& run,
                              const Envelope& env, const GoodRangeParams& params);

// Max over cells of |u/B(.,t;M) - 1| with B at cell centers, plus the radius
// attaining it.
struct RelativeErrorReport {
  double value = 0.0;
  double argmax_r = 0.0;
};

RelativeErrorReport relative_error(const RadialGrid& grid, const Snapshot& snapshot,
                                   double M, const GoodRangeParams& params);

}  // namespace plharnack
