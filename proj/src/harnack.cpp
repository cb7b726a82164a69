#include "plharnack/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plharnack/profiles.hpp"

namespace plharnack {

namespace {

void require_calibration(const CalibrationRecord& cal, bool need_local) {
  if (!(cal.C1_smoothing > 0.0) || !std::isfinite(cal.C1_smoothing)) {
    throw std::invalid_argument(
        "envelope construction: calibration with a positive smoothing constant is "
        "required");
  }
  if (need_local && (!(cal.kappa2_local > 0.0) || !std::isfinite(cal.kappa2_local))) {
    throw std::invalid_argument(
        "envelope construction: calibration with a positive local smoothing constant is "
        "required");
  }
}

double envelope_time(const Envelope& env, double t) {
  if (env.side == EnvelopeSide::upper) return t + env.tau;
  if (!(t > env.tau)) {
    throw std::invalid_argument(
        "envelope_value: lower envelope undefined at or before its time shift");
  }
  return t - env.tau;
}

// Minimal mass whose profile dominates value u at radius r and time te, or
// +inf when u <= 0 (any mass works), or NaN when no mass can (u exceeds the
// mass-independent tail bound).
double mass_to_dominate(double u, double r, double te, const GoodRangeParams& pr) {
  if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
  const double w = std::pow(std::pow(te, 1.0 / (2.0 - pr.p)) / u, 1.0 / pr.s_exp);
  const double cap = w - pr.b2 * std::pow(r, pr.q);
  if (!(cap > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double e_m = (2.0 - pr.p) * pr.beta * pr.q;
  return std::pow(pr.b1 * std::pow(te, pr.beta * pr.q) / cap, 1.0 / e_m);
}

}  // namespace

double envelope_value(const Envelope& env, double x_radius, double t,
                      const GoodRangeParams& params) {
  return barenblatt(x_radius, envelope_time(env, t), env.M, params);
}

std::pair<Envelope, UpperBoundData> upper_envelope(double A, double t0,
                                                   const CalibrationRecord& cal,
                                                   double R0_cfg,
                                                   const GoodRangeParams& params) {
  if (!(A > 0.0)) throw std::invalid_argument("upper_envelope: tail bound A must be positive");
  if (!(t0 > 0.0)) throw std::invalid_argument("upper_envelope: anchor time must be positive");
  if (!(R0_cfg > 0.0)) throw std::invalid_argument("upper_envelope: R0_cfg must be positive");
  require_calibration(cal, false);

  const double p = params.p;
  const double c1 = cal.C1_smoothing;
  const double e1 = (2.0 - p) / (p - 1.0);  // exponent of 1/C1 throughout

  UpperBoundData data;
  data.A = A;
  data.S = std::pow(params.b2, p - 1.0) * std::pow(A, 2.0 - p);

  // matching radius: b2 R1^{p/(p-1)} = t0^{N beta (2-p)/(p-1)} (t0+S)^{1/(p-1)} / C1^{e1}
  const double lhs = std::pow(t0, params.N * params.beta * (2.0 - p) / (p - 1.0)) *
                     std::pow(t0 + data.S, 1.0 / (p - 1.0)) / std::pow(c1, e1);
  data.R1 = std::pow(lhs / params.b2, (p - 1.0) / p);

  data.K = 2.0 * params.b2 * std::pow(c1, -e1) * std::pow(R0_cfg, p / (p - 1.0));

  const double inner = data.K *
                           std::pow(1.0 / data.S + 1.0 / t0, params.beta * p / (p - 1.0)) *
                           std::pow(t0, 1.0 / (p - 1.0)) +
                       2.0 * std::pow(t0 + data.S, 1.0 / (p - 1.0));
  const double tau2 = std::max(std::pow(inner, p - 1.0) - t0, t0 / 2.0);

  // mass from the equality case of the shifted-profile domination
  const double rhs = 2.0 * params.b1 * std::pow(c1, -e1) *
                     std::pow((t0 + tau2) / t0, (params.beta * p - 1.0) / (p - 1.0));
  const double m2 = std::pow(rhs, (p - 1.0) / ((2.0 - p) * params.beta * p));

  Envelope env;
  env.side = EnvelopeSide::upper;
  env.tau = tau2;
  env.M = m2;
  env.valid_from = t0;
  return {env, data};
}

std::pair<Envelope, LowerBoundData> lower_envelope(const RadialProfile& u0, double R0,
                                                   double t0,
                                                   const CalibrationRecord& cal,
                                                   const GoodRangeParams& params) {
  if (!(R0 > 0.0)) throw std::invalid_argument("lower_envelope: R0 must be positive");
  if (!(t0 > 0.0)) throw std::invalid_argument("lower_envelope: anchor time must be positive");
  require_calibration(cal, true);

  const double p = params.p;
  const double n = params.N;
  const double beta = params.beta;
  const double om = params.omega_N;
  const double c1 = cal.C1_smoothing;
  const double k2 = cal.kappa2_local;

  LowerBoundData data;
  data.R0 = R0;
  data.M_R = profile_mass(u0, params) - exterior_mass(u0, R0, params);
  if (!(data.M_R > 0.0)) {
    throw std::invalid_argument("lower_envelope: empty core (no datum mass in the ball)");
  }

  // time after which the core provably fills, built from the calibrated
  // smoothing constants; the two terms gate the near-field and far-field
  // mass-escape estimates respectively
  const double tail_coeff = k2 * std::pow(4.0, p / (2.0 - p)) * om * (2.0 - p) * beta;
  const double kappa_tilde =
      std::max(std::pow(om / n * std::pow(2.0, n + 1.0) * c1, 1.0 / (n * beta)),
               std::pow(tail_coeff, -(2.0 - p)) * std::pow(2.0, 1.0 / beta));
  data.kappa_cal = std::pow(4.0, 1.0 / beta) * kappa_tilde;

  const double kappa_under =
      std::pow(n, n * beta * (2.0 - p) + 1.0) /
      (std::pow(kappa_tilde, n * beta) * om * std::pow(2.0 * beta * p, p * beta) *
       std::pow(k2 * std::pow(4.0, p / (2.0 - p)) * om, n * beta * (2.0 - p)));
  data.C_lower_cal = kappa_under * std::pow(4.0, -n * (beta + 1.0) / beta);

  data.t_c = data.kappa_cal * std::pow(data.M_R, 2.0 - p) * std::pow(R0, 1.0 / beta);
  data.a = 1.0 / (1.0 + std::pow(data.C_lower_cal, 2.0 - p) * std::pow(params.b2, p - 1.0) /
                            data.kappa_cal);
  data.b = std::pow(std::pow(data.kappa_cal, n * beta) * data.C_lower_cal *
                        std::pow(params.b1, (p - 1.0) / (2.0 - p)) *
                        std::pow(1.0 - data.a, n * beta),
                    1.0 / (p * beta));

  Envelope env;
  env.side = EnvelopeSide::lower;
  env.valid_from = t0;
  if (t0 >= data.t_c) {
    env.tau = data.a * data.t_c;
    env.M = data.b * data.M_R;
  } else {
    env.tau = data.a * t0;
    env.M = data.b * data.M_R * std::pow(data.t_c / t0, -1.0 / (2.0 - p));
  }
  return {env, data};
}

namespace {

struct MarginScan {
  std::vector<double> times;
  std::vector<double> margins;
  bool valid = true;
};

MarginScan scan_margins(const RadialGrid& grid, const std::vector<Snapshot>& run,
                        const Envelope& env, const GoodRangeParams& params) {
  MarginScan out;
  const bool upper = env.side == EnvelopeSide::upper;
  for (const auto& s : run) {
    double margin = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (int i = 0; i < grid.cells(); ++i) {
      const double b = envelope_value(env, std::abs(grid.centers[i]), s.t, params);
      const double u = s.values[i];
      margin = std::min(margin, upper ? b - u : u - b);
      scale = std::max({scale, std::abs(u), b});
    }
    out.times.push_back(s.t);
    out.margins.push_back(margin);
    if (margin < -1e-10 * scale) out.valid = false;
  }
  return out;
}

}  // namespace

EnvelopeCheck verify_envelope(const RadialGrid& grid, const std::vector<Snapshot>& run,
                              const Envelope& env, const GoodRangeParams& params) {
  if (run.empty()) throw std::invalid_argument("verify_envelope: empty run");
  for (const auto& s : run) {
    if (static_cast<int>(s.values.size()) != grid.cells()) {
      throw std::invalid_argument("verify_envelope: snapshot does not match the grid");
    }
    if (s.t < env.valid_from - 1e-12 * std::max(1.0, std::abs(env.valid_from))) {
      throw std::invalid_argument("verify_envelope: snapshot precedes the envelope anchor");
    }
  }

  EnvelopeCheck check;
  check.envelope = env;
  auto scan = scan_margins(grid, run, env, params);
  check.times = scan.times;
  check.margins = scan.margins;
  check.valid = scan.valid;
  if (check.valid) return check;

  // a-posteriori adjustment: rescale the mass by the minimal factor that
  // restores validity at the first snapshot, then re-verify everything
  const bool upper = env.side == EnvelopeSide::upper;
  const auto& first = run.front();
  const double te = envelope_time(env, first.t);
  double needed = upper ? 0.0 : std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.cells(); ++i) {
    const double u = first.values[i];
    const double r = std::abs(grid.centers[i]);
    if (upper) {
      const double m = mass_to_dominate(u, r, te, params);
      if (std::isnan(m)) {
        check.impossible = true;
        return check;
      }
      if (std::isfinite(m)) needed = std::max(needed, m);
    } else {
      if (!(u > 0.0)) {
        check.impossible = true;
        return check;
      }
      const double m = mass_to_dominate(u, r, te, params);
      // masses strictly below the domination threshold stay under u
      if (std::isfinite(m)) needed = std::min(needed, m);
    }
  }
  if (!(needed > 0.0) || !std::isfinite(needed)) {
    check.impossible = true;
    return check;
  }

  double factor = needed / env.M;
  factor *= upper ? (1.0 + 1e-9) : (1.0 - 1e-9);
  Envelope adjusted = env;
  adjusted.M = env.M * factor;
  adjusted.provenance = "inflated";
  adjusted.inflation = env.inflation * factor;

  scan = scan_margins(grid, run, adjusted, params);
  check.envelope = adjusted;
  check.times = scan.times;
  check.margins = scan.margins;
  check.valid = scan.valid;
  return check;
}

RelativeErrorReport relative_error(const RadialGrid& grid, const Snapshot& snapshot,
                                   double M, const GoodRangeParams& params) {
  if (!(snapshot.t > 0.0)) {
    throw std::invalid_argument("relative_error: snapshot time must be positive");
  }
  if (!(M > 0.0)) throw std::invalid_argument("relative_error: mass must be positive");
  if (static_cast<int>(snapshot.values.size()) != grid.cells()) {
    throw std::invalid_argument("relative_error: snapshot does not match the grid");
  }
  RelativeErrorReport rep;
  rep.argmax_r = std::abs(grid.centers.empty() ? 0.0 : grid.centers[0]);
  for (int i = 0; i < grid.cells(); ++i) {
    const double r = std::abs(grid.centers[i]);
    const double b = barenblatt(r, snapshot.t, M, params);
    const double e = std::abs(snapshot.values[i] / b - 1.0);
    if (e > rep.value) {
      rep.value = e;
      rep.argmax_r = r;
    }
  }
  return rep;
}

}  // namespace plharnack
