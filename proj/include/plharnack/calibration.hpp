#pragma once

#include <string>
#include <vector>

namespace plharnack {

// Fitted constants consumed by the envelope constructions. Values come from
// measurement runs (see diagnostics::smoothing_fit), never from tuning against
// the checks they feed.
struct CalibrationRecord {
  double C1_smoothing = 0.0;  // global sup-norm smoothing constant
  double kappa1_local = 0.0;  // local smoothing fit, mass term
  double kappa2_local = 0.0;  // local smoothing fit, time term
  double kappa1_tail = 0.0;   // exterior-mass growth constant
  std::vector<std::string> provenance;  // runs the fits were measured on
};

}  // namespace plharnack
