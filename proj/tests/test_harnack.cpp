#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "plharnack/harnack.hpp"
#include "plharnack/params.hpp"
#include "plharnack/profiles.hpp"
#include "plharnack/solver.hpp"
#include "plharnack/tailspace.hpp"

using namespace plharnack;

namespace {

GoodRangeParams demo_params() { return with_b1(1, 1.5); }

CalibrationRecord stub_cal(double c1, double k2 = 0.5) {
  CalibrationRecord cal;
  cal.C1_smoothing = c1;
  cal.kappa2_local = k2;
  cal.provenance = {"stub"};
  return cal;
}

Snapshot profile_snapshot(const RadialGrid& g, double t,
                          const std::function<double(double)>& f) {
  Snapshot s;
  s.t = t;
  s.values.resize(g.cells());
  for (int i = 0; i < g.cells(); ++i) s.values[i] = f(std::abs(g.centers[i]));
  return s;
}

}  // namespace

TEST_CASE("upper_envelope: closed-form construction") {
  const auto pr = demo_params();

  SUBCASE("unit-stub worked example") {
    const auto [env, data] = upper_envelope(3.0, 1.0, stub_cal(1.0), 1.0, pr);
    CHECK(data.S == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(data.R1 == doctest::Approx(std::cbrt(12.0)).epsilon(1e-13));
    const double tau2 = std::sqrt(40.0 / 3.0) - 1.0;
    CHECK(env.tau == doctest::Approx(tau2).epsilon(1e-13));
    CHECK(env.M == doctest::Approx(std::pow(2.0 * pr.b1 * (1.0 + tau2), 2.0 / 3.0))
                       .epsilon(1e-12));
    CHECK(env.side == EnvelopeSide::upper);
    CHECK(env.valid_from == 1.0);
    CHECK(env.provenance == "constructed");
  }

  SUBCASE("shift never falls below half the anchor time") {
    for (double a : {0.01, 1.0, 100.0}) {
      for (double t0 : {0.1, 1.0, 10.0}) {
        const auto [env, data] = upper_envelope(a, t0, stub_cal(0.3), 1.0, pr);
        CHECK(env.tau >= t0 / 2.0);
        CHECK(env.M > 0.0);
      }
    }
  }

  SUBCASE("shift diverges for both extreme tail bounds") {
    // small A starves the domination time S, large A fattens the envelope;
    // the shift blows up at both ends and is smallest in between
    const double mid = upper_envelope(1.0, 1.0, stub_cal(0.3), 1.0, pr).first.tau;
    const double tiny = upper_envelope(1e-6, 1.0, stub_cal(0.3), 1.0, pr).first.tau;
    const double huge = upper_envelope(1e6, 1.0, stub_cal(0.3), 1.0, pr).first.tau;
    CHECK(tiny > 10.0 * mid);
    CHECK(huge > 10.0 * mid);

    const auto [env, data] = upper_envelope(1e8, 1.0, stub_cal(0.3), 1.0, pr);
    CHECK(env.tau / data.S ==
          doctest::Approx(std::pow(2.0, pr.p - 1.0)).epsilon(1e-3));
  }

  SUBCASE("missing calibration is refused") {
    CHECK_THROWS_WITH_AS(upper_envelope(1.0, 1.0, CalibrationRecord{}, 1.0, pr),
                         doctest::Contains("calibration"), std::invalid_argument);
    CHECK_THROWS_AS(upper_envelope(0.0, 1.0, stub_cal(1.0), 1.0, pr),
                    std::invalid_argument);
  }
}

TEST_CASE("lower_envelope: core-mass construction") {
  const auto pr = demo_params();
  const auto datum = indicator_datum(0.5, pr);

  SUBCASE("parameter shapes hold for any positive calibration") {
    for (double c1 : {0.2, 1.0}) {
      for (double k2 : {0.3, 2.0}) {
        const auto [env, data] = lower_envelope(datum, 1.0, 1.0, stub_cal(c1, k2), pr);
        CHECK(data.M_R == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(data.a > 0.0);
        CHECK(data.a < 1.0);
        CHECK(data.t_c > 0.0);
        CHECK(data.b > 0.0);
        CHECK(env.side == EnvelopeSide::lower);
        CHECK(env.tau < 1.0);  // shift below the anchor keeps the envelope evaluable
        CHECK(env.M > 0.0);
      }
    }
  }

  SUBCASE("critical time scales as the half power of the core mass") {
    RadialProfile doubled = datum;
    doubled.evaluator = [e = datum.evaluator](double r) { return 2.0 * e(r); };
    if (datum.exterior_mass) {
      doubled.exterior_mass = [e = datum.exterior_mass](double r) { return 2.0 * e(r); };
    }
    const auto [e1, d1] = lower_envelope(datum, 1.0, 1.0, stub_cal(0.2), pr);
    const auto [e2, d2] = lower_envelope(doubled, 1.0, 1.0, stub_cal(0.2), pr);
    CHECK(d2.M_R == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d2.t_c / d1.t_c == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  }

  SUBCASE("the two anchor branches agree at the critical time") {
    const auto [e0, d0] = lower_envelope(datum, 1.0, 1.0, stub_cal(0.2), pr);
    const double tc = d0.t_c;
    const auto [lo, dl] = lower_envelope(datum, 1.0, tc * (1.0 - 1e-9), stub_cal(0.2), pr);
    const auto [hi, dh] = lower_envelope(datum, 1.0, tc * (1.0 + 1e-9), stub_cal(0.2), pr);
    CHECK(lo.M == doctest::Approx(hi.M).epsilon(1e-7));
    CHECK(lo.tau == doctest::Approx(hi.tau).epsilon(1e-7));
  }

  SUBCASE("empty core is refused") {
    RadialProfile zero;
    zero.evaluator = [](double) { return 0.0; };
    zero.exterior_mass = [](double) { return 0.0; };
    CHECK_THROWS_WITH_AS(lower_envelope(zero, 1.0, 1.0, stub_cal(0.2), pr),
                         doctest::Contains("core"), std::invalid_argument);
  }
}

TEST_CASE("envelope_value: side semantics") {
  const auto pr = demo_params();
  Envelope up{EnvelopeSide::upper, 0.5, 2.0, 1.0, "constructed", 1.0};
  CHECK(envelope_value(up, 1.5, 1.0, pr) == barenblatt(1.5, 1.5, 2.0, pr));

  Envelope low{EnvelopeSide::lower, 0.5, 2.0, 1.0, "constructed", 1.0};
  CHECK(envelope_value(low, 1.5, 1.0, pr) == barenblatt(1.5, 0.5, 2.0, pr));
  CHECK_THROWS_AS(envelope_value(low, 1.5, 0.5, pr), std::invalid_argument);
}

TEST_CASE("verify_envelope: margins, adjustment, impossibility") {
  const auto pr = demo_params();
  const auto g = build_grid(GridMode::radial, 1.0, 50.0, 256, 1.01);
  auto b_at = [&](double r) { return barenblatt(r, 1.0, 1.0, pr); };

  SUBCASE("equality case has zero margins on both sides") {
    const std::vector<Snapshot> run = {profile_snapshot(g, 1.0, b_at)};
    for (auto side : {EnvelopeSide::upper, EnvelopeSide::lower}) {
      Envelope env{side, 0.0, 1.0, 1.0, "constructed", 1.0};
      const auto check = verify_envelope(g, run, env, pr);
      CHECK(check.valid);
      CHECK(check.envelope.provenance == "constructed");
      CHECK(check.envelope.inflation == 1.0);
      REQUIRE(check.margins.size() == 1);
      CHECK(check.margins[0] == 0.0);
    }
  }

  SUBCASE("upper side inflates by the core excess") {
    const std::vector<Snapshot> run = {profile_snapshot(g, 1.0, [&](double r) {
      return b_at(r) * (1.0 + 0.04 * std::exp(-r * r));
    })};
    Envelope env{EnvelopeSide::upper, 0.0, 1.0, 1.0, "constructed", 1.0};
    const auto check = verify_envelope(g, run, env, pr);
    CHECK(check.valid);
    CHECK_FALSE(check.impossible);
    CHECK(check.envelope.provenance == "inflated");
    // a pure core bump of 4 percent needs the mass factor 1.04^{1/(p beta)}
    CHECK(check.envelope.inflation ==
          doctest::Approx(std::pow(1.04, 2.0 / 3.0)).epsilon(1e-5));
  }

  SUBCASE("lower side deflates by the core deficit") {
    const std::vector<Snapshot> run = {profile_snapshot(g, 1.0, [&](double r) {
      return b_at(r) * (1.0 - 0.04 * std::exp(-r * r));
    })};
    Envelope env{EnvelopeSide::lower, 0.0, 1.0, 1.0, "constructed", 1.0};
    const auto check = verify_envelope(g, run, env, pr);
    CHECK(check.valid);
    CHECK(check.envelope.provenance == "inflated");
    CHECK(check.envelope.inflation ==
          doctest::Approx(std::pow(0.96, 2.0 / 3.0)).epsilon(1e-5));
  }

  SUBCASE("uniform excess beyond the tail bound cannot be dominated") {
    const std::vector<Snapshot> run = {
        profile_snapshot(g, 1.0, [&](double r) { return 1.05 * b_at(r); })};
    Envelope env{EnvelopeSide::upper, 0.0, 1.0, 1.0, "constructed", 1.0};
    const auto check = verify_envelope(g, run, env, pr);
    CHECK_FALSE(check.valid);
    CHECK(check.impossible);
    CHECK(check.envelope.inflation == 1.0);
  }

  SUBCASE("preconditions") {
    const std::vector<Snapshot> run = {profile_snapshot(g, 1.0, b_at)};
    Envelope env{EnvelopeSide::upper, 0.0, 1.0, 2.0, "constructed", 1.0};
    CHECK_THROWS_AS(verify_envelope(g, run, env, pr), std::invalid_argument);
    CHECK_THROWS_AS(verify_envelope(g, {}, env, pr), std::invalid_argument);
    std::vector<Snapshot> bad = run;
    bad[0].values.pop_back();
    env.valid_from = 1.0;
    CHECK_THROWS_AS(verify_envelope(g, bad, env, pr), std::invalid_argument);
  }
}

TEST_CASE("relative_error: exact ratios and argmax location") {
  const auto pr = demo_params();
  const auto g = build_grid(GridMode::radial, 1.0, 50.0, 512, 1.01);
  auto b_at = [&](double r) { return barenblatt(r, 1.0, 1.0, pr); };

  SUBCASE("matched profile and constant multiple") {
    const auto exact = relative_error(g, profile_snapshot(g, 1.0, b_at), 1.0, pr);
    CHECK(exact.value == 0.0);

    const auto twice = relative_error(
        g, profile_snapshot(g, 1.0, [&](double r) { return 2.0 * b_at(r); }), 1.0, pr);
    CHECK(twice.value == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("heavier profile peaks at the origin") {
    const auto rep = relative_error(
        g, profile_snapshot(g, 1.0, [&](double r) { return barenblatt(r, 1.0, 2.0, pr); }),
        1.0, pr);
    CHECK(rep.value == doctest::Approx(std::pow(2.0, 1.5) - 1.0).epsilon(1e-6));
    CHECK(rep.argmax_r == g.centers[0]);
  }

  SUBCASE("lighter profile has a monotone ratio rising to the tail") {
    const auto snap =
        profile_snapshot(g, 1.0, [&](double r) { return barenblatt(r, 1.0, 0.5, pr); });
    const auto rep = relative_error(g, snap, 1.0, pr);
    CHECK(rep.value == doctest::Approx(1.0 - std::pow(0.5, 1.5)).epsilon(1e-6));
    CHECK(rep.argmax_r == g.centers[0]);
    double prev = 0.0;
    for (int i = 0; i < g.cells(); ++i) {
      const double ratio = snap.values[i] / barenblatt(g.centers[i], 1.0, 1.0, pr);
      CHECK(ratio >= prev);
      prev = ratio;
    }
    CHECK(prev < 1.0);
  }

  SUBCASE("preconditions") {
    Snapshot s = profile_snapshot(g, 1.0, b_at);
    CHECK_THROWS_AS(relative_error(g, s, 0.0, pr), std::invalid_argument);
    s.t = 0.0;
    CHECK_THROWS_AS(relative_error(g, s, 1.0, pr), std::invalid_argument);
  }
}

TEST_CASE("constructed envelopes keep the lower side below the upper side") {
  const auto pr = demo_params();
  const auto g = build_grid(GridMode::radial, 1.0, 50.0, 128, 1.02);
  const auto cal = stub_cal(0.2, 0.5);
  const auto [up, ud] = upper_envelope(3.0, 1.0, cal, 1.0, pr);
  const auto [low, ld] = lower_envelope(indicator_datum(0.5, pr), 1.0, 1.0, cal, pr);
  for (double t : {1.0, 4.0, 16.0}) {
    for (int i = 0; i < g.cells(); ++i) {
      CHECK(envelope_value(low, g.centers[i], t, pr) <=
            envelope_value(up, g.centers[i], t, pr));
    }
  }
}
