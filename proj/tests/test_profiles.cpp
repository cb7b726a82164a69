#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "plharnack/numerics.hpp"
#include "plharnack/params.hpp"
#include "plharnack/profiles.hpp"

using namespace plharnack;

namespace {

// Reference values below were frozen from 40-digit arithmetic.
constexpr double kInvB1 = 0.15351379208344375;
constexpr double kB111 = 0.14604070462811062;
constexpr double kSupSlope = 0.047871259526717045;  // sup_r |dB/dr| at t=1, M=1
constexpr double kD1 = 5.738261995583271;
constexpr double kG1 = 7.229705771281858;
constexpr double kSub10 = 0.5358867312681466;
constexpr double kSuper11 = 0.8899440075162814;

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Radial residual f_t - r^{1-N} d_r(r^{N-1} |f_r|^{p-2} f_r), normalized by
// the local magnitude of the two terms. The caller supplies the exact first
// derivatives; only the outer flux divergence is a central difference, which
// keeps the probe O(h^2) without the cancellation a doubly nested stencil
// suffers on steeply decaying profiles.
struct BarrierDerivs {
  std::function<double(double, double)> dt;  // partial_t f
  std::function<double(double, double)> dr;  // partial_r f
};

double normalized_residual(const BarrierDerivs& f, double r, double t,
                           const GoodRangeParams& pr) {
  const double hr = 1e-5 * r;
  auto flux = [&](double rr) {
    const double fr = f.dr(rr, t);
    const double mag = std::pow(std::abs(fr), pr.p - 2.0);
    return std::pow(rr, pr.N - 1.0) * mag * fr;
  };
  const double ft = f.dt(r, t);
  const double lap = std::pow(r, 1.0 - pr.N) * (flux(r + hr) - flux(r - hr)) / (2.0 * hr);
  return (ft - lap) / (std::abs(ft) + std::abs(lap) + 1e-300);
}

// Exact derivatives of (D(t) + r^q)^{-s_eps}.
BarrierDerivs subsolution_derivs(const SubSuperParams& sp, const GoodRangeParams& pr) {
  const double e = 1.0 / (sp.epsilon * (2.0 - pr.p));
  auto dt = [sp, pr, e](double r, double t) {
    const double D = std::pow(sp.C1_sub * t + sp.C2, e);
    const double Dp = e * sp.C1_sub * std::pow(sp.C1_sub * t + sp.C2, e - 1.0);
    return -sp.s_eps * Dp * std::pow(D + std::pow(r, pr.q), -sp.s_eps - 1.0);
  };
  auto dr = [sp, pr, e](double r, double t) {
    const double D = std::pow(sp.C1_sub * t + sp.C2, e);
    return -sp.s_eps * pr.q * std::pow(r, pr.q - 1.0) *
           std::pow(D + std::pow(r, pr.q), -sp.s_eps - 1.0);
  };
  return {dt, dr};
}

// Exact derivatives of G(t)^{s_eps} (G(t) + r^q)^{-s_eps}.
BarrierDerivs supersolution_derivs(const SubSuperParams& sp, const GoodRangeParams& pr) {
  auto G_of = [sp, pr](double t) {
    return std::pow(sp.C3_super * t + std::pow(sp.C4, pr.p - 1.0), 1.0 / (pr.p - 1.0));
  };
  auto dt = [sp, pr, G_of](double r, double t) {
    const double G = G_of(t);
    const double Gp = sp.C3_super / (pr.p - 1.0) * std::pow(G, 2.0 - pr.p);
    return sp.s_eps * Gp * std::pow(G, sp.s_eps - 1.0) * std::pow(r, pr.q) *
           std::pow(G + std::pow(r, pr.q), -sp.s_eps - 1.0);
  };
  auto dr = [sp, pr, G_of](double r, double t) {
    const double G = G_of(t);
    return -sp.s_eps * pr.q * std::pow(r, pr.q - 1.0) * std::pow(G, sp.s_eps) *
           std::pow(G + std::pow(r, pr.q), -sp.s_eps - 1.0);
  };
  return {dt, dr};
}

}  // namespace

TEST_CASE("point values at the reference parameters") {
  const auto pr = with_b1(1, 1.5);
  CHECK(rel_diff(barenblatt(0.0, 1.0, 1.0, pr), 1.0 / pr.b1) < 1e-13);
  CHECK(rel_diff(barenblatt(0.0, 1.0, 1.0, pr), kInvB1) < 1e-8);
  CHECK(rel_diff(barenblatt(1.0, 1.0, 1.0, pr), 1.0 / (pr.b1 + 1.0 / 3.0)) < 1e-13);
  CHECK(rel_diff(barenblatt(1.0, 1.0, 1.0, pr), kB111) < 1e-8);

  const auto pr3 = with_b1(3, 1.6);
  CHECK(rel_diff(barenblatt(0.0, 1.0, 1.0, pr3), 9.494087249388281e-05) < 1e-8);
  // b1 carries the quadrature/bisection accuracy (~1e-12 relative), which
  // bounds how closely these can match constants frozen from exact b1.
  CHECK(rel_diff(barenblatt(2.0, 3.0, 5.0, pr3), 1.5647546146505652e-05) < 1e-10);
  CHECK(rel_diff(barenblatt(2.0, 3.0, 5.0, pr), 0.4891876285035178) < 1e-10);
}

TEST_CASE("input validation") {
  const auto pr = with_b1(1, 1.5);
  CHECK_THROWS_AS(barenblatt(1.0, 0.0, 1.0, pr), std::invalid_argument);
  CHECK_THROWS_AS(barenblatt(1.0, 1.0, 0.0, pr), std::invalid_argument);
  CHECK_THROWS_AS(barenblatt(-1.0, 1.0, 1.0, pr), std::invalid_argument);
  const auto raw = derive_params(1, 1.5);  // b1 not yet computed
  CHECK_THROWS_AS(barenblatt(1.0, 1.0, 1.0, raw), std::logic_error);
  CHECK_THROWS_AS(singular_barenblatt(0.0, 1.0, 1.0, pr), std::domain_error);
  CHECK_THROWS_AS(singular_barenblatt(1.0, -1.0, 1.0, pr), std::invalid_argument);
  CHECK_THROWS_AS(singular_barenblatt(1.0, 1.0, -1.0, pr), std::invalid_argument);
}

TEST_CASE("mass relation and self-similar form") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> logu(-2.0, 2.0);
  for (const auto& pr : {with_b1(1, 1.5), with_b1(3, 1.6)}) {
    for (int i = 0; i < 400; ++i) {
      const double r = (i % 7 == 0) ? 0.0 : std::pow(10.0, logu(rng));
      const double t = std::pow(10.0, logu(rng));
      const double M = std::pow(10.0, logu(rng));
      const double lhs = barenblatt(r, t, M, pr);
      const double scaled = M * barenblatt(r, t * std::pow(M, pr.p - 2.0), 1.0, pr);
      CHECK(rel_diff(scaled, lhs) < 1e-12);
      const double y = r * std::pow(t * std::pow(M, pr.p - 2.0), -pr.beta);
      const double ss = std::pow(t, -pr.N * pr.beta) * std::pow(M, pr.p * pr.beta) *
                        barenblatt_profile_f1(y, pr);
      CHECK(rel_diff(ss, lhs) < 1e-12);
    }
  }
}

TEST_CASE("shape: positive, decreasing in r, correct tail power") {
  const auto pr = with_b1(1, 1.5);
  double prev = barenblatt(0.0, 2.0, 3.0, pr);
  for (double r = 0.25; r < 1e6; r *= 2.0) {
    const double v = barenblatt(r, 2.0, 3.0, pr);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  // Far field: B ~ b2^{-s} t^{1/(2-p)} r^{-p/(2-p)}, mass-independent.
  const double far = barenblatt(1e8, 2.0, 3.0, pr);
  const double pure = singular_barenblatt(1e8, 2.0, 0.0, pr);
  CHECK(rel_diff(far, pure) < 1e-4);
  CHECK(rel_diff(barenblatt(1e8, 2.0, 300.0, pr), far) < 1e-4);
}

TEST_CASE("radial derivative against finite differences") {
  std::mt19937 rng(31415);
  std::uniform_real_distribution<double> logu(-1.0, 1.5);
  for (const auto& pr : {with_b1(1, 1.5), with_b1(3, 1.6)}) {
    for (int i = 0; i < 200; ++i) {
      const double r = std::pow(10.0, logu(rng));
      const double t = std::pow(10.0, logu(rng));
      const double M = std::pow(10.0, logu(rng));
      const double h = 1e-6 * r;
      const double fp = barenblatt(r + h, t, M, pr);
      const double fm = barenblatt(r - h, t, M, pr);
      const double fd = (fp - fm) / (2.0 * h);
      const double an = barenblatt_radial_derivative(r, t, M, pr);
      CHECK(an < 0.0);
      // Second term is the roundoff floor of the difference quotient itself
      // (each evaluation is good to ~1e-14 relative after the log/exp round
      // trip), which dominates where the profile is nearly flat.
      CHECK(std::abs(an - fd) < 1e-5 * std::abs(an) + 1e-13 * (fp + fm) / h);
    }
  }
  const auto pr = with_b1(1, 1.5);
  CHECK(barenblatt_radial_derivative(0.0, 1.0, 1.0, pr) == 0.0);
}

TEST_CASE("slope envelope: location, value, and time scaling") {
  const auto pr = with_b1(1, 1.5);
  // For N=1, p=1.5 the magnitude peaks where r^3 = 1.5 b1 (d/dr of
  // r^2 (b1 + r^3/3)^{-2} vanishes there).
  const double rstar = std::cbrt(1.5 * pr.b1);
  const double peak = -barenblatt_radial_derivative(rstar, 1.0, 1.0, pr);
  CHECK(rel_diff(peak, kSupSlope) < 1e-12);
  for (double f : {0.9, 0.95, 1.05, 1.1}) {
    CHECK(-barenblatt_radial_derivative(rstar * f, 1.0, 1.0, pr) < peak);
  }
  // sup_r |dB/dr| = M^{2 beta} t^{-(N+1) beta} * (value at t = M = 1).
  for (double t : {0.3, 2.0, 50.0}) {
    for (double M : {0.2, 1.0, 8.0}) {
      const double y = rstar * std::pow(t * std::pow(M, pr.p - 2.0), pr.beta);
      const double v = -barenblatt_radial_derivative(y, t, M, pr);
      const double want = std::pow(M, 2.0 * pr.beta) *
                          std::pow(t, -(pr.N + 1.0) * pr.beta) * kSupSlope;
      CHECK(rel_diff(v, want) < 1e-11);
    }
  }
}

TEST_CASE("time monotonicity of the scaled profile") {
  // t^{-1/(2-p)} B(r,t;M) must be non-increasing in t at every point.
  for (const auto& pr : {with_b1(1, 1.5), with_b1(3, 1.6)}) {
    const double e = 1.0 / (2.0 - pr.p);
    for (double r : {0.0, 0.3, 1.0, 10.0, 1e4}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double t : {0.1, 0.5, 1.0, 3.0, 20.0, 500.0}) {
        const double v = std::pow(t, -e) * barenblatt(r, t, 2.0, pr);
        CHECK(v <= prev * (1.0 + 1e-14));
        prev = v;
      }
    }
  }
}

TEST_CASE("singular profile values and domination") {
  const auto pr = with_b1(1, 1.5);
  CHECK(rel_diff(singular_barenblatt(2.0, 1.0, 0.0, pr), 0.375) < 1e-14);
  CHECK(rel_diff(singular_barenblatt(1.0, 0.0, 1.0, pr), 3.0) < 1e-14);
  CHECK(singular_barenblatt(1.0, 0.0, 0.0, pr) == 0.0);

  // Pointwise tail bound A r^{-p/(2-p)} is dominated at t=0 once
  // S >= b2^{p-1} A^{2-p}; at equality the profiles coincide.
  const double A = 3.0;
  const double S_eq = std::pow(pr.b2, pr.p - 1.0) * std::pow(A, 2.0 - pr.p);
  CHECK(rel_diff(S_eq, 1.0) < 1e-14);
  for (double r : {0.1, 1.0, 7.0, 300.0}) {
    const double bound = A * std::pow(r, -pr.tail_exp);
    CHECK(rel_diff(singular_barenblatt(r, 0.0, S_eq, pr), bound) < 1e-13);
    CHECK(singular_barenblatt(r, 0.0, 1.3 * S_eq, pr) > bound);
  }
  // Increasing in both t and S.
  CHECK(singular_barenblatt(2.0, 1.0, 0.5, pr) > singular_barenblatt(2.0, 1.0, 0.0, pr));
  CHECK(singular_barenblatt(2.0, 1.5, 0.5, pr) > singular_barenblatt(2.0, 1.0, 0.5, pr));
  // Exceeds every finite-mass profile of the same age beyond the origin.
  for (double M : {1.0, 10.0, 1e4}) {
    for (double r : {0.01, 1.0, 100.0}) {
      CHECK(singular_barenblatt(r, 2.0, 0.0, pr) > barenblatt(r, 2.0, M, pr));
    }
  }
}

TEST_CASE("explicit barrier time laws and point values") {
  const auto pr = with_b1(1, 1.5);
  const auto sp = derive_sub_super(0.1, 1.0, 1.0, pr);
  CHECK(rel_diff(subsolution_D(0.0, sp, pr), 1.0) < 1e-15);
  CHECK(rel_diff(subsolution_D(1.0, sp, pr), std::pow(1.0 + sp.C1_sub, 20.0)) < 1e-13);
  CHECK(rel_diff(subsolution_D(1.0, sp, pr), kD1) < 1e-12);
  CHECK(rel_diff(supersolution_G(1.0, sp, pr), (sp.C3_super + 1.0) * (sp.C3_super + 1.0)) <
        1e-13);
  CHECK(rel_diff(supersolution_G(1.0, sp, pr), kG1) < 1e-12);

  CHECK(rel_diff(explicit_subsolution(1.0, 0.0, sp, pr), std::pow(2.0, -0.9)) < 1e-13);
  CHECK(rel_diff(explicit_subsolution(1.0, 0.0, sp, pr), kSub10) < 1e-12);
  CHECK(rel_diff(explicit_supersolution(1.0, 1.0, sp, pr), kSuper11) < 1e-12);
  for (double t : {0.0, 0.7, 13.0}) {
    CHECK(explicit_supersolution(0.0, t, sp, pr) == 1.0);
  }

  // D and G grow, so the barriers move the right way in time.
  CHECK(subsolution_D(2.0, sp, pr) > subsolution_D(1.0, sp, pr));
  CHECK(supersolution_G(2.0, sp, pr) > supersolution_G(1.0, sp, pr));
  CHECK(explicit_subsolution(3.0, 2.0, sp, pr) < explicit_subsolution(3.0, 1.0, sp, pr));
  CHECK(explicit_supersolution(3.0, 2.0, sp, pr) > explicit_supersolution(3.0, 1.0, sp, pr));
  // Both share the r^{-q s_eps} tail shape; the supersolution dominates.
  for (double t : {0.0, 1.0, 4.0}) {
    for (double r : {0.0, 0.5, 2.0, 40.0}) {
      CHECK(explicit_supersolution(r, t, sp, pr) >=
            explicit_subsolution(r, t, sp, pr));
    }
  }
}

TEST_CASE("hand derivatives of the barriers match difference quotients") {
  const auto pr = with_b1(1, 1.5);
  const auto sp = derive_sub_super(0.1, 1.0, 1.0, pr);
  const auto sd = subsolution_derivs(sp, pr);
  const auto pd = supersolution_derivs(sp, pr);
  for (double t : {0.3, 1.0, 4.0}) {
    for (double r : {0.3, 1.0, 5.0}) {
      const double hr = 1e-6 * r, ht = 1e-6 * (1.0 + t);
      const double sub_r = (explicit_subsolution(r + hr, t, sp, pr) -
                            explicit_subsolution(r - hr, t, sp, pr)) / (2.0 * hr);
      const double sub_t = (explicit_subsolution(r, t + ht, sp, pr) -
                            explicit_subsolution(r, t - ht, sp, pr)) / (2.0 * ht);
      const double sup_r = (explicit_supersolution(r + hr, t, sp, pr) -
                            explicit_supersolution(r - hr, t, sp, pr)) / (2.0 * hr);
      const double sup_t = (explicit_supersolution(r, t + ht, sp, pr) -
                            explicit_supersolution(r, t - ht, sp, pr)) / (2.0 * ht);
      // 1e-5 sits above the quotient's roundoff floor where the barrier is
      // nearly flat; a wrong derivation would miss by orders of magnitude.
      CHECK(rel_diff(sd.dr(r, t), sub_r) < 1e-5);
      CHECK(rel_diff(sd.dt(r, t), sub_t) < 1e-5);
      CHECK(rel_diff(pd.dr(r, t), sup_r) < 1e-5);
      CHECK(rel_diff(pd.dt(r, t), sup_t) < 1e-5);
    }
  }
}

TEST_CASE("barrier residuals have the right sign on a fine grid") {
  const auto pr = with_b1(1, 1.5);
  const auto sp = derive_sub_super(0.1, 1.0, 1.0, pr);
  const auto sub = subsolution_derivs(sp, pr);
  const auto super = supersolution_derivs(sp, pr);

  std::vector<double> radii;
  for (int i = -12; i <= 16; ++i) radii.push_back(std::pow(10.0, i / 8.0));
  double worst_sub = -1e300, worst_super = 1e300;
  for (double t : {0.0, 0.5, 1.0, 4.0}) {
    for (double r : radii) {
      worst_sub = std::max(worst_sub, normalized_residual(sub, r, t, pr));
      worst_super = std::min(worst_super, normalized_residual(super, r, t, pr));
    }
  }
  // u_t - Lap_p u <= 0 for the subsolution, >= 0 for the supersolution;
  // 1e-7 absorbs the truncation of the probe's outer difference.
  CHECK(worst_sub <= 1e-7);
  CHECK(worst_super >= -1e-7);
  // The margin is genuinely positive away from the origin.
  CHECK(normalized_residual(super, 2.5, 0.0, pr) > 0.05);

  // A time constant smaller by the factor p produces a residual that is
  // solidly negative, so that profile is not a supersolution at all.
  auto weak = sp;
  weak.C3_super = sp.C3_super / pr.p;
  CHECK(normalized_residual(supersolution_derivs(weak, pr), 4.0, 1.0, pr) < -0.05);
}

TEST_CASE("residual signs persist for a second parameter set") {
  const auto pr = with_b1(3, 1.6);
  const auto sp = derive_sub_super(0.25, 1.0, 1.0, pr);
  const auto sub = subsolution_derivs(sp, pr);
  const auto super = supersolution_derivs(sp, pr);
  for (double t : {0.0, 1.0, 4.0}) {
    for (double r : {0.05, 0.4, 1.0, 3.0, 20.0, 500.0}) {
      CHECK(normalized_residual(sub, r, t, pr) <= 1e-7);
      CHECK(normalized_residual(super, r, t, pr) >= -1e-7);
    }
  }
}
