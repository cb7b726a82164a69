#include "plharnack/tailspace.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "plharnack/numerics.hpp"
#include "plharnack/profiles.hpp"

namespace plharnack {

namespace {

// True when the series is still rising by more than 1% per decade at its top
// end; the comparison point is the sample nearest to one decade below.
bool rising_at_edge(const std::vector<double>& r, const std::vector<double>& v) {
  const double r_end = r.back();
  std::size_t i = r.size();
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (r[j] <= r_end / 10.0) i = j;
  }
  if (i == r.size()) {
    throw std::invalid_argument("scan must span at least one decade");
  }
  if (v.back() <= 0.0) return false;
  if (v[i] <= 0.0) return true;  // appeared from nothing: treat as rising
  const double decades = std::log10(r_end / r[i]);
  return std::pow(v.back() / v[i], 1.0 / decades) - 1.0 > 0.01;
}

// Exact integral of s^{-alpha} (s+k)^{N-1} over s in [s0, w] (binomial in s).
double spike_integral(double k, double w, double s0, double alpha, int N) {
  double total = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= N - 1; ++j) {
    if (j > 0) binom = binom * (N - j) / j;
    const double e = j + 1.0 - alpha;
    total += binom * std::pow(k, N - 1.0 - j) * (std::pow(w, e) - std::pow(s0, e)) / e;
  }
  return total;
}

// Fraction of the sphere of radius r (centered at the origin) lying inside
// the ball of radius R centered at distance d from the origin.
double sphere_cap_fraction(double r, double d, double R) {
  if (r <= 0.0 || d <= 0.0) return 0.0;
  const double c = (d * d + r * r - R * R) / (2.0 * d * r);
  if (c <= -1.0) return 1.0;
  if (c >= 1.0) return 0.0;
  return 0.5 * (1.0 - c);
}

std::vector<double> merge_sorted(std::vector<double> base, const std::vector<double>& extra,
                                 double lo, double hi) {
  for (double x : extra) {
    if (x >= lo && x <= hi) base.push_back(x);
  }
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());
  return base;
}

void validate_scan(const std::vector<double>& scan) {
  if (scan.size() < 2 || scan.front() <= 0.0) {
    throw std::invalid_argument("scan grid needs at least two positive radii");
  }
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if (!(scan[i] > scan[i - 1])) {
      throw std::invalid_argument("scan grid must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<double> log_spaced(double r_min, double r_max, int per_decade) {
  if (!(r_min > 0.0) || !(r_max > r_min) || per_decade < 1) {
    throw std::invalid_argument("log_spaced needs 0 < r_min < r_max and per_decade >= 1");
  }
  const double decades = std::log10(r_max / r_min);
  const int n = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
  std::vector<double> out;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    out.push_back(r_min * std::pow(r_max / r_min, static_cast<double>(i) / n));
  }
  out.back() = r_max;
  return out;
}

double exterior_mass(const RadialProfile& f, double R, const GoodRangeParams& params) {
  if (R < 0.0) throw std::invalid_argument("R must be nonnegative");
  if (f.exterior_mass) return f.exterior_mass(R);
  auto g = [&](double r) { return f.evaluator(r) * std::pow(r, params.N - 1.0); };
  return params.omega_N * integrate_to_infinity(g, R, 1e-9).value;
}

double profile_mass(const RadialProfile& f, const GoodRangeParams& params) {
  return exterior_mass(f, 0.0, params);
}

XNormScan x_norm(const RadialProfile& f, const GoodRangeParams& params,
                 const std::vector<double>& scan) {
  validate_scan(scan);
  std::vector<double> vals(scan.size());
  XNormScan out;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    vals[i] = std::pow(scan[i], params.x_weight_exp) * exterior_mass(f, scan[i], params);
    if (vals[i] > out.value) {
      out.value = vals[i];
      out.sup_radius = scan[i];
    }
  }
  out.diverged = rising_at_edge(scan, vals);
  return out;
}

TailReport tail_classification(const RadialProfile& f, const GoodRangeParams& params) {
  return tail_classification(f, params, log_spaced(1e-2, 1e4, 16));
}

TailReport tail_classification(const RadialProfile& f, const GoodRangeParams& params,
                               const std::vector<double>& scan) {
  validate_scan(scan);
  TailReport rep;
  rep.x_norm =
      x_norm(f, params, merge_sorted(scan, f.sample_hints, scan.front(), scan.back()));
  rep.in_X = !rep.x_norm.diverged;

  // Pointwise-tail certificate. The sup scan stops at domain_hint: beyond it
  // the evaluator no longer represents the datum (series truncations).
  const double r_top = std::min(scan.back(), f.domain_hint);
  auto dense =
      merge_sorted(log_spaced(scan.front(), r_top, 64), f.sample_hints, scan.front(), r_top);
  std::vector<double> w(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    w[i] = f.evaluator(dense[i]) * std::pow(dense[i], params.tail_exp);
  }
  auto bin_max = [&](double lo, double hi) {
    double m = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] > lo && dense[i] <= hi) m = std::max(m, w[i]);
    }
    return m;
  };
  const double m2 = bin_max(r_top / 10.0, r_top);
  const double m1 = bin_max(r_top / 100.0, r_top / 10.0);
  const double m0 = bin_max(r_top / 1000.0, r_top / 100.0);
  const bool grows = m2 > 1.02 * m1 && m1 > 1.02 * m0;
  if (!grows) {
    ApFit best;
    bool have = false;
    for (double R0 = scan.front(); R0 < r_top; R0 *= 10.0) {
      double A = 0.0;
      for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] >= R0) A = std::max(A, w[i]);
      }
      if (!have || A < best.A) {
        best = {A, R0};
        have = true;
      }
    }
    if (have) rep.ap_fit = best;
  }

  // Vazquez ball-mass ratio at log-spaced centers. The ratio of boundary
  // data approaches its limit with an O(1/d) correction, slower than the
  // exterior-mass scan, so probe well past the scan edge.
  const auto d_grid = log_spaced(1.0, std::max(10.0, 5.0 * scan.back()), 4);
  std::vector<double> ratios;
  ratios.reserve(d_grid.size());
  for (double d : d_grid) {
    const double Rb = d / 2.0;
    double ball;
    if (params.N == 1) {
      if (f.exterior_mass) {
        ball = 0.5 * (f.exterior_mass(d - Rb) - f.exterior_mass(d + Rb));
      } else {
        ball = integrate(f.evaluator, d - Rb, d + Rb, 1e-9).value;
      }
    } else {
      auto g = [&](double r) {
        return f.evaluator(r) * params.omega_N * std::pow(r, params.N - 1.0) *
               sphere_cap_fraction(r, d, Rb);
      };
      ball = integrate(g, d - Rb, d + Rb, 1e-9).value;
    }
    ratios.push_back(ball * std::pow(d, params.x_weight_exp));
    rep.vazquez_ratio.emplace_back(d, ratios.back());
  }
  rep.vazquez_bounded = !rising_at_edge(d_grid, ratios);

  std::ostringstream note;
  note << (rep.x_norm.diverged ? "tail scan still rising at r_max" : "tail scan settled")
       << "; ball-mass ratio " << (rep.vazquez_bounded ? "bounded" : "rising");
  rep.method_note = note.str();
  return rep;
}

RadialProfile power_tail_datum(double sigma, const GoodRangeParams& params) {
  if (!(sigma > params.N)) {
    throw std::invalid_argument("power tail (1+r)^{-sigma} is not integrable: sigma <= N");
  }
  RadialProfile f;
  f.evaluator = [sigma](double r) { return std::pow(1.0 + r, -sigma); };
  // With u = 1/(1+r) the tail integral of r^{N-1}(1+r)^{-sigma} becomes
  // int_0^{1/(1+R)} (1-u)^{N-1} u^{sigma-N-1} du, a finite binomial sum.
  const int N = params.N;
  const double omega = params.omega_N;
  f.exterior_mass = [sigma, N, omega](double R) {
    const double x = 1.0 / (1.0 + R);
    double total = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= N - 1; ++j) {
      if (j > 0) binom = -binom * (N - j) / j;
      const double e = sigma - N + j;
      total += binom * std::pow(x, e) / e;
    }
    return omega * total;
  };
  return f;
}

RadialProfile g_alpha_beta(double alpha, double beta_spike, int K,
                           const GoodRangeParams& params) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("g_alpha_beta: alpha must lie in (0,1)");
  }
  if (K < 2) throw std::invalid_argument("g_alpha_beta: K must be >= 2");
  const double decay = beta_spike * (1.0 - alpha);
  if (!(decay > params.N)) {
    std::ostringstream msg;
    msg << "g_alpha_beta: the L1 mass series diverges: beta*(1-alpha) = " << decay
        << " <= N = " << params.N;
    throw std::invalid_argument(msg.str());
  }
  if (!(decay > params.tail_exp)) {
    std::ostringstream msg;
    msg << "g_alpha_beta: the tail-norm series diverges: beta*(1-alpha) = " << decay
        << " <= p/(2-p) = " << params.tail_exp;
    throw std::invalid_argument(msg.str());
  }

  RadialProfile f;
  f.domain_hint = K + 1.0;
  f.evaluator = [alpha, beta_spike, K](double r) {
    const double k = std::floor(r);
    if (k < 2.0 || k > K) return 0.0;
    const double width = std::pow(k, -beta_spike);
    if (r > k + width) return 0.0;
    if (r == k) return std::pow(width, -alpha);  // cap: value one spike-width in
    return std::pow(r - k, -alpha);
  };
  const int N = params.N;
  const double omega = params.omega_N;
  f.exterior_mass = [alpha, beta_spike, K, N, omega](double R) {
    double total = 0.0;
    for (int k = 2; k <= K; ++k) {
      const double width = std::pow(static_cast<double>(k), -beta_spike);
      if (R >= k + width) continue;
      const double s0 = std::max(0.0, R - k);
      total += spike_integral(k, width, s0, alpha, N);
    }
    return omega * total;
  };
  for (int k = 2; k <= K; ++k) {
    f.sample_hints.push_back(k + std::pow(static_cast<double>(k), -beta_spike));
  }
  return f;
}

RadialProfile indicator_datum(double radius, const GoodRangeParams& params) {
  if (!(radius > 0.0)) throw std::invalid_argument("indicator radius must be positive");
  RadialProfile f;
  f.evaluator = [radius](double r) { return r <= radius ? 1.0 : 0.0; };
  f.sample_hints = {radius};
  const int N = params.N;
  const double omega = params.omega_N;
  f.exterior_mass = [radius, N, omega](double R) {
    if (R >= radius) return 0.0;
    return omega * (std::pow(radius, N) - std::pow(R, N)) / N;
  };
  return f;
}

RadialProfile barenblatt_datum(double t, double M, const GoodRangeParams& params) {
  RadialProfile f;
  f.evaluator = [t, M, params](double r) { return barenblatt(r, t, M, params); };
  return f;
}

RadialProfile subsolution_datum(const SubSuperParams& sp, const GoodRangeParams& params) {
  RadialProfile f;
  f.evaluator = [sp, params](double r) { return explicit_subsolution(r, 0.0, sp, params); };
  return f;
}

RadialProfile supersolution_datum(const SubSuperParams& sp, const GoodRangeParams& params) {
  RadialProfile f;
  f.evaluator = [sp, params](double r) { return explicit_supersolution(r, 0.0, sp, params); };
  return f;
}

RadialProfile profile_from_samples(std::vector<double> radii, std::vector<double> values,
                                   const GoodRangeParams& params) {
  if (radii.size() != values.size() || radii.size() < 2) {
    throw std::invalid_argument("profile_from_samples needs matching arrays of size >= 2");
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && !(radii[i] > radii[i - 1])) {
      throw std::invalid_argument("sample radii must be strictly increasing");
    }
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw std::invalid_argument("sample values must be finite and nonnegative");
    }
  }
  RadialProfile f;
  f.domain_hint = radii.back();
  f.sample_hints = radii;
  auto r_ptr = std::make_shared<std::vector<double>>(std::move(radii));
  auto v_ptr = std::make_shared<std::vector<double>>(std::move(values));
  f.evaluator = [r_ptr, v_ptr](double r) {
    const auto& rs = *r_ptr;
    const auto& vs = *v_ptr;
    if (r <= rs.front()) return vs.front();
    if (r >= rs.back()) return r == rs.back() ? vs.back() : 0.0;
    const auto it = std::upper_bound(rs.begin(), rs.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - rs.begin()) - 1;
    const double s = (r - rs[i]) / (rs[i + 1] - rs[i]);
    return vs[i] + s * (vs[i + 1] - vs[i]);
  };
  const int N = params.N;
  const double omega = params.omega_N;
  f.exterior_mass = [r_ptr, v_ptr, N, omega](double R) {
    const auto& rs = *r_ptr;
    const auto& vs = *v_ptr;
    // integral of (c0 + c1 r) r^{N-1} over [a, b]
    auto seg = [N](double c0, double c1, double a, double b) {
      return c0 * (std::pow(b, N) - std::pow(a, N)) / N +
             c1 * (std::pow(b, N + 1) - std::pow(a, N + 1)) / (N + 1);
    };
    double total = 0.0;
    if (R < rs.front()) {
      total += seg(vs.front(), 0.0, R, rs.front());
    }
    for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
      const double a = std::max(R, rs[i]);
      const double b = rs[i + 1];
      if (a >= b) continue;
      const double c1 = (vs[i + 1] - vs[i]) / (rs[i + 1] - rs[i]);
      const double c0 = vs[i] - c1 * rs[i];
      total += seg(c0, c1, a, b);
    }
    return omega * total;
  };
  return f;
}

}  // namespace plharnack
