#include "plharnack/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

namespace plharnack {

double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double sphere_area(int N) {
    if (N < 1) throw std::invalid_argument("sphere_area: dimension must be >= 1");
    const double half = 0.5 * N;
    return 2.0 * std::exp(half * std::log(M_PI) - std::lgamma(half));
}

double log_beta(double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("log_beta: arguments must be positive");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_function(double a, double b) { return std::exp(log_beta(a, b)); }

namespace {

struct SimpsonWorker {
    const std::function<double(double)>& f;
    double rel_tol;
    double abs_tol;
    int max_depth;
    double error_sum = 0.0;
    bool tolerance_met = true;

    double recurse(double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double h = b - a;
        const double left = h / 12.0 * (fa + 4.0 * flm + fm);
        const double right = h / 12.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        const double scale = std::max(std::abs(left + right), std::abs(whole));
        const double tol = std::max(abs_tol, rel_tol * scale);
        if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
            if (depth >= max_depth && std::abs(delta) > 15.0 * tol) tolerance_met = false;
            error_sum += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, depth + 1) +
               recurse(m, b, fm, frm, fb, right, depth + 1);
    }
};

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_depth) {
    if (!(a <= b)) throw std::invalid_argument("integrate: reversed interval");
    if (a == b) return {0.0, 0.0};
    SimpsonWorker w{f, rel_tol, abs_tol, max_depth};
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double value = w.recurse(a, b, fa, fm, fb, whole, 0);
    if (!w.tolerance_met)
        throw std::runtime_error("integrate: tolerance not met, error estimate " +
                                 std::to_string(w.error_sum));
    return {value, w.error_sum};
}

QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       double rel_tol) {
    if (!(a > 0.0)) throw std::invalid_argument("integrate_to_infinity: need a > 0");
    QuadratureResult total;
    double lo = a;
    double prev_block = std::numeric_limits<double>::infinity();
    int growing = 0;
    int negligible = 0;
    for (int j = 0; j < 80; ++j) {
        const QuadratureResult block = integrate(f, lo, 2.0 * lo, rel_tol * 0.1, 0.0, 44);
        total.value += block.value;
        total.abs_error += block.abs_error;
        const double mag = std::abs(block.value);
        if (mag > prev_block && j >= 4) {
            if (++growing >= 8) throw std::domain_error("integrate_to_infinity: non-integrable tail");
        } else {
            growing = 0;
        }
        if (mag <= std::max(rel_tol * std::abs(total.value), 1e-300)) {
            if (++negligible >= 2) return total;
        } else {
            negligible = 0;
        }
        prev_block = mag;
        lo *= 2.0;
    }
    throw std::runtime_error("integrate_to_infinity: tail did not settle within 80 octaves");
}

double solve_bisection(const std::function<double(double)>& f, double lo, double hi,
                       double x_rel_tol, int max_iter) {
    if (!(lo < hi)) throw std::invalid_argument("solve_bisection: need lo < hi");
    double flo = f(lo), fhi = f(hi);
    for (int k = 0; k < 200 && flo * fhi > 0.0; ++k) {
        // expand away from the midpoint until the root is bracketed
        if (std::abs(flo) < std::abs(fhi)) {
            lo = std::max(lo * 0.5, lo - (hi - lo));
            flo = f(lo);
        } else {
            hi = hi + (hi - lo);
            fhi = f(hi);
        }
    }
    if (flo * fhi > 0.0) throw std::runtime_error("solve_bisection: failed to bracket a root");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    for (int k = 0; k < max_iter; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= x_rel_tol * std::max(std::abs(lo), std::abs(hi))) return mid;
        const double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if (flo * fmid < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (rhs.size() != n || lower.size() + 1 != n || upper.size() + 1 != n)
        throw std::invalid_argument("solve_tridiagonal: inconsistent sizes");
    std::vector<double> c(n - 1);
    double piv = diag[0];
    if (piv == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    if (n > 1) c[0] = upper[0] / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if (piv == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
        if (i < n - 1) c[i] = upper[i] / piv;
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_affine: need >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_affine: degenerate abscissae");
    AffineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

std::pair<double, double> fit_nonnegative_pair(const std::vector<double>& a,
                                               const std::vector<double>& b,
                                               const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (a.size() != n || b.size() != n || n == 0)
        throw std::invalid_argument("fit_nonnegative_pair: inconsistent sizes");
    double aa = 0.0, ab = 0.0, bb = 0.0, ay = 0.0, by = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        aa += a[i] * a[i];
        ab += a[i] * b[i];
        bb += b[i] * b[i];
        ay += a[i] * y[i];
        by += b[i] * y[i];
    }
    auto residual = [&](double c1, double c2) {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = c1 * a[i] + c2 * b[i] - y[i];
            r += d * d;
        }
        return r;
    };
    double best1 = 0.0, best2 = 0.0;
    double best = residual(0.0, 0.0);
    const double det = aa * bb - ab * ab;
    if (det > 0.0) {
        const double c1 = (bb * ay - ab * by) / det;
        const double c2 = (aa * by - ab * ay) / det;
        if (c1 >= 0.0 && c2 >= 0.0) return {c1, c2};
    }
    if (aa > 0.0) {
        const double c1 = std::max(0.0, ay / aa);
        const double r = residual(c1, 0.0);
        if (r < best) {
            best = r;
            best1 = c1;
            best2 = 0.0;
        }
    }
    if (bb > 0.0) {
        const double c2 = std::max(0.0, by / bb);
        const double r = residual(0.0, c2);
        if (r < best) {
            best1 = 0.0;
            best2 = c2;
        }
    }
    return {best1, best2};
}

namespace {

// order-preserving integer key: negative doubles map below zero by magnitude
std::int64_t float_order_key(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof x);
    const std::uint64_t sign = 0x8000000000000000ull;
    if (bits & sign) return -static_cast<std::int64_t>(bits & ~sign);
    return static_cast<std::int64_t>(bits);
}

}  // namespace

std::int64_t ulp_distance(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::int64_t>::max();
    if (a == b) return 0;
    const long double d = static_cast<long double>(float_order_key(a)) -
                          static_cast<long double>(float_order_key(b));
    const long double mag = d < 0 ? -d : d;
    if (mag > 9.0e18L) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(mag);
}

}  // namespace plharnack
