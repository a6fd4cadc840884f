#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

// Self-contained special functions and small numeric utilities.
// Everything here is deterministic and platform-independent at double
// precision; no external numeric libraries are used.

namespace medipool::math {

inline constexpr double inv_sqrt2 = 0.70710678118654752440;
inline constexpr double sqrt_2pi  = 2.50662827463100050242;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / sqrt_2pi; }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * inv_sqrt2); }

/// log(Phi(x)), stable deep into the lower tail where Phi underflows.
inline double log_norm_cdf(double x) {
    if (x > -12.0) return std::log(norm_cdf(x));
    const double x2 = x * x;
    // Mills-ratio asymptotic series: Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...)
    const double s = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
                   + 105.0 / (x2 * x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - std::log(sqrt_2pi) + std::log(s);
}

/// Inverse standard normal CDF. Rational approximation (Acklam) sharpened by
/// one Newton step on norm_cdf; absolute error well below 1e-12 on (0,1).
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_quantile: p must be in (0, 1)");

    static constexpr double a[6] = {
        -3.969683028665376e+01,  2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01,  2.506628277459239e+00};
    static constexpr double b[5] = {
        -5.447609879822406e+01,  1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[6] = {
        -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
        -2.549732539343734e+00,  4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {
         7.784695709041462e-03,  3.224671290700398e-01,  2.445134137142996e+00,
         3.754408661907416e+00};
    constexpr double plow = 0.02425;

    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double dens = norm_pdf(x);
    if (dens > 1e-280) x -= (norm_cdf(x) - p) / dens;
    return x;
}

/// Inverse standard normal CDF given log(p); needed for probabilities far
/// below the double underflow threshold (order-statistic tail arithmetic).
inline double norm_quantile_log(double log_p) {
    if (!(log_p < 0.0))
        throw std::domain_error("norm_quantile_log: log_p must be negative");
    if (log_p > std::log(1e-12)) return norm_quantile(std::exp(log_p));

    double lo = -std::sqrt(-2.0 * log_p) - 2.0;
    double hi = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (log_norm_cdf(mid) < log_p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double lchoose(std::int64_t n, std::int64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

/// log P(X <= k) for X ~ Binomial(n, p); exact summation in log space.
inline double log_binom_cdf(std::int64_t k, std::int64_t n, double p) {
    if (n < 1) throw std::domain_error("binom_cdf: n must be positive");
    if (k < 0 || k > n) throw std::domain_error("binom_cdf: k out of range");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binom_cdf: p out of range");
    if (k == n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return -std::numeric_limits<double>::infinity();

    const double lp = std::log(p), lq = std::log1p(-p);
    double m = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) {
        const double t = lchoose(n, i) + double(i) * lp + double(n - i) * lq;
        if (t <= m) {
            s += std::exp(t - m);
        } else {
            s = s * std::exp(m - t) + 1.0;
            m = t;
        }
    }
    return m + std::log(s);
}

inline double binom_cdf(std::int64_t k, std::int64_t n, double p) {
    return std::exp(log_binom_cdf(k, n, p));
}

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("gamma_p: a must be > 0");
    if (x < 0.0) throw std::domain_error("gamma_p: x must be >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("gamma_q: a must be > 0");
    if (x < 0.0) throw std::domain_error("gamma_q: x must be >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

/// Inverse of gamma_p in x: returns x with P(a, x) = p.
/// Initial guess plus a dozen Halley iterations.
inline double gamma_p_inv(double a, double p) {
    if (!(a > 0.0)) throw std::domain_error("gamma_p_inv: a must be > 0");
    if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("gamma_p_inv: p must be in [0, 1)");
    if (p == 0.0) return 0.0;

    const double gln = std::lgamma(a);
    const double a1 = a - 1.0;
    double lna1 = 0.0, afac = 0.0, x;
    if (a > 1.0) {
        lna1 = std::log(a1);
        afac = std::exp(a1 * (lna1 - 1.0) - gln);
        const double pp = (p < 0.5) ? p : 1.0 - p;
        const double t = std::sqrt(-2.0 * std::log(pp));
        double g = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if (p < 0.5) g = -g;
        x = std::max(1e-3, a * std::pow(1.0 - 1.0 / (9.0 * a) - g / (3.0 * std::sqrt(a)), 3.0));
    } else {
        const double t = 1.0 - a * (0.253 + a * 0.12);
        x = (p < t) ? std::pow(p / t, 1.0 / a) : 1.0 - std::log1p(-(p - t) / (1.0 - t));
    }

    for (int j = 0; j < 14; ++j) {
        if (x <= 0.0) return 0.0;
        const double err = gamma_p(a, x) - p;
        double t;
        if (a > 1.0)
            t = afac * std::exp(-(x - a1) + a1 * (std::log(x) - lna1));
        else
            t = std::exp(-x + a1 * std::log(x) - gln);
        const double u = err / t;
        t = u / (1.0 - 0.5 * std::min(1.0, u * ((a - 1.0) / x - 1.0)));
        x -= t;
        if (x <= 0.0) x = 0.5 * (x + t);
        if (std::abs(t) < 1e-11 * x) break;
    }
    return x;
}

inline double chi2_cdf(double x, double df) { return gamma_p(0.5 * df, 0.5 * x); }
inline double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }
inline double chi2_quantile(double p, double df) { return 2.0 * gamma_p_inv(0.5 * df, p); }

namespace detail {

inline double betacf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("ibeta: a, b must be > 0");
    if (x < 0.0 || x > 1.0) throw std::domain_error("ibeta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw std::domain_error("student_t_cdf: df must be > 0");
    const double half = 0.5 * ibeta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? 1.0 - half : half;
}

inline double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("student_t_quantile: p in (0,1)");
    if (!(df > 0.0)) throw std::domain_error("student_t_quantile: df must be > 0");
    if (p == 0.5) return 0.0;
    const bool upper = p > 0.5;
    const double q = upper ? p : 1.0 - p;
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, df) < q && hi < 1e14) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < q ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    return upper ? x : -x;
}

// --- Gauss-Legendre quadrature -------------------------------------------

struct QuadRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

inline QuadRule make_gauss_legendre(int n) {
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

inline const QuadRule& gauss_legendre_64() {
    static const QuadRule rule = make_gauss_legendre(64);
    return rule;
}

// --- Small SPD linear algebra (order-statistic GLS fits) ------------------

/// Cholesky solve of A X = B for SPD A (m x m, row-major); B holds `ncols`
/// right-hand sides, row-major m x ncols. Overwrites both.
inline void spd_solve_inplace(std::vector<double>& a, int m, std::vector<double>& b, int ncols) {
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            double s = a[std::size_t(i) * m + j];
            for (int k = 0; k < i; ++k)
                s -= a[std::size_t(i) * m + k] * a[std::size_t(j) * m + k];
            if (i == j) {
                if (!(s > 0.0)) throw std::runtime_error("spd_solve: matrix not positive definite");
                a[std::size_t(i) * m + i] = std::sqrt(s);
            } else {
                a[std::size_t(j) * m + i] = s / a[std::size_t(i) * m + i];
            }
        }
    }
    for (int c = 0; c < ncols; ++c) {
        for (int i = 0; i < m; ++i) {
            double s = b[std::size_t(i) * ncols + c];
            for (int k = 0; k < i; ++k) s -= a[std::size_t(i) * m + k] * b[std::size_t(k) * ncols + c];
            b[std::size_t(i) * ncols + c] = s / a[std::size_t(i) * m + i];
        }
        for (int i = m - 1; i >= 0; --i) {
            double s = b[std::size_t(i) * ncols + c];
            for (int k = i + 1; k < m; ++k) s -= a[std::size_t(k) * m + i] * b[std::size_t(k) * ncols + c];
            b[std::size_t(i) * ncols + c] = s / a[std::size_t(i) * m + i];
        }
    }
}

// --- Sample statistics -----------------------------------------------------

inline double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("sample_sd: need at least 2 values");
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

/// Linear-interpolation quantile of a sorted sample (h = (m-1)p convention).
inline double quantile_type7_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = double(sorted.size() - 1) * p;
    const auto lo = std::size_t(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
    const double frac = h - double(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double pearson_corr(std::span<const double> x, std::span<const double> y) {
    const double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

} // namespace medipool::math
