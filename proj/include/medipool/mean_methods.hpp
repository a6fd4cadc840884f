#pragma once

#include "medipool/distributions.hpp"
#include "medipool/math.hpp"
#include "medipool/methods.hpp"
#include "medipool/optimize.hpp"
#include "medipool/random.hpp"
#include "medipool/study_data.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Per-study mean, standard-deviation, and standard-error estimation from
// quantile summaries (S1/S2/S3) or reported mean/sd, and assembly of
// one-group or difference-of-means effect estimates.

namespace medipool::meanm {

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- quantile summaries as (probability, value) pairs ----------------------

struct QuantilePoints {
    std::vector<double> p;
    std::vector<double> q;
    std::int64_t n = 0;
    data::Scenario scenario = data::Scenario::unusable;
};

/// Probability points: quartiles at (0.25, 0.5, 0.75); the extremes of an
/// n-sample at (0.5/n, 1 - 0.5/n).
inline QuantilePoints quantile_points(const data::GroupSummary& g) {
    const auto sc = data::classify_group(g);
    if (sc != data::Scenario::s1 && sc != data::Scenario::s2 && sc != data::Scenario::s3)
        throw EstimationError(std::string("quantile estimation requires an S1/S2/S3 summary "
                                          "(scenario is ") + data::scenario_name(sc) + ")");
    if (*g.n < 2) throw EstimationError("quantile estimation requires n >= 2");

    QuantilePoints pts;
    pts.n = *g.n;
    pts.scenario = sc;
    const double n = double(*g.n);
    const double p_ext = 0.5 / n;
    if (sc == data::Scenario::s1) {
        pts.p = {p_ext, 0.5, 1.0 - p_ext};
        pts.q = {*g.q_min, *g.med, *g.q_max};
    } else if (sc == data::Scenario::s2) {
        pts.p = {0.25, 0.5, 0.75};
        pts.q = {*g.q1, *g.med, *g.q3};
    } else {
        pts.p = {p_ext, 0.25, 0.5, 0.75, 1.0 - p_ext};
        pts.q = {*g.q_min, *g.q1, *g.med, *g.q3, *g.q_max};
    }
    return pts;
}

// --- closed-form mean and SD estimators ------------------------------------

inline double hozo_mean_s1(const data::GroupSummary& g) {
    return (*g.q_min + 2.0 * *g.med + *g.q_max) / 4.0;
}

inline double wan_mean_s2(const data::GroupSummary& g) { return (*g.q1 + *g.med + *g.q3) / 3.0; }

inline double bland_mean_s3(const data::GroupSummary& g) {
    return (*g.q_min + 2.0 * *g.q1 + 2.0 * *g.med + 2.0 * *g.q3 + *g.q_max) / 8.0;
}

inline double luo_mean(const data::GroupSummary& g, data::Scenario sc) {
    const double n = double(*g.n);
    switch (sc) {
        case data::Scenario::s1: {
            const double w = 4.0 / (4.0 + std::pow(n, 0.75));
            return w * (*g.q_min + *g.q_max) / 2.0 + (1.0 - w) * *g.med;
        }
        case data::Scenario::s2: {
            const double w = 0.7 + 0.39 / n;
            return w * (*g.q1 + *g.q3) / 2.0 + (1.0 - w) * *g.med;
        }
        case data::Scenario::s3: {
            const double w1 = 2.2 / (2.2 + std::pow(n, 0.75));
            const double w2 = 0.7 - 0.72 / std::pow(n, 0.55);
            return w1 * (*g.q_min + *g.q_max) / 2.0 + w2 * (*g.q1 + *g.q3) / 2.0 +
                   (1.0 - w1 - w2) * *g.med;
        }
        default: throw EstimationError("luo_mean: requires S1/S2/S3");
    }
}

/// Expected standardized range of an n-sample: 2 * Phi^-1((n - 0.375)/(n + 0.25)).
inline double wan_range_denominator(std::int64_t n) {
    return 2.0 * math::norm_quantile((double(n) - 0.375) / (double(n) + 0.25));
}

/// Expected standardized IQR: 2 * Phi^-1((0.75n - 0.125)/(n + 0.25)).
inline double wan_iqr_denominator(std::int64_t n) {
    return 2.0 * math::norm_quantile((0.75 * double(n) - 0.125) / (double(n) + 0.25));
}

inline double wan_sd(const data::GroupSummary& g, data::Scenario sc) {
    switch (sc) {
        case data::Scenario::s1: return (*g.q_max - *g.q_min) / wan_range_denominator(*g.n);
        case data::Scenario::s2: return (*g.q3 - *g.q1) / wan_iqr_denominator(*g.n);
        case data::Scenario::s3:
            return (*g.q_max - *g.q_min) / (2.0 * wan_range_denominator(*g.n)) +
                   (*g.q3 - *g.q1) / (2.0 * wan_iqr_denominator(*g.n));
        default: throw EstimationError("wan_sd: requires S1/S2/S3");
    }
}

inline double shi_sd_s3(const data::GroupSummary& g) {
    const double n = double(*g.n);
    const double w = 1.0 / (1.0 + 0.07 * std::pow(n, 0.6));
    return w * (*g.q_max - *g.q_min) / wan_range_denominator(*g.n) +
           (1.0 - w) * (*g.q3 - *g.q1) / wan_iqr_denominator(*g.n);
}

// --- normality-based location/scale on a (possibly transformed) summary ----

inline double normal_scale_mean(const data::GroupSummary& g, data::Scenario sc) {
    return luo_mean(g, sc);
}

inline double normal_scale_sd(const data::GroupSummary& g, data::Scenario sc) {
    return sc == data::Scenario::s3 ? shi_sd_s3(g) : wan_sd(g, sc);
}

/// Log-transforms the quantile fields; every reported quantile must be > 0.
inline data::GroupSummary log_summary(const data::GroupSummary& g) {
    data::GroupSummary out;
    out.n = g.n;
    const auto tr = [&](const std::optional<double>& v) -> std::optional<double> {
        if (!v) return std::nullopt;
        if (!(*v > 0.0))
            throw EstimationError("log transform requires strictly positive summary values");
        return std::log(*v);
    };
    out.q_min = tr(g.q_min);
    out.q1 = tr(g.q1);
    out.med = tr(g.med);
    out.q3 = tr(g.q3);
    out.q_max = tr(g.q_max);
    return out;
}

// --- quantile matching across the four candidate families ------------------

/// Result of fitting the candidate families to a quantile summary: per-family
/// parameters and losses, plus weights proportional to 1/(loss + eps).
struct FittedDistribution {
    std::vector<dist::DistFamily> families;
    std::vector<double> losses;
    std::vector<double> weights;
    std::optional<double> boxcox_lambda;

    std::size_t best_index() const {
        std::size_t b = 0;
        for (std::size_t i = 1; i < weights.size(); ++i)
            if (weights[i] > weights[b]) b = i;
        return b;
    }
    double mixture_mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < families.size(); ++i) m += weights[i] * dist::mean(families[i]);
        return m;
    }
    double mixture_sd() const {
        double s = 0.0;
        for (std::size_t i = 0; i < families.size(); ++i) s += weights[i] * dist::sd(families[i]);
        return s;
    }
    double density_at(double x) const {
        double f = 0.0;
        for (std::size_t i = 0; i < families.size(); ++i) f += weights[i] * dist::pdf(families[i], x);
        return f;
    }
};

namespace detail {

inline double sq_loss(const std::vector<double>& q, const std::vector<double>& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += (q[i] - model[i]) * (q[i] - model[i]);
    return s;
}

struct LinearFit {
    double intercept = 0.0, slope = 0.0, loss = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = math::sample_mean(x), my = math::sample_mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.loss += r * r;
    }
    return f;
}

/// Best scale s >= 0 for model s * base against q, with the resulting loss.
inline std::pair<double, double> scale_fit(const std::vector<double>& base,
                                           const std::vector<double>& q) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        num += q[i] * base[i];
        den += base[i] * base[i];
    }
    const double s = den > 0.0 ? num / den : 0.0;
    std::vector<double> model(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) model[i] = s * base[i];
    return {s, sq_loss(q, model)};
}

} // namespace detail

/// Fits each candidate family by minimizing the squared distance between the
/// reported quantiles and the family's quantiles at the matching probability
/// points. Positive-support families are only attempted on positive data.
inline FittedDistribution qe_fit(const data::GroupSummary& g) {
    const auto pts = quantile_points(g);
    const auto& p = pts.p;
    const auto& q = pts.q;
    if (!(q.back() - q.front() > 0.0))
        throw EstimationError("quantile summary has zero dispersion; nothing to fit");

    std::vector<double> z(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) z[i] = math::norm_quantile(p[i]);

    FittedDistribution out;

    {  // normal: linear least squares in (mu, sigma)
        const auto f = detail::least_squares(z, q);
        if (!(f.slope > 0.0)) throw EstimationError("degenerate summary: non-positive scale");
        out.families.push_back(dist::normal(f.intercept, f.slope));
        out.losses.push_back(f.loss);
    }

    if (q.front() > 0.0) {
        {  // log-normal: outer search over sigma, closed-form scale inside
            const auto obj = [&](double sigma) {
                std::vector<double> base(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) base[i] = std::exp(sigma * z[i]);
                return detail::scale_fit(base, q).second;
            };
            const double sigma = opt::grid_then_golden(obj, 1e-3, 8.0, 64, 1e-7);
            std::vector<double> base(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) base[i] = std::exp(sigma * z[i]);
            const auto [scale, loss] = detail::scale_fit(base, q);
            if (scale > 0.0) {
                out.families.push_back(dist::log_normal(std::log(scale), sigma));
                out.losses.push_back(loss);
            }
        }
        {  // gamma: outer search over log-shape
            const auto obj = [&](double logk) {
                const double k = std::exp(logk);
                std::vector<double> base(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) base[i] = math::gamma_p_inv(k, p[i]);
                return detail::scale_fit(base, q).second;
            };
            const double logk = opt::grid_then_golden(obj, std::log(2e-2), std::log(1e6), 72, 1e-6);
            const double k = std::exp(logk);
            std::vector<double> base(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) base[i] = math::gamma_p_inv(k, p[i]);
            const auto [scale, loss] = detail::scale_fit(base, q);
            if (scale > 0.0) {
                out.families.push_back(dist::gamma(k, 1.0 / scale));
                out.losses.push_back(loss);
            }
        }
        {  // weibull: outer search over log-shape, scale closed form
            const auto obj = [&](double logk) {
                const double k = std::exp(logk);
                std::vector<double> base(p.size());
                for (std::size_t i = 0; i < p.size(); ++i)
                    base[i] = std::pow(-std::log1p(-p[i]), 1.0 / k);
                return detail::scale_fit(base, q).second;
            };
            const double logk = opt::grid_then_golden(obj, std::log(8e-2), std::log(4e2), 64, 1e-6);
            const double k = std::exp(logk);
            std::vector<double> base(p.size());
            for (std::size_t i = 0; i < p.size(); ++i)
                base[i] = std::pow(-std::log1p(-p[i]), 1.0 / k);
            const auto [scale, loss] = detail::scale_fit(base, q);
            if (scale > 0.0) {
                out.families.push_back(dist::weibull(k, scale));
                out.losses.push_back(loss);
            }
        }
    }

    constexpr double eps = 1e-12;
    double total = 0.0;
    out.weights.resize(out.losses.size());
    for (std::size_t i = 0; i < out.losses.size(); ++i) {
        out.weights[i] = 1.0 / (out.losses[i] + eps);
        total += out.weights[i];
    }
    for (auto& w : out.weights) w /= total;
    return out;
}

// --- Box-Cox transform-to-normal estimators (bc, mln) -----------------------

inline double boxcox_transform(double x, double lambda) {
    if (lambda == 0.0) return std::log(x);
    return std::expm1(lambda * std::log(x)) / lambda;
}

/// Inverse transform; NaN when the argument falls outside the image of the
/// positive half-line.
inline double boxcox_inverse(double t, double lambda) {
    if (lambda == 0.0) return std::exp(t);
    const double u = lambda * t;
    if (u <= -1.0) return std::numeric_limits<double>::quiet_NaN();
    return std::exp(std::log1p(u) / lambda);
}

struct TransformNormalFit {
    double lambda = 1.0;
    double mu = 0.0;
    double sigma = 1.0;
    data::Scenario scenario = data::Scenario::unusable;
};

namespace detail {

/// Transform parameter chosen to maximize the correlation between the
/// transformed quantiles and the normal scores; correlation is invariant to
/// the transform's affine drift, so the search is scale-free.
inline double select_boxcox_lambda(const std::vector<double>& z, const std::vector<double>& q) {
    const auto obj = [&](double lambda) {
        std::vector<double> t(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) t[i] = boxcox_transform(q[i], lambda);
        const double r = math::pearson_corr(t, z);
        if (std::isnan(r)) return 2.0;
        return 1.0 - r;
    };
    return opt::grid_then_golden(obj, -2.0, 2.0, 80, 1e-6);
}

inline data::GroupSummary transform_summary(const data::GroupSummary& g, double lambda) {
    data::GroupSummary out;
    out.n = g.n;
    const auto tr = [&](const std::optional<double>& v) -> std::optional<double> {
        if (!v) return std::nullopt;
        return boxcox_transform(*v, lambda);
    };
    out.q_min = tr(g.q_min);
    out.q1 = tr(g.q1);
    out.med = tr(g.med);
    out.q3 = tr(g.q3);
    out.q_max = tr(g.q_max);
    return out;
}

} // namespace detail

/// bc: transformed-scale location/scale via the normality-based closed forms.
inline TransformNormalFit bc_fit(const data::GroupSummary& g) {
    const auto pts = quantile_points(g);
    if (!(pts.q.front() > 0.0))
        throw EstimationError("Box-Cox estimation requires strictly positive summary values");
    if (!(pts.q.back() - pts.q.front() > 0.0))
        throw EstimationError("quantile summary has zero dispersion; nothing to fit");

    std::vector<double> z(pts.p.size());
    for (std::size_t i = 0; i < pts.p.size(); ++i) z[i] = math::norm_quantile(pts.p[i]);

    TransformNormalFit fit;
    fit.scenario = pts.scenario;
    fit.lambda = detail::select_boxcox_lambda(z, pts.q);
    const auto tg = detail::transform_summary(g, fit.lambda);
    fit.mu = normal_scale_mean(tg, pts.scenario);
    fit.sigma = normal_scale_sd(tg, pts.scenario);
    if (!(fit.sigma > 0.0)) throw EstimationError("transformed summary has zero dispersion");
    return fit;
}

/// mln: same transform, but the transformed-scale (mu, sigma) come from a
/// least-squares match against the normal scores.
inline TransformNormalFit mln_fit(const data::GroupSummary& g) {
    const auto pts = quantile_points(g);
    if (!(pts.q.front() > 0.0))
        throw EstimationError("MLN estimation requires strictly positive summary values");
    if (!(pts.q.back() - pts.q.front() > 0.0))
        throw EstimationError("quantile summary has zero dispersion; nothing to fit");

    std::vector<double> z(pts.p.size());
    for (std::size_t i = 0; i < pts.p.size(); ++i) z[i] = math::norm_quantile(pts.p[i]);

    TransformNormalFit fit;
    fit.scenario = pts.scenario;
    fit.lambda = detail::select_boxcox_lambda(z, pts.q);
    std::vector<double> t(pts.q.size());
    for (std::size_t i = 0; i < pts.q.size(); ++i) t[i] = boxcox_transform(pts.q[i], fit.lambda);
    const auto ls = detail::least_squares(z, t);
    fit.mu = ls.intercept;
    fit.sigma = ls.slope;
    if (!(fit.sigma > 0.0)) throw EstimationError("transformed summary has zero dispersion");
    return fit;
}

/// Original-scale mean and SD by 64-node Gauss-Legendre quadrature of the
/// inverse transform over Normal(mu, sigma^2) on a +/-6 sigma window clipped
/// to the transform's domain.
inline std::pair<double, double> boxcox_moments(const TransformNormalFit& f) {
    double lo = f.mu - 6.0 * f.sigma;
    double hi = f.mu + 6.0 * f.sigma;
    if (f.lambda > 0.0) {
        const double bound = -1.0 / f.lambda;
        lo = std::max(lo, bound + 1e-12 * (1.0 + std::abs(bound)));
    } else if (f.lambda < 0.0) {
        const double bound = -1.0 / f.lambda;
        hi = std::min(hi, bound - 1e-12 * (1.0 + std::abs(bound)));
    }
    if (!(lo < hi)) throw EstimationError("transform domain does not overlap the fitted normal");

    const auto& gl = math::gauss_legendre_64();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double t = mid + half * gl.x[i];
        const double x = boxcox_inverse(t, f.lambda);
        if (std::isnan(x)) continue;
        const double w = gl.w[i] * half * math::norm_pdf((t - f.mu) / f.sigma) / f.sigma;
        m1 += w * x;
        m2 += w * x * x;
    }
    const double var = std::max(0.0, m2 - m1 * m1);
    return {m1, std::sqrt(var)};
}

// --- best linear unbiased fit of normal order statistics (yang) ------------

struct YangFit {
    double mu = 0.0;
    double sigma = 1.0;
    double se_mu = 0.0;
};

/// GLS fit of (mu, sigma) to the reported order statistics under normality.
/// Expected values use the David-Johnson series at p = r/(n+1); covariances
/// use its leading term.
inline YangFit yang_fit(const data::GroupSummary& g) {
    const auto pts = quantile_points(g);
    const int m = int(pts.p.size());
    const double n = double(pts.n);

    std::vector<double> ez(m), qd1(m);
    for (int i = 0; i < m; ++i) {
        const double p = pts.p[i];
        const double pq = p * (1.0 - p);
        const double Q = math::norm_quantile(p);
        const double phi = math::norm_pdf(Q);
        const double Q1 = 1.0 / phi;
        const double Q2 = Q / (phi * phi);
        const double Q3 = (1.0 + 2.0 * Q * Q) / (phi * phi * phi);
        const double Q4 = Q * (7.0 + 6.0 * Q * Q) / (phi * phi * phi * phi);
        ez[i] = Q + pq / (2.0 * (n + 2.0)) * Q2 +
                pq / ((n + 2.0) * (n + 2.0)) * ((1.0 - 2.0 * p) / 3.0 * Q3 + pq / 8.0 * Q4);
        qd1[i] = Q1;
    }

    std::vector<double> v(std::size_t(m) * m);
    for (int r = 0; r < m; ++r)
        for (int s = 0; s < m; ++s) {
            const int a = std::min(r, s), b = std::max(r, s);
            v[std::size_t(r) * m + s] =
                pts.p[a] * (1.0 - pts.p[b]) / (n + 2.0) * qd1[a] * qd1[b];
        }

    // Solve V Z = [1 | E(Z) | Y] and assemble the 2x2 GLS normal equations.
    std::vector<double> rhs(std::size_t(m) * 3);
    for (int i = 0; i < m; ++i) {
        rhs[std::size_t(i) * 3 + 0] = 1.0;
        rhs[std::size_t(i) * 3 + 1] = ez[i];
        rhs[std::size_t(i) * 3 + 2] = pts.q[i];
    }
    math::spd_solve_inplace(v, m, rhs, 3);

    double m11 = 0.0, m12 = 0.0, m22 = 0.0, b1 = 0.0, b2 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double z1 = rhs[std::size_t(i) * 3 + 0];
        const double z2 = rhs[std::size_t(i) * 3 + 1];
        const double zy = rhs[std::size_t(i) * 3 + 2];
        m11 += 1.0 * z1;
        m12 += ez[i] * z1;
        m22 += ez[i] * z2;
        b1 += 1.0 * zy;
        b2 += ez[i] * zy;
    }
    const double det = m11 * m22 - m12 * m12;
    if (!(det > 0.0)) throw EstimationError("order-statistic GLS system is singular");

    YangFit fit;
    fit.mu = (m22 * b1 - m12 * b2) / det;
    fit.sigma = (-m12 * b1 + m11 * b2) / det;
    if (!(fit.sigma > 0.0))
        throw EstimationError("order-statistic fit produced a non-positive scale");
    fit.se_mu = fit.sigma * std::sqrt(m22 / det);
    return fit;
}

// --- public estimators ------------------------------------------------------

inline double estimate_mean(const data::GroupSummary& g, MeanMethod method) {
    const auto sc = data::classify_group(g);
    if (sc != data::Scenario::s1 && sc != data::Scenario::s2 && sc != data::Scenario::s3)
        throw EstimationError(std::string("estimate_mean requires an S1/S2/S3 summary "
                                          "(scenario is ") + data::scenario_name(sc) + ")");
    switch (method) {
        case MeanMethod::wan:
            if (sc == data::Scenario::s1) return hozo_mean_s1(g);
            if (sc == data::Scenario::s2) return wan_mean_s2(g);
            return bland_mean_s3(g);
        case MeanMethod::luo:
        case MeanMethod::shi_normal: return luo_mean(g, sc);
        case MeanMethod::shi_lognormal: {
            const auto lg = log_summary(g);
            const double mu = normal_scale_mean(lg, sc);
            const double sg = normal_scale_sd(lg, sc);
            return std::exp(mu + 0.5 * sg * sg);
        }
        case MeanMethod::qe: return qe_fit(g).mixture_mean();
        case MeanMethod::bc: return boxcox_moments(bc_fit(g)).first;
        case MeanMethod::mln: return boxcox_moments(mln_fit(g)).first;
        case MeanMethod::yang: return yang_fit(g).mu;
    }
    throw EstimationError("unknown mean method");
}

inline double estimate_sd(const data::GroupSummary& g, SdMethod method) {
    const auto sc = data::classify_group(g);
    if (sc != data::Scenario::s1 && sc != data::Scenario::s2 && sc != data::Scenario::s3)
        throw EstimationError(std::string("estimate_sd requires an S1/S2/S3 summary "
                                          "(scenario is ") + data::scenario_name(sc) + ")");
    switch (method) {
        case SdMethod::wan: return wan_sd(g, sc);
        case SdMethod::shi_normal: return normal_scale_sd(g, sc);
        case SdMethod::shi_lognormal: {
            const auto lg = log_summary(g);
            const double mu = normal_scale_mean(lg, sc);
            const double sg = normal_scale_sd(lg, sc);
            return std::exp(mu + 0.5 * sg * sg) * std::sqrt(std::expm1(sg * sg));
        }
        case SdMethod::qe: return qe_fit(g).mixture_sd();
        case SdMethod::bc: return boxcox_moments(bc_fit(g)).second;
        case SdMethod::mln: return boxcox_moments(mln_fit(g)).second;
        case SdMethod::yang: return yang_fit(g).sigma;
    }
    throw EstimationError("unknown sd method");
}

// --- parametric bootstrap SE -------------------------------------------------

namespace detail {

/// Resampling model behind the bootstrap: the weight-maximal family for qe,
/// the fitted transform-normal model for bc/mln.
struct BootModel {
    std::optional<dist::DistFamily> family;
    std::optional<TransformNormalFit> transform;

    double draw(rng::Engine& eng) const {
        const double u = eng.uniform01();
        if (family) return dist::quantile(*family, u);
        const double t = transform->mu + transform->sigma * math::norm_quantile(u);
        return boxcox_inverse(t, transform->lambda);
    }
};

/// Reduces a fresh sample to the group's reporting scenario and re-applies
/// the mean estimator. Returns nothing when the replicate is unusable
/// (degenerate or outside the estimator's domain).
inline std::optional<double> bootstrap_replicate(const BootModel& model, data::Scenario sc,
                                                 std::int64_t n, MeanMethod method,
                                                 rng::Engine& eng) {
    std::vector<double> x(std::size_t(n));
    for (auto& v : x) {
        v = model.draw(eng);
        if (!std::isfinite(v)) return std::nullopt;
    }
    std::sort(x.begin(), x.end());

    data::GroupSummary g;
    g.n = n;
    if (sc == data::Scenario::s1 || sc == data::Scenario::s3) {
        g.q_min = x.front();
        g.q_max = x.back();
    }
    g.med = math::quantile_type7_sorted(x, 0.5);
    if (sc == data::Scenario::s2 || sc == data::Scenario::s3) {
        g.q1 = math::quantile_type7_sorted(x, 0.25);
        g.q3 = math::quantile_type7_sorted(x, 0.75);
    }
    if (!(x.back() - x.front() > 0.0)) return std::nullopt;
    try {
        const double m = estimate_mean(g, method);
        if (!std::isfinite(m)) return std::nullopt;
        return m;
    } catch (const EstimationError&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Parametric bootstrap SE of a mean estimator: nboot replicates of
/// draw -> summarize -> re-estimate from the fitted model. Failed replicates
/// are redrawn up to 10 times; more than 20% residual failures is an error.
inline double bootstrap_se_mean(const data::GroupSummary& g, MeanMethod method, int nboot,
                                rng::RngStream stream) {
    if (nboot < 2) throw std::invalid_argument("bootstrap_se_mean: nboot must be >= 2");
    detail::BootModel model;
    if (method == MeanMethod::qe) {
        const auto fit = qe_fit(g);
        model.family = fit.families[fit.best_index()];
    } else if (method == MeanMethod::bc) {
        model.transform = bc_fit(g);
    } else if (method == MeanMethod::mln) {
        model.transform = mln_fit(g);
    } else {
        throw InvalidConfig("se_method 'bootstrap' is only available with mean_method qe, bc, "
                            "or mln");
    }

    const auto sc = data::classify_group(g);
    std::vector<double> estimates;
    estimates.reserve(std::size_t(nboot));
    int failures = 0;
    for (int rep = 0; rep < nboot; ++rep) {
        rng::Engine eng(rng::substream(stream, std::uint64_t(rep) + 1));
        std::optional<double> est;
        for (int attempt = 0; attempt < 10 && !est; ++attempt)
            est = detail::bootstrap_replicate(model, sc, *g.n, method, eng);
        if (est) estimates.push_back(*est);
        else ++failures;
    }
    if (failures > nboot / 5)
        throw EstimationError("parametric bootstrap failure rate exceeded 20% of replicates");
    if (estimates.size() < 2)
        throw EstimationError("parametric bootstrap produced fewer than 2 usable replicates");
    return math::sample_sd(estimates);
}

/// SE of the study mean estimate: naive sd/sqrt(n), parametric bootstrap, or
/// the plug-in analytic SE of the order-statistic GLS estimator.
inline double estimate_se_mean(const data::GroupSummary& g, MeanMethod mean_method,
                               SeMethod se_method, SdMethod sd_method, int nboot,
                               rng::RngStream stream) {
    const auto sc = data::classify_group(g);
    if (sc != data::Scenario::s1 && sc != data::Scenario::s2 && sc != data::Scenario::s3)
        throw EstimationError("estimate_se_mean requires an S1/S2/S3 summary");
    switch (se_method) {
        case SeMethod::naive: return estimate_sd(g, sd_method) / std::sqrt(double(*g.n));
        case SeMethod::plugin:
            if (mean_method != MeanMethod::yang)
                throw InvalidConfig("se_method 'plugin' is only available with mean_method yang");
            return yang_fit(g).se_mu;
        case SeMethod::bootstrap: return bootstrap_se_mean(g, mean_method, nboot, stream);
    }
    throw EstimationError("unknown se method");
}

/// One study's mean-based effect: the group-1 mean for one-group studies,
/// group 1 minus group 2 for two-group studies, with SEs combined as
/// sqrt(se1^2 + se2^2). Reported mean/sd/n is used directly.
inline pool::EffectEstimate study_effect_mean(const data::StudySummary& s,
                                              const MethodConfig& cfg,
                                              std::size_t study_index) {
    const MeanMethod method = cfg.mean_method_for(study_index);

    const auto one = [&](const data::GroupSummary& g, int group_no) -> std::pair<double, double> {
        const auto sc = data::classify_group(g);
        if (sc == data::Scenario::mean_sd)
            return {*g.mean, *g.sd / std::sqrt(double(*g.n))};
        if (sc == data::Scenario::s1 || sc == data::Scenario::s2 || sc == data::Scenario::s3) {
            const rng::RngStream stream{cfg.seed,
                                        rng::stream_hash(study_index + 1, std::uint64_t(group_no))};
            try {
                const double m = estimate_mean(g, method);
                const double se =
                    estimate_se_mean(g, method, cfg.se_method, cfg.sd_method, cfg.nboot, stream);
                return {m, se};
            } catch (const EstimationError& e) {
                throw StudyError(s.id, "group " + std::to_string(group_no) + ": " + e.what());
            }
        }
        throw StudyError(s.id, "group " + std::to_string(group_no) +
                                   " reports neither an S1/S2/S3 summary nor mean/sd/n "
                                   "(scenario " + data::scenario_name(sc) + ")");
    };

    pool::EffectEstimate eff;
    eff.study_id = s.id;
    const auto [m1, se1] = one(s.g1, 1);
    if (!s.two_group()) {
        eff.y = m1;
        eff.se = se1;
        if (s.g1.n) eff.n_total = *s.g1.n;
        return eff;
    }
    const auto [m2, se2] = one(s.g2, 2);
    eff.y = m1 - m2;
    eff.se = std::sqrt(se1 * se1 + se2 * se2);
    if (s.g1.n && s.g2.n) eff.n_total = *s.g1.n + *s.g2.n;
    return eff;
}

} // namespace medipool::meanm
