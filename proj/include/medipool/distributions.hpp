#pragma once

#include "medipool/math.hpp"
#include "medipool/random.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

// The four candidate outcome families used by the quantile-matching and
// transform-based estimators. Sampling is inverse-CDF on uniform draws:
// slower than specialised samplers but deterministic given the stream.

namespace medipool::dist {

enum class Family { normal, log_normal, gamma, weibull };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::log_normal: return "log-normal";
        case Family::gamma: return "gamma";
        case Family::weibull: return "weibull";
    }
    return "?";
}

/// One parametric family with its two parameters:
///   normal(mu, sigma), log_normal(mu_log, sigma_log),
///   gamma(shape, rate), weibull(shape, scale).
struct DistFamily {
    Family family = Family::normal;
    double p1 = 0.0;
    double p2 = 1.0;
};

inline DistFamily normal(double mu, double sigma) {
    if (!std::isfinite(mu) || !(sigma > 0.0))
        throw std::invalid_argument("normal: requires finite mu and sigma > 0");
    return {Family::normal, mu, sigma};
}

inline DistFamily log_normal(double mu_log, double sigma_log) {
    if (!std::isfinite(mu_log) || !(sigma_log > 0.0))
        throw std::invalid_argument("log_normal: requires finite mu and sigma > 0");
    return {Family::log_normal, mu_log, sigma_log};
}

inline DistFamily gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("gamma: requires shape > 0 and rate > 0");
    return {Family::gamma, shape, rate};
}

inline DistFamily weibull(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("weibull: requires shape > 0 and scale > 0");
    return {Family::weibull, shape, scale};
}

inline double quantile(const DistFamily& d, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("dist quantile: p must be in (0, 1)");
    switch (d.family) {
        case Family::normal: return d.p1 + d.p2 * math::norm_quantile(p);
        case Family::log_normal: return std::exp(d.p1 + d.p2 * math::norm_quantile(p));
        case Family::gamma: return math::gamma_p_inv(d.p1, p) / d.p2;
        case Family::weibull: return d.p2 * std::pow(-std::log1p(-p), 1.0 / d.p1);
    }
    return 0.0;
}

inline double cdf(const DistFamily& d, double x) {
    switch (d.family) {
        case Family::normal: return math::norm_cdf((x - d.p1) / d.p2);
        case Family::log_normal:
            return x <= 0.0 ? 0.0 : math::norm_cdf((std::log(x) - d.p1) / d.p2);
        case Family::gamma: return x <= 0.0 ? 0.0 : math::gamma_p(d.p1, d.p2 * x);
        case Family::weibull:
            return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / d.p2, d.p1));
    }
    return 0.0;
}

inline double pdf(const DistFamily& d, double x) {
    switch (d.family) {
        case Family::normal: {
            const double z = (x - d.p1) / d.p2;
            return math::norm_pdf(z) / d.p2;
        }
        case Family::log_normal: {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - d.p1) / d.p2;
            return math::norm_pdf(z) / (x * d.p2);
        }
        case Family::gamma: {
            if (x <= 0.0) return 0.0;
            return std::exp(d.p1 * std::log(d.p2) + (d.p1 - 1.0) * std::log(x) - d.p2 * x -
                            std::lgamma(d.p1));
        }
        case Family::weibull: {
            if (x <= 0.0) return 0.0;
            const double r = x / d.p2;
            return (d.p1 / d.p2) * std::pow(r, d.p1 - 1.0) * std::exp(-std::pow(r, d.p1));
        }
    }
    return 0.0;
}

inline double mean(const DistFamily& d) {
    switch (d.family) {
        case Family::normal: return d.p1;
        case Family::log_normal: return std::exp(d.p1 + 0.5 * d.p2 * d.p2);
        case Family::gamma: return d.p1 / d.p2;
        case Family::weibull: return d.p2 * std::exp(std::lgamma(1.0 + 1.0 / d.p1));
    }
    return 0.0;
}

inline double sd(const DistFamily& d) {
    switch (d.family) {
        case Family::normal: return d.p2;
        case Family::log_normal: {
            const double s2 = d.p2 * d.p2;
            return std::exp(d.p1 + 0.5 * s2) * std::sqrt(std::expm1(s2));
        }
        case Family::gamma: return std::sqrt(d.p1) / d.p2;
        case Family::weibull: {
            const double g1 = std::exp(std::lgamma(1.0 + 1.0 / d.p1));
            const double g2 = std::exp(std::lgamma(1.0 + 2.0 / d.p1));
            return d.p2 * std::sqrt(std::max(0.0, g2 - g1 * g1));
        }
    }
    return 0.0;
}

inline std::vector<double> sample(const DistFamily& d, std::size_t n, rng::RngStream stream) {
    if (n == 0) throw std::invalid_argument("sample: n must be positive");
    rng::Engine eng(stream);
    std::vector<double> out(n);
    for (auto& v : out) v = quantile(d, eng.uniform01());
    return out;
}

} // namespace medipool::dist
