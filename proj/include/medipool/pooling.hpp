#pragma once

#include "medipool/math.hpp"
#include "medipool/optimize.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Inverse-variance meta-analysis engine: common-effect and random-effects
// pooling, DL and REML between-study variance estimation, heterogeneity
// statistics, and Q-profile confidence intervals for tau^2.

namespace medipool::pool {

/// One study's outcome-measure estimate. `se` may be absent for the
/// order-statistic pooling methods; `n_total` feeds sample-size weighting.
struct EffectEstimate {
    std::string study_id;
    double y = 0.0;
    std::optional<double> se;
    std::optional<std::int64_t> n_total;
};

enum class ModelKind { common, random };
enum class Tau2Method { dl, reml };

struct PoolModel {
    ModelKind kind = ModelKind::random;
    Tau2Method tau2 = Tau2Method::reml;
    double level = 0.95;
};

inline const char* tau2_method_name(Tau2Method m) {
    return m == Tau2Method::reml ? "REML" : "DL";
}

struct OrderStatCI {
    double lower = 0.0;
    double upper = 0.0;
    double achieved_coverage = 0.0;
    int lower_rank = 1;
    int upper_rank = 1;
    bool below_nominal = false;
};

struct Tau2CI {
    double lb = 0.0;
    double ub = 0.0;
    bool at_zero = false;  // Q(0) already below the lower chi-square quantile
};

struct PooledResult {
    std::string method_label;
    ModelKind model = ModelKind::random;
    std::string tau2_method_label;  // empty when no tau^2 estimator was involved
    int k = 0;
    double level = 0.95;

    double estimate = 0.0;
    std::optional<double> se;
    double ci_lb = 0.0, ci_ub = 0.0;
    std::optional<double> zval, pval;
    bool t_based_ci = false;  // jackknife CI uses t_{k-1}

    std::optional<double> tau2, tau2_se;
    std::optional<Tau2CI> tau2_ci;
    std::optional<double> i2, h2, q;
    std::optional<int> q_df;
    std::optional<double> q_pval;
    std::optional<std::pair<double, double>> i2_ci;

    std::vector<double> weights;  // per study, in input order
    std::optional<OrderStatCI> order_ci;
    bool tau2_converged = true;
};

namespace detail {

inline void require_se(const std::vector<EffectEstimate>& effects, const char* who) {
    for (const auto& e : effects)
        if (!e.se || !(*e.se > 0.0))
            throw std::invalid_argument(std::string(who) +
                                        ": every effect needs a positive standard error");
}

inline double weighted_mu(const std::vector<EffectEstimate>& effects, double tau2) {
    double sw = 0.0, swy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se + tau2);
        sw += w;
        swy += w * e.y;
    }
    return swy / sw;
}

} // namespace detail

/// DerSimonian-Laird moment estimator, truncated at zero.
inline double tau2_dl(const std::vector<EffectEstimate>& effects) {
    if (effects.size() < 2) throw std::invalid_argument("tau2_dl: need at least 2 effects");
    detail::require_se(effects, "tau2_dl");
    double sw = 0.0, sw2 = 0.0, swy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se);
        sw += w;
        sw2 += w * w;
        swy += w * e.y;
    }
    const double mu = swy / sw;
    double q = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se);
        q += w * (e.y - mu) * (e.y - mu);
    }
    const double denom = sw - sw2 / sw;
    if (!(denom > 0.0)) return 0.0;
    return std::max(0.0, (q - double(effects.size() - 1)) / denom);
}

/// Restricted log-likelihood of tau2 (additive constants dropped). Exposed
/// for the grid-search oracle used in tests.
inline double reml_loglik(const std::vector<EffectEstimate>& effects, double tau2) {
    double sw = 0.0, swy = 0.0, logdet = 0.0;
    for (const auto& e : effects) {
        const double v = *e.se * *e.se + tau2;
        sw += 1.0 / v;
        swy += e.y / v;
        logdet += std::log(v);
    }
    const double mu = swy / sw;
    double quad = 0.0;
    for (const auto& e : effects) {
        const double v = *e.se * *e.se + tau2;
        quad += (e.y - mu) * (e.y - mu) / v;
    }
    return -0.5 * (logdet + std::log(sw) + quad);
}

struct RemlResult {
    double tau2 = 0.0;
    double se = 0.0;
    bool converged = true;
};

/// REML via the standard fixed-point update, started at the DL estimate and
/// truncated at zero each step. The reported SE comes from the information of
/// the restricted likelihood at the solution.
inline RemlResult tau2_reml(const std::vector<EffectEstimate>& effects, double tol = 1e-8,
                            int max_iter = 100) {
    if (effects.size() < 2) throw std::invalid_argument("tau2_reml: need at least 2 effects");
    detail::require_se(effects, "tau2_reml");

    double tau2 = tau2_dl(effects);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        const double mu = detail::weighted_mu(effects, tau2);
        double sw = 0.0, sw2 = 0.0, num = 0.0;
        for (const auto& e : effects) {
            const double v = *e.se * *e.se + tau2;
            const double w = 1.0 / v;
            sw += w;
            sw2 += w * w;
            num += w * w * ((e.y - mu) * (e.y - mu) - *e.se * *e.se);
        }
        const double next = std::max(0.0, num / sw2 + 1.0 / sw);
        const double delta = std::abs(next - tau2);
        tau2 = next;
        if (delta <= tol || delta <= 1e-10 * (1.0 + tau2)) {
            converged = true;
            break;
        }
    }

    // Information of the restricted likelihood: tr(P P)/2 with
    // P = W - w w^T / sum(w), evaluated at the solution.
    double sw = 0.0, sw2 = 0.0, sw3 = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se + tau2);
        sw += w;
        sw2 += w * w;
        sw3 += w * w * w;
    }
    const double tr_pp = sw2 - 2.0 * sw3 / sw + (sw2 * sw2) / (sw * sw);
    const double se = tr_pp > 0.0 ? std::sqrt(2.0 / tr_pp) : 0.0;
    return {tau2, se, converged};
}

struct Heterogeneity {
    double q = 0.0;
    int df = 0;
    double pval = 1.0;
    double i2 = 0.0;
    double h2 = 1.0;
    double s2 = 0.0;  // typical within-study variance
};

/// Cochran Q against the common-effect fit, plus I^2/H^2 derived from tau2
/// and the typical within-study variance.
inline Heterogeneity heterogeneity_stats(const std::vector<EffectEstimate>& effects, double tau2) {
    if (effects.size() < 2) throw std::invalid_argument("heterogeneity_stats: need >= 2 effects");
    detail::require_se(effects, "heterogeneity_stats");
    double sw = 0.0, sw2 = 0.0, swy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se);
        sw += w;
        sw2 += w * w;
        swy += w * e.y;
    }
    const double mu = swy / sw;
    Heterogeneity h;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se);
        h.q += w * (e.y - mu) * (e.y - mu);
    }
    h.df = int(effects.size()) - 1;
    h.pval = math::chi2_sf(h.q, double(h.df));
    h.s2 = double(h.df) * sw / (sw * sw - sw2);
    h.i2 = 100.0 * tau2 / (tau2 + h.s2);
    h.h2 = (tau2 + h.s2) / h.s2;
    return h;
}

/// Generalized Q statistic profiled over tau2.
inline double q_generalized(const std::vector<EffectEstimate>& effects, double tau2) {
    const double mu = detail::weighted_mu(effects, tau2);
    double q = 0.0;
    for (const auto& e : effects)
        q += (e.y - mu) * (e.y - mu) / (*e.se * *e.se + tau2);
    return q;
}

/// Q-profile CI for tau2: endpoints invert the generalized Q against the
/// chi-square quantiles. Degenerate data (Q(0) below the lower quantile)
/// yields [0, 0] flagged.
inline Tau2CI tau2_ci_qprofile(const std::vector<EffectEstimate>& effects, double level) {
    if (effects.size() < 2) throw std::invalid_argument("tau2_ci_qprofile: need >= 2 effects");
    detail::require_se(effects, "tau2_ci_qprofile");
    const double df = double(effects.size() - 1);
    const double chi_lo = math::chi2_quantile(0.5 * (1.0 - level), df);
    const double chi_hi = math::chi2_quantile(0.5 * (1.0 + level), df);
    const double q0 = q_generalized(effects, 0.0);

    if (q0 < chi_lo) return {0.0, 0.0, true};

    const auto solve = [&](double target) {
        double hi = 1.0;
        for (const auto& e : effects) hi = std::max(hi, *e.se * *e.se);
        while (q_generalized(effects, hi) > target && hi < 1e100) hi *= 4.0;
        const auto f = [&](double t) { return q_generalized(effects, t) - target; };
        return opt::find_root(f, 0.0, hi, 1e-11 * (1.0 + hi));
    };

    Tau2CI ci;
    ci.lb = q0 <= chi_hi ? 0.0 : solve(chi_hi);
    ci.ub = solve(chi_lo);
    return ci;
}

/// Classic inverse-variance pooling. Common effect: w = 1/se^2; random
/// effects: w = 1/(se^2 + tau2) with tau2 from the configured estimator.
inline PooledResult pool_iv(const std::vector<EffectEstimate>& effects, const PoolModel& model) {
    if (effects.size() < 2) throw std::invalid_argument("pool_iv: need at least 2 effects");
    detail::require_se(effects, "pool_iv");

    PooledResult res;
    res.model = model.kind;
    res.k = int(effects.size());
    res.level = model.level;

    double tau2 = 0.0;
    if (model.kind == ModelKind::random) {
        if (model.tau2 == Tau2Method::reml) {
            const auto r = tau2_reml(effects);
            tau2 = r.tau2;
            res.tau2_se = r.se;
            res.tau2_converged = r.converged;
        } else {
            tau2 = tau2_dl(effects);
        }
        res.tau2 = tau2;
        res.tau2_method_label = tau2_method_name(model.tau2);
        res.tau2_ci = tau2_ci_qprofile(effects, model.level);
    }

    double sw = 0.0, swy = 0.0;
    res.weights.reserve(effects.size());
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se + tau2);
        res.weights.push_back(w);
        sw += w;
        swy += w * e.y;
    }
    res.estimate = swy / sw;
    const double se = std::sqrt(1.0 / sw);
    res.se = se;
    const double zq = math::norm_quantile(0.5 * (1.0 + model.level));
    res.ci_lb = res.estimate - zq * se;
    res.ci_ub = res.estimate + zq * se;
    res.zval = res.estimate / se;
    res.pval = 2.0 * math::norm_cdf(-std::abs(*res.zval));

    // Heterogeneity description; under the common-effect model the DL moment
    // estimate gives the usual (Q - df)/Q form of I^2.
    const double tau2_desc = model.kind == ModelKind::random ? tau2 : tau2_dl(effects);
    const auto h = heterogeneity_stats(effects, tau2_desc);
    res.q = h.q;
    res.q_df = h.df;
    res.q_pval = h.pval;
    res.i2 = h.i2;
    res.h2 = h.h2;
    if (res.tau2_ci) {
        const auto to_i2 = [&](double t) { return 100.0 * t / (t + h.s2); };
        res.i2_ci = {to_i2(res.tau2_ci->lb), to_i2(res.tau2_ci->ub)};
    }
    return res;
}

} // namespace medipool::pool
