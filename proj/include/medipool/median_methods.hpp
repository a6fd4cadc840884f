#pragma once

#include "medipool/mean_methods.hpp"
#include "medipool/math.hpp"
#include "medipool/methods.hpp"
#include "medipool/pooling.hpp"
#include "medipool/study_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Median-based pooling: order-statistic median-of-medians (plain and
// sample-size weighted), inverse-variance pooling with parametric median SEs,
// and the confidence-distribution route with jackknife variance.

namespace medipool::medianm {

using meanm::EstimationError;

/// One study's median (or difference-of-medians) effect. Groups reporting
/// only a mean contribute it in place of the median (symmetry assumption).
/// SEs are attached only by the qe/cd paths.
inline pool::EffectEstimate study_effect_median(const data::StudySummary& s,
                                                const MethodConfig& cfg) {
    const bool needs_se = cfg.median_method == MedianMethod::qe;

    const auto one = [&](const data::GroupSummary& g, int group_no) -> double {
        if (needs_se) {
            const auto sc = data::classify_group(g);
            if (sc == data::Scenario::mean_sd) return *g.mean;
            if (sc == data::Scenario::s1 || sc == data::Scenario::s2 || sc == data::Scenario::s3)
                return *g.med;
            throw StudyError(s.id, "group " + std::to_string(group_no) +
                                       ": the qe median method needs an S1/S2/S3 summary or "
                                       "mean/sd/n (scenario " + data::scenario_name(sc) + ")");
        }
        if (g.med) return *g.med;
        if (g.mean) return *g.mean;
        throw StudyError(s.id, "group " + std::to_string(group_no) +
                                   " reports neither a median nor a mean");
    };

    pool::EffectEstimate eff;
    eff.study_id = s.id;
    const double v1 = one(s.g1, 1);
    if (!s.two_group()) {
        eff.y = v1;
        if (s.g1.n) eff.n_total = *s.g1.n;
    } else {
        eff.y = v1 - one(s.g2, 2);
        if (s.g1.n && s.g2.n) eff.n_total = *s.g1.n + *s.g2.n;
    }
    return eff;
}

/// Parametric SE of a study median: 1/(2 f(med) sqrt(n)) with f the
/// weight-averaged quantile-matched density at the reported median; groups
/// reporting mean/sd/n contribute sd/sqrt(n).
inline double qe_median_se(const data::GroupSummary& g) {
    const auto sc = data::classify_group(g);
    if (sc == data::Scenario::mean_sd) return *g.sd / std::sqrt(double(*g.n));
    if (sc != data::Scenario::s1 && sc != data::Scenario::s2 && sc != data::Scenario::s3)
        throw EstimationError(std::string("qe_median_se requires an S1/S2/S3 or mean/sd/n "
                                          "summary (scenario is ") + data::scenario_name(sc) + ")");
    const auto fit = meanm::qe_fit(g);
    const double f = fit.density_at(*g.med);
    if (!(f > 0.0) || !std::isfinite(f))
        throw EstimationError("fitted density at the reported median is zero");
    return 1.0 / (2.0 * f * std::sqrt(double(*g.n)));
}

namespace detail {

/// Largest rank r with P(Bin(K, 1/2) <= r-1) <= (1-level)/2, or 0 when even
/// r = 1 overshoots (the CI then falls back to the sample range).
inline int order_stat_rank(int k, double level) {
    const double target = 0.5 * (1.0 - level);
    int r = 0;
    for (int cand = 1; 2 * cand <= k + 1; ++cand) {
        if (math::binom_cdf(cand - 1, k, 0.5) <= target) r = cand;
        else break;
    }
    return r;
}

} // namespace detail

/// Median-of-medians pooling. Unweighted: sample median with the binomial
/// order-statistic CI. Weighted: weighted median with CI endpoints at the
/// weighted-empirical quantiles matching the unweighted ranks.
inline pool::PooledResult pool_order_stat(const std::vector<pool::EffectEstimate>& effects,
                                          bool weighted, double level) {
    if (effects.empty()) throw std::invalid_argument("pool_order_stat: no effects");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("pool_order_stat: level must be in (0, 1)");
    const int k = int(effects.size());

    std::vector<double> weights(effects.size(), 1.0);
    if (weighted) {
        for (std::size_t i = 0; i < effects.size(); ++i) {
            if (!effects[i].n_total)
                throw std::invalid_argument(
                    "pool_order_stat: weighted pooling needs a sample size for every study");
            weights[i] = double(*effects[i].n_total);
        }
    }

    std::vector<std::size_t> order(effects.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return effects[a].y < effects[b].y; });

    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);

    double point;
    if (!weighted) {
        point = (k % 2 == 1)
                    ? effects[order[std::size_t(k / 2)]].y
                    : 0.5 * (effects[order[std::size_t(k / 2 - 1)]].y +
                             effects[order[std::size_t(k / 2)]].y);
    } else {
        point = effects[order.back()].y;
        double cum = 0.0;
        for (std::size_t i : order) {
            cum += weights[i] / wsum;
            if (cum >= 0.5) {
                point = effects[i].y;
                break;
            }
        }
    }

    int r = detail::order_stat_rank(k, level);
    const bool attainable = r >= 1;
    if (!attainable) r = 1;
    pool::OrderStatCI ci;
    ci.lower_rank = r;
    ci.upper_rank = k - r + 1;
    ci.achieved_coverage = 1.0 - 2.0 * math::binom_cdf(r - 1, k, 0.5);
    ci.below_nominal = ci.achieved_coverage < level;

    if (!weighted) {
        ci.lower = effects[order[std::size_t(r - 1)]].y;
        ci.upper = effects[order[std::size_t(k - r)]].y;
    } else {
        const double p = double(r) / double(k);
        double cum = 0.0;
        ci.lower = effects[order.back()].y;
        for (std::size_t i : order) {
            cum += weights[i] / wsum;
            if (cum >= p - 1e-12) {
                ci.lower = effects[i].y;
                break;
            }
        }
        cum = 0.0;
        ci.upper = effects[order.front()].y;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            cum += weights[*it] / wsum;
            if (cum >= p - 1e-12) {
                ci.upper = effects[*it].y;
                break;
            }
        }
    }

    pool::PooledResult res;
    res.k = k;
    res.level = level;
    res.estimate = point;
    res.ci_lb = ci.lower;
    res.ci_ub = ci.upper;
    res.order_ci = ci;
    res.weights.resize(effects.size());
    for (std::size_t i = 0; i < effects.size(); ++i) res.weights[i] = weights[i] / wsum;
    return res;
}

// --- confidence distribution method ----------------------------------------

struct CdPoint {
    double point = 0.0;
    double se = 0.0;
};

/// Within-study point and SE from CI-type summaries:
///   C1/C2: reported median CI with its tail levels;
///   C3: median plus its variance; C4: mean/sd/n;
///   C5: quartiles treated as the order-statistic CI at ranks ceil(n/4),
///   ceil(3n/4) with exact binomial tail levels.
inline CdPoint cd_within_study(const data::GroupSummary& g) {
    const auto sc = data::classify_group(g);
    switch (sc) {
        case data::Scenario::c3: {
            if (!(*g.med_var > 0.0)) throw EstimationError("med.var must be > 0");
            return {*g.med, std::sqrt(*g.med_var)};
        }
        case data::Scenario::mean_sd:
            return {*g.mean, *g.sd / std::sqrt(double(*g.n))};
        case data::Scenario::c1_or_c2: {
            const double L = *g.med_ci_lb, U = *g.med_ci_ub;
            if (U < L) throw EstimationError("median CI has upper bound below lower bound");
            const double denom = math::norm_quantile(1.0 - *g.alpha1) +
                                 math::norm_quantile(1.0 - *g.alpha2);
            if (!(denom > 0.0))
                throw EstimationError("alpha.1 + alpha.2 must be below 1");
            const double se = (U - L) / denom;
            if (!(se > 0.0)) throw EstimationError("median CI has zero width");
            return {g.med ? *g.med : 0.5 * (L + U), se};
        }
        case data::Scenario::s2:
        case data::Scenario::s3: {
            const std::int64_t n = *g.n;
            if (n < 2) throw EstimationError("cd estimation requires n >= 2");
            if (!(*g.q3 > *g.q1)) throw EstimationError("quartiles have zero spread");
            const std::int64_t r = (n + 3) / 4;       // ceil(n/4)
            const std::int64_t s = (3 * n + 3) / 4;   // ceil(3n/4)
            const double log_a1 = math::log_binom_cdf(r - 1, n, 0.5);
            const double log_a2 = math::log_binom_cdf(n - s, n, 0.5);  // P(X >= s), p = 1/2
            const double z1 = -math::norm_quantile_log(log_a1);
            const double z2 = -math::norm_quantile_log(log_a2);
            if (!(z1 + z2 > 0.0)) throw EstimationError("tail levels leave no interval coverage");
            return {*g.med, (*g.q3 - *g.q1) / (z1 + z2)};
        }
        default:
            throw EstimationError(std::string("scenario ") + data::scenario_name(sc) +
                                  " is not usable by the cd method");
    }
}

namespace detail {

inline double cd_pooled_point(const std::vector<pool::EffectEstimate>& effects,
                              const pool::PoolModel& model) {
    double tau2 = 0.0;
    if (model.kind == pool::ModelKind::random && effects.size() >= 2)
        tau2 = model.tau2 == pool::Tau2Method::reml ? pool::tau2_reml(effects).tau2
                                                    : pool::tau2_dl(effects);
    double sw = 0.0, swy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (*e.se * *e.se + tau2);
        sw += w;
        swy += w * e.y;
    }
    return swy / sw;
}

} // namespace detail

/// Inverse-variance pooled estimate with a leave-one-study-out jackknife
/// variance and a t-based CI. tau^2 is reported but has no CI here.
inline pool::PooledResult cd_pool(const std::vector<pool::EffectEstimate>& effects,
                                  const pool::PoolModel& model) {
    if (effects.size() < 2) throw std::invalid_argument("cd_pool: need at least 2 effects");
    for (const auto& e : effects)
        if (!e.se || !(*e.se > 0.0))
            throw std::invalid_argument("cd_pool: every effect needs a positive standard error");

    const int k = int(effects.size());
    pool::PooledResult res;
    res.method_label = "Confidence Distribution (CD)";
    res.model = model.kind;
    res.k = k;
    res.level = model.level;
    res.t_based_ci = true;

    double tau2 = 0.0;
    if (model.kind == pool::ModelKind::random) {
        tau2 = model.tau2 == pool::Tau2Method::reml ? pool::tau2_reml(effects).tau2
                                                    : pool::tau2_dl(effects);
        res.tau2 = tau2;
        res.tau2_method_label = pool::tau2_method_name(model.tau2);
    }
    res.estimate = detail::cd_pooled_point(effects, model);

    res.weights.reserve(effects.size());
    for (const auto& e : effects) res.weights.push_back(1.0 / (*e.se * *e.se + tau2));

    std::vector<double> loo(effects.size());
    for (std::size_t omit = 0; omit < effects.size(); ++omit) {
        std::vector<pool::EffectEstimate> subset;
        subset.reserve(effects.size() - 1);
        for (std::size_t i = 0; i < effects.size(); ++i)
            if (i != omit) subset.push_back(effects[i]);
        loo[omit] = detail::cd_pooled_point(subset, model);
    }
    const double lbar = math::sample_mean(loo);
    double ss = 0.0;
    for (double v : loo) ss += (v - lbar) * (v - lbar);
    const double var = double(k - 1) / double(k) * ss;
    const double se = std::sqrt(var);
    res.se = se;

    const double tq = math::student_t_quantile(0.5 * (1.0 + model.level), double(k - 1));
    res.ci_lb = res.estimate - tq * se;
    res.ci_ub = res.estimate + tq * se;
    if (se > 0.0) {
        res.zval = res.estimate / se;
        res.pval = 2.0 * (1.0 - math::student_t_cdf(std::abs(*res.zval), double(k - 1)));
    }
    return res;
}

} // namespace medipool::medianm
