#pragma once

#include "medipool/describe.hpp"
#include "medipool/mean_methods.hpp"
#include "medipool/median_methods.hpp"
#include "medipool/methods.hpp"
#include "medipool/pooling.hpp"
#include "medipool/study_data.hpp"
#include "medipool/threading.hpp"

#include <optional>
#include <string>
#include <vector>

// Orchestration: per-study effect computation (in parallel, with per-study
// exclusion diagnostics) followed by the configured pooling stage.

namespace medipool {

struct EffectRecord {
    std::string id;
    double y = 0.0;
    std::optional<double> se;
    std::optional<std::int64_t> n_total;
    std::string scenario;  // "S2" or "MeanSd/S2" for two-group studies
    std::string method;
    std::optional<double> weight;  // raw pooling weight, filled after pooling
};

struct AnalysisRun {
    std::vector<EffectRecord> effects;
    std::optional<pool::PooledResult> pooled;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string scenario_label(const data::StudySummary& s) {
    std::string out = data::scenario_name(data::classify_group(s.g1));
    if (s.two_group()) out += std::string("/") + data::scenario_name(data::classify_group(s.g2));
    return out;
}

inline std::vector<pool::EffectEstimate> to_estimates(const std::vector<EffectRecord>& records) {
    std::vector<pool::EffectEstimate> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.id, r.y, r.se, r.n_total});
    return out;
}

inline void attach_weights(AnalysisRun& run) {
    if (!run.pooled || run.pooled->weights.size() != run.effects.size()) return;
    for (std::size_t i = 0; i < run.effects.size(); ++i)
        run.effects[i].weight = run.pooled->weights[i];
}

template <class PerStudy>
AnalysisRun collect_effects(const data::Dataset& ds, PerStudy&& per_study) {
    AnalysisRun run;
    std::vector<std::optional<EffectRecord>> slots(ds.studies.size());
    std::vector<std::string> warn_slots(ds.studies.size());
    par::parallel_for(ds.studies.size(), [&](std::size_t i) {
        try {
            slots[i] = per_study(ds.studies[i], i);
        } catch (const StudyError& e) {
            warn_slots[i] = "study '" + e.study_id + "' excluded: " + e.what();
        }
    });
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) run.effects.push_back(std::move(*slots[i]));
        if (!warn_slots[i].empty()) run.warnings.push_back(std::move(warn_slots[i]));
    }
    return run;
}

} // namespace detail

/// Mean-based meta-analysis: per-study mean (difference) effects and their
/// SEs, pooled by inverse variance unless cfg.pool is off.
inline AnalysisRun run_metamean(const data::Dataset& ds, const MethodConfig& cfg) {
    validate_mean_config(cfg, ds.studies.size());

    AnalysisRun run = detail::collect_effects(
        ds, [&](const data::StudySummary& s, std::size_t i) -> EffectRecord {
            const auto eff = meanm::study_effect_mean(s, cfg, i);
            EffectRecord rec;
            rec.id = eff.study_id;
            rec.y = eff.y;
            rec.se = eff.se;
            rec.n_total = eff.n_total;
            rec.scenario = detail::scenario_label(s);
            rec.method = to_string(cfg.mean_method_for(i));
            return rec;
        });

    if (!cfg.pool) return run;
    if (run.effects.size() < 2)
        throw InvalidConfig("fewer than 2 usable studies remain; cannot pool (" +
                            std::to_string(run.effects.size()) + " usable)");
    run.pooled = pool::pool_iv(detail::to_estimates(run.effects), cfg.model);
    run.pooled->method_label =
        ds.arity == data::Arity::two_group ? "Difference of Means" : "Mean";
    detail::attach_weights(run);
    return run;
}

/// Median-based meta-analysis: order-statistic pooling (mm/wm),
/// inverse-variance pooling with parametric median SEs (qe), or the
/// confidence-distribution route with jackknife variance (cd).
inline AnalysisRun run_metamedian(const data::Dataset& ds, const MethodConfig& cfg) {
    if (cfg.median_method == MedianMethod::cd && ds.arity == data::Arity::two_group)
        throw InvalidConfig("median_method 'cd' is applicable to one-group studies only");

    const bool two = ds.arity == data::Arity::two_group;
    AnalysisRun run = detail::collect_effects(
        ds, [&](const data::StudySummary& s, std::size_t i) -> EffectRecord {
            (void)i;
            EffectRecord rec;
            rec.scenario = detail::scenario_label(s);
            rec.method = to_string(cfg.median_method);
            if (cfg.median_method == MedianMethod::cd) {
                try {
                    const auto cd = medianm::cd_within_study(s.g1);
                    rec.id = s.id;
                    rec.y = cd.point;
                    rec.se = cd.se;
                    if (s.g1.n) rec.n_total = *s.g1.n;
                } catch (const medianm::EstimationError& e) {
                    throw StudyError(s.id, e.what());
                }
                return rec;
            }
            const auto eff = medianm::study_effect_median(s, cfg);
            rec.id = eff.study_id;
            rec.y = eff.y;
            rec.n_total = eff.n_total;
            if (cfg.median_method == MedianMethod::qe) {
                try {
                    const double se1 = medianm::qe_median_se(s.g1);
                    if (two) {
                        const double se2 = medianm::qe_median_se(s.g2);
                        rec.se = std::sqrt(se1 * se1 + se2 * se2);
                    } else {
                        rec.se = se1;
                    }
                } catch (const medianm::EstimationError& e) {
                    throw StudyError(s.id, e.what());
                }
            }
            return rec;
        });

    if (!cfg.pool) return run;
    if (run.effects.empty()) throw InvalidConfig("no usable studies remain");

    const auto estimates = detail::to_estimates(run.effects);
    switch (cfg.median_method) {
        case MedianMethod::mm:
        case MedianMethod::wm: {
            const bool weighted = cfg.median_method == MedianMethod::wm;
            run.pooled = medianm::pool_order_stat(estimates, weighted, cfg.model.level);
            if (two)
                run.pooled->method_label = weighted ? "Weighted Median of the Difference of "
                                                      "Medians (WMDM)"
                                                    : "Median of the Difference of Medians (MDM)";
            else
                run.pooled->method_label =
                    weighted ? "Weighted Median of Medians (WM)" : "Median of Medians (MM)";
            break;
        }
        case MedianMethod::qe:
            if (run.effects.size() < 2)
                throw InvalidConfig("fewer than 2 usable studies remain; cannot pool");
            run.pooled = pool::pool_iv(estimates, cfg.model);
            run.pooled->method_label = two ? "Difference of Medians" : "Median";
            break;
        case MedianMethod::cd:
            if (run.effects.size() < 2)
                throw InvalidConfig("fewer than 2 usable studies remain; cannot pool");
            run.pooled = medianm::cd_pool(estimates, cfg.model);
            break;
    }
    detail::attach_weights(run);
    return run;
}

/// Pooling-only entry point: re-pools previously computed per-study effects
/// (the --no-pool output) without touching the estimation stage.
inline AnalysisRun pool_effect_records(std::vector<EffectRecord> records,
                                       const pool::PoolModel& model) {
    AnalysisRun run;
    run.effects = std::move(records);
    if (run.effects.size() < 2)
        throw InvalidConfig("pooling requires at least 2 study effects");
    run.pooled = pool::pool_iv(detail::to_estimates(run.effects), model);
    detail::attach_weights(run);
    return run;
}

} // namespace medipool
