#pragma once

#include "medipool/analysis.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

// Text and machine-readable rendering of analysis runs. The text layout
// mirrors the classic meta-analysis output block; JSON carries the same
// numbers at full precision.

namespace medipool::report {

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline std::string fmt_pval(double p) { return p < 0.0001 ? "<.0001" : fixed(p, 4); }

inline std::string signif_stars(double p) {
    if (p <= 0.001) return "***";
    if (p <= 0.01) return "**";
    if (p <= 0.05) return "*";
    if (p <= 0.1) return ".";
    return "";
}

namespace detail {

inline std::string pad_left(std::string s, std::size_t w) {
    while (s.size() < w) s.insert(s.begin(), ' ');
    return s;
}

inline std::string table(const std::vector<std::string>& headers,
                         const std::vector<std::string>& cells, const std::string& trailer) {
    std::vector<std::size_t> w(headers.size());
    for (std::size_t i = 0; i < headers.size(); ++i)
        w[i] = std::max(headers[i].size(), cells[i].size());
    std::string h, r;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i) {
            h += "  ";
            r += "  ";
        }
        h += pad_left(headers[i], w[i]);
        r += pad_left(cells[i], w[i]);
    }
    std::string out = h + "\n" + r;
    if (!trailer.empty()) out += "  " + trailer;
    out += "\n";
    return out;
}

} // namespace detail

/// The pooled-result block: model header, heterogeneity lines, Q test, and
/// the model-results table with significance codes.
inline std::string render_pooled_block(const pool::PooledResult& p) {
    std::string out;

    if (p.order_ci) {
        out += p.method_label + " (k = " + std::to_string(p.k) + ")\n\n";
        out += "Model Results:\n\n";
        out += detail::table(
            {"estimate", "ci.lb", "ci.ub", "coverage"},
            {fixed(p.estimate), fixed(p.ci_lb), fixed(p.ci_ub),
             fixed(p.order_ci->achieved_coverage)},
            "");
        out += "\nCI from order statistics of the study estimates (ranks " +
               std::to_string(p.order_ci->lower_rank) + " and " +
               std::to_string(p.order_ci->upper_rank) + ").\n";
        if (p.order_ci->below_nominal)
            out += "Note: achieved coverage " + fixed(p.order_ci->achieved_coverage) +
                   " is below the nominal " + fixed(p.level, 2) + " level.\n";
        return out;
    }

    std::string header;
    if (!p.method_label.empty() && p.method_label == "Confidence Distribution (CD)") {
        header = p.method_label + " Method (k = " + std::to_string(p.k);
    } else {
        header = (p.model == pool::ModelKind::random ? "Random-Effects Model (k = "
                                                     : "Common-Effect Model (k = ") +
                 std::to_string(p.k);
    }
    if (!p.tau2_method_label.empty()) header += "; tau^2 estimator: " + p.tau2_method_label;
    header += ")";
    out += header + "\n\n";

    if (p.tau2) {
        out += "tau^2 (estimated amount of total heterogeneity): " + fixed(*p.tau2);
        if (p.tau2_se) out += " (SE = " + fixed(*p.tau2_se) + ")";
        out += "\n";
        out += "tau (square root of estimated tau^2 value):      " +
               fixed(std::sqrt(*p.tau2)) + "\n";
    }
    if (p.i2) out += "I^2 (total heterogeneity / total variability):   " + fixed(*p.i2, 2) + "%\n";
    if (p.h2) out += "H^2 (total variability / sampling variability):  " + fixed(*p.h2, 2) + "\n";
    if (p.tau2 || p.i2 || p.h2) out += "\n";

    if (p.q && p.q_df && p.q_pval) {
        out += "Test for Heterogeneity:\n";
        out += "Q(df = " + std::to_string(*p.q_df) + ") = " + fixed(*p.q) + ", p-val " +
               (*p.q_pval < 0.0001 ? "< .0001" : "= " + fixed(*p.q_pval)) + "\n\n";
    }

    out += "Model Results:\n\n";
    const char* stat_name = p.t_based_ci ? "tval" : "zval";
    std::vector<std::string> headers{"estimate", "se", stat_name, "pval", "ci.lb", "ci.ub"};
    std::vector<std::string> cells{fixed(p.estimate),
                                   p.se ? fixed(*p.se) : "NA",
                                   p.zval ? fixed(*p.zval) : "NA",
                                   p.pval ? fmt_pval(*p.pval) : "NA",
                                   fixed(p.ci_lb),
                                   fixed(p.ci_ub)};
    out += detail::table(headers, cells, p.pval ? signif_stars(*p.pval) : "");
    out += "\n---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";

    if (p.t_based_ci)
        out += "\nSE from the leave-one-out jackknife; CI uses the t distribution (df = " +
               std::to_string(p.k - 1) + ").\n";
    if (!p.tau2_converged)
        out += "\nWarning: tau^2 estimation did not converge; last iterate reported.\n";
    return out;
}

inline std::string render_effects_text(const AnalysisRun& run) {
    std::string out = "Study-specific estimates (k = " + std::to_string(run.effects.size()) +
                      ")\n\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"id", "y", "se", "n", "scenario", "method"});
    for (const auto& e : run.effects)
        rows.push_back({e.id, fixed(e.y), e.se ? fixed(*e.se) : "NA",
                        e.n_total ? std::to_string(*e.n_total) : "NA", e.scenario, e.method});
    std::vector<std::size_t> w(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) line += "  ";
            line += detail::pad_left(r[c], w[c]);
        }
        out += line + "\n";
    }
    return out;
}

inline std::string render_run_text(const AnalysisRun& run) {
    std::string out;
    if (run.pooled) out = render_pooled_block(*run.pooled);
    else out = render_effects_text(run);
    if (!run.warnings.empty()) {
        out += "\n";
        for (const auto& w : run.warnings) out += "Warning: " + w + "\n";
    }
    return out;
}

inline nlohmann::ordered_json run_to_json(const AnalysisRun& run) {
    using json = nlohmann::ordered_json;
    json j;
    const auto* p = run.pooled ? &*run.pooled : nullptr;

    const auto set_opt = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? json(*v) : json(nullptr);
    };

    if (p) {
        std::string model = p->model == pool::ModelKind::random ? "random-effects"
                                                                : "common-effect";
        if (!p->tau2_method_label.empty()) model += " (" + p->tau2_method_label + ")";
        if (!p->method_label.empty()) model += "; " + p->method_label;
        j["model"] = model;
    } else {
        j["model"] = nullptr;
    }
    j["k"] = p ? p->k : int(run.effects.size());
    j["estimate"] = p ? json(p->estimate) : json(nullptr);
    set_opt("se", p ? p->se : std::nullopt);
    j["ci"] = p ? json::array({p->ci_lb, p->ci_ub}) : json(nullptr);
    set_opt("tau2", p ? p->tau2 : std::nullopt);
    if (p && p->tau2_ci) j["tau2_ci"] = json::array({p->tau2_ci->lb, p->tau2_ci->ub});
    else j["tau2_ci"] = nullptr;
    set_opt("i2", p ? p->i2 : std::nullopt);
    set_opt("h2", p ? p->h2 : std::nullopt);
    set_opt("q", p ? p->q : std::nullopt);
    if (p && p->q_df) j["q_df"] = *p->q_df;
    else j["q_df"] = nullptr;
    set_opt("q_pval", p ? p->q_pval : std::nullopt);
    if (p && p->order_ci) {
        j["order_ci"] = {{"lower", p->order_ci->lower},
                         {"upper", p->order_ci->upper},
                         {"achieved_coverage", p->order_ci->achieved_coverage},
                         {"lower_rank", p->order_ci->lower_rank},
                         {"upper_rank", p->order_ci->upper_rank},
                         {"below_nominal", p->order_ci->below_nominal}};
    }

    j["studies"] = json::array();
    for (const auto& e : run.effects) {
        json s;
        s["id"] = e.id;
        s["y"] = e.y;
        s["se"] = e.se ? json(*e.se) : json(nullptr);
        s["weight"] = e.weight ? json(*e.weight) : json(nullptr);
        s["scenario"] = e.scenario;
        s["method"] = e.method;
        j["studies"].push_back(std::move(s));
    }
    j["warnings"] = run.warnings;
    return j;
}

/// Re-reads per-study effects from the JSON emitted with --no-pool.
inline std::vector<EffectRecord> effect_records_from_json(const nlohmann::ordered_json& j) {
    std::vector<EffectRecord> out;
    if (!j.contains("studies") || !j["studies"].is_array())
        throw data::ParseError("effects JSON: missing 'studies' array");
    for (const auto& s : j["studies"]) {
        EffectRecord r;
        r.id = s.value("id", std::string{});
        if (!s.contains("y") || !s["y"].is_number())
            throw data::ParseError("effects JSON: study '" + r.id + "' lacks a numeric 'y'");
        r.y = s["y"].get<double>();
        if (s.contains("se") && s["se"].is_number()) r.se = s["se"].get<double>();
        if (s.contains("scenario") && s["scenario"].is_string())
            r.scenario = s["scenario"].get<std::string>();
        if (s.contains("method") && s["method"].is_string())
            r.method = s["method"].get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace medipool::report
