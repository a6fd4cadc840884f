#pragma once

#include "medipool/math.hpp"
#include "medipool/study_data.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Descriptive pre-analysis report: reporting-scenario counts per group and
// the five-number summary (plus mean) of the study-specific Bowley skewness
// values.

namespace medipool::desc {

/// Quartile skewness (q3 + q1 - 2 med)/(q3 - q1), in [-1, 1] for ordered
/// quartiles. Undefined when q1 = q3.
inline double bowley(double q1, double med, double q3) {
    if (!(q1 < q3)) throw std::invalid_argument("bowley: requires q1 < q3");
    return (q3 + q1 - 2.0 * med) / (q3 - q1);
}

struct BowleySummary {
    double min = 0.0, q1 = 0.0, median = 0.0, mean = 0.0, q3 = 0.0, max = 0.0;
    int count = 0;
};

struct CdCounts {
    int c1_or_c2 = 0;
    int c3 = 0;
    int c4 = 0;  // mean, sd, n
    int c5 = 0;  // q1, med, q3, n
    int other = 0;
};

struct GroupDescription {
    int n_studies = 0;
    int n_median = 0;
    int n_s1 = 0, n_s2 = 0, n_s3 = 0;
    int n_mean = 0;
    int n_mean_sd_n = 0;
    std::optional<CdCounts> cd;
    std::optional<BowleySummary> bowley;
};

struct DescriptionReport {
    std::vector<GroupDescription> groups;  // one entry per group
    std::vector<std::string> warnings;
};

enum class DescribeMethod { standard, cd };

inline DescriptionReport describe_studies(const data::Dataset& ds,
                                          DescribeMethod method = DescribeMethod::standard) {
    DescriptionReport rep;
    const int ngroups = ds.arity == data::Arity::two_group ? 2 : 1;

    for (int gi = 1; gi <= ngroups; ++gi) {
        GroupDescription d;
        std::vector<double> bowleys;
        for (const auto& st : ds.studies) {
            const data::GroupSummary& g = gi == 1 ? st.g1 : st.g2;
            ++d.n_studies;
            if (g.med) ++d.n_median;
            if (g.mean) ++d.n_mean;
            if (g.mean && g.sd && g.n) ++d.n_mean_sd_n;
            const auto sc = data::classify_group(g);
            switch (sc) {
                case data::Scenario::s1: ++d.n_s1; break;
                case data::Scenario::s2: ++d.n_s2; break;
                case data::Scenario::s3: ++d.n_s3; break;
                default: break;
            }
            if (method == DescribeMethod::cd) {
                if (!d.cd) d.cd = CdCounts{};
                switch (sc) {
                    case data::Scenario::s2:
                    case data::Scenario::s3: ++d.cd->c5; break;
                    case data::Scenario::mean_sd: ++d.cd->c4; break;
                    case data::Scenario::c3: ++d.cd->c3; break;
                    case data::Scenario::c1_or_c2: ++d.cd->c1_or_c2; break;
                    default: ++d.cd->other; break;
                }
            }
            if (sc == data::Scenario::s2 || sc == data::Scenario::s3) {
                if (*g.q1 < *g.q3) {
                    bowleys.push_back(bowley(*g.q1, *g.med, *g.q3));
                } else {
                    rep.warnings.push_back("study " + st.id + ", group " + std::to_string(gi) +
                                           ": q1 = q3, Bowley skewness undefined; skipped");
                }
            }
        }
        if (!bowleys.empty()) {
            std::sort(bowleys.begin(), bowleys.end());
            BowleySummary b;
            b.count = int(bowleys.size());
            b.min = bowleys.front();
            b.max = bowleys.back();
            b.q1 = math::quantile_type7_sorted(bowleys, 0.25);
            b.median = math::quantile_type7_sorted(bowleys, 0.5);
            b.q3 = math::quantile_type7_sorted(bowleys, 0.75);
            b.mean = math::sample_mean(bowleys);
            d.bowley = b;
        }
        rep.groups.push_back(std::move(d));
    }
    return rep;
}

namespace detail {

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string pad_right(std::string s, std::size_t w) {
    while (s.size() < w) s.push_back(' ');
    return s;
}

inline std::string pad_left(std::string s, std::size_t w) {
    while (s.size() < w) s.insert(s.begin(), ' ');
    return s;
}

} // namespace detail

/// Renders the report as a fixed-layout text block: one row label column and
/// one right-aligned value column per group.
inline std::string render_description(const DescriptionReport& rep,
                                      const std::string& label1 = "",
                                      const std::string& label2 = "") {
    const bool two = rep.groups.size() == 2;
    std::vector<std::string> labels;
    if (two) {
        labels.push_back(label1.empty() ? "Group 1" : label1);
        labels.push_back(label2.empty() ? "Group 2" : label2);
    } else {
        labels.push_back(label1);
    }

    struct Row {
        std::string label;
        std::vector<std::string> values;
    };
    std::vector<Row> rows;
    const auto add = [&](const std::string& label, auto getter) {
        Row r{label, {}};
        for (const auto& g : rep.groups) r.values.push_back(getter(g));
        rows.push_back(std::move(r));
    };
    const auto count = [](int v) { return std::to_string(v); };

    add("N. studies:", [&](const GroupDescription& g) { return count(g.n_studies); });
    if (!rep.groups.front().cd) {
        add("N. studies reporting the median:",
            [&](const GroupDescription& g) { return count(g.n_median); });
        add("  N. studies reporting S1 (min, med, max, n):",
            [&](const GroupDescription& g) { return count(g.n_s1); });
        add("  N. studies reporting S2 (q1, med, q3, n):",
            [&](const GroupDescription& g) { return count(g.n_s2); });
        add("  N. studies reporting S3 (min, q1, med, q3, max, n):",
            [&](const GroupDescription& g) { return count(g.n_s3); });
        add("N. studies reporting the mean:",
            [&](const GroupDescription& g) { return count(g.n_mean); });
        add("  N. studies reporting the mean, sd, and n:",
            [&](const GroupDescription& g) { return count(g.n_mean_sd_n); });
    } else {
        add("N. studies reporting C1/C2 (median CI with tail levels):",
            [&](const GroupDescription& g) { return count(g.cd->c1_or_c2); });
        add("N. studies reporting C3 (med, med.var):",
            [&](const GroupDescription& g) { return count(g.cd->c3); });
        add("N. studies reporting C4 (mean, sd, n):",
            [&](const GroupDescription& g) { return count(g.cd->c4); });
        add("N. studies reporting C5 (q1, med, q3, n):",
            [&](const GroupDescription& g) { return count(g.cd->c5); });
    }

    bool any_bowley = false;
    for (const auto& g : rep.groups) any_bowley = any_bowley || g.bowley.has_value();
    if (any_bowley) {
        const auto bval = [&](auto member) {
            return [member](const GroupDescription& g) -> std::string {
                return g.bowley ? detail::fixed4((*g.bowley).*member) : "NA";
            };
        };
        rows.push_back({"Bowley skewness", std::vector<std::string>(rep.groups.size(), "")});
        add("  Minimum:", bval(&BowleySummary::min));
        add("  First quartile:", bval(&BowleySummary::q1));
        add("  Median:", bval(&BowleySummary::median));
        add("  Mean:", bval(&BowleySummary::mean));
        add("  Third quartile:", bval(&BowleySummary::q3));
        add("  Maximum:", bval(&BowleySummary::max));
    }

    std::size_t label_w = 0;
    for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
    std::vector<std::size_t> col_w(rep.groups.size(), 0);
    for (std::size_t c = 0; c < rep.groups.size(); ++c) {
        col_w[c] = labels[c].size();
        for (const auto& r : rows) col_w[c] = std::max(col_w[c], r.values[c].size());
    }

    std::string out = "DESCRIPTION OF PRIMARY STUDIES\n";
    bool any_label = false;
    for (const auto& l : labels) any_label = any_label || !l.empty();
    if (any_label) {
        std::string header(label_w, ' ');
        for (std::size_t c = 0; c < labels.size(); ++c)
            header += " " + detail::pad_left(labels[c], col_w[c]);
        out += header + "\n";
    }
    for (const auto& r : rows) {
        std::string line = detail::pad_right(r.label, label_w);
        for (std::size_t c = 0; c < r.values.size(); ++c)
            line += " " + detail::pad_left(r.values[c], col_w[c]);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

} // namespace medipool::desc
