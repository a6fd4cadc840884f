#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Study-summary data model and the CSV ingestion schema. One CSV row is one
// primary study; columns carry `.g1`/`.g2` suffixes for the two groups.
// Missing entries are empty cells or the literal `NA`.

namespace medipool::data {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Summary statistics reported for one group of one study. Every field is
/// optional; what is present determines the reporting scenario.
struct GroupSummary {
    std::optional<double> q_min, q1, med, q3, q_max;
    std::optional<std::int64_t> n;
    std::optional<double> mean, sd;
    std::optional<double> med_ci_lb, med_ci_ub, alpha1, alpha2, med_var;

    bool any_present() const {
        return q_min || q1 || med || q3 || q_max || n || mean || sd || med_ci_lb ||
               med_ci_ub || alpha1 || alpha2 || med_var;
    }
    bool any_quantile() const { return q_min || q1 || med || q3 || q_max; }
};

struct StudySummary {
    std::string id;
    GroupSummary g1, g2;
    std::vector<std::pair<std::string, std::string>> extra;  // unknown columns, raw text

    bool two_group() const { return g2.any_present(); }
};

enum class Arity { one_group, two_group };

struct Dataset {
    std::vector<StudySummary> studies;
    Arity arity = Arity::one_group;
    bool has_author = false;
};

enum class Scenario { s1, s2, s3, mean_sd, c1_or_c2, c3, median_only, unusable };

inline const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::s1: return "S1";
        case Scenario::s2: return "S2";
        case Scenario::s3: return "S3";
        case Scenario::mean_sd: return "MeanSd";
        case Scenario::c1_or_c2: return "C1orC2";
        case Scenario::c3: return "C3";
        case Scenario::median_only: return "MedianOnly";
        case Scenario::unusable: return "Unusable";
    }
    return "?";
}

/// Classifies what a group reports. Total and deterministic; when field sets
/// overlap the first match in the order S3, S2, S1, MeanSd, C3, C1orC2,
/// MedianOnly wins.
inline Scenario classify_group(const GroupSummary& g) {
    if (g.q_min && g.q1 && g.med && g.q3 && g.q_max && g.n) return Scenario::s3;
    if (g.q1 && g.med && g.q3 && g.n && !g.q_min && !g.q_max) return Scenario::s2;
    if (g.q_min && g.med && g.q_max && g.n && !g.q1 && !g.q3) return Scenario::s1;
    if (g.mean && g.sd && g.n && !g.any_quantile()) return Scenario::mean_sd;
    if (g.med && g.med_var) return Scenario::c3;
    if (g.med_ci_lb && g.med_ci_ub && g.alpha1 && g.alpha2) return Scenario::c1_or_c2;
    if (g.med) return Scenario::median_only;
    return Scenario::unusable;
}

struct Violation {
    std::string study_id;
    int group = 1;
    std::string message;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline bool is_missing(std::string_view cell) {
    const auto t = trim(cell);
    return t.empty() || t == "NA";
}

inline double parse_number(std::string_view cell, std::size_t row, const std::string& col) {
    const auto t = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ParseError("malformed numeric cell at row " + std::to_string(row) +
                         ", column '" + col + "': '" + std::string(t) + "'");
    return v;
}

/// RFC-4180 record splitting: quoted fields, doubled quotes, CRLF or LF.
inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_char = false;

    const auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
    };
    const auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        any_char = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            any_char = true;
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; any_char = true; break;
            case ',': end_field(); any_char = true; break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n': end_record(); break;
            default: field.push_back(c); any_char = true; break;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field");
    if (any_char || !field.empty() || !record.empty()) end_record();
    return records;
}

struct ColumnPlan {
    enum Kind { author, num_field, n_field, extra } kind = extra;
    int group = 1;
    std::optional<double> GroupSummary::* member = nullptr;
};

inline std::optional<ColumnPlan> recognize_column(const std::string& name) {
    if (name == "author") return ColumnPlan{ColumnPlan::author, 1, nullptr};
    static const std::pair<const char*, std::optional<double> GroupSummary::*> fields[] = {
        {"min", &GroupSummary::q_min},         {"q1", &GroupSummary::q1},
        {"med", &GroupSummary::med},           {"q3", &GroupSummary::q3},
        {"max", &GroupSummary::q_max},         {"mean", &GroupSummary::mean},
        {"sd", &GroupSummary::sd},             {"med.ci.lb", &GroupSummary::med_ci_lb},
        {"med.ci.ub", &GroupSummary::med_ci_ub}, {"alpha.1", &GroupSummary::alpha1},
        {"alpha.2", &GroupSummary::alpha2},    {"med.var", &GroupSummary::med_var},
    };
    for (int group = 1; group <= 2; ++group) {
        const std::string suffix = group == 1 ? ".g1" : ".g2";
        if (name == "n" + suffix) return ColumnPlan{ColumnPlan::n_field, group, nullptr};
        for (const auto& [base, member] : fields)
            if (name == std::string(base) + suffix)
                return ColumnPlan{ColumnPlan::num_field, group, member};
    }
    return std::nullopt;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

/// Parses the CSV input schema. Empty cells and `NA` map to absent; unknown
/// columns ride along as opaque metadata; row order is preserved and arity
/// (one-group vs two-group) is inferred and must be uniform.
inline Dataset parse_dataset(std::string_view csv_text) {
    const auto records = detail::parse_csv_records(csv_text);
    if (records.empty()) throw ParseError("empty input: header row missing");

    const auto& header = records.front();
    std::vector<detail::ColumnPlan> plan(header.size());
    std::vector<std::string> names(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        names[c] = std::string(detail::trim(header[c]));
        for (std::size_t prev = 0; prev < c; ++prev)
            if (names[prev] == names[c])
                throw ParseError("duplicate column name '" + names[c] + "'");
        if (auto p = detail::recognize_column(names[c])) plan[c] = *p;
        else plan[c] = detail::ColumnPlan{detail::ColumnPlan::extra, 1, nullptr};
    }

    if (records.size() < 2) throw ParseError("zero data rows");

    Dataset ds;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() != header.size())
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                             " cells, header has " + std::to_string(header.size()));
        StudySummary st;
        st.id = std::to_string(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto& p = plan[c];
            switch (p.kind) {
                case detail::ColumnPlan::author:
                    ds.has_author = true;
                    st.id = std::string(detail::trim(row[c]));
                    break;
                case detail::ColumnPlan::extra:
                    st.extra.emplace_back(names[c], row[c]);
                    break;
                case detail::ColumnPlan::num_field: {
                    if (detail::is_missing(row[c])) break;
                    const double v = detail::parse_number(row[c], r, names[c]);
                    GroupSummary& g = p.group == 1 ? st.g1 : st.g2;
                    g.*(p.member) = v;
                    break;
                }
                case detail::ColumnPlan::n_field: {
                    if (detail::is_missing(row[c])) break;
                    const double v = detail::parse_number(row[c], r, names[c]);
                    if (v != std::floor(v) || std::abs(v) > 9.0e15)
                        throw ParseError("malformed numeric cell at row " + std::to_string(r) +
                                         ", column '" + names[c] + "': n must be an integer");
                    GroupSummary& g = p.group == 1 ? st.g1 : st.g2;
                    g.n = static_cast<std::int64_t>(v);
                    break;
                }
            }
        }
        ds.studies.push_back(std::move(st));
    }

    bool any_two = false, any_one = false;
    for (const auto& st : ds.studies) (st.two_group() ? any_two : any_one) = true;
    if (any_two && any_one)
        throw ParseError("mixed arity: some studies report group-2 fields and others do not");
    ds.arity = any_two ? Arity::two_group : Arity::one_group;
    return ds;
}

/// Serializes back to the ingestion schema; parsing the output reproduces the
/// dataset field-for-field.
inline std::string to_csv(const Dataset& ds) {
    struct Col {
        std::string name;
        int group;
        std::optional<double> GroupSummary::* member;  // nullptr marks the n column
    };
    static const std::pair<const char*, std::optional<double> GroupSummary::*> base[] = {
        {"min", &GroupSummary::q_min},   {"q1", &GroupSummary::q1},
        {"med", &GroupSummary::med},     {"q3", &GroupSummary::q3},
        {"max", &GroupSummary::q_max},   {"mean", &GroupSummary::mean},
        {"sd", &GroupSummary::sd},       {"med.ci.lb", &GroupSummary::med_ci_lb},
        {"med.ci.ub", &GroupSummary::med_ci_ub}, {"alpha.1", &GroupSummary::alpha1},
        {"alpha.2", &GroupSummary::alpha2}, {"med.var", &GroupSummary::med_var},
    };

    std::vector<Col> cols;
    const int ngroups = ds.arity == Arity::two_group ? 2 : 1;
    for (int g = 1; g <= ngroups; ++g) {
        const std::string suffix = g == 1 ? ".g1" : ".g2";
        cols.push_back({"n" + suffix, g, nullptr});
        for (const auto& [name, member] : base) cols.push_back({std::string(name) + suffix, g, member});
    }

    std::vector<std::string> extra_names;
    for (const auto& st : ds.studies)
        for (const auto& [name, _] : st.extra)
            if (std::find(extra_names.begin(), extra_names.end(), name) == extra_names.end())
                extra_names.push_back(name);

    std::string out;
    if (ds.has_author) out += "author";
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (ds.has_author || i > 0) out.push_back(',');
        out += cols[i].name;
    }
    for (const auto& name : extra_names) {
        out.push_back(',');
        out += detail::csv_escape(name);
    }
    out.push_back('\n');

    for (const auto& st : ds.studies) {
        bool first = true;
        if (ds.has_author) {
            out += detail::csv_escape(st.id);
            first = false;
        }
        for (const auto& col : cols) {
            if (!first) out.push_back(',');
            first = false;
            const GroupSummary& g = col.group == 1 ? st.g1 : st.g2;
            if (col.member == nullptr) {
                if (g.n) out += std::to_string(*g.n);
                else out += "NA";
            } else if (g.*(col.member)) {
                out += detail::format_double(*(g.*(col.member)));
            } else {
                out += "NA";
            }
        }
        for (const auto& name : extra_names) {
            out.push_back(',');
            bool found = false;
            for (const auto& [ename, val] : st.extra)
                if (ename == name) {
                    out += detail::csv_escape(val);
                    found = true;
                    break;
                }
            if (!found) out += "";
        }
        out.push_back('\n');
    }
    return out;
}

/// Reports every invariant violation; an empty list means the dataset is clean.
inline std::vector<Violation> validate_dataset(const Dataset& ds) {
    std::vector<Violation> out;
    const auto check_group = [&](const std::string& id, int group_no, const GroupSummary& g) {
        const auto flag = [&](const std::string& msg) { out.push_back({id, group_no, msg}); };

        struct Entry { const char* name; const std::optional<double>* v; };
        const Entry chain[] = {{"min", &g.q_min}, {"q1", &g.q1}, {"med", &g.med},
                               {"q3", &g.q3},     {"max", &g.q_max}};
        const Entry* prev = nullptr;
        for (const auto& e : chain) {
            if (!e.v->has_value()) continue;
            if (prev && **prev->v > **e.v + 0.0)
                flag(std::string(prev->name) + " <= " + e.name + " ordering violated (" +
                     detail::format_double(**prev->v) + " > " + detail::format_double(**e.v) + ")");
            prev = &e;
        }

        if (g.sd && !(*g.sd > 0.0)) flag("sd must be > 0");
        if (g.med_var && !(*g.med_var > 0.0)) flag("med.var must be > 0");
        if (g.n && *g.n < 1) flag("n must be a positive integer");
        if (g.alpha1 && !(*g.alpha1 > 0.0 && *g.alpha1 < 0.5)) flag("alpha.1 must be in (0, 0.5)");
        if (g.alpha2 && !(*g.alpha2 > 0.0 && *g.alpha2 < 0.5)) flag("alpha.2 must be in (0, 0.5)");
        if (g.med_ci_lb && g.med_ci_ub && *g.med_ci_lb > *g.med_ci_ub)
            flag("med.ci.lb must be <= med.ci.ub");
        if (g.med && g.med_ci_lb && g.med_ci_ub &&
            (*g.med < *g.med_ci_lb || *g.med > *g.med_ci_ub))
            flag("med must lie inside [med.ci.lb, med.ci.ub]");

        const auto sc = classify_group(g);
        if ((sc == Scenario::s1 || sc == Scenario::s2 || sc == Scenario::s3) && g.n && *g.n < 2)
            flag("n must be >= 2 for quantile-based estimation");
    };

    for (const auto& st : ds.studies) {
        check_group(st.id, 1, st.g1);
        if (st.two_group()) check_group(st.id, 2, st.g2);
    }
    return out;
}

} // namespace medipool::data
