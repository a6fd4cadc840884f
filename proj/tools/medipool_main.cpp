// medipool: meta-analysis of studies reporting medians or means.
//
// Subcommands: describe, metamean, metamedian, forest, pool.
// Exit codes: 0 success, 1 I/O failure, 2 validation or configuration error.

#include "medipool/medipool.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return ss.str();
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + out_path + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + out_path + "'");
}

medipool::data::Dataset load_validated(const std::string& path) {
    const auto ds = medipool::data::parse_dataset(read_file(path));
    const auto violations = medipool::data::validate_dataset(ds);
    if (!violations.empty()) {
        for (const auto& v : violations)
            std::cerr << "validation: study '" << v.study_id << "', group " << v.group << ": "
                      << v.message << "\n";
        throw medipool::InvalidConfig("input dataset failed validation (" +
                                      std::to_string(violations.size()) + " violation(s))");
    }
    return ds;
}

struct CommonFlags {
    std::string input;
    std::string format = "text";
    std::string out;
    std::string group_labels;
    double level = 0.95;
    std::uint64_t seed = 0;
    bool no_pool = false;
    std::string model = "random";
    std::string tau2 = "reml";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_pooling) {
    cmd->add_option("input", f.input, "Input CSV file")->required();
    cmd->add_option("--format", f.format, "Output format")
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--out", f.out, "Write output to this path instead of stdout");
    if (with_pooling) {
        cmd->add_option("--model", f.model, "Pooling model")
            ->check(CLI::IsMember({"common", "random"}));
        cmd->add_option("--tau2", f.tau2, "Between-study variance estimator")
            ->check(CLI::IsMember({"dl", "reml"}));
        cmd->add_option("--level", f.level, "Confidence level");
        cmd->add_option("--seed", f.seed, "Random seed (default 0; runs are reproducible)");
        cmd->add_flag("--no-pool", f.no_pool, "Emit per-study effects without pooling");
    }
    cmd->add_option("--group-labels", f.group_labels, "Comma-separated labels for the two groups");
}

medipool::MethodConfig base_config(const CommonFlags& f) {
    medipool::MethodConfig cfg;
    cfg.model.kind = f.model == "common" ? medipool::pool::ModelKind::common
                                         : medipool::pool::ModelKind::random;
    cfg.model.tau2 =
        f.tau2 == "dl" ? medipool::pool::Tau2Method::dl : medipool::pool::Tau2Method::reml;
    if (!(f.level > 0.0 && f.level < 1.0))
        throw medipool::InvalidConfig("--level must be in (0, 1)");
    cfg.model.level = f.level;
    cfg.seed = f.seed;
    cfg.pool = !f.no_pool;
    if (!f.group_labels.empty()) {
        const auto comma = f.group_labels.find(',');
        if (comma == std::string::npos)
            throw medipool::InvalidConfig("--group-labels expects two comma-separated labels");
        cfg.group_label1 = f.group_labels.substr(0, comma);
        cfg.group_label2 = f.group_labels.substr(comma + 1);
    }
    return cfg;
}

void parse_mean_flags(medipool::MethodConfig& cfg, const std::string& mean_method,
                      const std::string& sd_method, const std::string& se_method, int nboot) {
    if (mean_method.find(',') != std::string::npos) {
        std::stringstream ss(mean_method);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto m = medipool::parse_mean_method(tok);
            if (!m) throw medipool::InvalidConfig("unknown mean method '" + tok + "'");
            cfg.mean_method_per_study.push_back(*m);
        }
    } else {
        const auto m = medipool::parse_mean_method(mean_method);
        if (!m) throw medipool::InvalidConfig("unknown mean method '" + mean_method + "'");
        cfg.mean_method = *m;
    }
    const auto sd = medipool::parse_sd_method(sd_method);
    if (!sd) throw medipool::InvalidConfig("unknown sd method '" + sd_method + "'");
    cfg.sd_method = *sd;
    const auto se = medipool::parse_se_method(se_method);
    if (!se) throw medipool::InvalidConfig("unknown se method '" + se_method + "'");
    cfg.se_method = *se;
    if (nboot < 1) throw medipool::InvalidConfig("--nboot must be a positive integer");
    cfg.nboot = nboot;
}

void emit_run(const medipool::AnalysisRun& run, const CommonFlags& f) {
    if (f.format == "json") {
        write_output(medipool::report::run_to_json(run).dump(2) + "\n", f.out);
    } else {
        write_output(medipool::report::render_run_text(run), f.out);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meta-analysis of primary studies reporting sample medians"};
    app.require_subcommand(1);

    // describe
    CommonFlags describe_flags;
    std::string describe_method = "default";
    auto* cmd_describe = app.add_subcommand("describe", "Descriptive summary of the dataset");
    add_common(cmd_describe, describe_flags, false);
    cmd_describe->add_option("--median-method", describe_method,
                             "Use 'cd' to count the CD method's summary-statistic sets");

    // metamean
    CommonFlags mean_flags;
    std::string mean_method = "mln", sd_method = "wan", se_method = "bootstrap";
    int nboot = 1000;
    auto* cmd_metamean = app.add_subcommand("metamean", "Mean-based meta-analysis");
    add_common(cmd_metamean, mean_flags, true);
    cmd_metamean->add_option("--mean-method", mean_method,
                             "Mean estimator (or comma list, one per study)");
    cmd_metamean->add_option("--sd-method", sd_method, "SD estimator for the naive SE");
    cmd_metamean->add_option("--se-method", se_method, "SE estimator: naive|bootstrap|plugin");
    cmd_metamean->add_option("--nboot", nboot, "Bootstrap replicates (default 1000)");

    // metamedian
    CommonFlags median_flags;
    std::string median_method = "mm";
    auto* cmd_metamedian = app.add_subcommand("metamedian", "Median-based meta-analysis");
    add_common(cmd_metamedian, median_flags, true);
    cmd_metamedian->add_option("--median-method", median_method, "Method: mm|wm|qe|cd");

    // forest
    CommonFlags forest_flags;
    std::string forest_mean_method = "mln", forest_sd_method = "wan",
                forest_se_method = "bootstrap", forest_median_method;
    int forest_nboot = 1000;
    std::string xlab = "Effect", title;
    auto* cmd_forest = app.add_subcommand("forest", "Emit an SVG forest plot for an analysis");
    add_common(cmd_forest, forest_flags, true);
    cmd_forest->add_option("--mean-method", forest_mean_method, "Mean estimator");
    cmd_forest->add_option("--sd-method", forest_sd_method, "SD estimator for the naive SE");
    cmd_forest->add_option("--se-method", forest_se_method, "SE estimator");
    cmd_forest->add_option("--nboot", forest_nboot, "Bootstrap replicates");
    cmd_forest->add_option("--median-method", forest_median_method,
                           "Run the median-based analysis with this method instead");
    cmd_forest->add_option("--xlab", xlab, "Axis label");
    cmd_forest->add_option("--title", title, "Plot title");

    // pool: re-pool effects produced with --no-pool
    CommonFlags pool_flags;
    auto* cmd_pool =
        app.add_subcommand("pool", "Pool per-study effects from a --no-pool JSON file");
    add_common(cmd_pool, pool_flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (*cmd_describe) {
            if (describe_method != "default" && describe_method != "cd")
                throw medipool::InvalidConfig("--median-method must be 'cd' or 'default'");
            const auto cfg = base_config(describe_flags);
            const auto ds = load_validated(describe_flags.input);
            const auto rep = medipool::desc::describe_studies(
                ds, describe_method == "cd" ? medipool::desc::DescribeMethod::cd
                                            : medipool::desc::DescribeMethod::standard);
            if (describe_flags.format == "json") {
                nlohmann::ordered_json j;
                j["groups"] = nlohmann::ordered_json::array();
                for (const auto& g : rep.groups) {
                    nlohmann::ordered_json o;
                    o["n_studies"] = g.n_studies;
                    o["n_median"] = g.n_median;
                    o["n_s1"] = g.n_s1;
                    o["n_s2"] = g.n_s2;
                    o["n_s3"] = g.n_s3;
                    o["n_mean"] = g.n_mean;
                    o["n_mean_sd_n"] = g.n_mean_sd_n;
                    if (g.cd)
                        o["cd_scenario_counts"] = {{"C1orC2", g.cd->c1_or_c2},
                                                   {"C3", g.cd->c3},
                                                   {"C4", g.cd->c4},
                                                   {"C5", g.cd->c5},
                                                   {"other", g.cd->other}};
                    if (g.bowley)
                        o["bowley"] = {{"min", g.bowley->min},     {"q1", g.bowley->q1},
                                       {"median", g.bowley->median}, {"mean", g.bowley->mean},
                                       {"q3", g.bowley->q3},       {"max", g.bowley->max},
                                       {"count", g.bowley->count}};
                    j["groups"].push_back(std::move(o));
                }
                j["warnings"] = rep.warnings;
                write_output(j.dump(2) + "\n", describe_flags.out);
            } else {
                write_output(
                    medipool::desc::render_description(rep, cfg.group_label1, cfg.group_label2),
                    describe_flags.out);
            }
        } else if (*cmd_metamean) {
            auto cfg = base_config(mean_flags);
            parse_mean_flags(cfg, mean_method, sd_method, se_method, nboot);
            const auto ds = load_validated(mean_flags.input);
            const auto run = medipool::run_metamean(ds, cfg);
            emit_run(run, mean_flags);
        } else if (*cmd_metamedian) {
            auto cfg = base_config(median_flags);
            const auto m = medipool::parse_median_method(median_method);
            if (!m) throw medipool::InvalidConfig("unknown median method '" + median_method + "'");
            cfg.median_method = *m;
            const auto ds = load_validated(median_flags.input);
            const auto run = medipool::run_metamedian(ds, cfg);
            emit_run(run, median_flags);
        } else if (*cmd_forest) {
            if (forest_flags.out.empty())
                throw medipool::InvalidConfig("forest requires --out <path.svg>");
            auto cfg = base_config(forest_flags);
            cfg.pool = true;
            const auto ds = load_validated(forest_flags.input);
            medipool::AnalysisRun run;
            if (!forest_median_method.empty()) {
                const auto m = medipool::parse_median_method(forest_median_method);
                if (!m)
                    throw medipool::InvalidConfig("unknown median method '" +
                                                  forest_median_method + "'");
                cfg.median_method = *m;
                run = medipool::run_metamedian(ds, cfg);
            } else {
                parse_mean_flags(cfg, forest_mean_method, forest_sd_method, forest_se_method,
                                 forest_nboot);
                run = medipool::run_metamean(ds, cfg);
            }
            medipool::forest::ForestOptions opt;
            opt.xlab = xlab;
            opt.title = title;
            write_output(medipool::forest::forest_svg(run, opt), forest_flags.out);
        } else if (*cmd_pool) {
            const auto cfg = base_config(pool_flags);
            const auto j = nlohmann::ordered_json::parse(read_file(pool_flags.input));
            auto records = medipool::report::effect_records_from_json(j);
            const auto run = medipool::pool_effect_records(std::move(records), cfg.model);
            emit_run(run, pool_flags);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
