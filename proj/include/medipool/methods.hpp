#pragma once

#include "medipool/pooling.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace medipool {

enum class MeanMethod { wan, luo, shi_normal, shi_lognormal, qe, bc, mln, yang };
enum class SdMethod { wan, shi_normal, shi_lognormal, qe, bc, mln, yang };
enum class SeMethod { naive, bootstrap, plugin };
enum class MedianMethod { mm, wm, qe, cd };

inline const char* to_string(MeanMethod m) {
    switch (m) {
        case MeanMethod::wan: return "wan";
        case MeanMethod::luo: return "luo";
        case MeanMethod::shi_normal: return "shi_normal";
        case MeanMethod::shi_lognormal: return "shi_lognormal";
        case MeanMethod::qe: return "qe";
        case MeanMethod::bc: return "bc";
        case MeanMethod::mln: return "mln";
        case MeanMethod::yang: return "yang";
    }
    return "?";
}

inline const char* to_string(SdMethod m) {
    switch (m) {
        case SdMethod::wan: return "wan";
        case SdMethod::shi_normal: return "shi_normal";
        case SdMethod::shi_lognormal: return "shi_lognormal";
        case SdMethod::qe: return "qe";
        case SdMethod::bc: return "bc";
        case SdMethod::mln: return "mln";
        case SdMethod::yang: return "yang";
    }
    return "?";
}

inline const char* to_string(SeMethod m) {
    switch (m) {
        case SeMethod::naive: return "naive";
        case SeMethod::bootstrap: return "bootstrap";
        case SeMethod::plugin: return "plugin";
    }
    return "?";
}

inline const char* to_string(MedianMethod m) {
    switch (m) {
        case MedianMethod::mm: return "mm";
        case MedianMethod::wm: return "wm";
        case MedianMethod::qe: return "qe";
        case MedianMethod::cd: return "cd";
    }
    return "?";
}

inline std::optional<MeanMethod> parse_mean_method(const std::string& s) {
    for (auto m : {MeanMethod::wan, MeanMethod::luo, MeanMethod::shi_normal,
                   MeanMethod::shi_lognormal, MeanMethod::qe, MeanMethod::bc, MeanMethod::mln,
                   MeanMethod::yang})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline std::optional<SdMethod> parse_sd_method(const std::string& s) {
    for (auto m : {SdMethod::wan, SdMethod::shi_normal, SdMethod::shi_lognormal, SdMethod::qe,
                   SdMethod::bc, SdMethod::mln, SdMethod::yang})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline std::optional<SeMethod> parse_se_method(const std::string& s) {
    for (auto m : {SeMethod::naive, SeMethod::bootstrap, SeMethod::plugin})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline std::optional<MedianMethod> parse_median_method(const std::string& s) {
    for (auto m : {MedianMethod::mm, MedianMethod::wm, MedianMethod::qe, MedianMethod::cd})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

/// Invalid method/flag combinations; the CLI maps this to exit code 2.
struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A per-study failure that excludes the study from the analysis rather than
/// aborting it; the orchestration layer turns these into warnings.
struct StudyError : std::runtime_error {
    std::string study_id;
    StudyError(std::string id, const std::string& what)
        : std::runtime_error(what), study_id(std::move(id)) {}
};

struct MethodConfig {
    MeanMethod mean_method = MeanMethod::mln;
    std::vector<MeanMethod> mean_method_per_study;  // overrides the scalar when non-empty
    SdMethod sd_method = SdMethod::wan;
    SeMethod se_method = SeMethod::bootstrap;
    int nboot = 1000;
    MedianMethod median_method = MedianMethod::mm;
    pool::PoolModel model;
    std::uint64_t seed = 0;
    bool pool = true;
    std::string group_label1;
    std::string group_label2;

    MeanMethod mean_method_for(std::size_t study_index) const {
        return mean_method_per_study.empty() ? mean_method
                                             : mean_method_per_study.at(study_index);
    }
};

/// Enforces the combination rules: bootstrap SEs exist only for the qe/bc/mln
/// mean estimators, the plug-in SE only for yang.
inline void validate_mean_config(const MethodConfig& cfg, std::size_t n_studies) {
    if (cfg.nboot < 1) throw InvalidConfig("nboot must be a positive integer");
    if (!cfg.mean_method_per_study.empty() && cfg.mean_method_per_study.size() != n_studies)
        throw InvalidConfig("per-study mean_method list has " +
                            std::to_string(cfg.mean_method_per_study.size()) +
                            " entries but the dataset has " + std::to_string(n_studies) +
                            " studies");
    const auto check = [&](MeanMethod m) {
        if (cfg.se_method == SeMethod::bootstrap && m != MeanMethod::qe && m != MeanMethod::bc &&
            m != MeanMethod::mln)
            throw InvalidConfig("se_method 'bootstrap' is only available with mean_method qe, "
                                "bc, or mln (got '" + std::string(to_string(m)) + "')");
        if (cfg.se_method == SeMethod::plugin && m != MeanMethod::yang)
            throw InvalidConfig("se_method 'plugin' is only available with mean_method yang "
                                "(got '" + std::string(to_string(m)) + "')");
    };
    if (cfg.mean_method_per_study.empty()) check(cfg.mean_method);
    else
        for (auto m : cfg.mean_method_per_study) check(m);
}

} // namespace medipool
