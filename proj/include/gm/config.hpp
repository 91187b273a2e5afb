#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gm/scheme.hpp"

namespace gm {

struct ParseIssue {
    int line = 0, col = 0;
    std::string message;
    std::string str() const {
        return "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + message;
    }
};

// Parsed batch-job description: ring, schemes, morphisms, named cylinder
// and integrand texts (compiled against their scheme on demand), and
// default parameters. Flags override parameters.
struct JobConfig {
    JobConfig() = default;
    JobConfig(const JobConfig&) = delete;             // morphisms point into schemes
    JobConfig& operator=(const JobConfig&) = delete;
    JobConfig(JobConfig&&) = default;
    JobConfig& operator=(JobConfig&&) = default;

    RingDescriptor ring{RingKind::equal_char, 2, 1};
    bool ring_set = false;

    std::deque<Scheme> schemes;  // deque: stable addresses for morphisms
    std::vector<Morphism> morphisms;

    struct NamedText {
        std::string name;
        std::string scheme;
        std::string text;
        int line = 0;
    };
    std::vector<NamedText> cylinders;
    std::vector<NamedText> integrands;
    std::map<std::string, std::vector<std::string>> wild;  // scheme -> generator texts

    // defaults, overridable from the command line
    int level_lo = 0, level_hi = 3;
    std::vector<uint64_t> qs;
    int precision = 4;
    uint64_t budget = default_enumeration_budget();
    int threads = 1;
    std::string default_scheme;
    std::string charts;  // "morphism:cylinder,..." for cov-check
    std::string target = "full";

    const Scheme* find_scheme(const std::string& name) const;
    const Morphism* find_morphism(const std::string& name) const;
    const NamedText* find_cylinder(const std::string& name) const;
    const NamedText* find_integrand(const std::string& name) const;
};

struct ConfigParseResult {
    JobConfig config;
    std::vector<ParseIssue> issues;
    bool ok() const { return issues.empty(); }
};

ConfigParseResult parse_config(const std::string& text);

// merge b into a (later files extend and override earlier ones)
void merge_config(JobConfig& a, const JobConfig& b);

}  // namespace gm
