#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracflow/flow.hpp"
#include "fracflow/model.hpp"
#include "fracflow/variational.hpp"

namespace fracflow::cli {

/// Flat `key=value` text with dotted keys. `#` starts a comment; blank lines
/// are ignored. Errors carry `source:line:` prefixes.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& source);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::optional<std::string> raw(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    /// Throws ConfigError naming the first key outside `known`.
    void reject_unknown(const std::vector<std::string>& known) const;

    const std::string& source() const { return source_; }

private:
    struct Entry {
        std::string value;
        int line;
    };
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
};

struct InitialCondition {
    std::string kind = "bump"; ///< bump | sine | random | file
    double amplitude = 1.0;
    int mode = 1;
    std::uint64_t seed = 1;
    int passes = 1;
    std::string path;
    std::optional<double> center;
    std::optional<double> half_width;
};

struct WellSettings {
    std::optional<double> d_hat;
    WellSamplerConfig sampler;
    int seeds = 5;
    double spread_tol = 0.05;
    double margin = 0.05;
};

struct FiberSettings {
    double lambda_min = 1e-3; ///< relative to λ*
    double lambda_max = 1e3;
    int count = 121;
};

struct ThresholdSettings {
    std::optional<double> alpha_lo;
    std::optional<double> alpha_hi;
    double tol = 0.0;          ///< absolute bracket width; 0 means 1e-3·alpha_hi
    int max_bisections = 60;
};

struct RunConfig {
    ModelParams<double> model;
    FlowConfig<double> flow;
    InitialCondition ic;
    std::string output_dir = ".";
    std::vector<std::string> checks;
    WellSettings well;
    FiberSettings fiber;
    ThresholdSettings threshold;
    std::map<std::string, double> golden;
};

/// Builds and validates a RunConfig; throws Error(ConfigError) with
/// line diagnostics.
RunConfig load_run_config(const KeyValueConfig& kv);

/// `x=value` pairs describing the configuration, for summaries.
std::vector<std::pair<std::string, std::string>> echo(const RunConfig& cfg);

std::string format_number(double x);

} // namespace fracflow::cli
