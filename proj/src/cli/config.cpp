#include "cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fracflow/error.hpp"

namespace fracflow::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "model.s", "model.p", "model.a", "model.b", "model.n",
        "flow.dt0", "flow.t_end", "flow.dt_min", "flow.blowup_threshold", "flow.inner_tol",
        "flow.inner_max_iters", "flow.integrator", "flow.inner_solver", "flow.explicit_tol",
        "flow.explicit_pair", "flow.decay_ratio", "flow.max_steps", "flow.require_converged_inner",
        "ic.kind", "ic.amplitude", "ic.mode", "ic.seed", "ic.passes", "ic.path", "ic.center", "ic.half_width",
        "output_dir", "checks",
        "well.d_hat", "well.samples", "well.seed", "well.refine_top", "well.descent_iters", "well.descent_rtol",
        "well.polish", "well.seeds", "well.spread_tol", "well.margin",
        "fiber.lambda_min", "fiber.lambda_max", "fiber.count",
        "threshold.alpha_lo", "threshold.alpha_hi", "threshold.tol", "threshold.max_bisections",
        "golden.d_hat", "golden.slope", "golden.threshold", "golden.t_blowup",
    };
    return keys;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(number) + ": ";
        if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, where + "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::ConfigError, where + "empty key");
        if (cfg.entries_.count(key))
            throw Error(ErrorKind::ConfigError, where + "duplicate key '" + key + "' (first set on line " +
                                                    std::to_string(cfg.entries_[key].line) + ")");
        cfg.entries_[key] = {value, number};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    return parse(in, path);
}

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
}

void KeyValueConfig::fail(const std::string& key, const std::string& why) const {
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? source_ + ": " : source_ + ":" + std::to_string(it->second.line) + ": ";
    throw Error(ErrorKind::ConfigError, where + key + ": " + why);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v->c_str(), &end);
    if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE || !std::isfinite(x))
        fail(key, "expected a finite number, got '" + *v + "'");
    return x;
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v->c_str(), &end, 10);
    if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE)
        fail(key, "expected an integer, got '" + *v + "'");
    return x;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
    if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size() || errno == ERANGE)
        fail(key, "expected an unsigned integer, got '" + *v + "'");
    return static_cast<std::uint64_t>(x);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(key, "expected true or false, got '" + *v + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto v = raw(key);
    return v ? *v : fallback;
}

void KeyValueConfig::reject_unknown(const std::vector<std::string>& known) const {
    for (const auto& [key, entry] : entries_)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error(ErrorKind::ConfigError,
                        source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
}

RunConfig load_run_config(const KeyValueConfig& kv) {
    RunConfig cfg;
    kv.reject_unknown(known_keys());
    for (const char* g : {"golden.d_hat", "golden.slope", "golden.threshold", "golden.t_blowup"})
        if (kv.has(g)) cfg.golden[std::string(g).substr(7)] = kv.get_double(g, 0.0);

    auto& m = cfg.model;
    m.s = kv.get_double("model.s", m.s);
    m.p = kv.get_double("model.p", m.p);
    m.a = kv.get_double("model.a", m.a);
    m.b = kv.get_double("model.b", m.b);
    m.n = static_cast<int>(kv.get_long("model.n", m.n));
    try {
        m.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, kv.source() + ": model: " + e.what());
    }

    auto& f = cfg.flow;
    f.dt0 = kv.get_double("flow.dt0", f.dt0);
    f.t_end = kv.get_double("flow.t_end", f.t_end);
    f.dt_min = kv.get_double("flow.dt_min", f.dt_min);
    f.blowup_threshold = kv.get_double("flow.blowup_threshold", f.blowup_threshold);
    f.inner_tol = kv.get_double("flow.inner_tol", f.inner_tol);
    f.inner_max_iters = static_cast<int>(kv.get_long("flow.inner_max_iters", f.inner_max_iters));
    f.explicit_tol = kv.get_double("flow.explicit_tol", f.explicit_tol);
    f.decay_ratio = kv.get_double("flow.decay_ratio", f.decay_ratio);
    f.max_steps = kv.get_long("flow.max_steps", f.max_steps);
    f.require_converged_inner = kv.get_bool("flow.require_converged_inner", f.require_converged_inner);
    const std::string integrator = kv.get_string("flow.integrator", "proximal");
    if (integrator == "proximal") f.integrator = Integrator::ProximalImplicit;
    else if (integrator == "explicit") f.integrator = Integrator::ExplicitAdaptive;
    else throw Error(ErrorKind::ConfigError, kv.source() + ": flow.integrator must be proximal or explicit");
    const std::string inner = kv.get_string("flow.inner_solver", "newton");
    if (inner == "newton") f.inner_solver = InnerSolver::Newton;
    else if (inner == "gradient") f.inner_solver = InnerSolver::GradientDescent;
    else throw Error(ErrorKind::ConfigError, kv.source() + ": flow.inner_solver must be newton or gradient");
    const std::string pair = kv.get_string("flow.explicit_pair", "bs32");
    if (pair == "bs32") f.explicit_pair = ExplicitPair::BogackiShampine;
    else if (pair == "heun_euler") f.explicit_pair = ExplicitPair::HeunEuler;
    else throw Error(ErrorKind::ConfigError, kv.source() + ": flow.explicit_pair must be bs32 or heun_euler");
    try {
        f.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, kv.source() + ": flow: " + e.what());
    }

    auto& ic = cfg.ic;
    ic.kind = kv.get_string("ic.kind", ic.kind);
    if (ic.kind != "bump" && ic.kind != "sine" && ic.kind != "random" && ic.kind != "file")
        throw Error(ErrorKind::ConfigError, kv.source() + ": ic.kind must be bump, sine, random or file");
    ic.amplitude = kv.get_double("ic.amplitude", ic.amplitude);
    ic.mode = static_cast<int>(kv.get_long("ic.mode", ic.mode));
    ic.seed = kv.get_u64("ic.seed", ic.seed);
    ic.passes = static_cast<int>(kv.get_long("ic.passes", ic.passes));
    ic.path = kv.get_string("ic.path", ic.path);
    if (kv.has("ic.center")) ic.center = kv.get_double("ic.center", 0.0);
    if (kv.has("ic.half_width")) ic.half_width = kv.get_double("ic.half_width", 0.0);
    if (ic.kind == "file" && ic.path.empty())
        throw Error(ErrorKind::ConfigError, kv.source() + ": ic.kind=file needs ic.path");
    if (ic.mode < 1) throw Error(ErrorKind::ConfigError, kv.source() + ": ic.mode must be >= 1");
    if (ic.passes < 0) throw Error(ErrorKind::ConfigError, kv.source() + ": ic.passes must be >= 0");
    if (ic.half_width && !(*ic.half_width > 0.0))
        throw Error(ErrorKind::ConfigError, kv.source() + ": ic.half_width must be positive");

    cfg.output_dir = kv.get_string("output_dir", cfg.output_dir);
    cfg.checks = split_list(kv.get_string("checks", ""));

    auto& w = cfg.well;
    if (kv.has("well.d_hat")) w.d_hat = kv.get_double("well.d_hat", 0.0);
    w.sampler.samples = static_cast<int>(kv.get_long("well.samples", w.sampler.samples));
    w.sampler.seed = kv.get_u64("well.seed", w.sampler.seed);
    w.sampler.refine_top = static_cast<int>(kv.get_long("well.refine_top", w.sampler.refine_top));
    w.sampler.descent_iters = static_cast<int>(kv.get_long("well.descent_iters", w.sampler.descent_iters));
    w.sampler.descent_rtol = kv.get_double("well.descent_rtol", w.sampler.descent_rtol);
    w.sampler.polish = kv.get_bool("well.polish", w.sampler.polish);
    w.seeds = static_cast<int>(kv.get_long("well.seeds", w.seeds));
    w.spread_tol = kv.get_double("well.spread_tol", w.spread_tol);
    w.margin = kv.get_double("well.margin", w.margin);
    if (w.sampler.samples < 1 || w.seeds < 1)
        throw Error(ErrorKind::ConfigError, kv.source() + ": well.samples and well.seeds must be >= 1");

    auto& fb = cfg.fiber;
    fb.lambda_min = kv.get_double("fiber.lambda_min", fb.lambda_min);
    fb.lambda_max = kv.get_double("fiber.lambda_max", fb.lambda_max);
    fb.count = static_cast<int>(kv.get_long("fiber.count", fb.count));
    if (!(fb.lambda_min > 0.0 && fb.lambda_max > fb.lambda_min) || fb.count < 16)
        throw Error(ErrorKind::ConfigError,
                    kv.source() + ": fiber needs 0 < lambda_min < lambda_max and count >= 16");

    auto& th = cfg.threshold;
    if (kv.has("threshold.alpha_lo")) th.alpha_lo = kv.get_double("threshold.alpha_lo", 0.0);
    if (kv.has("threshold.alpha_hi")) th.alpha_hi = kv.get_double("threshold.alpha_hi", 0.0);
    th.tol = kv.get_double("threshold.tol", th.tol);
    th.max_bisections = static_cast<int>(kv.get_long("threshold.max_bisections", th.max_bisections));
    if (th.tol < 0.0) throw Error(ErrorKind::ConfigError, kv.source() + ": threshold.tol must be >= 0");
    return cfg;
}

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& cfg) {
    const auto& m = cfg.model;
    const auto& f = cfg.flow;
    std::vector<std::pair<std::string, std::string>> out = {
        {"model.s", format_number(m.s)},
        {"model.p", format_number(m.p)},
        {"model.a", format_number(m.a)},
        {"model.b", format_number(m.b)},
        {"model.n", std::to_string(m.n)},
        {"flow.integrator", to_string(f.integrator)},
        {"flow.dt0", format_number(f.dt0)},
        {"flow.t_end", format_number(f.t_end)},
        {"flow.dt_min", format_number(f.dt_min)},
        {"flow.blowup_threshold", format_number(f.blowup_threshold)},
        {"ic.kind", cfg.ic.kind},
        {"ic.amplitude", format_number(cfg.ic.amplitude)},
    };
    if (cfg.ic.kind == "sine") out.emplace_back("ic.mode", std::to_string(cfg.ic.mode));
    if (cfg.ic.kind == "random") out.emplace_back("ic.seed", std::to_string(cfg.ic.seed));
    if (cfg.ic.kind == "file") out.emplace_back("ic.path", cfg.ic.path);
    return out;
}

} // namespace fracflow::cli
