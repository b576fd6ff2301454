#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "cli/io.hpp"
#include "fracflow/fracflow.hpp"

namespace fracflow::cli {

namespace {

const std::vector<std::string> kCheckNames = {"energy_inequality", "decay", "blowup", "well_invariance"};

struct DepthChoice {
    double d_hat;
    std::string source;
};

DepthChoice resolve_d_hat(const Grid<double>& grid, const RunConfig& cfg) {
    if (cfg.well.d_hat) return {*cfg.well.d_hat, "config"};
    return {estimate_well_depth(grid, cfg.well.sampler).d_hat, "estimate"};
}

std::string pass_fail(bool ok) { return ok ? "pass" : "fail"; }

void add_golden(KeyValues& kv, const RunConfig& cfg, const std::string& name, double observed) {
    const auto it = cfg.golden.find(name);
    if (it == cfg.golden.end()) return;
    kv.emplace_back("golden." + name, format_number(it->second));
    const double scale = std::max(std::abs(it->second), 1e-300);
    kv.emplace_back("golden." + name + ".rel_delta", format_number((observed - it->second) / scale));
}

void emit(std::ostream& out, const std::string& dir, const std::string& name, const KeyValues& kv) {
    write_key_values(output_path(dir, name), kv);
    write_key_values(out, kv);
}

KeyValues report_values(const std::string& prefix, const EnergyReport<double>& r) {
    return {
        {prefix + "seminorm_p", format_number(r.seminorm_p)},
        {prefix + "lp_p", format_number(r.lp_p)},
        {prefix + "log_int", format_number(r.log_int)},
        {prefix + "energy", format_number(r.energy)},
        {prefix + "nehari", format_number(r.nehari)},
        {prefix + "l2", format_number(r.l2)},
    };
}

void append(KeyValues& dst, const KeyValues& src) { dst.insert(dst.end(), src.begin(), src.end()); }

} // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidInstance:
    case ErrorKind::InstanceMismatch:
    case ErrorKind::UnsupportedRegime:
    case ErrorKind::HypothesisNotMet:
    case ErrorKind::NotInX0:
        return kExitConfigError;
    case ErrorKind::SamplerFailure:
    case ErrorKind::StepReject:
    case ErrorKind::StepCollapse:
    case ErrorKind::NumericalFailure:
        return kExitNumericalFailure;
    }
    return kExitNumericalFailure;
}

int thread_count() {
    if (const char* env = std::getenv("FRACFLOW_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (*env == '\0' || *end != '\0' || n < 1)
            throw Error(ErrorKind::ConfigError, std::string("FRACFLOW_THREADS must be a positive integer, got '") +
                                                    env + "'");
        return static_cast<int>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_energy(const RunConfig& cfg, std::ostream& out) {
    const auto grid = make_shared_grid(cfg.model);
    const Vector<double> u0 = make_initial_data(*grid, cfg.ic);
    const auto r = report(*grid, u0);

    KeyValues kv = echo(cfg);
    append(kv, report_values("", r));
    const double lam = lambda_star(*grid, u0);
    kv.emplace_back("lambda_star", format_number(lam));
    kv.emplace_back("ray_depth", format_number(nehari_depth(*grid, (lam * u0).eval())));
    const auto depth = resolve_d_hat(*grid, cfg);
    kv.emplace_back("d_hat", format_number(depth.d_hat));
    kv.emplace_back("d_hat_source", depth.source);
    kv.emplace_back("classification", to_string(classify(*grid, u0, depth.d_hat, cfg.well.margin)));
    emit(out, cfg.output_dir, "energy.txt", kv);
    return kExitOk;
}

int cmd_fiber(const RunConfig& cfg, std::ostream& out) {
    const auto grid = make_shared_grid(cfg.model);
    const Vector<double> u0 = make_initial_data(*grid, cfg.ic);
    const double lam = lambda_star(*grid, u0);
    const auto prof = fibering_profile(*grid, u0, cfg.fiber.lambda_min * lam, cfg.fiber.lambda_max * lam,
                                       cfg.fiber.count);

    std::ofstream csv(output_path(cfg.output_dir, "fiber.csv"));
    if (!csv) throw Error(ErrorKind::ConfigError, "cannot write fiber.csv");
    csv << "lambda,j,nehari,is_lambda_star\n";
    const auto star = report(*grid, (lam * u0).eval());
    bool star_written = false;
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < prof.lambdas.size(); ++k) {
        if (!star_written && prof.lambdas[k] >= lam) {
            if (prof.lambdas[k] != lam)
                csv << format_number(lam) << ',' << format_number(star.energy) << ',' << format_number(star.nehari)
                    << ",1\n";
            star_written = true;
        }
        const bool is_star = prof.lambdas[k] == lam;
        csv << format_number(prof.lambdas[k]) << ',' << format_number(prof.j_values[k]) << ','
            << format_number(prof.nehari_values[k]) << ',' << (is_star ? 1 : 0) << '\n';
        if (prof.j_values[k] > prof.j_values[argmax]) argmax = k;
    }
    if (!star_written)
        csv << format_number(lam) << ',' << format_number(star.energy) << ',' << format_number(star.nehari) << ",1\n";

    KeyValues kv = echo(cfg);
    kv.emplace_back("lambda_star", format_number(lam));
    kv.emplace_back("j_at_lambda_star", format_number(star.energy));
    kv.emplace_back("nehari_at_lambda_star", format_number(star.nehari));
    kv.emplace_back("sampled_argmax_lambda", format_number(prof.lambdas[argmax]));
    kv.emplace_back("sampled_max_j", format_number(prof.j_values[argmax]));
    kv.emplace_back("samples", std::to_string(prof.lambdas.size()));
    emit(out, cfg.output_dir, "fiber_summary.txt", kv);
    return kExitOk;
}

int cmd_flow(const RunConfig& cfg, std::ostream& out) {
    for (const auto& c : cfg.checks)
        if (std::find(kCheckNames.begin(), kCheckNames.end(), c) == kCheckNames.end())
            throw Error(ErrorKind::ConfigError, "unknown check '" + c + "'");
    auto wants = [&](const std::string& c) { return std::find(cfg.checks.begin(), cfg.checks.end(), c) != cfg.checks.end(); };

    const auto grid = make_shared_grid(cfg.model);
    const Vector<double> u0 = make_initial_data(*grid, cfg.ic);
    const auto r0 = report(*grid, u0);
    if ((wants("decay") || wants("blowup")) && !(cfg.model.p > 2.0))
        throw Error(ErrorKind::UnsupportedRegime, "decay and blow-up checks need p > 2");
    if (wants("blowup") && r0.energy > 0.0)
        throw Error(ErrorKind::HypothesisNotMet, "blow-up check needs E(u0) <= 0, got " + format_number(r0.energy));

    KeyValues kv = echo(cfg);
    append(kv, report_values("initial.", r0));

    std::optional<WellClassification> cls;
    std::optional<double> d_hat;
    if (wants("well_invariance")) {
        const auto depth = resolve_d_hat(*grid, cfg);
        d_hat = depth.d_hat;
        cls = classify(*grid, u0, depth.d_hat, cfg.well.margin);
        kv.emplace_back("d_hat", format_number(depth.d_hat));
        kv.emplace_back("d_hat_source", depth.source);
        kv.emplace_back("classification", to_string(*cls));
    }

    std::ofstream csv(output_path(cfg.output_dir, "trace.csv"));
    if (!csv) throw Error(ErrorKind::ConfigError, "cannot write trace.csv");
    write_trace_header(csv);
    const auto trace = run_flow<double>(grid, u0, cfg.flow, [&](const TraceRow<double>& row) { write_trace_row(csv, row); });
    csv.close();

    const auto& last = trace.rows.back();
    kv.emplace_back("verdict", to_string(trace.verdict.kind));
    kv.emplace_back("verdict_time", format_number(trace.verdict.time));
    kv.emplace_back("rows", std::to_string(trace.rows.size()));
    kv.emplace_back("rejected_steps", std::to_string(trace.rejected_steps));
    append(kv, report_values("final.", last.report));
    kv.emplace_back("final.dissipation", format_number(last.dissipation));

    bool all_ok = true;
    if (wants("energy_inequality")) {
        const auto res = check_energy_inequality(trace);
        kv.emplace_back("check.energy_inequality", pass_fail(res.ok));
        if (res.first_violation) kv.emplace_back("energy_inequality.first_violation", std::to_string(*res.first_violation));
        all_ok = all_ok && res.ok;
    }
    if (wants("well_invariance")) {
        if (*cls == WellClassification::InsideWell || *cls == WellClassification::Exterior) {
            const auto res = check_well_invariance(trace, *cls, *cls == WellClassification::InsideWell ? d_hat : std::nullopt);
            kv.emplace_back("check.well_invariance", pass_fail(res.ok));
            if (res.first_violation) kv.emplace_back("well_invariance.first_violation", std::to_string(*res.first_violation));
            all_ok = all_ok && res.ok;
        } else {
            kv.emplace_back("check.well_invariance", "not_applicable");
            all_ok = false;
        }
    }
    if (wants("decay")) {
        if (trace.verdict.kind == VerdictKind::ReachedHorizon || trace.verdict.kind == VerdictKind::DecayedToZero) {
            const auto d = check_decay(trace, cfg.model);
            kv.emplace_back("check.decay", pass_fail(d.pass));
            kv.emplace_back("decay.slope", format_number(d.slope_fit));
            kv.emplace_back("decay.expected_slope", format_number(d.expected_slope));
            kv.emplace_back("decay.t_lo", format_number(d.t_lo));
            kv.emplace_back("decay.t_hi", format_number(d.t_hi));
            kv.emplace_back("decay.kappa_fit", format_number(d.kappa_fit));
            kv.emplace_back("decay.kappa_nehari", format_number(d.kappa_nehari));
            kv.emplace_back("decay.integral_inequality_fit", d.integral_inequality_ok ? "true" : "false");
            kv.emplace_back("decay.integral_inequality_nehari", d.integral_inequality_nehari_ok ? "true" : "false");
            add_golden(kv, cfg, "slope", d.slope_fit);
            all_ok = all_ok && d.pass;
        } else {
            kv.emplace_back("check.decay", "fail");
            kv.emplace_back("decay.reason", std::string("run ended with ") + to_string(trace.verdict.kind));
            all_ok = false;
        }
    }
    if (wants("blowup")) {
        const auto b = check_blowup(trace, cfg.model);
        kv.emplace_back("check.blowup", pass_fail(b.pass));
        kv.emplace_back("blowup.C", format_number(b.C_const));
        kv.emplace_back("blowup.T_bound", format_number(b.T_bound));
        kv.emplace_back("blowup.t_obs", format_number(b.t_obs));
        kv.emplace_back("blowup.t_obs_over_T", format_number(b.t_obs / b.T_bound));
        kv.emplace_back("blowup.lower_envelope", b.lower_envelope_ok ? "true" : "false");
        if (b.first_envelope_violation)
            kv.emplace_back("blowup.first_envelope_violation", std::to_string(*b.first_envelope_violation));
        if (b.blew_up) add_golden(kv, cfg, "t_blowup", b.t_obs);
        all_ok = all_ok && b.pass;
    }

    const bool collapsed = trace.verdict.kind == VerdictKind::StepCollapse;
    kv.emplace_back("status", collapsed ? "numerical_failure" : all_ok ? "pass" : "fail");
    emit(out, cfg.output_dir, "summary.txt", kv);
    if (collapsed) return kExitNumericalFailure;
    return all_ok ? kExitOk : kExitCheckFailed;
}

int cmd_welldepth(const RunConfig& cfg, std::ostream& out) {
    const auto grid = make_shared_grid(cfg.model);
    const int seeds = cfg.well.seeds;
    std::vector<std::optional<WellDepthEstimate<double>>> results(static_cast<std::size_t>(seeds));
    std::vector<std::string> failures(static_cast<std::size_t>(seeds));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < seeds; k = next++) {
            WellSamplerConfig sc = cfg.well.sampler;
            sc.seed = cfg.well.sampler.seed + static_cast<std::uint64_t>(k);
            try {
                results[static_cast<std::size_t>(k)] = estimate_well_depth(*grid, sc);
            } catch (const Error& e) {
                failures[static_cast<std::size_t>(k)] = e.what();
            }
        }
    };
    const int workers = std::min(thread_count(), seeds);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (int k = 0; k < seeds; ++k)
        if (!results[static_cast<std::size_t>(k)])
            throw Error(ErrorKind::SamplerFailure, "seed " + std::to_string(cfg.well.sampler.seed + k) + ": " +
                                                       failures[static_cast<std::size_t>(k)]);

    KeyValues kv = echo(cfg);
    kv.emplace_back("seeds", std::to_string(seeds));
    kv.emplace_back("samples_per_seed", std::to_string(cfg.well.sampler.samples));
    std::size_t best = 0;
    double lo = results[0]->d_hat, hi = lo;
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& e = *results[k];
        const std::string pre = "seed." + std::to_string(e.sampler_seed) + ".";
        kv.emplace_back(pre + "d_hat", format_number(e.d_hat));
        kv.emplace_back(pre + "residual_I", format_number(e.residual_I));
        kv.emplace_back(pre + "gradient_norm", format_number(e.gradient_norm));
        kv.emplace_back(pre + "best_sample_depth", format_number(e.best_sample_depth));
        lo = std::min(lo, e.d_hat);
        hi = std::max(hi, e.d_hat);
        if (e.d_hat < results[best]->d_hat) best = k;
    }
    const double spread = (hi - lo) / std::abs(lo);
    kv.emplace_back("d_hat", format_number(lo));
    kv.emplace_back("d_hat_max", format_number(hi));
    kv.emplace_back("spread", format_number(spread));
    kv.emplace_back("best_seed", std::to_string(results[best]->sampler_seed));
    add_golden(kv, cfg, "d_hat", lo);
    const bool ok = spread <= cfg.well.spread_tol;
    kv.emplace_back("status", ok ? "pass" : "fail");

    std::ofstream csv(output_path(cfg.output_dir, "minimizer.csv"));
    if (!csv) throw Error(ErrorKind::ConfigError, "cannot write minimizer.csv");
    csv << "x,u\n";
    for (Eigen::Index i = 0; i < grid->size(); ++i)
        csv << format_number(grid->centers()[i]) << ',' << format_number(results[best]->minimizer[i]) << '\n';

    emit(out, cfg.output_dir, "welldepth.txt", kv);
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_threshold(const RunConfig& cfg, std::ostream& out) {
    const auto& th = cfg.threshold;
    if (!th.alpha_lo || !th.alpha_hi) throw Error(ErrorKind::ConfigError, "threshold needs alpha_lo and alpha_hi");
    double lo = *th.alpha_lo, hi = *th.alpha_hi;
    if (!(lo > 0.0 && hi > lo)) throw Error(ErrorKind::ConfigError, "threshold needs 0 < alpha_lo < alpha_hi");
    const double tol = th.tol > 0.0 ? th.tol : 1e-3 * hi;

    const auto grid = make_shared_grid(cfg.model);
    InitialCondition unit = cfg.ic;
    unit.amplitude = 1.0;
    const Vector<double> profile = make_initial_data(*grid, unit);

    struct Outcome {
        bool blew_up;
        FlowTrace<double> trace;
    };
    auto run = [&](double alpha) {
        auto trace = run_flow<double>(grid, (alpha * profile).eval(), cfg.flow);
        if (trace.verdict.kind == VerdictKind::StepCollapse)
            throw Error(ErrorKind::NumericalFailure, "step collapse at amplitude " + format_number(alpha));
        const bool blew = trace.verdict.kind == VerdictKind::BlowUp;
        return Outcome{blew, std::move(trace)};
    };

    KeyValues kv = echo(cfg);
    kv.emplace_back("profile_lambda_star", format_number(lambda_star(*grid, profile)));
    Outcome at_lo = run(lo);
    Outcome at_hi = run(hi);
    const bool bracket_ok = !at_lo.blew_up && at_hi.blew_up;
    kv.emplace_back("bracket_ok", bracket_ok ? "true" : "false");
    int bisections = 0;
    if (bracket_ok) {
        while (hi - lo > tol && bisections < th.max_bisections) {
            const double mid = 0.5 * (lo + hi);
            Outcome at_mid = run(mid);
            if (at_mid.blew_up) {
                hi = mid;
                at_hi = std::move(at_mid);
            } else {
                lo = mid;
                at_lo = std::move(at_mid);
            }
            ++bisections;
        }
    }
    write_trace(output_path(cfg.output_dir, "trace_lo.csv"), at_lo.trace.rows);
    write_trace(output_path(cfg.output_dir, "trace_hi.csv"), at_hi.trace.rows);

    kv.emplace_back("alpha_lo", format_number(lo));
    kv.emplace_back("alpha_hi", format_number(hi));
    kv.emplace_back("width", format_number(hi - lo));
    kv.emplace_back("tol", format_number(tol));
    kv.emplace_back("bisections", std::to_string(bisections));
    kv.emplace_back("verdict_lo", to_string(at_lo.trace.verdict.kind));
    kv.emplace_back("verdict_hi", to_string(at_hi.trace.verdict.kind));
    append(kv, report_values("lo.", at_lo.trace.rows.front().report));
    append(kv, report_values("hi.", at_hi.trace.rows.front().report));
    if (bracket_ok) add_golden(kv, cfg, "threshold", 0.5 * (lo + hi));
    const bool ok = bracket_ok && hi - lo <= tol;
    kv.emplace_back("status", ok ? "pass" : "fail");
    emit(out, cfg.output_dir, "threshold.txt", kv);
    return ok ? kExitOk : kExitCheckFailed;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gradient flow of the fractional p-Laplacian with logarithmic nonlinearity"};
    app.require_subcommand(1);

    struct Options {
        std::string config;
        std::string out_dir;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> checks;
        std::string integrator;
    } opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "key=value configuration file")->required();
        sub->add_option("--out", opts.out_dir, "output directory (overrides output_dir)");
        sub->add_option("--seed", opts.seed, "seed for random initial data and the well sampler");
        sub->add_option("--integrator", opts.integrator, "proximal or explicit")
            ->check(CLI::IsMember({"proximal", "explicit"}));
    };
    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&, std::ostream&);
    };
    const Command commands[] = {
        {"energy", "report functionals and well classification of u0", cmd_energy},
        {"fiber", "sample the fibering map lambda -> E(lambda u0)", cmd_fiber},
        {"flow", "integrate the flow and evaluate checks", cmd_flow},
        {"welldepth", "estimate the well depth over several seeds", cmd_welldepth},
        {"threshold", "bisect the blow-up amplitude of a fixed profile", cmd_threshold},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        if (std::string(c.name) == "flow")
            sub->add_option("--check", opts.checks, "check to evaluate (repeatable)")
                ->check(CLI::IsMember(kCheckNames));
        subs.emplace_back(sub, &c);
    }

    try {
        std::vector<std::string> rest(args.rbegin(), args.rend());
        if (!rest.empty()) rest.pop_back();
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }

    try {
        RunConfig cfg = load_run_config(KeyValueConfig::load(opts.config));
        if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
        if (opts.seed) {
            cfg.ic.seed = *opts.seed;
            cfg.well.sampler.seed = *opts.seed;
        }
        if (!opts.checks.empty()) cfg.checks = opts.checks;
        if (opts.integrator == "proximal") cfg.flow.integrator = Integrator::ProximalImplicit;
        if (opts.integrator == "explicit") cfg.flow.integrator = Integrator::ExplicitAdaptive;
        for (const auto& [sub, cmd] : subs)
            if (sub->parsed()) return cmd->fn(cfg, out);
        return kExitConfigError;
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumericalFailure;
    }
}

} // namespace fracflow::cli
