#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "fracflow/flow.hpp"
#include "fracflow/variational.hpp"

// Executable forms of the qualitative results: the energy inequality, well
// invariance, polynomial decay of ‖u‖_2 and the blow-up time bound, all
// evaluated on recorded traces.

namespace fracflow {

struct RowCheck {
    bool ok = true;
    std::optional<std::size_t> first_violation;
    explicit operator bool() const { return ok; }
};

/// Σ_k ‖Δu‖²/(2Δt_k) + E(u^K) ≤ E(u^0) + 1e-10·(1 + |E(u^0)|) for every prefix K.
template <typename Scalar>
RowCheck check_energy_inequality(const FlowTrace<Scalar>& trace) {
    RowCheck out;
    if (trace.rows.empty()) return out;
    const Scalar e0 = trace.rows.front().report.energy;
    const Scalar slack = Scalar(1e-10) * (Scalar(1) + std::abs(e0));
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const auto& row = trace.rows[k];
        if (!(row.dissipation / Scalar(2) + row.report.energy <= e0 + slack)) {
            out.ok = false;
            out.first_violation = k;
            return out;
        }
    }
    return out;
}

/// Martinez decay bound for a nonincreasing f with
/// ∫_t^∞ f^{1+σ} ≤ f(0)^σ f(t) / ω.
template <typename Scalar>
Scalar martinez_bound(Scalar f0, Scalar sigma, Scalar omega, Scalar t) {
    using std::exp;
    using std::pow;
    if (sigma == Scalar(0)) return f0 * exp(Scalar(1) - omega * t);
    return f0 * pow((Scalar(1) + sigma) / (Scalar(1) + omega * sigma * t), Scalar(1) / sigma);
}

/// ‖u0‖_2 (p / (2(1 + κ(p-2)‖u0‖_2^{p-2} t)))^{1/(p-2)}
template <typename Scalar>
Scalar decay_bound(Scalar l2_0, Scalar p, Scalar kappa, Scalar t) {
    using std::pow;
    return l2_0 * pow(p / (Scalar(2) * (Scalar(1) + kappa * (p - Scalar(2)) * pow(l2_0, p - Scalar(2)) * t)),
                      Scalar(1) / (p - Scalar(2)));
}

template <typename Scalar = double>
struct DecayVerdict {
    Scalar slope_fit = std::numeric_limits<Scalar>::quiet_NaN();
    Scalar expected_slope = 0;      ///< -1/(p-2)
    Scalar kappa_fit = 0;           ///< largest κ for which the decay bound holds on every row
    Scalar kappa_nehari = 0;        ///< min_rows I(u)/‖u‖_2^p
    Scalar t_lo = 0;
    Scalar t_hi = 0;
    bool integral_inequality_ok = false;        ///< tail-integral check with kappa_fit
    bool integral_inequality_nehari_ok = false; ///< the same with kappa_nehari
    bool pass = false;
};

struct DecayOptions {
    double slope_tol = 0.15;
    int integral_samples = 5;
};

namespace detail {

template <typename Scalar>
bool tail_integral_holds(const std::vector<TraceRow<Scalar>>& rows, Scalar p, Scalar kappa, int samples) {
    using std::pow;
    if (!(kappa > Scalar(0)) || rows.size() < 3) return false;
    // Right-endpoint sums: tail[k] = Σ_{j > k} ‖u_j‖^p Δt_j.
    std::vector<Scalar> tail(rows.size(), Scalar(0));
    for (std::size_t k = rows.size() - 1; k-- > 0;)
        tail[k] = tail[k + 1] + pow(rows[k + 1].report.l2, p) * rows[k + 1].dt;
    const std::size_t last = rows.size() - 1;
    for (int m = 0; m < samples; ++m) {
        const std::size_t k = (last * static_cast<std::size_t>(m)) / static_cast<std::size_t>(samples);
        const Scalar l2 = rows[k].report.l2;
        if (!(tail[k] <= l2 * l2 / (Scalar(2) * kappa))) return false;
    }
    return true;
}

} // namespace detail

/// Fits the log-log slope of ‖u‖_2 over the last time decade and the decay
/// constant κ of the polynomial bound. κ is fitted because its closed form
/// involves embedding constants that are not computable.
template <typename Scalar>
DecayVerdict<Scalar> check_decay(const FlowTrace<Scalar>& trace, const ModelParams<Scalar>& params,
                                 const DecayOptions& opts = {}) {
    using std::log;
    using std::pow;
    const Scalar p = params.p;
    if (!(p > Scalar(2)))
        throw Error(ErrorKind::UnsupportedRegime, "decay check needs p > 2 (the decay law degenerates at p = 2)");
    if (trace.verdict.kind != VerdictKind::ReachedHorizon && trace.verdict.kind != VerdictKind::DecayedToZero)
        throw Error(ErrorKind::HypothesisNotMet, "decay check needs a run that reached the horizon or decayed");
    if (trace.rows.size() < 2) throw Error(ErrorKind::HypothesisNotMet, "decay check needs at least two rows");

    DecayVerdict<Scalar> out;
    out.expected_slope = -Scalar(1) / (p - Scalar(2));
    out.t_hi = trace.rows.back().t;
    out.t_lo = out.t_hi / Scalar(10);

    Scalar sx(0), sy(0), sxx(0), sxy(0);
    int count = 0;
    for (const auto& row : trace.rows) {
        if (row.t < out.t_lo || !(row.t > Scalar(0)) || !(row.report.l2 > Scalar(0))) continue;
        const Scalar x = log(row.t);
        const Scalar y = log(row.report.l2);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const Scalar c = Scalar(count);
        const Scalar denom = c * sxx - sx * sx;
        if (denom > Scalar(0)) out.slope_fit = (c * sxy - sx * sy) / denom;
    }

    const Scalar l2_0 = trace.rows.front().report.l2;
    const Scalar a = pow(l2_0, p - Scalar(2));
    Scalar kappa = std::numeric_limits<Scalar>::infinity();
    Scalar kappa_n = std::numeric_limits<Scalar>::infinity();
    for (const auto& row : trace.rows) {
        const Scalar l2 = row.report.l2;
        if (l2 > Scalar(0)) kappa_n = std::min(kappa_n, row.report.nehari / pow(l2, p));
        if (!(row.t > Scalar(0))) continue;
        const Scalar ratio = pow(l2 / l2_0, p - Scalar(2));
        const Scalar k_row = (p / (Scalar(2) * ratio) - Scalar(1)) / ((p - Scalar(2)) * a * row.t);
        kappa = std::min(kappa, k_row);
    }
    out.kappa_fit = std::isfinite(static_cast<double>(kappa)) ? kappa : Scalar(0);
    out.kappa_nehari = std::isfinite(static_cast<double>(kappa_n)) ? kappa_n : Scalar(0);
    out.integral_inequality_ok = detail::tail_integral_holds(trace.rows, p, out.kappa_fit, opts.integral_samples);
    out.integral_inequality_nehari_ok =
        detail::tail_integral_holds(trace.rows, p, out.kappa_nehari, opts.integral_samples);
    out.pass = std::isfinite(static_cast<double>(out.slope_fit)) &&
               std::abs(out.slope_fit - out.expected_slope) <= Scalar(opts.slope_tol) && out.kappa_fit > Scalar(0);
    return out;
}

template <typename Scalar = double>
struct BlowupVerdict {
    Scalar C_const = 0; ///< p^{-1}|Ω|^{p-2}(p-2)
    Scalar T_bound = 0; ///< ‖u0‖_2^{2-p} / C
    Scalar t_obs = std::numeric_limits<Scalar>::quiet_NaN();
    bool blew_up = false;
    bool lower_envelope_ok = false;
    std::optional<std::size_t> first_envelope_violation;
    bool pass = false;
};

struct BlowupOptions {
    double tol = 0.10;     ///< relative slack on T_bound
    double env_tol = 0.10; ///< relative slack on the lower envelope
    double envelope_stop = 0.95;
};

template <typename Scalar>
Scalar blowup_constant(const ModelParams<Scalar>& params) {
    using std::pow;
    const Scalar p = params.p;
    return pow(params.measure(), p - Scalar(2)) * (p - Scalar(2)) / p;
}

/// (‖u0‖_2^{2-p} - C t)^{-2/(p-2)}, the lower bound for ‖u(t)‖_2².
template <typename Scalar>
Scalar blowup_envelope(Scalar l2_0, Scalar p, Scalar c_const, Scalar t) {
    using std::pow;
    return pow(pow(l2_0, Scalar(2) - p) - c_const * t, -Scalar(2) / (p - Scalar(2)));
}

/// Compares an observed blow-up with the explicit time bound and the lower
/// envelope for ‖u(t)‖_2². A run that did not blow up fails the check.
template <typename Scalar>
BlowupVerdict<Scalar> check_blowup(const FlowTrace<Scalar>& trace, const ModelParams<Scalar>& params,
                                   const BlowupOptions& opts = {}) {
    using std::pow;
    const Scalar p = params.p;
    if (!(p > Scalar(2)))
        throw Error(ErrorKind::UnsupportedRegime, "blow-up bound needs p > 2 (C vanishes at p = 2)");
    if (trace.rows.empty()) throw Error(ErrorKind::HypothesisNotMet, "blow-up check on an empty trace");
    if (trace.rows.front().report.energy > Scalar(0))
        throw Error(ErrorKind::HypothesisNotMet, "blow-up bound requires E(u0) <= 0");

    BlowupVerdict<Scalar> out;
    const Scalar l2_0 = trace.rows.front().report.l2;
    out.C_const = blowup_constant(params);
    out.T_bound = pow(l2_0, Scalar(2) - p) / out.C_const;
    out.blew_up = trace.verdict.kind == VerdictKind::BlowUp;
    if (out.blew_up) out.t_obs = trace.verdict.time;

    out.lower_envelope_ok = true;
    const Scalar stop = Scalar(opts.envelope_stop) * out.T_bound;
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const auto& row = trace.rows[k];
        if (!(row.t < stop)) continue;
        const Scalar env = blowup_envelope(l2_0, p, out.C_const, row.t);
        if (!(row.report.l2 * row.report.l2 >= env * (Scalar(1) - Scalar(opts.env_tol)))) {
            out.lower_envelope_ok = false;
            out.first_envelope_violation = k;
            break;
        }
    }
    out.pass = out.blew_up && out.t_obs <= out.T_bound * (Scalar(1) + Scalar(opts.tol)) && out.lower_envelope_ok;
    return out;
}

/// InsideWell runs keep I > 0 (and E < d_hat when given) on every row;
/// Exterior runs keep I < 0.
template <typename Scalar>
RowCheck check_well_invariance(const FlowTrace<Scalar>& trace, WellClassification classification,
                               std::optional<Scalar> d_hat = std::nullopt) {
    if (classification != WellClassification::InsideWell && classification != WellClassification::Exterior)
        throw Error(ErrorKind::HypothesisNotMet, "well invariance applies to InsideWell or Exterior data only");
    RowCheck out;
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const auto& r = trace.rows[k].report;
        bool ok;
        if (classification == WellClassification::InsideWell)
            ok = r.nehari > Scalar(0) && (!d_hat || r.energy < *d_hat);
        else
            ok = r.nehari < Scalar(0);
        if (!ok) {
            out.ok = false;
            out.first_violation = k;
            return out;
        }
    }
    return out;
}

} // namespace fracflow
