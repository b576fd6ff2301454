#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracflow/functionals.hpp"

namespace fracflow {

enum class Integrator { ProximalImplicit, ExplicitAdaptive };

enum class InnerSolver { Newton, GradientDescent };

enum class ExplicitPair { BogackiShampine, HeunEuler };

inline const char* to_string(Integrator i) {
    return i == Integrator::ProximalImplicit ? "proximal" : "explicit";
}

template <typename Scalar = double>
struct FlowConfig {
    Scalar dt0 = Scalar(1e-2);
    Scalar t_end = Scalar(1);
    Scalar dt_min = Scalar(1e-14);
    Scalar blowup_threshold = Scalar(1e12); ///< cap on ‖u‖_2
    Scalar inner_tol = Scalar(1e-10);       ///< relative to 1 + ‖(-Δ)_p^s u‖_2 + ‖local terms‖_2
    int inner_max_iters = 500;
    Integrator integrator = Integrator::ProximalImplicit;
    InnerSolver inner_solver = InnerSolver::Newton;
    Scalar explicit_tol = Scalar(1e-8);
    ExplicitPair explicit_pair = ExplicitPair::BogackiShampine;
    Scalar decay_ratio = Scalar(1e-10); ///< ‖u‖_2 ≤ ratio·‖u0‖_2 ends the run
    long max_steps = 10'000'000;
    bool require_converged_inner = true;

    void validate() const {
        if (!(dt_min > Scalar(0) && dt0 > dt_min))
            throw Error(ErrorKind::InvalidInstance, "flow config needs dt0 > dt_min > 0");
        if (!(blowup_threshold > Scalar(0)))
            throw Error(ErrorKind::InvalidInstance, "flow config needs blowup_threshold > 0");
        if (!(t_end > Scalar(0))) throw Error(ErrorKind::InvalidInstance, "flow config needs t_end > 0");
        if (!(inner_tol > Scalar(0)) || inner_max_iters < 1)
            throw Error(ErrorKind::InvalidInstance, "flow config needs inner_tol > 0 and inner_max_iters >= 1");
    }
};

template <typename Scalar = double>
struct TraceRow {
    Scalar t = 0;
    Scalar dt = 0;
    EnergyReport<Scalar> report;
    Scalar dissipation = 0; ///< D(t) = Σ_k ‖u^{k+1} - u^k‖_2² / Δt_k
};

enum class VerdictKind { ReachedHorizon, BlowUp, DecayedToZero, StepCollapse };

inline const char* to_string(VerdictKind v) {
    switch (v) {
    case VerdictKind::ReachedHorizon: return "ReachedHorizon";
    case VerdictKind::BlowUp: return "BlowUp";
    case VerdictKind::DecayedToZero: return "DecayedToZero";
    case VerdictKind::StepCollapse: return "StepCollapse";
    }
    return "?";
}

template <typename Scalar = double>
struct FlowVerdict {
    VerdictKind kind = VerdictKind::ReachedHorizon;
    Scalar time = 0;
};

template <typename Scalar = double>
struct FlowTrace {
    std::vector<TraceRow<Scalar>> rows;
    FlowVerdict<Scalar> verdict;
    GridFunction<Scalar> u_final;
    long rejected_steps = 0;
};

template <typename Scalar>
using TraceSink = std::function<void(const TraceRow<Scalar>&)>;

template <typename Scalar>
struct ProximalStep {
    Vector<Scalar> v;
    int iterations = 0;
    Scalar residual = 0; ///< ‖(v - u)/dt + full_gradient(v)‖_2
    bool converged = false;
};

/// One proximal (implicit Euler) step: approximately minimises
///   J(v) = ‖v - u‖_2² / (2 dt) + E(v)
/// starting from v = u. Every iterate decreases J, so an accepted step
/// satisfies E(v) + ‖v - u‖_2²/(2dt) ≤ E(u). Throws StepReject when that
/// cannot be certified.
template <typename Scalar, typename Derived>
ProximalStep<Scalar> step_proximal(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u_in, Scalar dt,
                                   const FlowConfig<Scalar>& cfg) {
    using std::abs;
    if (!(dt > Scalar(0))) throw Error(ErrorKind::InvalidInstance, "step_proximal needs dt > 0");
    const Vector<Scalar> u = u_in;
    const Eigen::Index n = u.size();
    const Scalar h = grid.h();

    auto objective = [&](const Vector<Scalar>& v) {
        return (v - u).squaredNorm() * h / (Scalar(2) * dt) + energy(grid, v);
    };
    auto residual_of = [&](const Vector<Scalar>& v) -> Vector<Scalar> {
        return (v - u) / dt + full_gradient(grid, v);
    };

    const Scalar j0 = energy(grid, u);
    // Scale of the gradient terms before cancellation, so that the tolerance
    // stays above rounding near critical points.
    const Vector<Scalar> lap = frac_p_laplacian(grid, u);
    const Vector<Scalar> local = full_gradient(grid, u) - lap;
    const Scalar tol = cfg.inner_tol * (Scalar(1) + l2_norm(grid, lap) + l2_norm(grid, local));

    ProximalStep<Scalar> out;
    Vector<Scalar> v = u;
    Scalar jv = j0;
    Vector<Scalar> r = residual_of(v);
    Scalar rnorm = l2_norm(grid, r);
    Scalar gd_step = dt;
    // Newton either converges in a handful of iterations or is wandering on
    // the nonconvex part of J; the smaller budget makes rejection cheap.
    const int budget = cfg.inner_solver == InnerSolver::Newton ? std::min(cfg.inner_max_iters, 50)
                                                                : cfg.inner_max_iters;

    for (int it = 0; it < budget; ++it) {
        if (rnorm <= tol) {
            out.converged = true;
            break;
        }
        out.iterations = it + 1;

        Vector<Scalar> d;
        Scalar step(1);
        if (cfg.inner_solver == InnerSolver::Newton) {
            Matrix<Scalar> H = energy_hessian(grid, v);
            H.diagonal().array() += Scalar(1) / dt;
            Eigen::LLT<Matrix<Scalar>> llt(H);
            Scalar shift(0);
            const Scalar diag_scale = H.diagonal().cwiseAbs().maxCoeff();
            while (llt.info() != Eigen::Success) {
                shift = shift == Scalar(0) ? Scalar(1e-8) * diag_scale : shift * Scalar(10);
                Matrix<Scalar> Hs = H;
                Hs.diagonal().array() += shift;
                llt.compute(Hs);
                if (shift > Scalar(1e12) * diag_scale) break;
            }
            d = llt.info() == Eigen::Success ? Vector<Scalar>(llt.solve(-r)) : Vector<Scalar>(-r * dt);
        } else {
            d = -r;
            step = gd_step;
        }
        if (!d.allFinite()) break;
        Scalar slope = h * r.dot(d);
        if (!(slope < Scalar(0))) {
            d = -r * dt;
            slope = h * r.dot(d);
        }

        bool moved = false;
        for (int k = 0; k < 60; ++k, step /= Scalar(2)) {
            const Vector<Scalar> trial = v + step * d;
            if (!trial.allFinite()) continue;
            const Scalar jt = objective(trial);
            if (std::isfinite(static_cast<double>(jt)) && jt <= jv + Scalar(1e-4) * step * slope) {
                v = trial;
                jv = jt;
                moved = true;
                break;
            }
        }
        if (!moved && cfg.inner_solver == InnerSolver::Newton) {
            // Near the minimiser J is flat to rounding; take the full Newton
            // step if it clearly reduces the residual without raising J above E(u).
            const Vector<Scalar> trial = v + d;
            const Scalar jt = objective(trial);
            const Scalar rt = l2_norm(grid, residual_of(trial));
            if (trial.allFinite() && jt <= j0 && rt < Scalar(0.5) * rnorm) {
                v = trial;
                jv = jt;
                moved = true;
            }
        }
        if (!moved) break;
        if (cfg.inner_solver == InnerSolver::GradientDescent) gd_step = step * Scalar(2);
        r = residual_of(v);
        rnorm = l2_norm(grid, r);
    }
    if (rnorm <= tol) out.converged = true;

    if (!v.allFinite() || !(jv <= j0) || n != v.size())
        throw Error(ErrorKind::StepReject, "proximal step could not decrease the objective");
    // An unconverged descent on the nonconvex objective may be drifting
    // towards E = -inf rather than resolving the step.
    if (!out.converged && cfg.require_converged_inner)
        throw Error(ErrorKind::StepReject, "proximal inner solver did not reach its tolerance");
    out.v = std::move(v);
    out.residual = rnorm;
    return out;
}

template <typename Scalar>
struct ExplicitStep {
    Vector<Scalar> u_next; ///< higher-order solution
    Vector<Scalar> u_low;  ///< embedded lower-order solution
    Scalar error = 0;      ///< scaled error norm; accepted iff ≤ 1
    Scalar dt_next = 0;
    bool accepted = false;
};

/// One step of an embedded explicit Runge-Kutta pair for u' = -full_gradient(u)
/// with standard step control. Heun-Euler embeds forward Euler as its
/// lower-order member.
template <typename Scalar, typename Derived>
ExplicitStep<Scalar> step_explicit(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u_in, Scalar dt,
                                   Scalar tol, Scalar safety = Scalar(0.9),
                                   ExplicitPair pair = ExplicitPair::BogackiShampine) {
    using std::abs;
    using std::max;
    using std::pow;
    if (!(dt > Scalar(0))) throw Error(ErrorKind::InvalidInstance, "step_explicit needs dt > 0");
    const Vector<Scalar> u = u_in;
    auto rhs = [&](const Vector<Scalar>& x) -> Vector<Scalar> { return -full_gradient(grid, x); };

    ExplicitStep<Scalar> out;
    Scalar order;
    const Vector<Scalar> k1 = rhs(u);
    if (pair == ExplicitPair::HeunEuler) {
        out.u_low = u + dt * k1;
        const Vector<Scalar> k2 = rhs(out.u_low);
        out.u_next = u + (dt / Scalar(2)) * (k1 + k2);
        order = Scalar(2);
    } else {
        const Vector<Scalar> k2 = rhs(u + (dt / Scalar(2)) * k1);
        const Vector<Scalar> k3 = rhs(u + (Scalar(3) * dt / Scalar(4)) * k2);
        out.u_next = u + dt * (Scalar(2) / Scalar(9) * k1 + Scalar(1) / Scalar(3) * k2 + Scalar(4) / Scalar(9) * k3);
        const Vector<Scalar> k4 = rhs(out.u_next);
        out.u_low = u + dt * (Scalar(7) / Scalar(24) * k1 + Scalar(1) / Scalar(4) * k2 + Scalar(1) / Scalar(3) * k3 +
                              Scalar(1) / Scalar(8) * k4);
        order = Scalar(3);
    }

    Scalar err(0);
    bool finite = out.u_next.allFinite() && out.u_low.allFinite();
    if (finite) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const Scalar scale = tol * (Scalar(1) + max(abs(u[i]), abs(out.u_next[i])));
            err = max(err, abs(out.u_next[i] - out.u_low[i]) / scale);
        }
    }
    out.error = finite ? err : std::numeric_limits<Scalar>::infinity();
    out.accepted = finite && err <= Scalar(1);
    Scalar factor;
    if (!finite) factor = Scalar(0.2);
    else if (err == Scalar(0)) factor = Scalar(5);
    else factor = std::clamp(safety * pow(err, -Scalar(1) / order), Scalar(0.2), Scalar(5));
    if (!out.accepted) factor = std::min(factor, Scalar(0.9));
    out.dt_next = dt * factor;
    return out;
}

namespace detail {

template <typename Scalar>
bool l2_trending_up(const std::vector<TraceRow<Scalar>>& rows, std::size_t window) {
    if (rows.size() < window + 1) return false;
    for (std::size_t k = rows.size() - window; k < rows.size(); ++k)
        if (!(rows[k].report.l2 > rows[k - 1].report.l2)) return false;
    return true;
}

} // namespace detail

/// Integrates u_t = -full_gradient(u) from u0 until t_end, blow-up (‖u‖_2
/// past the threshold while growing over the last 5 steps, or step collapse
/// during such growth), or decay to zero. Rows are streamed to `sink` as
/// they are accepted.
template <typename Scalar>
FlowTrace<Scalar> run_flow(std::shared_ptr<const Grid<Scalar>> grid_ptr, const Vector<Scalar>& u0,
                           const FlowConfig<Scalar>& cfg, const TraceSink<Scalar>& sink = {}) {
    using std::pow;
    cfg.validate();
    const Grid<Scalar>& grid = *grid_ptr;
    detail::require_on_grid(grid, u0, "run_flow");
    if (!u0.allFinite()) throw Error(ErrorKind::InvalidInstance, "initial data has non-finite values");
    if (!(u0.cwiseAbs().maxCoeff() > Scalar(0))) throw Error(ErrorKind::InvalidInstance, "initial data must be nonzero");

    const Scalar p = grid.params().p;
    const std::size_t trend_window = 5;
    FlowTrace<Scalar> trace;
    auto push = [&](TraceRow<Scalar> row) {
        trace.rows.push_back(row);
        if (sink) sink(trace.rows.back());
    };

    Vector<Scalar> u = u0;
    TraceRow<Scalar> first;
    first.report = report(grid, u);
    push(first);
    const Scalar l2_0 = first.report.l2;

    Scalar t(0);
    Scalar dt = cfg.dt0;
    Scalar dissipation(0);
    const Scalar dt_max = Scalar(10) * cfg.dt0;
    const Scalar horizon_slack = std::max(cfg.dt_min, Scalar(1e-12) * cfg.t_end);

    auto finish = [&](VerdictKind kind, Scalar time) {
        trace.verdict = {kind, time};
        trace.u_final = {grid_ptr, u};
        return trace;
    };

    for (long step = 0; step < cfg.max_steps; ++step) {
        if (cfg.t_end - t <= horizon_slack) return finish(VerdictKind::ReachedHorizon, t);

        const Scalar l2 = trace.rows.back().report.l2;
        dt = std::min(dt, dt_max);
        if (p > Scalar(2) && l2 > Scalar(0)) dt = std::min(dt, Scalar(0.1) / pow(l2, p - Scalar(2)));
        const bool last_step = dt >= cfg.t_end - t;
        if (last_step) dt = cfg.t_end - t;

        if (dt < cfg.dt_min) {
            if (detail::l2_trending_up(trace.rows, trend_window)) return finish(VerdictKind::BlowUp, t);
            return finish(VerdictKind::StepCollapse, t);
        }

        Vector<Scalar> next;
        Scalar dt_after = dt;
        if (cfg.integrator == Integrator::ProximalImplicit) {
            try {
                next = step_proximal(grid, u, dt, cfg).v;
                dt_after = Scalar(2) * dt;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::StepReject) throw;
                ++trace.rejected_steps;
                dt /= Scalar(2);
                continue;
            }
        } else {
            auto res = step_explicit(grid, u, dt, cfg.explicit_tol, Scalar(0.9), cfg.explicit_pair);
            if (!res.accepted) {
                ++trace.rejected_steps;
                dt = std::min(res.dt_next, dt / Scalar(2));
                continue;
            }
            next = std::move(res.u_next);
            dt_after = res.dt_next;
        }

        const Scalar t_next = last_step ? cfg.t_end : t + dt;
        dissipation += grid.h() * (next - u).squaredNorm() / dt;
        u = std::move(next);
        t = t_next;

        TraceRow<Scalar> row;
        row.t = t;
        row.dt = dt;
        row.report = report(grid, u);
        row.dissipation = dissipation;
        if (!std::isfinite(static_cast<double>(row.report.energy)) || !std::isfinite(static_cast<double>(row.report.l2)))
            throw Error(ErrorKind::NumericalFailure,
                        "non-finite state at trace row " + std::to_string(trace.rows.size()));
        push(row);

        if (row.report.l2 >= cfg.blowup_threshold && detail::l2_trending_up(trace.rows, trend_window))
            return finish(VerdictKind::BlowUp, t);
        if (row.report.l2 <= cfg.decay_ratio * l2_0) return finish(VerdictKind::DecayedToZero, t);
        dt = dt_after;
    }
    throw Error(ErrorKind::NumericalFailure, "step budget exhausted before the run ended");
}

} // namespace fracflow
