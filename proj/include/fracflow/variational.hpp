#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "fracflow/functionals.hpp"
#include "fracflow/initial_data.hpp"

namespace fracflow {

/// Samples of the fibering map j(λ) = E(λu) on a logarithmic λ grid.
template <typename Scalar = double>
struct FiberingProfile {
    std::vector<Scalar> lambdas;
    std::vector<Scalar> j_values;
    std::vector<Scalar> nehari_values; ///< I(λu)
    Scalar lambda_star = 0;
};

template <typename Scalar = double>
struct WellDepthEstimate {
    Scalar d_hat = 0;
    Vector<Scalar> minimizer;
    Scalar residual_I = 0;
    std::uint64_t sampler_seed = 0;
    Scalar gradient_norm = 0; ///< ‖full_gradient(minimizer)‖_2
    int samples = 0;
    int descent_steps = 0;
    Scalar best_sample_depth = 0; ///< min over sampled rays before descent
};

enum class WellClassification { InsideWell, Exterior, OnNehari, Indeterminate };

inline const char* to_string(WellClassification c) {
    switch (c) {
    case WellClassification::InsideWell: return "InsideWell";
    case WellClassification::Exterior: return "Exterior";
    case WellClassification::OnNehari: return "OnNehari";
    case WellClassification::Indeterminate: return "Indeterminate";
    }
    return "?";
}

struct WellSamplerConfig {
    int samples = 200;
    std::uint64_t seed = 1;
    int refine_top = 3;        ///< number of best rays refined by descent
    int descent_iters = 1500;  ///< per refined ray; 0 disables descent
    double descent_rtol = 1e-13;
    bool polish = true;        ///< Newton polish of the best critical point
};

/// Exponents used by the logarithmic growth estimate: ϱ, θ and γ > 1.
/// Reported as metadata only.
template <typename Scalar>
struct GrowthExponents {
    Scalar rho;
    Scalar theta;
    Scalar gamma;
};

template <typename Scalar>
GrowthExponents<Scalar> growth_exponents(const ModelParams<Scalar>& m) {
    const Scalar dim(1);
    const Scalar sp = m.s * m.p;
    const Scalar rho = std::min(Scalar(0.5) * sp * sp / dim, Scalar(0.5));
    const Scalar theta = m.s * rho / (dim * m.p * (m.p + rho));
    const Scalar gamma = (Scalar(1) - theta) * (m.p + rho) / (m.p - theta * (m.p + rho));
    return {rho, theta, gamma};
}

/// |I| tolerance defining the discrete Nehari set.
template <typename Scalar>
Scalar nehari_tolerance(const EnergyReport<Scalar>& r) {
    return Scalar(1e-8) * (Scalar(1) + r.seminorm_p);
}

/// λ*(u) = exp(([u]^p + ‖u‖_p^p - ∫|u|^p log|u|) / ‖u‖_p^p), the unique
/// maximiser of λ ↦ E(λu).
template <typename Scalar, typename Derived>
Scalar lambda_star(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    using std::exp;
    const auto r = report(grid, u);
    if (!(r.lp_p > Scalar(0))) throw Error(ErrorKind::NotInX0, "lambda_star of the zero function");
    const Scalar lam = exp(r.nehari / r.lp_p);
    if (!std::isfinite(static_cast<double>(lam)) || lam == Scalar(0))
        throw Error(ErrorKind::NumericalFailure, "lambda_star overflows the scalar range");
    return lam;
}

template <typename Scalar, typename Derived>
Vector<Scalar> project_nehari(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    return lambda_star(grid, u) * u;
}

template <typename Scalar, typename Derived>
FiberingProfile<Scalar> fibering_profile(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u,
                                         Scalar lambda_min, Scalar lambda_max, int count) {
    using std::exp;
    using std::log;
    if (!(lambda_min > Scalar(0) && lambda_min < lambda_max))
        throw Error(ErrorKind::InvalidInstance, "fibering profile needs 0 < lambda_min < lambda_max");
    if (count < 16) throw Error(ErrorKind::InvalidInstance, "fibering profile needs count >= 16");

    FiberingProfile<Scalar> prof;
    prof.lambda_star = lambda_star(grid, u);
    const Scalar lo = log(lambda_min);
    const Scalar step = (log(lambda_max) - lo) / Scalar(count - 1);
    Vector<Scalar> scaled(u.size());
    for (int k = 0; k < count; ++k) {
        const Scalar lam = exp(lo + step * Scalar(k));
        scaled = lam * u;
        const auto r = report(grid, scaled);
        prof.lambdas.push_back(lam);
        prof.j_values.push_back(r.energy);
        prof.nehari_values.push_back(r.nehari);
    }
    return prof;
}

/// Ray value sup_λ E(λu) = ‖λ*u‖_p^p / p² evaluated at a point already on the
/// Nehari set.
template <typename Scalar, typename Derived>
Scalar nehari_depth(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& w) {
    const Scalar p = grid.params().p;
    return lp_norm_p(grid, w, p) / (p * p);
}

template <typename Scalar>
struct NehariDescentResult {
    Vector<Scalar> point;
    Scalar depth;
    int steps;
};

/// Minimises u ↦ sup_λ E(λu) by gradient steps on E followed by
/// re-projection onto the Nehari set, with backtracking until the ray value
/// decreases. The ray value is nonincreasing along the iterates.
template <typename Scalar>
NehariDescentResult<Scalar> nehari_descent(const Grid<Scalar>& grid, const Vector<Scalar>& start, int max_iters,
                                           Scalar rtol) {
    Vector<Scalar> w = project_nehari(grid, start);
    Scalar depth = nehari_depth(grid, w);
    Scalar alpha(-1);
    int steps = 0;
    int stalled = 0;
    for (int it = 0; it < max_iters; ++it) {
        const Vector<Scalar> g = full_gradient(grid, w);
        const Scalar gnorm = g.norm();
        if (!(gnorm > Scalar(0))) break;
        if (alpha < Scalar(0)) alpha = Scalar(1e-3) * w.norm() / gnorm;

        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, alpha /= Scalar(2)) {
            const Vector<Scalar> trial = w - alpha * g;
            if (!(trial.cwiseAbs().maxCoeff() > Scalar(0))) continue;
            Vector<Scalar> projected;
            try {
                projected = project_nehari(grid, trial);
            } catch (const Error&) {
                continue;
            }
            const Scalar trial_depth = nehari_depth(grid, projected);
            if (trial_depth < depth) {
                const Scalar gain = (depth - trial_depth) / depth;
                stalled = gain < rtol ? stalled + 1 : 0;
                w = projected;
                depth = trial_depth;
                accepted = true;
                alpha *= Scalar(2);
                break;
            }
        }
        if (!accepted) break;
        ++steps;
        if (stalled >= 5) break;
    }
    return {w, depth, steps};
}

/// Newton iteration for full_gradient(w) = 0 started near a Nehari
/// minimiser, re-projecting after each step. Returns the polished point only
/// if the ray value did not grow beyond rounding and the gradient shrank.
template <typename Scalar>
Vector<Scalar> polish_critical_point(const Grid<Scalar>& grid, const Vector<Scalar>& w0, int max_iters = 30) {
    Vector<Scalar> w = w0;
    Scalar gnorm = full_gradient(grid, w).norm();
    const Scalar depth0 = nehari_depth(grid, w0);
    for (int it = 0; it < max_iters; ++it) {
        const Vector<Scalar> g = full_gradient(grid, w);
        const Matrix<Scalar> H = energy_hessian(grid, w);
        const Vector<Scalar> delta = H.partialPivLu().solve(-g);
        if (!delta.allFinite()) break;
        Vector<Scalar> next;
        try {
            next = project_nehari(grid, Vector<Scalar>(w + delta));
        } catch (const Error&) {
            break;
        }
        const Scalar next_norm = full_gradient(grid, next).norm();
        if (!(next_norm < gnorm)) break;
        w = next;
        gnorm = next_norm;
    }
    if (nehari_depth(grid, w) > depth0 * (Scalar(1) + Scalar(1e-12))) return w0;
    return w;
}

/// Upper estimate of the well depth d from an explicit set of trial
/// functions: minimum of the ray values E(λ*(u)u), refined by Nehari
/// descent from the best rays and a final Newton polish.
template <typename Scalar>
WellDepthEstimate<Scalar> estimate_well_depth(const Grid<Scalar>& grid, const std::vector<Vector<Scalar>>& trials,
                                              const WellSamplerConfig& cfg) {
    struct Ray {
        Scalar depth;
        Vector<Scalar> point;
    };
    std::vector<Ray> rays;
    for (const auto& u : trials) {
        if (u.size() != grid.size() || !(u.cwiseAbs().maxCoeff() > Scalar(0))) continue;
        try {
            Vector<Scalar> w = project_nehari(grid, u);
            rays.push_back({nehari_depth(grid, w), std::move(w)});
        } catch (const Error&) {
        }
    }
    if (rays.empty()) throw Error(ErrorKind::SamplerFailure, "every trial function was degenerate");
    std::stable_sort(rays.begin(), rays.end(), [](const Ray& l, const Ray& r) { return l.depth < r.depth; });

    WellDepthEstimate<Scalar> est;
    est.sampler_seed = cfg.seed;
    est.samples = static_cast<int>(trials.size());
    est.best_sample_depth = rays.front().depth;

    Vector<Scalar> best = rays.front().point;
    Scalar best_depth = rays.front().depth;
    if (cfg.descent_iters > 0) {
        const int top = std::min<int>(cfg.refine_top, static_cast<int>(rays.size()));
        for (int k = 0; k < top; ++k) {
            auto res = nehari_descent(grid, rays[k].point, cfg.descent_iters, Scalar(cfg.descent_rtol));
            est.descent_steps += res.steps;
            if (res.depth < best_depth) {
                best_depth = res.depth;
                best = std::move(res.point);
            }
        }
        if (cfg.polish) best = polish_critical_point(grid, best);
    }

    const auto r = report(grid, best);
    est.minimizer = best;
    est.d_hat = r.energy;
    est.residual_I = std::abs(r.nehari);
    est.gradient_norm = l2_norm(grid, full_gradient(grid, best));
    return est;
}

/// Trial functions drawn from three families: bumps at random centres and
/// widths, random combinations of the first few sine modes, and smoothed
/// random fields.
template <typename Scalar>
std::vector<Vector<Scalar>> well_trial_functions(const Grid<Scalar>& grid, int count, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto& m = grid.params();
    const Scalar len = m.measure();
    std::vector<Vector<Scalar>> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        switch (i % 3) {
        case 0: {
            const Scalar c = m.a + len * Scalar(rng.uniform(0.2, 0.8));
            const Scalar room = std::min(c - m.a, m.b - c);
            const Scalar hw = room * Scalar(rng.uniform(0.4, 1.0));
            out.push_back(bump_profile(grid, c, hw));
            break;
        }
        case 1: {
            const int modes = 1 + (i / 3) % 4;
            Vector<Scalar> u = sine_mode(grid, 1);
            for (int k = 2; k <= modes; ++k)
                u += Scalar(rng.uniform(-0.5, 0.5) / k) * sine_mode(grid, k);
            out.push_back(std::move(u));
            break;
        }
        default:
            out.push_back(smoothed_random_field(grid, rng.next(), 1 + (i / 3) % 3));
            break;
        }
    }
    return out;
}

template <typename Scalar>
WellDepthEstimate<Scalar> estimate_well_depth(const Grid<Scalar>& grid, const WellSamplerConfig& cfg) {
    if (cfg.samples < 1) throw Error(ErrorKind::SamplerFailure, "sampler count must be >= 1");
    return estimate_well_depth(grid, well_trial_functions(grid, cfg.samples, cfg.seed), cfg);
}

/// Membership of u0 in the potential well W, its exterior Z, or the Nehari
/// set N relative to an (upper) estimate of d. `margin` is a fraction of
/// d_hat below which E must sit for a definite answer.
template <typename Scalar, typename Derived>
WellClassification classify(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u0, Scalar d_hat,
                            Scalar margin = Scalar(0.05)) {
    const auto r = report(grid, u0);
    if (std::abs(r.nehari) <= nehari_tolerance(r)) return WellClassification::OnNehari;
    if (r.energy >= d_hat - margin * std::abs(d_hat)) return WellClassification::Indeterminate;
    return r.nehari > Scalar(0) ? WellClassification::InsideWell : WellClassification::Exterior;
}

} // namespace fracflow
