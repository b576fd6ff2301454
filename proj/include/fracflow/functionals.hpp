#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fracflow/detail/power.hpp"
#include "fracflow/grid.hpp"

// Functionals of a piecewise-constant state u on a Grid. All integrals over
// (a, b) use the cell measure h, and gradients are taken with respect to the
// h-weighted inner product <f, g> = h Σ f_i g_i, so that u_t = -full_gradient(u)
// is the Galerkin system in the cell-indicator basis.

namespace fracflow {

/// Scalar diagnostics of one state.
template <typename Scalar = double>
struct EnergyReport {
    Scalar seminorm_p = 0; ///< [u]_{s,p}^p
    Scalar lp_p = 0;       ///< ‖u‖_p^p
    Scalar log_int = 0;    ///< ∫ |u|^p log|u|
    Scalar energy = 0;     ///< E(u)
    Scalar nehari = 0;     ///< I(u)
    Scalar l2 = 0;         ///< ‖u‖_2
};

namespace detail {

/// |v|^p log|v| with the continuous extension 0 at v = 0.
template <typename Scalar>
Scalar log_density(const PowerLaw<Scalar>& pw, Scalar v) {
    using std::abs;
    using std::log;
    if (v == Scalar(0)) return Scalar(0);
    return pw.abs_pow(v) * log(abs(v));
}

template <typename Scalar>
Scalar safe_log_abs(Scalar v) {
    using std::abs;
    using std::log;
    const Scalar av = abs(v);
    return log(av > std::numeric_limits<Scalar>::min() ? av : std::numeric_limits<Scalar>::min());
}

} // namespace detail

/// Discrete [u]_{s,p}^p including the zero-extension tail.
template <typename Scalar, typename Derived>
Scalar seminorm_p(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    detail::require_on_grid(grid, u, "seminorm_p");
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    const auto& W = grid.weights();
    const auto& T = grid.tails();
    const Eigen::Index n = grid.size();
    Scalar pairs(0);
    Scalar tail(0);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar uj = u[j];
        for (Eigen::Index i = j + 1; i < n; ++i) pairs += W(i, j) * pw.abs_pow(u[i] - uj);
        tail += T[j] * pw.abs_pow(uj);
    }
    return Scalar(2) * pairs + tail;
}

/// K^{s,p}(u, v) = Σ_{i≠j} W_ij |Δu|^{p-2} Δu Δv + Σ_i T_i |u_i|^{p-2} u_i v_i.
template <typename Scalar, typename DerivedU, typename DerivedV>
Scalar k_form(const Grid<Scalar>& grid, const Eigen::MatrixBase<DerivedU>& u,
              const Eigen::MatrixBase<DerivedV>& v) {
    detail::require_on_grid(grid, u, "k_form(u)");
    detail::require_on_grid(grid, v, "k_form(v)");
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    const auto& W = grid.weights();
    const auto& T = grid.tails();
    const Eigen::Index n = grid.size();
    Scalar pairs(0);
    Scalar tail(0);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i)
            pairs += W(i, j) * pw.signed_pow(u[i] - u[j]) * (v[i] - v[j]);
        tail += T[j] * pw.signed_pow(u[j]) * v[j];
    }
    return Scalar(2) * pairs + tail;
}

/// Discrete fractional p-Laplacian: the h-weighted gradient of (1/p)[u]^p,
/// so that h Σ_i g_i v_i = k_form(u, v) for every v.
template <typename Scalar, typename Derived>
Vector<Scalar> frac_p_laplacian(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    detail::require_on_grid(grid, u, "frac_p_laplacian");
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    const auto& W = grid.weights();
    const auto& T = grid.tails();
    const Eigen::Index n = grid.size();
    Vector<Scalar> g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = T[i] * pw.signed_pow(u[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const Scalar f = Scalar(2) * W(i, j) * pw.signed_pow(u[i] - u[j]);
            g[i] += f;
            g[j] -= f;
        }
    }
    return g / grid.h();
}

/// h Σ |u_i|^q, i.e. ‖u‖_q^q for piecewise-constant u.
template <typename Scalar, typename Derived>
Scalar lp_norm_p(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u, Scalar q) {
    detail::require_on_grid(grid, u, "lp_norm_p");
    if (!(q >= Scalar(1))) throw Error(ErrorKind::InvalidInstance, "lp_norm_p needs q >= 1");
    const detail::PowerLaw<Scalar> pw(q);
    Scalar sum(0);
    for (Eigen::Index i = 0; i < u.size(); ++i) sum += pw.abs_pow(u[i]);
    return grid.h() * sum;
}

template <typename Scalar, typename Derived>
Scalar l2_norm(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    detail::require_on_grid(grid, u, "l2_norm");
    using std::sqrt;
    return sqrt(grid.h() * u.squaredNorm());
}

/// h-weighted L² inner product.
template <typename Scalar, typename DerivedU, typename DerivedV>
Scalar l2_dot(const Grid<Scalar>& grid, const Eigen::MatrixBase<DerivedU>& u,
              const Eigen::MatrixBase<DerivedV>& v) {
    detail::require_on_grid(grid, u, "l2_dot(u)");
    detail::require_on_grid(grid, v, "l2_dot(v)");
    return grid.h() * u.dot(v);
}

/// ∫ |u|^p log|u| with 0 log 0 = 0.
template <typename Scalar, typename Derived>
Scalar log_integral(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    detail::require_on_grid(grid, u, "log_integral");
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    Scalar sum(0);
    for (Eigen::Index i = 0; i < u.size(); ++i) sum += detail::log_density(pw, Scalar(u[i]));
    return grid.h() * sum;
}

template <typename Scalar, typename Derived>
EnergyReport<Scalar> report(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    using std::sqrt;
    detail::require_on_grid(grid, u, "report");
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    const Scalar p = grid.params().p;
    const Scalar h = grid.h();

    EnergyReport<Scalar> r;
    r.seminorm_p = seminorm_p(grid, u);
    Scalar lp(0), lg(0), l2(0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const Scalar ui = u[i];
        lp += pw.abs_pow(ui);
        lg += detail::log_density(pw, ui);
        l2 += ui * ui;
    }
    r.lp_p = h * lp;
    r.log_int = h * lg;
    r.l2 = sqrt(h * l2);
    r.nehari = r.seminorm_p + r.lp_p - r.log_int;
    r.energy = (r.seminorm_p + r.lp_p - r.log_int) / p + r.lp_p / (p * p);
    return r;
}

/// E(u) = (1/p)[u]^p + (1/p)‖u‖_p^p - (1/p)∫|u|^p log|u| + (1/p²)‖u‖_p^p.
template <typename Scalar, typename Derived>
Scalar energy(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    return report(grid, u).energy;
}

/// I(u) = [u]^p + ‖u‖_p^p - ∫|u|^p log|u|.
template <typename Scalar, typename Derived>
Scalar nehari(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    return report(grid, u).nehari;
}

/// h-weighted gradient of E:
/// frac_p_laplacian(u) + |u|^{p-2}u - |u|^{p-2}u log|u|.
template <typename Scalar, typename Derived>
Vector<Scalar> full_gradient(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    const detail::PowerLaw<Scalar> pw(grid.params().p);
    Vector<Scalar> g = frac_p_laplacian(grid, u);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const Scalar ui = u[i];
        if (ui == Scalar(0)) continue;
        g[i] += pw.signed_pow(ui) * (Scalar(1) - detail::safe_log_abs(ui));
    }
    return g;
}

/// Hessian of E with respect to the h-weighted metric, i.e. the Euclidean
/// Hessian divided by h. Newton steps for u_t = -full_gradient(u) use it
/// directly. At u_i = 0 with p = 2 the logarithmic curvature is clamped.
template <typename Scalar, typename Derived>
Matrix<Scalar> energy_hessian(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u) {
    detail::require_on_grid(grid, u, "energy_hessian");
    const Scalar p = grid.params().p;
    const detail::PowerLaw<Scalar> pw(p);
    const auto& W = grid.weights();
    const auto& T = grid.tails();
    const Eigen::Index n = grid.size();
    const Scalar h = grid.h();
    const Scalar pm1 = p - Scalar(1);

    Matrix<Scalar> H = Matrix<Scalar>::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const Scalar c = Scalar(2) * pm1 * W(i, j) * pw.abs_pow_m2(u[i] - u[j]);
            H(i, j) = -c;
            H(j, i) = -c;
            H(i, i) += c;
            H(j, j) += c;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar ui = u[i];
        const Scalar m2 = pw.abs_pow_m2(ui);
        H(i, i) += T[i] * pm1 * m2;
        if (m2 != Scalar(0))
            H(i, i) += h * m2 * (pm1 * (Scalar(1) - detail::safe_log_abs(ui)) - Scalar(1));
    }
    return H / h;
}

} // namespace fracflow
