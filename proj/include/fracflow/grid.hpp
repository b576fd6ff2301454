#pragma once

#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>

#include "fracflow/error.hpp"
#include "fracflow/model.hpp"

namespace fracflow {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename Scalar>
bool is_unit_exponent(Scalar q) {
    using std::abs;
    return abs(q - Scalar(1)) <= Scalar(64) * std::numeric_limits<Scalar>::epsilon();
}

} // namespace detail

/// Weight of an ordered pair of adjacent cells of width h:
/// ∫_0^h ∫_h^{2h} |x - y|^{-1-q} dy dx.
///
/// Exact for q < 1. For q > 1 the integral diverges and the finite part is
/// used with its sign made positive; at q = 1 the pole is dropped with
/// reference length h, which leaves 1 - ln 2.
template <typename Scalar>
Scalar adjacent_pair_weight(Scalar h, Scalar q) {
    using std::log;
    using std::pow;
    if (detail::is_unit_exponent(q)) return Scalar(1) - log(Scalar(2));
    const Scalar num = Scalar(2) * pow(h, Scalar(1) - q) - pow(Scalar(2) * h, Scalar(1) - q);
    const Scalar den = q < Scalar(1) ? q * (Scalar(1) - q) : q * (q - Scalar(1));
    return num / den;
}

/// ∫_{cell} ∫_{half-line} |x - y|^{-1-q} dy dx for a cell of width h whose
/// near edge sits at distance `gap` from the half-line. A zero gap is split
/// into an adjacent ghost cell plus the half-line beyond it.
template <typename Scalar>
Scalar half_line_weight(Scalar gap, Scalar h, Scalar q) {
    using std::log;
    using std::pow;
    if (gap <= Scalar(0)) return adjacent_pair_weight(h, q) + half_line_weight(h, h, q);
    if (detail::is_unit_exponent(q)) return log((gap + h) / gap);
    return (pow(gap + h, Scalar(1) - q) - pow(gap, Scalar(1) - q)) / (q * (Scalar(1) - q));
}

/// Uniform cell-centred discretisation of (a, b) with precomputed pair and
/// tail weights of the Gagliardo kernel |x - y|^{-1-sp}.
///
/// For piecewise-constant u the discrete seminorm is
///   Σ_{i≠j} W_ij |u_i - u_j|^p + Σ_i T_i |u_i|^p,
/// where T_i accounts for both orderings of (cell, exterior) in ℝ × ℝ.
/// Immutable after construction.
template <typename Scalar = double>
class Grid {
public:
    const ModelParams<Scalar>& params() const { return params_; }
    Eigen::Index size() const { return centers_.size(); }
    Scalar h() const { return h_; }
    Scalar measure() const { return params_.measure(); }
    const Vector<Scalar>& centers() const { return centers_; }
    const Matrix<Scalar>& weights() const { return weights_; }
    const Vector<Scalar>& tails() const { return tails_; }

    template <typename S>
    friend Grid<S> build_grid(const ModelParams<S>& params);

private:
    Grid() = default;

    ModelParams<Scalar> params_;
    Scalar h_ = Scalar(0);
    Vector<Scalar> centers_;
    Matrix<Scalar> weights_;
    Vector<Scalar> tails_;
};

template <typename Scalar>
Grid<Scalar> build_grid(const ModelParams<Scalar>& params) {
    using std::abs;
    using std::pow;
    params.validate();

    Grid<Scalar> grid;
    grid.params_ = params;
    const int n = params.n;
    const Scalar h = params.measure() / Scalar(n);
    const Scalar q = params.kernel_exponent();
    grid.h_ = h;

    grid.centers_.resize(n);
    for (int i = 0; i < n; ++i) grid.centers_[i] = params.a + (Scalar(i) + Scalar(0.5)) * h;

    grid.weights_ = Matrix<Scalar>::Zero(n, n);
    const Scalar adjacent = adjacent_pair_weight(h, q);
    const Scalar h2 = h * h;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            // Distances are exact multiples of h; avoid centre round-off.
            const Scalar w = (j == i + 1) ? adjacent : h2 / pow(Scalar(j - i) * h, Scalar(1) + q);
            grid.weights_(i, j) = w;
            grid.weights_(j, i) = w;
        }
    }

    grid.tails_.resize(n);
    for (int i = 0; i < n; ++i) {
        const Scalar left_gap = Scalar(i) * h;
        const Scalar right_gap = Scalar(n - 1 - i) * h;
        grid.tails_[i] = Scalar(2) * (half_line_weight(left_gap, h, q) + half_line_weight(right_gap, h, q));
    }
    return grid;
}

template <typename Scalar>
std::shared_ptr<const Grid<Scalar>> make_shared_grid(const ModelParams<Scalar>& params) {
    return std::make_shared<const Grid<Scalar>>(build_grid(params));
}

/// Cell values of u on a grid; zero outside (a, b) by convention.
template <typename Scalar = double>
struct GridFunction {
    std::shared_ptr<const Grid<Scalar>> grid;
    Vector<Scalar> values;
};

namespace detail {

template <typename Scalar, typename Derived>
void require_on_grid(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& u, const char* what) {
    if (u.size() != grid.size())
        throw Error(ErrorKind::InstanceMismatch, std::string(what) + ": vector of length " +
                                                     std::to_string(u.size()) + " on grid with " +
                                                     std::to_string(grid.size()) + " cells");
}

} // namespace detail

} // namespace fracflow
