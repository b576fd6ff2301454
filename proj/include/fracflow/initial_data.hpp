#pragma once

#include <cmath>
#include <cstdint>

#include "fracflow/grid.hpp"

namespace fracflow {

/// splitmix64: 64-bit state, golden-ratio increment, two multiply-xorshift
/// rounds. Bit-exact across platforms, so seeded fields are reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

/// Smooth bump e·exp(-1/(1-ξ²)), ξ = (x - center)/half_width, with peak 1.
template <typename Scalar>
Vector<Scalar> bump_profile(const Grid<Scalar>& grid, Scalar center, Scalar half_width) {
    using std::exp;
    Vector<Scalar> u = Vector<Scalar>::Zero(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Scalar xi = (grid.centers()[i] - center) / half_width;
        if (xi * xi < Scalar(1)) u[i] = exp(Scalar(1) - Scalar(1) / (Scalar(1) - xi * xi));
    }
    return u;
}

/// The bump filling the whole domain.
template <typename Scalar>
Vector<Scalar> bump_profile(const Grid<Scalar>& grid) {
    const auto& m = grid.params();
    return bump_profile(grid, (m.a + m.b) / Scalar(2), m.measure() / Scalar(2));
}

/// sin(kπ(x - a)/(b - a)).
template <typename Scalar>
Vector<Scalar> sine_mode(const Grid<Scalar>& grid, int k) {
    using std::sin;
    const auto& m = grid.params();
    const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
    Vector<Scalar> u(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        u[i] = sin(Scalar(k) * pi * (grid.centers()[i] - m.a) / m.measure());
    return u;
}

/// Uniform[-1, 1] cell values smoothed by `passes` rounds of 3-point
/// averaging (zero beyond the domain).
template <typename Scalar>
Vector<Scalar> smoothed_random_field(const Grid<Scalar>& grid, std::uint64_t seed, int passes = 1) {
    SplitMix64 rng(seed);
    const Eigen::Index n = grid.size();
    Vector<Scalar> u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = Scalar(rng.uniform(-1.0, 1.0));
    for (int pass = 0; pass < passes; ++pass) {
        Vector<Scalar> next(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar left = i > 0 ? u[i - 1] : Scalar(0);
            const Scalar right = i + 1 < n ? u[i + 1] : Scalar(0);
            next[i] = (left + u[i] + right) / Scalar(3);
        }
        u = next;
    }
    return u;
}

} // namespace fracflow
