#pragma once

#include <cmath>

namespace fracflow::detail {

// |x|^p and friends with the integer exponents that dominate in practice
// short-circuited to products.
template <typename Scalar>
class PowerLaw {
public:
    explicit PowerLaw(Scalar p) : p_(p) {
        if (p == Scalar(2)) case_ = 2;
        else if (p == Scalar(3)) case_ = 3;
        else if (p == Scalar(4)) case_ = 4;
    }

    Scalar exponent() const { return p_; }

    /// |x|^p
    Scalar abs_pow(Scalar x) const {
        using std::abs;
        using std::pow;
        const Scalar ax = abs(x);
        switch (case_) {
        case 2: return ax * ax;
        case 3: return ax * ax * ax;
        case 4: { const Scalar x2 = ax * ax; return x2 * x2; }
        default: return ax == Scalar(0) ? Scalar(0) : pow(ax, p_);
        }
    }

    /// |x|^{p-2}; equals 1 at x = 0 when p = 2.
    Scalar abs_pow_m2(Scalar x) const {
        using std::abs;
        using std::pow;
        const Scalar ax = abs(x);
        switch (case_) {
        case 2: return Scalar(1);
        case 3: return ax;
        case 4: return ax * ax;
        default: return ax == Scalar(0) ? Scalar(0) : pow(ax, p_ - Scalar(2));
        }
    }

    /// |x|^{p-2} x
    Scalar signed_pow(Scalar x) const { return abs_pow_m2(x) * x; }

private:
    Scalar p_;
    int case_ = 0;
};

} // namespace fracflow::detail
