#pragma once

#include <cmath>
#include <sstream>

#include "fracflow/error.hpp"

namespace fracflow {

/// Problem instance: fractional order s, integrability exponent p, the
/// interval (a, b) and the number of cells n. Lengths are dimensionless.
template <typename Scalar = double>
struct ModelParams {
    Scalar s = Scalar(0.5);
    Scalar p = Scalar(3);
    Scalar a = Scalar(0);
    Scalar b = Scalar(1);
    int n = 64;

    Scalar kernel_exponent() const { return s * p; }
    Scalar measure() const { return b - a; }

    /// s·p < 1: piecewise constants lie in W^{s,p} and every near-field
    /// weight is an exact integral. Otherwise the near field is a finite part.
    bool subcritical() const { return s * p < Scalar(1); }

    void validate() const {
        std::ostringstream why;
        if (!(s > Scalar(0) && s < Scalar(1))) why << "s must lie in (0,1), got " << s << "; ";
        if (!(p >= Scalar(2)) || !std::isfinite(static_cast<double>(p))) why << "p must be >= 2, got " << p << "; ";
        if (!(a < b) || !std::isfinite(static_cast<double>(a)) || !std::isfinite(static_cast<double>(b)))
            why << "domain needs a < b, got (" << a << ", " << b << "); ";
        if (n < 2) why << "n must be >= 2, got " << n << "; ";
        const auto msg = why.str();
        if (!msg.empty()) throw Error(ErrorKind::InvalidInstance, msg);
    }
};

} // namespace fracflow
