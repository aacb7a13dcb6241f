#pragma once

// Periodic Green function of -d²/dx² on the unit circle:
// K(x) = (x² - |x|)/2 on [-1/2, 1/2), so that -K'' = δ - 1.

#include <cmath>
#include <numbers>

namespace qnlab::green {

/// Representative of x modulo 1 in [-1/2, 1/2).
inline double wrap_centered(double x) noexcept { return x - std::floor(x + 0.5); }

/// Representative of x modulo 1 in [0, 1).
inline double wrap_unit(double x) noexcept {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

inline double kernel(double x) noexcept {
    const double y = wrap_centered(x);
    return 0.5 * (y * y - std::abs(y));
}

/// K'(x) = x - sign(x)/2 away from the diagonal; 0 on it.
inline double kernel_derivative(double x) noexcept {
    const double y = wrap_centered(x);
    if (y == 0.0) return 0.0;
    return y - std::copysign(0.5, y);
}

/// Exact value of the integral of K over the circle.
inline constexpr double kernel_integral = -1.0 / 12.0;

/// Fourier coefficient of K at integer frequency k.
inline double kernel_symbol(long k) noexcept {
    if (k == 0) return kernel_integral;
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
    return 1.0 / (w * w);
}

}  // namespace qnlab::green
