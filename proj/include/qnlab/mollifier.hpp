#pragma once

// Compactly supported smooth bumps on the circle/torus and periodic
// convolution against them.

#include <cmath>
#include <vector>

#include "qnlab/errors.hpp"
#include "qnlab/grid.hpp"

namespace qnlab {

/// exp(-1/(1-t²)) on (-1, 1), zero outside.
inline double smooth_bump(double t) noexcept {
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

/// Periodic distance from node p to the origin.
inline double torus_distance_to_origin(const TorusGrid& g, std::size_t p) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        double c = g.coordinate(g.axis_index(p, a));
        c = std::min(c, 1.0 - c);
        s += c * c;
    }
    return std::sqrt(s);
}

/// Ball mollifier of radius r centred at the origin, normalized so that
/// its discrete integral is 1. Falls back to a point mass when r is below
/// the grid spacing.
inline RealField ball_mollifier(const TorusGrid& g, double r) {
    if (!(r > 0.0) || r > 0.5) throw InvalidArgument("mollifier radius must lie in (0, 1/2]");
    RealField chi(g);
    for (std::size_t p = 0; p < g.size(); ++p) chi[p] = smooth_bump(torus_distance_to_origin(g, p) / r);
    double mass = integrate(chi);
    if (mass <= 0.0) {
        chi[0] = 1.0;
        mass = integrate(chi);
    }
    chi *= 1.0 / mass;
    return chi;
}

/// Periodic convolution (f * k)(x) = ∫ f(x - y) k(y) dy with k given
/// relative to the origin.
inline RealField convolve(const RealField& f, const RealField& k) {
    require_same_grid(f.grid(), k.grid());
    auto fs = to_spectrum(f);
    const auto ks = to_spectrum(k);
    for (std::size_t p = 0; p < fs.size(); ++p) fs[p] *= ks[p];
    return from_spectrum<double>(f.grid(), std::move(fs));
}

}  // namespace qnlab
