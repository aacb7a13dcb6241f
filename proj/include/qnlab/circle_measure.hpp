#pragma once

// Probability measures on the unit circle (particle configurations and
// 1-D grid densities) and the exact circular 1-Wasserstein distance
// W1(mu, nu) = min_c ∫|F_mu - F_nu - c|.

#include <algorithm>
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "qnlab/errors.hpp"
#include "qnlab/green.hpp"
#include "qnlab/grid.hpp"

namespace qnlab {

/// N >= 1 points on the circle, stored in [0, 1).
class ParticleConfig {
public:
    explicit ParticleConfig(std::vector<double> positions) : positions_(std::move(positions)) {
        if (positions_.empty()) throw InvalidArgument("a configuration needs at least one particle");
        for (auto& x : positions_) {
            if (!std::isfinite(x)) throw InvalidArgument("particle position is not finite");
            x = green::wrap_unit(x);
        }
    }

    std::size_t size() const noexcept { return positions_.size(); }
    std::span<const double> positions() const noexcept { return positions_; }
    double operator[](std::size_t i) const noexcept { return positions_[i]; }

    /// Copy with particle `i` moved by `delta` (wrapped).
    ParticleConfig moved(std::size_t i, double delta) const {
        auto p = positions_;
        p.at(i) += delta;
        return ParticleConfig(std::move(p));
    }

    /// Copy with every particle moved by `delta`.
    ParticleConfig shifted(double delta) const {
        auto p = positions_;
        for (auto& x : p) x += delta;
        return ParticleConfig(std::move(p));
    }

    static ParticleConfig equispaced(std::size_t n, double offset = 0.0) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = offset + static_cast<double>(i) / static_cast<double>(n);
        return ParticleConfig(std::move(p));
    }

private:
    std::vector<double> positions_;
};

/// A probability measure on the circle: an empirical measure or the
/// periodic piecewise-linear interpolant of 1-D grid samples.
class CircleMeasure {
public:
    CircleMeasure(const ParticleConfig& x) : data_(x) {}  // NOLINT: implicit by design of the API
    CircleMeasure(const RealField& density) : data_(density) {  // NOLINT
        if (density.grid().dim() != 1) throw InvalidArgument("circle measures need a 1-D grid");
        if (!(integrate(density) > 0.0)) throw NotAProbabilityDensity("density has no positive mass");
    }

    bool is_particles() const noexcept { return std::holds_alternative<ParticleConfig>(data_); }
    const ParticleConfig& particles() const { return std::get<ParticleConfig>(data_); }
    const RealField& density() const { return std::get<RealField>(data_); }

private:
    std::variant<ParticleConfig, RealField> data_;
};

namespace detail {

/// q(s) = c0 + c1 s + c2 s² on s ∈ [0, length], monotone.
struct QuadPiece {
    double length;
    double c0, c1, c2;

    double at(double s) const noexcept { return c0 + s * (c1 + s * c2); }
    double antiderivative(double s, double shift) const noexcept {
        return s * ((c0 - shift) + s * (c1 / 2.0 + s * c2 / 3.0));
    }

    /// Point in [0, length] where q crosses `level`; assumes a sign change.
    double crossing(double level) const noexcept {
        const double a = c2, b = c1, c = c0 - level;
        double s;
        if (std::abs(a) * length < 1e-14 * (std::abs(b) + 1e-300)) {
            s = -c / b;
        } else {
            const double disc = std::max(0.0, b * b - 4.0 * a * c);
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            const double r1 = q / a;
            const double r2 = q != 0.0 ? c / q : r1;
            s = (r1 >= -1e-12 * length && r1 <= length * (1 + 1e-12)) ? r1 : r2;
        }
        return std::clamp(s, 0.0, length);
    }

    double length_below(double level) const noexcept {
        const double a = at(0.0), b = at(length);
        if (a <= level && b <= level) return length;
        if (a >= level && b >= level) return 0.0;
        const double s = crossing(level);
        return a < level ? s : length - s;
    }

    double integral_abs(double level) const noexcept {
        const double a = at(0.0), b = at(length);
        if ((a - level) * (b - level) >= 0.0) {
            return std::abs(antiderivative(length, level));
        }
        const double s = crossing(level);
        return std::abs(antiderivative(s, level)) + std::abs(antiderivative(length, level) - antiderivative(s, level));
    }

    double integral_square(double level) const noexcept {
        // ∫ (q - level)² over the piece; exact for the quadratic.
        const double d0 = c0 - level;
        const double L = length;
        return L * (d0 * d0 + L * (d0 * c1 + L * ((c1 * c1 + 2.0 * d0 * c2) / 3.0 + L * (c1 * c2 / 2.0 + L * c2 * c2 / 5.0))));
    }

    double integral(double level) const noexcept { return antiderivative(length, level); }
};

/// CDF of `m` restricted to [left, right) as a quadratic in s = x - left.
/// Particle positions and grid nodes must not fall strictly inside.
class CdfEvaluator {
public:
    explicit CdfEvaluator(const CircleMeasure& m) : m_(m) {
        if (m.is_particles()) {
            sorted_.assign(m.particles().positions().begin(), m.particles().positions().end());
            std::sort(sorted_.begin(), sorted_.end());
        } else {
            const RealField& rho = m.density();
            const std::size_t n = rho.size();
            const double h = rho.grid().spacing();
            node_cdf_.assign(n + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                node_cdf_[i + 1] = node_cdf_[i] + 0.5 * h * (rho[i] + rho[(i + 1) % n]);
            }
            mass_ = node_cdf_[n];
        }
    }

    std::vector<double> breakpoints() const {
        if (m_.is_particles()) return sorted_;
        const std::size_t n = m_.density().size();
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<double>(i) / static_cast<double>(n);
        return b;
    }

    std::array<double, 3> coefficients(double left, double right) const {
        if (m_.is_particles()) {
            const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), left) - sorted_.begin();
            return {static_cast<double>(count) / static_cast<double>(sorted_.size()), 0.0, 0.0};
        }
        const RealField& rho = m_.density();
        const std::size_t n = rho.size();
        const double h = rho.grid().spacing();
        auto cell = static_cast<std::size_t>(std::floor(0.5 * (left + right) * static_cast<double>(n)));
        cell = std::min(cell, n - 1);
        const double t0 = left - static_cast<double>(cell) * h;
        const double r0 = rho[cell];
        const double slope = (rho[(cell + 1) % n] - r0) / h;
        const double c0 = node_cdf_[cell] + r0 * t0 + 0.5 * slope * t0 * t0;
        const double c1 = r0 + slope * t0;
        const double c2 = 0.5 * slope;
        return {c0 / mass_, c1 / mass_, c2 / mass_};
    }

private:
    const CircleMeasure& m_;
    std::vector<double> sorted_;
    std::vector<double> node_cdf_;
    double mass_ = 1.0;
};

/// F_mu - F_nu on [0, 1) as monotone quadratic pieces.
inline std::vector<QuadPiece> cdf_difference(const CircleMeasure& mu, const CircleMeasure& nu) {
    CdfEvaluator fm(mu), fn(nu);
    std::vector<double> breaks = fm.breakpoints();
    const auto bn = fn.breakpoints();
    breaks.insert(breaks.end(), bn.begin(), bn.end());
    breaks.push_back(0.0);
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<QuadPiece> pieces;
    pieces.reserve(2 * breaks.size());
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        const double a = breaks[j], b = breaks[j + 1];
        if (!(b > a)) continue;
        const auto cm = fm.coefficients(a, b);
        const auto cn = fn.coefficients(a, b);
        QuadPiece q{b - a, cm[0] - cn[0], cm[1] - cn[1], cm[2] - cn[2]};
        if (q.c2 != 0.0) {
            const double vertex = -q.c1 / (2.0 * q.c2);
            if (vertex > 0.0 && vertex < q.length) {
                QuadPiece left{vertex, q.c0, q.c1, q.c2};
                QuadPiece right{q.length - vertex, q.at(vertex), q.c1 + 2.0 * q.c2 * vertex, q.c2};
                pieces.push_back(left);
                pieces.push_back(right);
                continue;
            }
        }
        pieces.push_back(q);
    }
    return pieces;
}

}  // namespace detail

/// Exact circular 1-Wasserstein distance between two probability measures.
inline double w1_circle(const CircleMeasure& mu, const CircleMeasure& nu) {
    const auto pieces = detail::cdf_difference(mu, nu);
    double lo = pieces.front().at(0.0), hi = lo;
    for (const auto& p : pieces) {
        for (double v : {p.at(0.0), p.at(p.length)}) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    // Median of D under Lebesgue measure minimizes ∫|D - c|.
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        double below = 0.0;
        for (const auto& p : pieces) below += p.length_below(mid);
        if (below < 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double c = 0.5 * (lo + hi);
    double total = 0.0;
    for (const auto& p : pieces) total += p.integral_abs(c);
    return total;
}

/// ‖F_mu - F_nu - mean‖_2, the exact 1-D homogeneous H^{-1} distance.
inline double cdf_difference_l2(const CircleMeasure& mu, const CircleMeasure& nu) {
    const auto pieces = detail::cdf_difference(mu, nu);
    double mean = 0.0;
    for (const auto& p : pieces) mean += p.integral(0.0);
    double total = 0.0;
    for (const auto& p : pieces) total += p.integral_square(mean);
    return std::sqrt(std::max(0.0, total));
}

}  // namespace qnlab
