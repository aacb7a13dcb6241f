#pragma once

// Well-prepared WKB initial data, reference densities, and the particle
// sampling and smoothing used by the N-body diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qnlab/circle_measure.hpp"
#include "qnlab/errors.hpp"
#include "qnlab/euler.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/mollifier.hpp"
#include "qnlab/poisson_boltzmann.hpp"
#include "qnlab/schrodinger.hpp"

namespace qnlab {

/// Density proportional to exp(a cos 2πx), normalized on the grid.
inline RealField exp_cos_density(const TorusGrid& g, double amplitude) {
    RealField r = sample(g, [&](double x) { return std::exp(amplitude * std::cos(two_pi * x)); });
    r *= 1.0 / integrate(r);
    return r;
}

/// 1 + a cos 2πx.
inline RealField cos_density(const TorusGrid& g, double amplitude) {
    return sample(g, [&](double x) { return 1.0 + amplitude * std::cos(two_pi * x); });
}

inline RealField uniform_density(const TorusGrid& g) { return RealField(g, 1.0); }

struct WellPreparedSpec {
    RealField rho0;  // positive, unit mass
    RealField U0;    // velocity potential, u0 = ∇U0
    double eps = 0.0;
    double hbar = 0.0;
};

/// e^{V0} - eps ΔV0 with V0 = log rho0 (rho0 rescaled to unit mass).
inline RealField well_prepared_amplitude_squared(const RealField& rho0, double eps) {
    if (!(min_value(rho0) > 0.0)) throw NotPositive("reference density must be positive");
    require_probability_density(rho0);
    RealField r = rho0 * (1.0 / integrate(rho0));
    const RealField v0 = r.map([](double x) { return std::log(x); });
    return r - laplacian(v0) * eps;
}

/// ψ = sqrt(e^{V0} - eps ΔV0) e^{i U0 / hbar}.
inline WaveFunction well_prepared(const WellPreparedSpec& spec) {
    require_same_grid(spec.rho0.grid(), spec.U0.grid());
    if (!(spec.eps > 0.0) || !(spec.hbar > 0.0)) throw InvalidArgument("eps and hbar must be positive");
    const RealField a2 = well_prepared_amplitude_squared(spec.rho0, spec.eps);
    const double lowest = min_value(a2);
    if (!(lowest > 0.0)) {
        throw NotPositive("e^V0 - eps ΔV0 reaches " + std::to_string(lowest) + " at eps = " + std::to_string(spec.eps));
    }
    ComplexField psi(spec.rho0.grid());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double phase = spec.U0[i] / spec.hbar;
        psi[i] = std::sqrt(a2[i]) * cplx{std::cos(phase), std::sin(phase)};
    }
    // ΔV0 has zero mean, so this only removes the density's roundoff.
    return WaveFunction(normalized(std::move(psi)), spec.hbar, spec.eps);
}

/// (log rho0, ∇U0) at t = 0.
inline EulerState euler_initial_state(const WellPreparedSpec& spec) {
    RealField r = spec.rho0 * (1.0 / integrate(spec.rho0));
    return EulerState{r.map([](double x) { return std::log(x); }), gradient(spec.U0), 0.0};
}

/// Potential of the well-prepared state: V0 in the split form.
inline PotentialSplit well_prepared_potential(const WellPreparedSpec& spec) {
    RealField r = spec.rho0 * (1.0 / integrate(spec.rho0));
    RealField v0 = r.map([](double x) { return std::log(x); });
    const double m = integrate(v0);
    RealField hat(v0.grid(), m);
    v0 += -m;
    return PotentialSplit{std::move(v0), std::move(hat), spec.eps, {}};
}

/// Uniform double in [0, 1) from 53 random bits.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// N i.i.d. draws from the periodic linear interpolant of a 1-D density,
/// by exact inverse CDF. Deterministic in `seed`.
inline ParticleConfig sample_iid(const RealField& rho, std::size_t n_particles, std::uint64_t seed) {
    if (rho.grid().dim() != 1) throw InvalidArgument("sampling needs a 1-D density");
    if (n_particles == 0) throw InvalidArgument("need at least one particle");
    require_probability_density(rho);
    const std::size_t n = rho.size();
    const double h = rho.grid().spacing();
    std::vector<double> cdf(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + 0.5 * h * (rho[i] + rho[(i + 1) % n]);
    const double mass = cdf[n];

    std::mt19937_64 rng(seed);
    std::vector<double> x(n_particles);
    for (auto& xi : x) {
        const double target = unit_uniform(rng) * mass;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        std::size_t cell = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cdf.begin()) - 1));
        cell = std::min(cell, n - 1);
        const double rem = target - cdf[cell];
        const double r0 = rho[cell];
        const double slope = (rho[(cell + 1) % n] - r0) / h;
        // r0 t + slope t²/2 = rem, stable root.
        const double disc = std::max(0.0, r0 * r0 + 2.0 * slope * rem);
        const double denom = r0 + std::sqrt(disc);
        double t = denom > 0.0 ? 2.0 * rem / denom : 0.0;
        t = std::clamp(t, 0.0, h);
        xi = static_cast<double>(cell) * h + t;
    }
    return ParticleConfig(std::move(x));
}

/// Annular profile supported on 3/16 < |y| < 1/4 (unnormalized).
inline double annular_profile(double r) {
    constexpr double inner = 3.0 / 16.0, outer = 0.25;
    const double mid = 0.5 * (inner + outer), half = 0.5 * (outer - inner);
    return smooth_bump((r - mid) / half);
}

/// Grid density of (1/N) Σ chi_eta(· - x_i), chi_eta(y) = chi(y/eta)/eta with
/// the annular profile, each particle normalized to mass 1/N on the grid.
/// When no node falls in a particle's annulus its mass is deposited on the
/// two nearest nodes instead.
inline RealField mollified_empirical(const ParticleConfig& x, double eta, const TorusGrid& g) {
    if (g.dim() != 1) throw InvalidArgument("mollified empirical measures are one-dimensional");
    if (!(eta > 0.0) || eta > 0.25) throw InvalidArgument("eta must lie in (0, 1/4]");
    const std::size_t n = g.n();
    const double h = g.spacing();
    const double w = 1.0 / static_cast<double>(x.size());
    RealField out(g);
    std::vector<double> bump(n);
    for (double xi : x.positions()) {
        double mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::abs(green::wrap_centered(g.coordinate(j) - xi));
            bump[j] = annular_profile(d / eta);
            mass += bump[j];
        }
        if (mass > 0.0) {
            const double scale = w / (mass * h);
            for (std::size_t j = 0; j < n; ++j) out[j] += bump[j] * scale;
        } else {
            const double s = xi / h;
            const auto left = static_cast<std::size_t>(std::floor(s)) % n;
            const double frac = s - std::floor(s);
            out[left] += w * (1.0 - frac) / h;
            out[(left + 1) % n] += w * frac / h;
        }
    }
    return out;
}

struct SampledEntropyReport {
    double entropy = 0.0;  // ∫ m log(m / rho0), m the Boltzmann density of the sample
    double w1 = 0.0;       // W1(mu_X, rho_eps)
    double bound = 0.0;    // 5 W1 / (4 eps^{3/2})
    bool pass = false;
};

/// Entropy of the empirical Boltzmann density against rho0 versus the W1
/// distance of the sample to rho_eps = e^{V0} - eps ΔV0.
inline SampledEntropyReport sampled_entropy_check(const ParticleConfig& x, const RealField& rho0, double eps) {
    const RealField rho_eps = well_prepared_amplitude_squared(rho0, eps);
    if (!(min_value(rho_eps) > 0.0)) throw NotPositive("rho_eps is not positive for this eps");
    const PotentialSplit s = solve_pb_empirical(x, eps, rho0.grid().n());
    const RealField v = s.total();
    const RealField m = s.boltzmann_density();
    SampledEntropyReport r;
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m[i] * (v[i] - std::log(rho0[i]));
    r.entropy = acc / static_cast<double>(m.size());
    r.w1 = w1_circle(x, rho_eps);
    r.bound = 5.0 * r.w1 / (4.0 * std::pow(eps, 1.5));
    r.pass = r.entropy <= r.bound;
    return r;
}

}  // namespace qnlab
