#pragma once

// Classical N-particle functionals on the unit circle built on the Green
// kernel K: renormalized energy, coercivity and commutator diagnostics,
// and Monte-Carlo statistics for uniform configurations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qnlab/circle_measure.hpp"
#include "qnlab/errors.hpp"
#include "qnlab/green.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/initial_data.hpp"
#include "qnlab/poisson_boltzmann.hpp"

namespace qnlab {

/// Largest N accepted by the O(N²) pair sums.
inline constexpr std::size_t max_pair_particles = 4096;

inline void require_pair_size(const ParticleConfig& x) {
    if (x.size() > max_pair_particles) {
        throw InvalidArgument("pair sums are capped at N = " + std::to_string(max_pair_particles));
    }
}

struct RenormalizedEnergy {
    double value = 0.0;
    std::size_t n = 0;
    double counterterm = 0.0;  // (1 + ‖mu‖∞)/N²
    double pair = 0.0;         // (1/N²) Σ_{i,j} K(x_i - x_j)
    double cross = 0.0;        // (2/N) Σ_i (K * mu)(x_i)
    double self = 0.0;         // ∬ K dmu dmu
};

namespace detail {

/// Fourier coefficients of K * mu for the trigonometric interpolant of mu.
inline std::vector<cplx> kernel_convolution_spectrum(const RealField& mu) {
    auto s = to_spectrum(mu);
    const TorusGrid& g = mu.grid();
    for (std::size_t p = 0; p < s.size(); ++p) s[p] *= green::kernel_symbol(g.wavenumber(p, 0));
    return s;
}

inline void require_circle_density(const RealField& mu) {
    if (mu.grid().dim() != 1) throw InvalidArgument("circle densities live on a 1-D grid");
    require_probability_density(mu);
}

}  // namespace detail

/// ∬ K(x - y) d(mu_X - mu)^{⊗2}, diagonal kept (K(0) = 0).
inline RenormalizedEnergy renormalized_energy(const ParticleConfig& x, const RealField& mu) {
    detail::require_circle_density(mu);
    require_pair_size(x);
    const std::size_t N = x.size();
    const auto pos = x.positions();
    RenormalizedEnergy e;
    e.n = N;

    double pair = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) pair += green::kernel(pos[i] - pos[j]);
    }
    e.pair = 2.0 * pair / (static_cast<double>(N) * static_cast<double>(N));

    const auto conv = detail::kernel_convolution_spectrum(mu);
    double cross = 0.0;
    for (double xi : pos) cross += evaluate_trig_interpolant(conv, xi).real();
    e.cross = 2.0 * cross / static_cast<double>(N);

    // ∫(K*mu) mu with the Nyquist mode as a cosine (weight 1/2).
    const auto ms = to_spectrum(mu);
    const std::size_t n = ms.size();
    double self = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double w = p == n / 2 ? 0.5 : 1.0;
        self += w * (conv[p] * std::conj(ms[p])).real();
    }
    e.self = self;
    e.value = e.pair - e.cross + e.self;
    e.counterterm = (1.0 + sup_norm(mu)) / (static_cast<double>(N) * static_cast<double>(N));
    return e;
}

/// Linear interpolation of periodic grid samples at x.
inline double interpolate_linear(const RealField& f, double x) {
    const std::size_t n = f.size();
    const double s = green::wrap_unit(x) * static_cast<double>(n);
    const auto i = static_cast<std::size_t>(std::floor(s)) % n;
    const double t = s - std::floor(s);
    return (1.0 - t) * f[i] + t * f[(i + 1) % n];
}

struct CoercivityReport {
    double lhs = 0.0;              // |∫ phi d(mu_X - mu)|
    double grad_sup_term = 0.0;    // ‖phi'‖∞ N^{-1/2}
    double energy_term = 0.0;      // ‖phi'‖₂ (E + counterterm)^{1/2}
    double implied_constant = 0.0; // smallest C with lhs <= C grad_sup_term + energy_term
    double lambda = 0.5;
};

inline CoercivityReport coercivity_check(const ParticleConfig& x, const RealField& mu, const RealField& phi) {
    require_same_grid(mu.grid(), phi.grid());
    const RenormalizedEnergy e = renormalized_energy(x, mu);
    const auto ps = to_spectrum(phi);
    double at_particles = 0.0;
    for (double xi : x.positions()) at_particles += evaluate_trig_interpolant(ps, xi).real();
    at_particles /= static_cast<double>(x.size());
    CoercivityReport r;
    r.lhs = std::abs(at_particles - integrate(phi * mu));
    const RealField dphi = spectral_derivative(phi, 0);
    r.grad_sup_term = sup_norm(dphi) * std::pow(static_cast<double>(x.size()), -r.lambda);
    r.energy_term = l2_norm(dphi) * std::sqrt(std::max(0.0, e.value + e.counterterm));
    r.implied_constant = r.grad_sup_term > 0.0 ? std::max(0.0, r.lhs - r.energy_term) / r.grad_sup_term : 0.0;
    return r;
}

struct CommutatorReport {
    double value = 0.0;
    double energy = 0.0;  // E + counterterm
    double ratio = 0.0;   // value / energy (0 when energy vanishes)
    double u_lipschitz = 0.0;
};

/// ∬_{x != y} (u(x) - u(y)) K'(x - y) d(mu_X - mu)^{⊗2}. u is read at the
/// particles by linear interpolation; mu-terms use nodal quadrature.
inline CommutatorReport commutator_functional(const ParticleConfig& x, const RealField& mu, const RealField& u) {
    require_same_grid(mu.grid(), u.grid());
    detail::require_circle_density(mu);
    require_pair_size(x);
    const std::size_t N = x.size();
    const std::size_t n = mu.size();
    const auto pos = x.positions();
    std::vector<double> ux(N);
    for (std::size_t i = 0; i < N; ++i) ux[i] = interpolate_linear(u, pos[i]);
    const double dN = static_cast<double>(N), dn = static_cast<double>(n);
    const TorusGrid& g = mu.grid();

    double pp = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) pp += (ux[i] - ux[j]) * green::kernel_derivative(pos[i] - pos[j]);
    }
    pp *= 2.0 / (dN * dN);

    double pm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            pm += (ux[i] - u[j]) * green::kernel_derivative(pos[i] - g.coordinate(j)) * mu[j];
        }
    }
    pm /= dN * dn;

    double mm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = j + 1; l < n; ++l) {
            mm += (u[j] - u[l]) * green::kernel_derivative(g.coordinate(j) - g.coordinate(l)) * mu[j] * mu[l];
        }
    }
    mm *= 2.0 / (dn * dn);

    CommutatorReport r;
    r.value = pp - 2.0 * pm + mm;
    const RenormalizedEnergy e = renormalized_energy(x, mu);
    r.energy = e.value + e.counterterm;
    r.ratio = r.energy > 0.0 ? r.value / r.energy : 0.0;
    r.u_lipschitz = sup_norm(spectral_derivative(u, 0));
    return r;
}

/// N independent uniform points on the circle.
inline ParticleConfig uniform_config(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> p(n);
    for (auto& v : p) v = unit_uniform(rng);
    return ParticleConfig(std::move(p));
}

struct MonteCarloStat {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

inline MonteCarloStat summarize(const std::vector<double>& v) {
    MonteCarloStat s;
    s.samples = v.size();
    if (v.empty()) return s;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - m) * (x - m);
    s.mean = m;
    if (v.size() > 1) s.standard_error = std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return s;
}

/// Renormalized energy and squared W1 distance to the uniform measure, for
/// `samples` uniform configurations of size N.
struct UniformStats {
    MonteCarloStat energy;
    MonteCarloStat w1_squared;
};

inline UniformStats uniform_statistics(std::size_t n_particles, std::size_t samples, std::uint64_t seed) {
    const TorusGrid g(1, 8);
    const RealField one = uniform_density(g);
    std::mt19937_64 rng(seed);
    std::vector<double> energy, w1sq;
    energy.reserve(samples);
    w1sq.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const ParticleConfig x = uniform_config(n_particles, rng);
        energy.push_back(renormalized_energy(x, one).value);
        const double w = w1_circle(x, one);
        w1sq.push_back(w * w);
    }
    return {summarize(energy), summarize(w1sq)};
}

/// Least-squares slope of log(values) against log(sizes), negated, so that
/// values ~ sizes^{-exponent}.
inline double fit_decay_exponent(const std::vector<double>& sizes, const std::vector<double>& values) {
    if (sizes.size() != values.size() || sizes.size() < 2) throw InvalidArgument("need at least two points to fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!(sizes[i] > 0.0) || !(values[i] > 0.0)) throw InvalidArgument("power-law fit needs positive data");
        const double lx = std::log(sizes[i]), ly = std::log(values[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return -(k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace qnlab
