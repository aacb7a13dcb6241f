#pragma once

// Nonlinear Poisson-Boltzmann problem  -eps ΔV = h - e^V  on T^d.
//
// V is split as V = tilde + hat with
//   -eps Δ tilde = h - mean(h)        (linear, zero mean, one Fourier division)
//   -eps Δ hat   = mean(h) - e^{tilde + hat}   (damped Newton, CG inner solves)
// For 1-D empirical measures tilde is the exact Green-kernel sum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qnlab/circle_measure.hpp"
#include "qnlab/errors.hpp"
#include "qnlab/green.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/mollifier.hpp"

namespace qnlab {

struct NewtonStats {
    int iterations = 0;
    int linear_iterations = 0;
    int halvings = 0;
    double tolerance = 0.0;
    double final_residual = 0.0;
    bool stagnated = false;  // stopped at the roundoff floor above tolerance
    std::vector<double> residual_history;
};

struct PotentialSplit {
    RealField tilde;
    RealField hat;
    double eps;
    NewtonStats newton;

    RealField total() const { return tilde + hat; }
    RealField boltzmann_density() const {
        return total().map([](double v) { return std::exp(v); });
    }
};

struct PbOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    double tolerance_factor = 1e-10;
    int max_cg_iterations = 1000;
    /// Previous V-hat, tried as an initial guess when present.
    std::optional<RealField> warm_start;
};

namespace detail {

/// -eps Δ v + w v.
inline RealField pb_jacobian_apply(const RealField& v, const RealField& w, double eps) {
    const TorusGrid& g = v.grid();
    RealField out = apply_symbol(v, [&](std::size_t p) -> cplx { return eps * g.laplacian_symbol(p); });
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[i] * v[i];
    return out;
}

inline double dot(const RealField& a, const RealField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s / static_cast<double>(a.size());
}

/// Preconditioned CG for (-eps Δ + diag w) x = b, stopping at ‖r‖₂ ≤ target.
inline RealField pb_cg(const RealField& b, const RealField& w, double eps, double target, int max_iter, int& used) {
    const TorusGrid& g = b.grid();
    auto precondition = [&](const RealField& r) {
        return apply_symbol(r, [&](std::size_t p) -> cplx { return 1.0 / (eps * g.laplacian_symbol(p) + 1.0); });
    };
    RealField x(g);
    RealField r = b;
    RealField z = precondition(r);
    RealField d = z;
    double rz = dot(r, z);
    used = 0;
    while (l2_norm(r) > target && used < max_iter) {
        const RealField ad = pb_jacobian_apply(d, w, eps);
        const double alpha = rz / dot(d, ad);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        z = precondition(r);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = z[i] + beta * d[i];
        ++used;
    }
    return x;
}

/// -eps Δ hat - c + e^{tilde + hat}.
inline RealField pb_residual(const RealField& tilde, const RealField& hat, double c, double eps) {
    const TorusGrid& g = hat.grid();
    RealField f = apply_symbol(hat, [&](std::size_t p) -> cplx { return eps * g.laplacian_symbol(p); });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += std::exp(tilde[i] + hat[i]) - c;
    return f;
}

inline double finite_norm(const RealField& f) {
    const double r = l2_norm(f);
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

/// Damped Newton for hat given tilde. `guesses` are tried and the one with
/// the smallest residual is used as the starting point.
inline PotentialSplit newton_hat(RealField tilde, double c, double eps, double tol, std::vector<RealField> guesses,
                                 const PbOptions& opt) {
    NewtonStats stats;
    stats.tolerance = tol;
    RealField hat(tilde.grid());
    RealField F = pb_residual(tilde, hat, c, eps);
    double r = finite_norm(F);
    for (auto& g : guesses) {
        RealField Fg = pb_residual(tilde, g, c, eps);
        const double rg = finite_norm(Fg);
        if (rg < r) {
            hat = std::move(g);
            F = std::move(Fg);
            r = rg;
        }
    }
    if (!std::isfinite(r)) throw NewtonDiverged("initial Newton residual is not finite");
    stats.residual_history.push_back(r);

    while (r > tol) {
        if (stats.iterations >= opt.max_iterations) {
            throw NewtonDiverged("Newton iteration cap " + std::to_string(opt.max_iterations) +
                                 " reached with residual " + std::to_string(r));
        }
        RealField w(tilde.grid());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(tilde[i] + hat[i]);
        const double target = std::max(std::min(1e-2, r) * r, 1e-2 * tol);
        int used = 0;
        RealField delta = pb_cg(F * -1.0, w, eps, target, opt.max_cg_iterations, used);
        stats.linear_iterations += used;

        double alpha = 1.0;
        bool accepted = false;
        RealField trial(tilde.grid());
        RealField Ft(tilde.grid());
        double rt = r;
        for (int k = 0; k <= opt.max_halvings; ++k) {
            trial = hat;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += alpha * delta[i];
            Ft = pb_residual(tilde, trial, c, eps);
            rt = finite_norm(Ft);
            if (rt <= (1.0 - 1e-4 * alpha) * r) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
            ++stats.halvings;
        }
        if (!accepted) {
            // A full Newton correction at the roundoff level means the
            // residual cannot be reduced further in double precision.
            if (sup_norm(delta) <= 1e-12 * (1.0 + sup_norm(hat))) {
                stats.stagnated = true;
                break;
            }
            throw NewtonDiverged("line search failed after " + std::to_string(opt.max_halvings) +
                                 " halvings at residual " + std::to_string(r));
        }
        hat = std::move(trial);
        F = std::move(Ft);
        r = rt;
        ++stats.iterations;
        stats.residual_history.push_back(r);
    }
    stats.final_residual = r;
    return PotentialSplit{std::move(tilde), std::move(hat), eps, std::move(stats)};
}

inline void require_positive_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be positive and finite");
}

}  // namespace detail

/// Checks that h is a probability density on its grid.
inline void require_probability_density(const RealField& h, double tol = 1e-8) {
    if (!h.all_finite()) throw NotAProbabilityDensity("density has non-finite samples");
    if (min_value(h) < 0.0) throw NotAProbabilityDensity("density is negative somewhere");
    const double mass = integrate(h);
    if (std::abs(mass - 1.0) > tol) {
        throw NotAProbabilityDensity("density integrates to " + std::to_string(mass) + ", not 1");
    }
}

/// Solves -eps ΔV = h - e^V for a smooth probability density h.
inline PotentialSplit solve_pb(const RealField& h, double eps, const PbOptions& opt = {}) {
    detail::require_positive_eps(eps);
    require_probability_density(h);
    const TorusGrid& g = h.grid();
    const double c = integrate(h);
    RealField tilde = inverse_laplacian_fluctuation(h) * (1.0 / eps);

    std::vector<RealField> guesses;
    if (min_value(h) > 0.0) {
        RealField q(g);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::log(h[i]) - tilde[i];
        guesses.push_back(std::move(q));
    }
    if (opt.warm_start) {
        require_same_grid(opt.warm_start->grid(), g);
        guesses.push_back(*opt.warm_start);
    }
    // Absolute target, with headroom for the residual recomputed from tilde + hat.
    const double tol = 0.5 * opt.tolerance_factor;
    return detail::newton_hat(std::move(tilde), c, eps, tol, std::move(guesses), opt);
}

/// Exact samples of (1/eps)[(1/N) Σ K(y - x_i) + 1/12].
inline RealField empirical_tilde(const ParticleConfig& x, const TorusGrid& g, double eps) {
    if (g.dim() != 1) throw InvalidArgument("empirical potentials are one-dimensional");
    RealField t(g);
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double y = g.coordinate(j);
        double s = 0.0;
        for (double xi : x.positions()) s += green::kernel(y - xi);
        t[j] = (s * inv_n - green::kernel_integral) / eps;
    }
    return t;
}

/// Exact samples of tilde' = (1/eps)(1/N) Σ K'(y - x_i).
inline RealField empirical_tilde_derivative(const ParticleConfig& x, const TorusGrid& g, double eps) {
    RealField t(g);
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double y = g.coordinate(j);
        double s = 0.0;
        for (double xi : x.positions()) s += green::kernel_derivative(y - xi);
        t[j] = s * inv_n / eps;
    }
    return t;
}

/// Solves -eps V'' = μ_X - e^V for the empirical measure of x, sampled on
/// a 1-D grid with `n` points.
inline PotentialSplit solve_pb_empirical(const ParticleConfig& x, double eps, std::size_t n = 512,
                                         const PbOptions& opt = {}) {
    detail::require_positive_eps(eps);
    const TorusGrid g(1, n);
    RealField tilde = empirical_tilde(x, g, eps);
    std::vector<RealField> guesses;
    if (opt.warm_start) {
        require_same_grid(opt.warm_start->grid(), g);
        guesses.push_back(*opt.warm_start);
    }
    const double tol = 0.5 * opt.tolerance_factor;
    return detail::newton_hat(std::move(tilde), 1.0, eps, tol, std::move(guesses), opt);
}

/// ‖-eps ΔV - h + e^V‖₂ for a smooth source.
inline double pb_residual_norm(const PotentialSplit& s, const RealField& h) {
    const RealField v = s.total();
    const TorusGrid& g = v.grid();
    RealField f = apply_symbol(v, [&](std::size_t p) -> cplx { return s.eps * g.laplacian_symbol(p); });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += std::exp(v[i]) - h[i];
    return l2_norm(f);
}

/// One inequality evaluated numerically: pass iff lhs <= rhs.
struct BoundCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    bool informational = false;  // reported, never counted as a failure
};

struct BoundReport {
    std::vector<BoundCheck> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.informational || c.pass; });
    }
    const BoundCheck* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

/// Allowed excess of the discrete Lipschitz constant of hat' over 1.
inline constexpr double lip_slack = 0.05;

/// Discrete Lipschitz constant of hat' (1-D): max |hat'(y_{j+1}) - hat'(y_j)| / spacing.
inline double hat_derivative_lipschitz(const PotentialSplit& s) {
    const RealField d = spectral_derivative(s.hat, 0);
    const std::size_t n = d.size();
    double lip = 0.0;
    for (std::size_t j = 0; j < n; ++j) lip = std::max(lip, std::abs(d[(j + 1) % n] - d[j]));
    return lip / s.hat.grid().spacing();
}

namespace detail {

inline void add_lipschitz_checks(BoundReport& r, const PotentialSplit& s) {
    if (s.hat.grid().dim() != 1) return;
    const double lip = hat_derivative_lipschitz(s);
    r.checks.push_back({"hat_derivative_lipschitz", lip, 1.0 + lip_slack, lip <= 1.0 + lip_slack, false});
    r.checks.push_back({"eps_weighted_hat_derivative_lipschitz", s.eps * lip, 1.0 + lip_slack,
                        s.eps * lip <= 1.0 + lip_slack, true});
}

}  // namespace detail

/// Elliptic bounds for a smooth source: Lipschitz constant of hat' (1-D)
/// and ‖e^V‖₂ <= ‖h‖₂.
inline BoundReport validate_elliptic_bounds(const PotentialSplit& s, const RealField& h) {
    BoundReport r;
    detail::add_lipschitz_checks(r, s);
    const double lhs = l2_norm(s.boltzmann_density());
    const double rhs = l2_norm(h);
    r.checks.push_back({"boltzmann_l2_below_source_l2", lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-14, false});
    return r;
}

/// Elliptic bounds for an empirical source: Lipschitz constant of hat' and
/// eps ‖V‖∞ <= 1.
inline BoundReport validate_elliptic_bounds(const PotentialSplit& s, const ParticleConfig&) {
    BoundReport r;
    detail::add_lipschitz_checks(r, s);
    const double lhs = s.eps * sup_norm(s.total());
    r.checks.push_back({"eps_sup_potential", lhs, 1.0, lhs <= 1.0, false});
    return r;
}

struct W1StabilityReport {
    double w1 = 0.0;
    double tilde_term = 0.0;  // ‖tilde1' - tilde2'‖₂
    double hat_term = 0.0;    // 4 sqrt(eps) ‖hat1' - hat2'‖₂
    double lhs = 0.0;
    double rhs = 0.0;  // W1 / eps
    bool pass = false;
};

namespace detail {

inline PotentialSplit solve_circle_measure(const CircleMeasure& m, double eps, std::size_t n) {
    if (m.is_particles()) return solve_pb_empirical(m.particles(), eps, n);
    return solve_pb(m.density(), eps);
}

}  // namespace detail

/// ‖tilde1' - tilde2'‖₂ + 4 sqrt(eps)‖hat1' - hat2'‖₂ <= W1(a, b)/eps, on the
/// circle. Configurations are solved on an `n`-point grid; densities on
/// their own grid (which must then also have n points if mixed).
inline W1StabilityReport w1_stability_check(const CircleMeasure& a, const CircleMeasure& b, double eps,
                                            std::size_t n = 512) {
    detail::require_positive_eps(eps);
    if (!a.is_particles()) n = a.density().grid().n();
    if (!b.is_particles() && b.density().grid().n() != n) throw GridMismatch("densities must share one grid");
    const PotentialSplit sa = detail::solve_circle_measure(a, eps, n);
    const PotentialSplit sb = detail::solve_circle_measure(b, eps, n);

    W1StabilityReport r;
    r.w1 = w1_circle(a, b);
    // tilde' = -(F - x - const)/eps for both kinds of measure, so the tilde
    // term is an exact CDF computation.
    r.tilde_term = cdf_difference_l2(a, b) / eps;
    const RealField dh = spectral_derivative(sa.hat, 0) - spectral_derivative(sb.hat, 0);
    r.hat_term = 4.0 * std::sqrt(eps) * l2_norm(dh);
    r.lhs = r.tilde_term + r.hat_term;
    r.rhs = r.w1 / eps;
    r.pass = r.lhs <= r.rhs;
    return r;
}

/// Sup-norm change of V when particle `j` moves by `delta`, divided by
/// 2|delta|/(eps^{3/2} N).
inline double configuration_lipschitz_ratio(const ParticleConfig& x, std::size_t j, double delta, double eps,
                                             std::size_t n = 512) {
    if (delta == 0.0) throw InvalidArgument("perturbation must be nonzero");
    const PotentialSplit s0 = solve_pb_empirical(x, eps, n);
    PbOptions opt;
    opt.warm_start = s0.hat;
    const PotentialSplit s1 = solve_pb_empirical(x.moved(j, delta), eps, n, opt);
    const double change = sup_norm(s1.total() - s0.total());
    const double scale = 2.0 * std::abs(delta) / (std::pow(eps, 1.5) * static_cast<double>(x.size()));
    return change / scale;
}

/// sup |chi_r * (V1 - V2)| for two smooth sources.
inline double mollified_potential_gap(const RealField& h1, const RealField& h2, double eps, double r) {
    require_same_grid(h1.grid(), h2.grid());
    const PotentialSplit s1 = solve_pb(h1, eps);
    const PotentialSplit s2 = solve_pb(h2, eps);
    return sup_norm(convolve(s1.total() - s2.total(), ball_mollifier(h1.grid(), r)));
}

}  // namespace qnlab
