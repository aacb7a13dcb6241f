#pragma once

// Isothermal Euler equations in logarithmic variables, L = log rho:
//   ∂t L + div u + u·∇L = 0,   ∂t u + u·∇u + ∇L = 0.
// Pseudospectral in space with 2/3-rule dealiasing of products, classical
// RK4 in time.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qnlab/errors.hpp"
#include "qnlab/grid.hpp"

namespace qnlab {

struct EulerState {
    RealField log_rho;
    VectorField u;
    double time = 0.0;

    const TorusGrid& grid() const noexcept { return log_rho.grid(); }
    RealField rho() const { return log_rho.map([](double v) { return std::exp(v); }); }

    /// Checks shapes, finiteness and unit mass (within `mass_tol`).
    void validate(double mass_tol = 1e-8) const {
        if (static_cast<int>(u.size()) != grid().dim()) throw InvalidArgument("velocity needs one component per axis");
        for (const auto& c : u) require_same_grid(c.grid(), grid());
        if (!log_rho.all_finite() || !std::all_of(u.begin(), u.end(), [](const RealField& c) { return c.all_finite(); })) {
            throw InvalidArgument("Euler state has non-finite values");
        }
        const double mass = integrate(rho());
        if (std::abs(mass - 1.0) > mass_tol) {
            throw NotAProbabilityDensity("Euler density integrates to " + std::to_string(mass));
        }
    }

    /// Uniform density at rest.
    static EulerState at_rest(const TorusGrid& g) {
        return EulerState{RealField(g), VectorField(static_cast<std::size_t>(g.dim()), RealField(g)), 0.0};
    }
};

struct EulerRhs {
    RealField log_rho;
    VectorField u;
};

inline EulerRhs euler_rhs(const EulerState& s) {
    const VectorField grad_l = gradient(s.log_rho);
    const int d = s.grid().dim();

    RealField transport(s.grid());
    for (int a = 0; a < d; ++a) transport += s.u[a] * grad_l[a];
    RealField r1 = divergence(s.u);
    r1 += dealias(transport);
    r1 *= -1.0;

    VectorField r2;
    for (int j = 0; j < d; ++j) {
        RealField adv(s.grid());
        for (int a = 0; a < d; ++a) adv += s.u[a] * spectral_derivative(s.u[j], a);
        RealField c = dealias(adv) + grad_l[j];
        c *= -1.0;
        r2.push_back(std::move(c));
    }
    return {std::move(r1), std::move(r2)};
}

/// max over components and axes of ‖∂_a u_j‖∞.
inline double sup_velocity_gradient(const VectorField& u) {
    double m = 0.0;
    for (const auto& c : u) {
        for (int a = 0; a < c.grid().dim(); ++a) m = std::max(m, sup_norm(spectral_derivative(c, a)));
    }
    return m;
}

inline constexpr double blowup_threshold = 50.0;

namespace detail {

inline EulerState euler_axpy(const EulerState& s, double h, const EulerRhs& k) {
    EulerState out = s;
    out.log_rho += k.log_rho * h;
    for (std::size_t j = 0; j < out.u.size(); ++j) out.u[j] += k.u[j] * h;
    return out;
}

}  // namespace detail

/// One classical RK4 step.
inline EulerState euler_rk4_step(const EulerState& s, double dt) {
    const EulerRhs k1 = euler_rhs(s);
    const EulerRhs k2 = euler_rhs(detail::euler_axpy(s, dt / 2.0, k1));
    const EulerRhs k3 = euler_rhs(detail::euler_axpy(s, dt / 2.0, k2));
    const EulerRhs k4 = euler_rhs(detail::euler_axpy(s, dt, k3));
    EulerState out = s;
    for (std::size_t i = 0; i < out.log_rho.size(); ++i) {
        out.log_rho[i] += dt / 6.0 * (k1.log_rho[i] + 2.0 * k2.log_rho[i] + 2.0 * k3.log_rho[i] + k4.log_rho[i]);
    }
    for (std::size_t j = 0; j < out.u.size(); ++j) {
        for (std::size_t i = 0; i < out.u[j].size(); ++i) {
            out.u[j][i] += dt / 6.0 * (k1.u[j][i] + 2.0 * k2.u[j][i] + 2.0 * k3.u[j][i] + k4.u[j][i]);
        }
    }
    out.time = s.time + dt;
    return out;
}

/// RK4 trajectory to time T with steps no larger than dt; the initial state
/// and every `sample_every`-th state (plus the last) are returned.
inline std::vector<EulerState> run_euler(const EulerState& s0, double T, double dt, std::size_t sample_every = 1) {
    if (!(T >= 0.0)) throw InvalidArgument("final time must be nonnegative");
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (sample_every == 0) throw InvalidArgument("sample_every must be positive");
    s0.validate();
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double h = steps == 0 ? dt : T / static_cast<double>(steps);
    std::vector<EulerState> traj{s0};
    EulerState s = s0;
    for (std::size_t k = 1; k <= steps; ++k) {
        s = euler_rk4_step(s, h);
        s.time = s0.time + static_cast<double>(k) * h;
        const double g = sup_velocity_gradient(s.u);
        if (!(g <= blowup_threshold) || !s.log_rho.all_finite()) {
            throw BlowupGuardTripped("‖∇u‖∞ = " + std::to_string(g) + " at t = " + std::to_string(s.time));
        }
        if (k % sample_every == 0 || k == steps) traj.push_back(s);
    }
    return traj;
}

inline double h1_norm(const RealField& f) {
    double s = l2_norm(f);
    s *= s;
    for (const auto& g : gradient(f)) {
        const double n = l2_norm(g);
        s += n * n;
    }
    return std::sqrt(s);
}

/// Ingredients of the stability constant along a reference trajectory.
struct EulerConstants {
    double sup_grad_u = 0.0;          // sup_t ‖∇u‖∞
    double sup_log_rho_h1 = 0.0;      // sup_t ‖log rho‖_{H¹}
    double sup_dt_log_rho_h1 = 0.0;   // sup_t ‖∂t log rho‖_{H¹}
    double log_rho_w1inf_h1 = 0.0;    // sum of the two above
    double sup_grad_transport = 0.0;  // sup_t ‖∇(u·∇log rho)‖₂
};

inline EulerConstants euler_constants(const std::vector<EulerState>& traj) {
    if (traj.empty()) throw InvalidArgument("trajectory is empty");
    EulerConstants c;
    for (const auto& s : traj) {
        c.sup_grad_u = std::max(c.sup_grad_u, sup_velocity_gradient(s.u));
        c.sup_log_rho_h1 = std::max(c.sup_log_rho_h1, h1_norm(s.log_rho));
        c.sup_dt_log_rho_h1 = std::max(c.sup_dt_log_rho_h1, h1_norm(euler_rhs(s).log_rho));
        const VectorField gl = gradient(s.log_rho);
        RealField tr(s.grid());
        for (std::size_t a = 0; a < s.u.size(); ++a) tr += s.u[a] * gl[a];
        double g2 = 0.0;
        for (const auto& g : gradient(tr)) g2 += l2_norm(g) * l2_norm(g);
        c.sup_grad_transport = std::max(c.sup_grad_transport, std::sqrt(g2));
    }
    c.log_rho_w1inf_h1 = c.sup_log_rho_h1 + c.sup_dt_log_rho_h1;
    return c;
}

}  // namespace qnlab
