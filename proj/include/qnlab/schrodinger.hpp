#pragma once

// Split-step Fourier integration of
//   i hbar ∂t ψ = -(hbar²/2) Δψ + V ψ,   -eps ΔV = |ψ|² - e^V
// (or -eps ΔV = |ψ|² - 1 in linear Poisson mode).

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qnlab/errors.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/poisson_boltzmann.hpp"

namespace qnlab {

enum class PotentialMode { poisson_boltzmann, linear_poisson };

inline const char* to_string(PotentialMode m) {
    return m == PotentialMode::poisson_boltzmann ? "poisson_boltzmann" : "linear_poisson";
}

/// Normalized wave function with its scales.
class WaveFunction {
public:
    WaveFunction(ComplexField psi, double hbar, double eps, double time = 0.0)
        : psi_(std::move(psi)), hbar_(hbar), eps_(eps), time_(time) {
        if (!(hbar > 0.0) || !(eps > 0.0)) throw InvalidArgument("hbar and eps must be positive");
        if (!psi_.all_finite()) throw InvalidArgument("wave function has non-finite samples");
        const double mass = l2_norm(psi_) * l2_norm(psi_);
        if (std::abs(mass - 1.0) > 1e-10) {
            throw InvalidArgument("wave function is not normalized (mass " + std::to_string(mass) + ")");
        }
    }

    const ComplexField& psi() const noexcept { return psi_; }
    const TorusGrid& grid() const noexcept { return psi_.grid(); }
    double hbar() const noexcept { return hbar_; }
    double eps() const noexcept { return eps_; }
    double time() const noexcept { return time_; }

private:
    ComplexField psi_;
    double hbar_;
    double eps_;
    double time_;
};

/// Rescales psi to unit L² norm.
inline ComplexField normalized(ComplexField psi) {
    const double m = l2_norm(psi);
    if (!(m > 0.0)) throw InvalidArgument("cannot normalize a zero wave function");
    psi *= cplx{1.0 / m, 0.0};
    return psi;
}

inline RealField density(const WaveFunction& w) {
    return w.psi().map([](cplx v) { return std::norm(v); });
}

/// J_j = hbar Im(conj(ψ) ∂_j ψ).
inline VectorField current(const WaveFunction& w) {
    VectorField j;
    for (int a = 0; a < w.grid().dim(); ++a) {
        const ComplexField d = spectral_derivative(w.psi(), a);
        RealField ja(w.grid());
        for (std::size_t i = 0; i < ja.size(); ++i) ja[i] = w.hbar() * (std::conj(w.psi()[i]) * d[i]).imag();
        j.push_back(std::move(ja));
    }
    return j;
}

/// Self-consistent potential for the density of w.
inline PotentialSplit solve_potential(const WaveFunction& w, PotentialMode mode, const PbOptions& opt = {}) {
    const RealField rho = density(w);
    if (mode == PotentialMode::linear_poisson) {
        RealField v = inverse_laplacian_fluctuation(rho) * (1.0 / w.eps());
        return PotentialSplit{std::move(v), RealField(w.grid()), w.eps(), {}};
    }
    try {
        return solve_pb(rho, w.eps(), opt);
    } catch (const NewtonDiverged& e) {
        throw PotentialSolveFailed(std::string("potential solve at t = ") + std::to_string(w.time()) + ": " + e.what());
    } catch (const NotAProbabilityDensity& e) {
        throw PotentialSolveFailed(std::string("potential solve at t = ") + std::to_string(w.time()) + ": " + e.what());
    }
}

/// (1/2)∫|∇f|² on the Fourier side, with the same Nyquist convention as
/// spectral_derivative.
template <FieldScalar T>
double gradient_energy(const Field<T>& f) {
    const TorusGrid& g = f.grid();
    const auto s = to_spectrum(f);
    double e = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
        double w = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            if (g.is_nyquist(p, a)) continue;
            const double k = two_pi * static_cast<double>(g.wavenumber(p, a));
            w += k * k;
        }
        e += w * std::norm(s[p]);
    }
    return 0.5 * e;
}

struct TotalEnergy {
    double kinetic = 0.0;    // (hbar²/2)∫|∇ψ|²
    double field = 0.0;      // (eps/2)∫|∇V|²
    double boltzmann = 0.0;  // ∫ V e^V (zero in linear Poisson mode)
    double total = 0.0;
};

inline TotalEnergy total_energy(const WaveFunction& w, const PotentialSplit& split,
                                PotentialMode mode = PotentialMode::poisson_boltzmann) {
    require_same_grid(w.grid(), split.tilde.grid());
    TotalEnergy e;
    e.kinetic = w.hbar() * w.hbar() * gradient_energy(w.psi());
    const RealField v = split.total();
    e.field = split.eps * gradient_energy(v);
    if (mode == PotentialMode::poisson_boltzmann) {
        e.boltzmann = integrate(v.map([](double x) { return x * std::exp(x); }));
    }
    e.total = e.kinetic + e.field + e.boltzmann;
    return e;
}

/// Largest kinetic sampling phase allowed per step, hbar (π n)² dt / 2.
inline constexpr double kinetic_phase_limit = 100.0 * std::numbers::pi;

/// Reusable Strang stepper: caches the kinetic multiplier for one dt and
/// warm-starts the Newton solve from the previous step.
class StrangStepper {
public:
    StrangStepper(const TorusGrid& grid, double hbar, double dt, PotentialMode mode)
        : grid_(grid), hbar_(hbar), dt_(dt), mode_(mode), half_kinetic_(grid.size()) {
        if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
        const double pn = std::numbers::pi * static_cast<double>(grid.n());
        const double phase = hbar * pn * pn * dt / 2.0;
        if (phase >= kinetic_phase_limit) {
            throw StepTooLarge("kinetic phase per step " + std::to_string(phase) + " exceeds " +
                               std::to_string(kinetic_phase_limit));
        }
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double a = -hbar * grid.laplacian_symbol(p) * dt / 4.0;
            half_kinetic_[p] = {std::cos(a), std::sin(a)};
        }
    }

    double dt() const noexcept { return dt_; }
    PotentialMode mode() const noexcept { return mode_; }

    /// Advances w by dt. `used` receives the potential of the midpoint density.
    WaveFunction step(const WaveFunction& w, PotentialSplit* used = nullptr) {
        require_same_grid(w.grid(), grid_);
        if (w.hbar() != hbar_) throw InvalidArgument("stepper was built for a different hbar");
        ComplexField psi = kinetic_half(w.psi());
        const WaveFunction mid(psi, w.hbar(), w.eps(), w.time() + dt_ / 2.0);
        PbOptions opt;
        if (last_hat_) opt.warm_start = *last_hat_;
        PotentialSplit split = solve_potential(mid, mode_, opt);
        const RealField v = split.total();
        const double phase = sup_norm(v) * dt_ / hbar_;
        if (phase >= std::numbers::pi) {
            throw StepTooLarge("potential phase per step " + std::to_string(phase) + " exceeds pi");
        }
        for (std::size_t i = 0; i < psi.size(); ++i) {
            const double a = -v[i] * dt_ / hbar_;
            psi[i] *= cplx{std::cos(a), std::sin(a)};
        }
        psi = kinetic_half(psi);
        if (mode_ == PotentialMode::poisson_boltzmann) last_hat_ = split.hat;
        if (used) *used = std::move(split);
        return WaveFunction(std::move(psi), w.hbar(), w.eps(), w.time() + dt_);
    }

private:
    ComplexField kinetic_half(const ComplexField& psi) const {
        auto s = to_spectrum(psi);
        for (std::size_t p = 0; p < s.size(); ++p) s[p] *= half_kinetic_[p];
        return from_spectrum<cplx>(grid_, std::move(s));
    }

    TorusGrid grid_;
    double hbar_;
    double dt_;
    PotentialMode mode_;
    std::vector<cplx> half_kinetic_;
    std::optional<RealField> last_hat_;
};

/// One Strang step; see StrangStepper.
inline WaveFunction step_strang(const WaveFunction& w, double dt, PotentialMode mode,
                                PotentialSplit* used = nullptr) {
    StrangStepper s(w.grid(), w.hbar(), dt, mode);
    return s.step(w, used);
}

struct Snapshot {
    WaveFunction state;
    PotentialSplit potential;  // potential of this state's density
};

struct TrajectoryDiagnostics {
    double time = 0.0;
    double mass = 0.0;
    TotalEnergy energy;
};

struct SchrodingerTrajectory {
    std::vector<Snapshot> snapshots;
    std::vector<TrajectoryDiagnostics> diagnostics;
    std::size_t steps = 0;
    double dt = 0.0;  // step actually used (T divided into whole steps)
};

/// Integrates to time T with steps no larger than dt, recording a snapshot
/// every `sample_every` steps and at the final time.
inline SchrodingerTrajectory run(const WaveFunction& w0, double T, double dt, std::size_t sample_every,
                                 PotentialMode mode = PotentialMode::poisson_boltzmann) {
    if (!(T >= 0.0)) throw InvalidArgument("final time must be nonnegative");
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (sample_every == 0) throw InvalidArgument("sample_every must be positive");
    SchrodingerTrajectory traj;
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    traj.steps = steps;
    traj.dt = steps == 0 ? dt : T / static_cast<double>(steps);

    auto record = [&](const WaveFunction& w, PotentialSplit split) {
        const RealField rho = density(w);
        traj.diagnostics.push_back({w.time(), integrate(rho), total_energy(w, split, mode)});
        traj.snapshots.push_back({w, std::move(split)});
    };

    record(w0, solve_potential(w0, mode));
    if (steps == 0) return traj;

    StrangStepper stepper(w0.grid(), w0.hbar(), traj.dt, mode);
    WaveFunction w = w0;
    const double t0 = w0.time();
    for (std::size_t k = 1; k <= steps; ++k) {
        w = stepper.step(w);
        // Avoid drift of the clock from repeated addition.
        w = WaveFunction(w.psi(), w.hbar(), w.eps(), t0 + static_cast<double>(k) * traj.dt);
        if (k % sample_every == 0 || k == steps) {
            PbOptions opt;
            opt.warm_start = traj.snapshots.back().potential.hat;
            record(w, solve_potential(w, mode, opt));
        }
    }
    return traj;
}

}  // namespace qnlab
