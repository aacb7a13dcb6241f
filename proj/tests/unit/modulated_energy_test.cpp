#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qnlab/initial_data.hpp"
#include "qnlab/modulated_energy.hpp"

using namespace qnlab;

namespace {

WaveFunction random_state(const TorusGrid& g, std::mt19937_64& rng, double hbar, double eps) {
    const auto rho = oracle::random_density(g, rng, 0.5);
    const auto phase = oracle::random_smooth(g, rng, 3, 0.5);
    ComplexField psi(g);
    for (std::size_t i = 0; i < g.size(); ++i) psi[i] = std::sqrt(rho[i]) * std::exp(cplx{0.0, phase[i]});
    return WaveFunction(normalized(std::move(psi)), hbar, eps);
}

EulerState random_euler(const TorusGrid& g, std::mt19937_64& rng) {
    auto r = oracle::random_density(g, rng, 0.4);
    VectorField u;
    for (int a = 0; a < g.dim(); ++a) u.push_back(oracle::random_smooth(g, rng, 2, 0.3));
    return EulerState{r.map([](double v) { return std::log(v); }), std::move(u), 0.0};
}

}  // namespace

TEST(KineticModulated, WkbStateGivesAmplitudeGradient) {
    TorusGrid g(1, 128);
    const double hbar = 0.1;
    const auto rho = exp_cos_density(g, 0.6);
    const auto U = sample(g, [](double x) { return 0.3 * std::sin(two_pi * x) + 0.1 * std::cos(4 * M_PI * x); });
    ComplexField psi(g);
    for (std::size_t i = 0; i < g.size(); ++i) psi[i] = std::sqrt(rho[i]) * std::exp(cplx{0.0, U[i] / hbar});
    const WaveFunction w(normalized(psi), hbar, 0.1);
    const auto amp = rho.map([](double v) { return std::sqrt(v); });
    const auto da = spectral_derivative(amp, 0);
    EXPECT_NEAR(kinetic_modulated(w, gradient(U)), 0.5 * hbar * hbar * integrate(da * da), 1e-10);
}

TEST(KineticModulated, MatchedPlaneWaveIsZero) {
    TorusGrid g(1, 32);
    const double hbar = 0.25;
    auto psi = sample<cplx>(g, [](double x) { return std::exp(cplx{0.0, two_pi * x}); });
    const WaveFunction w(psi, hbar, 1.0);
    EXPECT_LT(kinetic_modulated(w, {RealField(g, two_pi * hbar)}), 1e-25);
}

TEST(KineticModulated, ZeroVelocityEqualsKineticEnergy) {
    std::mt19937_64 rng(31);
    for (int d : {1, 2}) {
        TorusGrid g(d, d == 1 ? 64 : 32);
        const auto w = random_state(g, rng, 0.2, 0.3);
        const VectorField zero(static_cast<std::size_t>(d), RealField(g));
        const double k = kinetic_modulated(w, zero);
        const double e = total_energy(w, solve_potential(w, PotentialMode::poisson_boltzmann)).kinetic;
        EXPECT_NEAR(k, e, 1e-12 * e);
    }
}

TEST(KineticModulated, GlobalPhaseInvariance) {
    std::mt19937_64 rng(32);
    TorusGrid g(1, 64);
    const auto w = random_state(g, rng, 0.2, 0.3);
    const auto e = random_euler(g, rng);
    auto psi = w.psi();
    psi *= std::exp(cplx{0.0, 1.234});
    const WaveFunction w2(psi, w.hbar(), w.eps());
    EXPECT_NEAR(kinetic_modulated(w, e.u), kinetic_modulated(w2, e.u), 1e-13);
    const auto s = solve_potential(w, PotentialMode::poisson_boltzmann);
    const auto a = weak_distances(w, s, e, default_test_fields(g));
    const auto b = weak_distances(w2, s, e, default_test_fields(g));
    for (std::size_t i = 0; i < a.currents.size(); ++i) EXPECT_NEAR(a.currents[i].error, b.currents[i].error, 1e-13);
}

TEST(RelativeEntropy, ClosedFormCases) {
    TorusGrid g(1, 16);
    const auto r = exp_cos_density(g, 0.5);
    EXPECT_NEAR(relative_entropy(r, r), 0.0, 1e-16);
    EXPECT_NEAR(relative_entropy(RealField(g, 1.0), RealField(g, std::exp(1.0))), std::exp(1.0) - 2.0, 1e-15);
}

TEST(RelativeEntropy, MatchesAdaptiveQuadrature) {
    TorusGrid g(1, 64);
    const auto m = cos_density(g, 0.2);
    const double ref = oracle::integrate([](double x) {
        const double v = 1.0 + 0.2 * std::cos(two_pi * x);
        return v * std::log(v) - v + 1.0;
    }, 0.0, 1.0);
    EXPECT_NEAR(relative_entropy(m, RealField(g, 1.0)), ref, 1e-10);
}

TEST(RelativeEntropy, VacuumAndErrors) {
    TorusGrid g(1, 8);
    RealField m(g, 1.0);
    m[3] = 0.0;
    // Node 3 contributes rho = 1, the others 1 log 1 - 1 + 1 = 0.
    EXPECT_NEAR(relative_entropy(m, RealField(g, 1.0)), 1.0 / 8.0, 1e-16);
    RealField bad(g, 1.0);
    bad[2] = 0.0;
    EXPECT_THROW(relative_entropy(RealField(g, 1.0), bad), NonpositiveReference);
    RealField neg(g, 1.0);
    neg[0] = -0.1;
    EXPECT_THROW(relative_entropy(neg, RealField(g, 1.0)), InvalidArgument);
    EXPECT_THROW(relative_entropy(RealField(g, 1.0), RealField(TorusGrid(1, 16), 1.0)), GridMismatch);
}

TEST(RelativeEntropy, ZeroForcesSmallL1Distance) {
    std::mt19937_64 rng(33);
    TorusGrid g(1, 64);
    const auto rho = oracle::random_density(g, rng);
    auto m = rho;
    m *= 1.0 + 1e-6;
    m += -1e-6 * integrate(rho);
    const double h = relative_entropy(m, rho);
    ASSERT_LT(h, 1e-10);
    EXPECT_LT(l1_norm(m - rho), 1e-4);
}

TEST(Ckp, Cases) {
    TorusGrid g(1, 64);
    const auto one = uniform_density(g);
    const auto same = ckp_check(one, one);
    EXPECT_EQ(same.l1_distance, 0.0);
    EXPECT_TRUE(same.pass);

    const auto r = ckp_check(cos_density(g, 0.3), one);
    const double l1 = oracle::integrate([](double x) { return std::abs(0.3 * std::cos(two_pi * x)); }, 0.0, 1.0);
    const double ent = oracle::integrate([](double x) {
        const double v = 1.0 + 0.3 * std::cos(two_pi * x);
        return v * std::log(v);
    }, 0.0, 1.0);
    EXPECT_NEAR(r.l1_distance, l1, 1e-3);  // |cos| has kinks, trapezoid is O(h²)
    EXPECT_NEAR(r.entropy, ent, 1e-10);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.bound - r.l1_distance, std::sqrt(2 * ent) - l1, 1e-3);
    EXPECT_GT(r.bound - r.l1_distance, 0.01);
}

TEST(Ckp, RandomPairs) {
    std::mt19937_64 rng(34);
    TorusGrid g(1, 128);
    for (int t = 0; t < 100; ++t) {
        const auto r = ckp_check(oracle::random_density(g, rng, 0.8), oracle::random_density(g, rng, 0.8));
        EXPECT_TRUE(r.pass) << r.l1_distance << " vs " << r.bound;
    }
    EXPECT_THROW(ckp_check(RealField(g, 2.0), uniform_density(g)), NotAProbabilityDensity);
}

TEST(ModulatedTotal, WellPreparedInitialData) {
    TorusGrid g(1, 256);
    const double eps = 0.01, hbar = 0.05;
    const auto U0 = sample(g, [](double x) { return 0.1 * std::sin(two_pi * x) / two_pi; });
    const WellPreparedSpec spec{exp_cos_density(g, 0.5), U0, eps, hbar};
    const auto w = well_prepared(spec);
    const auto split = well_prepared_potential(spec);
    EXPECT_LT(pb_residual_norm(split, density(w)), 1e-10);

    const auto rep = modulated_total(w, split, euler_initial_state(spec));
    EXPECT_NEAR(rep.relative_entropy, 0.0, 1e-13);
    const auto v0 = split.total();
    const auto dv = spectral_derivative(v0, 0);
    EXPECT_NEAR(rep.field_energy, 0.5 * eps * integrate(dv * dv), 1e-13);
    const auto amp = well_prepared_amplitude_squared(spec.rho0, eps).map([](double v) { return std::sqrt(v); });
    const auto da = spectral_derivative(amp, 0);
    EXPECT_NEAR(rep.kinetic_modulated, 0.5 * hbar * hbar * integrate(da * da), 1e-10);
    EXPECT_DOUBLE_EQ(rep.total_modulated, rep.kinetic_modulated + rep.field_energy + rep.relative_entropy);
}

TEST(ModulatedTotal, EquilibriumIsZero) {
    TorusGrid g(2, 16);
    const WaveFunction w(ComplexField(g, cplx{1.0, 0.0}), 0.1, 0.1);
    const auto rep = modulated_total(w, solve_potential(w, PotentialMode::poisson_boltzmann), EulerState::at_rest(g));
    EXPECT_NEAR(rep.total_modulated, 0.0, 1e-20);
    EXPECT_NEAR(rep.conserved_total, 0.0, 1e-20);
    const auto wd = weak_distances(w, solve_potential(w, PotentialMode::poisson_boltzmann), EulerState::at_rest(g),
                                   default_test_fields(g));
    EXPECT_NEAR(wd.h_minus1_density, 0.0, 1e-15);
    EXPECT_NEAR(wd.l1_entropy, 0.0, 1e-15);
    EXPECT_NEAR(wd.max_current_error(), 0.0, 1e-15);
}

TEST(ModulatedTotal, RestStateReferenceReproducesConservedEnergy) {
    // With rho = 1, u = 0 the modulated energy differs from F only by ∫(1 - e^V) = 0.
    std::mt19937_64 rng(35);
    for (int d : {1, 2}) {
        TorusGrid g(d, d == 1 ? 64 : 32);
        for (int t = 0; t < 3; ++t) {
            const auto w = random_state(g, rng, 0.2, 0.3);
            const auto s = solve_potential(w, PotentialMode::poisson_boltzmann);
            const auto rep = modulated_total(w, s, EulerState::at_rest(g));
            const double bookkeeping = 1.0 - integrate(s.boltzmann_density());
            EXPECT_NEAR(rep.total_modulated, rep.conserved_total + bookkeeping, 1e-12);
            EXPECT_NEAR(bookkeeping, 0.0, 1e-9);
        }
    }
}

TEST(ModulatedTotal, NonnegativeOnRandomStates) {
    std::mt19937_64 rng(36);
    TorusGrid g(1, 64);
    for (int t = 0; t < 20; ++t) {
        const auto w = random_state(g, rng, 0.1, 0.2);
        const auto rep = modulated_total(w, solve_potential(w, PotentialMode::poisson_boltzmann), random_euler(g, rng));
        EXPECT_GE(rep.kinetic_modulated, -1e-12);
        EXPECT_GE(rep.field_energy, -1e-12);
        EXPECT_GE(rep.relative_entropy, -1e-12);
        EXPECT_GE(rep.total_modulated, 0.0);
    }
}

TEST(ModulatedTotal, ClockMismatchRejected) {
    TorusGrid g(1, 16);
    const WaveFunction w(ComplexField(g, cplx{1.0, 0.0}), 0.1, 0.1, 0.5);
    EulerState e = EulerState::at_rest(g);
    e.time = 0.4;
    EXPECT_THROW(modulated_total(w, solve_potential(w, PotentialMode::poisson_boltzmann), e), InvalidArgument);
    EXPECT_NO_THROW(modulated_total(w, solve_potential(w, PotentialMode::poisson_boltzmann), e, 0.2));
}

TEST(WeakDistances, CurrentBoundOnRandomStates) {
    std::mt19937_64 rng(37);
    for (int d : {1, 2}) {
        TorusGrid g(d, d == 1 ? 64 : 16);
        for (int t = 0; t < 10; ++t) {
            const auto w = random_state(g, rng, 0.15, 0.3);
            const auto e = random_euler(g, rng);
            const auto wd = weak_distances(w, solve_potential(w, PotentialMode::poisson_boltzmann), e, default_test_fields(g));
            ASSERT_EQ(wd.currents.size(), static_cast<std::size_t>(3 * d));
            EXPECT_TRUE(wd.all_pass());
        }
    }
}

TEST(WeakDistances, HMinusOneMatchesDirectDifference) {
    std::mt19937_64 rng(38);
    TorusGrid g(1, 64);
    const auto w = random_state(g, rng, 0.15, 0.3);
    const auto e = random_euler(g, rng);
    const auto wd = weak_distances(w, solve_potential(w, PotentialMode::poisson_boltzmann), e, {});
    // Direct Fourier sum Σ_{k≠0} |ĉ_k|²/(2πk)².
    const auto c = to_spectrum(density(w) - e.rho());
    double s = 0.0;
    for (std::size_t p = 1; p < c.size(); ++p) s += std::norm(c[p]) / std::pow(two_pi * g.wavenumber(p, 0), 2);
    EXPECT_NEAR(wd.h_minus1_density, std::sqrt(s), 1e-12);
    EXPECT_TRUE(wd.currents.empty());
}
