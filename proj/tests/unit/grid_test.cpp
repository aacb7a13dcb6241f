#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "qnlab/fft.hpp"
#include "qnlab/green.hpp"
#include "qnlab/grid.hpp"

using namespace qnlab;

namespace {

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(TorusGrid, RejectsBadShapes) {
    EXPECT_THROW(TorusGrid(1, 4), InvalidArgument);
    EXPECT_THROW(TorusGrid(1, 12), InvalidArgument);
    EXPECT_THROW(TorusGrid(3, 16), InvalidArgument);
    EXPECT_NO_THROW(TorusGrid(2, 8));
}

TEST(TorusGrid, IndexingAndWavenumbers) {
    TorusGrid g(2, 8);
    EXPECT_EQ(g.size(), 64u);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.125);
    EXPECT_EQ(g.axis_index(8 * 3 + 5, 0), 3u);
    EXPECT_EQ(g.axis_index(8 * 3 + 5, 1), 5u);
    EXPECT_EQ(g.wavenumber(8 * 7 + 1, 0), -1);
    EXPECT_EQ(g.wavenumber(8 * 7 + 1, 1), 1);
    EXPECT_TRUE(g.is_nyquist(8 * 4, 0));
}

TEST(Field, MismatchedGridsThrow) {
    RealField a(TorusGrid(1, 8)), b(TorusGrid(1, 16));
    EXPECT_THROW(a += b, GridMismatch);
    EXPECT_THROW(RealField(TorusGrid(1, 8), std::vector<double>(7)), InvalidArgument);
}

TEST(Fft, MatchesNaiveDft) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    const std::size_t n = 32;
    std::vector<cplx> x(n);
    for (auto& v : x) v = {nd(rng), nd(rng)};
    auto y = x;
    FftPlan(n).forward(y);
    for (std::size_t k = 0; k < n; ++k) {
        cplx s = 0;
        for (std::size_t j = 0; j < n; ++j) s += x[j] * std::polar(1.0, -two_pi * double(j * k) / double(n));
        EXPECT_NEAR(std::abs(y[k] - s), 0.0, 1e-12);
    }
    FftPlan(n).inverse(y);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(std::abs(y[j] / double(n) - x[j]), 0.0, 1e-14);
}

TEST(Fft, SharedPlanIsThreadSafe) {
    TorusGrid g(1, 1024);
    std::mt19937_64 rng(2);
    const RealField f = oracle::random_smooth(g, rng, 20);
    const auto ref = to_spectrum(f);
    std::vector<std::thread> ts;
    std::vector<int> ok(4, 0);
    for (int t = 0; t < 4; ++t) {
        ts.emplace_back([&, t] {
            bool same = true;
            for (int r = 0; r < 20; ++r) same = same && to_spectrum(f) == ref;
            ok[t] = same;
        });
    }
    for (auto& t : ts) t.join();
    for (int v : ok) EXPECT_EQ(v, 1);
}

TEST(SpectralDerivative, SineToMachinePrecision) {
    TorusGrid g(1, 64);
    const auto f = sample(g, [](double x) { return std::sin(two_pi * x); });
    const auto exact = sample(g, [](double x) { return two_pi * std::cos(two_pi * x); });
    EXPECT_LT(max_abs_diff(spectral_derivative(f, 0), exact), 1e-13);
}

TEST(SpectralDerivative, ConstantGivesZero) {
    TorusGrid g(2, 16);
    const RealField one(g, 1.0);
    EXPECT_LT(sup_norm(spectral_derivative(one, 0)), 1e-15);
    EXPECT_LT(sup_norm(spectral_derivative(one, 1)), 1e-15);
}

TEST(SpectralDerivative, SecondAxisIn2D) {
    TorusGrid g(2, 32);
    const auto f = sample(g, [](double x, double y) { return std::cos(two_pi * x) * std::sin(4 * M_PI * y); });
    const auto exact = sample(g, [](double x, double y) { return 4 * M_PI * std::cos(two_pi * x) * std::cos(4 * M_PI * y); });
    EXPECT_LT(max_abs_diff(spectral_derivative(f, 1), exact), 1e-12);
}

TEST(SpectralDerivative, NyquistModeIsDropped) {
    TorusGrid g(1, 16);
    const auto f = sample(g, [](double x) { return std::cos(M_PI * 16 * x); });
    EXPECT_LT(sup_norm(spectral_derivative(f, 0)), 1e-13);
}

TEST(SpectralDerivative, AxisOutOfRangeThrows) {
    RealField f(TorusGrid(1, 8));
    EXPECT_THROW(spectral_derivative(f, 1), InvalidArgument);
    EXPECT_THROW(spectral_derivative(f, -1), InvalidArgument);
}

TEST(SpectralDerivative, AgreesWithCentredDifferencesAtSecondOrder) {
    auto f = [](double x) { return std::sin(two_pi * x) + std::cos(4 * M_PI * x); };
    std::vector<double> errs;
    for (std::size_t n : {64u, 128u, 256u, 512u}) {
        TorusGrid g(1, n);
        const double h = g.spacing();
        const auto fd = sample(g, [&](double x) { return (f(x + h) - f(x - h)) / (2 * h); });
        errs.push_back(max_abs_diff(spectral_derivative(sample(g, f), 0), fd));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_NEAR(errs[i - 1] / errs[i], 4.0, 0.05);
}

TEST(InverseLaplacian, SingleMode) {
    TorusGrid g(1, 32);
    const auto f = sample(g, [](double x) { return std::cos(two_pi * x); });
    EXPECT_LT(max_abs_diff(inverse_laplacian_zero_mean(f), f * (1.0 / (4 * M_PI * M_PI))), 1e-15);
}

TEST(InverseLaplacian, ZeroAndProductMode) {
    TorusGrid g1(1, 16);
    EXPECT_EQ(sup_norm(inverse_laplacian_zero_mean(RealField(g1))), 0.0);
    TorusGrid g(2, 16);
    const auto f = sample(g, [](double x, double y) { return std::cos(two_pi * x) * std::cos(two_pi * y); });
    EXPECT_LT(max_abs_diff(inverse_laplacian_zero_mean(f), f * (1.0 / (8 * M_PI * M_PI))), 1e-15);
}

TEST(InverseLaplacian, NonZeroMeanRejected) {
    TorusGrid g(1, 16);
    const auto f = sample(g, [](double x) { return 1.0 + std::cos(two_pi * x); });
    EXPECT_THROW(inverse_laplacian_zero_mean(f), NonZeroMean);
    EXPECT_THROW(h_minus1_norm(f), NonZeroMean);
}

TEST(InverseLaplacian, TwoDerivativesRecoverMinusF) {
    TorusGrid g(1, 128);
    std::mt19937_64 rng(3);
    const auto f = oracle::random_smooth(g, rng, 10);
    const auto u = inverse_laplacian_zero_mean(f);
    const auto back = spectral_derivative(spectral_derivative(u, 0), 0);
    EXPECT_LT(max_abs_diff(back, f * -1.0), 1e-10);
}

TEST(Integrate, ConstantsAndModes) {
    TorusGrid g(2, 16);
    EXPECT_DOUBLE_EQ(integrate(RealField(g, 1.0)), 1.0);
    const auto s = sample(TorusGrid(1, 64), [](double x) { return std::sin(two_pi * x); });
    EXPECT_LT(std::abs(integrate(s)), 1e-16);
}

TEST(Integrate, ExpCosMatchesAdaptiveQuadrature) {
    const auto f = [](double x) { return std::exp(std::cos(two_pi * x)); };
    const double ref = oracle::integrate(f, 0.0, 1.0, 1e-15);
    EXPECT_NEAR(integrate(sample(TorusGrid(1, 256), f)), ref, 1e-12);
}

TEST(Integrate, LinearAndPositive) {
    TorusGrid g(1, 64);
    std::mt19937_64 rng(4);
    const auto a = oracle::random_smooth(g, rng), b = oracle::random_smooth(g, rng);
    EXPECT_NEAR(integrate(a * 2.0 + b), 2.0 * integrate(a) + integrate(b), 1e-14);
    EXPECT_GE(integrate((a * a)), 0.0);
}

TEST(HMinus1Norm, SingleModeAndZero) {
    TorusGrid g(1, 32);
    const auto f = sample(g, [](double x) { return std::cos(two_pi * x); });
    EXPECT_NEAR(h_minus1_norm(f), 1.0 / (two_pi * std::sqrt(2.0)), 1e-15);
    EXPECT_EQ(h_minus1_norm(RealField(g)), 0.0);
}

TEST(HMinus1Norm, EqualsGradientOfInverseLaplacian) {
    for (int dim : {1, 2}) {
        TorusGrid g(dim, 32);
        std::mt19937_64 rng(5 + dim);
        const auto f = oracle::random_smooth(g, rng, 6);
        const auto u = inverse_laplacian_zero_mean(f);
        double s = 0.0;
        for (const auto& d : gradient(u)) s += l2_norm(d) * l2_norm(d);
        EXPECT_NEAR(h_minus1_norm(f), std::sqrt(s), 1e-13);
    }
}

TEST(Parseval, PhysicalAndFourierNormsAgree) {
    TorusGrid g(2, 32);
    std::mt19937_64 rng(6);
    const auto f = oracle::random_smooth(g, rng, 12);
    double s = 0.0;
    for (const auto& c : to_spectrum(f)) s += std::norm(c);
    EXPECT_NEAR(s / (l2_norm(f) * l2_norm(f)), 1.0, 1e-12);
}

TEST(Dealias, RemovesUpperThird) {
    TorusGrid g(1, 64);
    const auto f = sample(g, [](double x) { return std::cos(two_pi * 5 * x) + std::cos(two_pi * 30 * x); });
    const auto d = dealias(f);
    EXPECT_LT(max_abs_diff(d, sample(g, [](double x) { return std::cos(two_pi * 5 * x); })), 1e-13);
}

TEST(TrigInterpolant, ReproducesBandLimitedFunctionOffGrid) {
    TorusGrid g(1, 32);
    auto f = [](double x) { return 0.3 + std::sin(two_pi * 3 * x) - 0.5 * std::cos(two_pi * 7 * x); };
    const auto s = to_spectrum(sample(g, f));
    for (double x : {0.013, 0.37, 0.5, 0.999}) EXPECT_NEAR(evaluate_trig_interpolant(s, x).real(), f(x), 1e-13);
}

TEST(GreenKernel, BasicIdentities) {
    EXPECT_EQ(green::kernel(0.0), 0.0);
    for (double x : {0.1, 0.25, 0.4999, 0.73}) {
        EXPECT_NEAR(green::kernel(x), green::kernel(-x), 1e-16);
        EXPECT_NEAR(green::kernel(x), green::kernel(x + 3.0), 1e-15);
    }
    EXPECT_DOUBLE_EQ(green::kernel(0.5), -0.125);
    EXPECT_DOUBLE_EQ(green::kernel_derivative(0.25), -0.25);
    EXPECT_DOUBLE_EQ(green::kernel_derivative(-0.25), 0.25);
    EXPECT_EQ(green::kernel_derivative(0.0), 0.0);
}

TEST(GreenKernel, IntegralByQuadrature) {
    const double q = oracle::integrate([](double x) { return green::kernel(x); }, -0.5, 0.0, 1e-15) +
                     oracle::integrate([](double x) { return green::kernel(x); }, 0.0, 0.5, 1e-15);
    EXPECT_NEAR(q, green::kernel_integral, 1e-14);
}

TEST(GreenKernel, MinusSecondDerivativeIsMinusOneAwayFromOrigin) {
    const double h = 1e-4;
    for (double x : {0.1, 0.3, -0.2, 0.45}) {
        const double d2 = (green::kernel(x + h) - 2 * green::kernel(x) + green::kernel(x - h)) / (h * h);
        EXPECT_NEAR(-d2, -1.0, 1e-6);
    }
    // Jump of K' at the origin is -1 (the Dirac mass).
    EXPECT_NEAR(green::kernel_derivative(1e-12) - green::kernel_derivative(-1e-12), -1.0, 1e-11);
}

TEST(GreenKernel, FourierSymbolMatchesQuadrature) {
    for (long k : {1L, 2L, 5L}) {
        const double q = oracle::integrate([&](double x) { return green::kernel(x) * std::cos(two_pi * k * x); }, -0.5, 0.0) +
                         oracle::integrate([&](double x) { return green::kernel(x) * std::cos(two_pi * k * x); }, 0.0, 0.5);
        EXPECT_NEAR(q, green::kernel_symbol(k), 1e-13);
    }
    EXPECT_EQ(green::kernel_symbol(0), -1.0 / 12.0);
}
