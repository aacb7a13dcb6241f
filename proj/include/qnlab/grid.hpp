#pragma once

// Uniform periodic grids on the unit torus T^d (d = 1, 2) and the
// Fourier calculus used by every solver in the library.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "qnlab/errors.hpp"
#include "qnlab/fft.hpp"

namespace qnlab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Unit-side periodic grid with `n` points per axis. Node (i0, i1) sits at
/// (i0/n, i1/n) and is stored at flat index i0*n + i1 (axis 0 is slowest).
class TorusGrid {
public:
    TorusGrid(int dim, std::size_t points_per_axis) : dim_(dim), n_(points_per_axis) {
        if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
        if (n_ < 8 || !std::has_single_bit(n_)) {
            throw InvalidArgument("points per axis must be a power of two >= 8, got " + std::to_string(n_));
        }
        plan_ = FftPlan::get(n_);
    }

    int dim() const noexcept { return dim_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return dim_ == 1 ? n_ : n_ * n_; }
    double spacing() const noexcept { return 1.0 / static_cast<double>(n_); }
    double coordinate(std::size_t i) const noexcept { return static_cast<double>(i) * spacing(); }

    /// Index along `axis` of flat node `p`.
    std::size_t axis_index(std::size_t p, int axis) const noexcept {
        if (dim_ == 1) return p;
        return axis == 0 ? p / n_ : p % n_;
    }

    /// Signed wavenumber in [-n/2, n/2) of flat spectral index `p` along `axis`.
    long wavenumber(std::size_t p, int axis) const noexcept {
        const auto i = static_cast<long>(axis_index(p, axis));
        const auto n = static_cast<long>(n_);
        return i < n / 2 ? i : i - n;
    }

    bool is_nyquist(std::size_t p, int axis) const noexcept {
        return axis_index(p, axis) == n_ / 2;
    }

    /// |2 pi k|^2 for flat spectral index `p`.
    double laplacian_symbol(std::size_t p) const noexcept {
        double s = 0.0;
        for (int a = 0; a < dim_; ++a) {
            const double k = two_pi * static_cast<double>(wavenumber(p, a));
            s += k * k;
        }
        return s;
    }

    const FftPlan& plan() const noexcept { return *plan_; }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
        return a.dim_ == b.dim_ && a.n_ == b.n_;
    }

private:
    int dim_;
    std::size_t n_;
    std::shared_ptr<const FftPlan> plan_;
};

inline void require_same_grid(const TorusGrid& a, const TorusGrid& b) {
    if (!(a == b)) throw GridMismatch("fields live on different grids");
}

template <class T>
concept FieldScalar = std::same_as<T, double> || std::same_as<T, cplx>;

/// Samples of a scalar field at the nodes of a TorusGrid.
template <FieldScalar T>
class Field {
public:
    using value_type = T;

    explicit Field(TorusGrid grid, T fill = T{}) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

    Field(TorusGrid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw InvalidArgument("field length does not match grid");
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T& operator[](std::size_t i) noexcept { return values_[i]; }
    const T& operator[](std::size_t i) const noexcept { return values_[i]; }
    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    Field& operator+=(const Field& o) {
        require_same_grid(grid_, o.grid_);
        for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        require_same_grid(grid_, o.grid_);
        for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    /// Pointwise product.
    Field& operator*=(const Field& o) {
        require_same_grid(grid_, o.grid_);
        for (std::size_t i = 0; i < size(); ++i) values_[i] *= o.values_[i];
        return *this;
    }
    Field& operator*=(T s) {
        for (auto& v : values_) v *= s;
        return *this;
    }
    Field& operator+=(T s) {
        for (auto& v : values_) v += s;
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, const Field& b) { return a *= b; }
    friend Field operator*(Field a, T s) { return a *= s; }
    friend Field operator*(T s, Field a) { return a *= s; }
    friend Field operator+(Field a, T s) { return a += s; }
    friend Field operator-(Field a, T s) { return a += -s; }

    /// Elementwise map producing a field of scalar type U.
    template <class F>
    auto map(F&& f) const {
        using U = std::invoke_result_t<F, T>;
        Field<U> out(grid_);
        for (std::size_t i = 0; i < size(); ++i) out[i] = f(values_[i]);
        return out;
    }

    bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](const T& v) {
            if constexpr (std::same_as<T, double>) {
                return std::isfinite(v);
            } else {
                return std::isfinite(v.real()) && std::isfinite(v.imag());
            }
        });
    }

private:
    TorusGrid grid_;
    std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;
using VectorField = std::vector<RealField>;

/// Samples `f` at every node. `f` takes (x) or (x, y); a one-argument
/// function on a 2-D grid is treated as constant in y.
template <FieldScalar T = double, class F>
Field<T> sample(const TorusGrid& grid, F&& f) {
    Field<T> out(grid);
    const std::size_t n = grid.n();
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double x = grid.coordinate(grid.axis_index(p, 0));
        if constexpr (std::is_invocable_v<F, double, double>) {
            const double y = grid.dim() == 2 ? grid.coordinate(p % n) : 0.0;
            out[p] = static_cast<T>(f(x, y));
        } else {
            out[p] = static_cast<T>(f(x));
        }
    }
    return out;
}

inline RealField real_part(const ComplexField& f) {
    return f.map([](cplx v) { return v.real(); });
}

inline ComplexField to_complex(const RealField& f) {
    return f.map([](double v) { return cplx{v, 0.0}; });
}

namespace detail {

inline void transform(const TorusGrid& grid, std::span<cplx> data, bool inverse) {
    const FftPlan& plan = grid.plan();
    const std::size_t n = grid.n();
    auto run = [&](std::span<cplx> line) {
        if (inverse) {
            plan.inverse(line);
        } else {
            plan.forward(line);
        }
    };
    if (grid.dim() == 1) {
        run(data);
        return;
    }
    for (std::size_t r = 0; r < n; ++r) run(data.subspan(r * n, n));
    std::vector<cplx> column(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) column[r] = data[r * n + c];
        run(column);
        for (std::size_t r = 0; r < n; ++r) data[r * n + c] = column[r];
    }
}

}  // namespace detail

/// Fourier coefficients f_k = mean_x f(x) e^{-2 pi i k.x}, in FFT order.
template <FieldScalar T>
std::vector<cplx> to_spectrum(const Field<T>& f) {
    std::vector<cplx> data(f.begin(), f.end());
    detail::transform(f.grid(), data, false);
    const double scale = 1.0 / static_cast<double>(f.size());
    for (auto& c : data) c *= scale;
    return data;
}

/// Inverse of to_spectrum. For T = double the imaginary part is dropped.
template <FieldScalar T>
Field<T> from_spectrum(const TorusGrid& grid, std::vector<cplx> spectrum) {
    detail::transform(grid, spectrum, true);
    Field<T> out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if constexpr (std::same_as<T, double>) {
            out[i] = spectrum[i].real();
        } else {
            out[i] = spectrum[i];
        }
    }
    return out;
}

/// Applies the Fourier multiplier `symbol(p)` (p a flat spectral index).
template <FieldScalar T, class Symbol>
Field<T> apply_symbol(const Field<T>& f, Symbol&& symbol) {
    auto spec = to_spectrum(f);
    for (std::size_t p = 0; p < spec.size(); ++p) spec[p] *= symbol(p);
    return from_spectrum<T>(f.grid(), std::move(spec));
}

/// Exact derivative of the trigonometric interpolant along `axis`. The
/// Nyquist mode is dropped so derivatives of real fields stay real.
template <FieldScalar T>
Field<T> spectral_derivative(const Field<T>& f, int axis) {
    const TorusGrid& g = f.grid();
    if (axis < 0 || axis >= g.dim()) throw InvalidArgument("derivative axis out of range");
    return apply_symbol(f, [&](std::size_t p) -> cplx {
        if (g.is_nyquist(p, axis)) return 0.0;
        return {0.0, two_pi * static_cast<double>(g.wavenumber(p, axis))};
    });
}

template <FieldScalar T>
std::vector<Field<T>> gradient(const Field<T>& f) {
    std::vector<Field<T>> out;
    for (int a = 0; a < f.grid().dim(); ++a) out.push_back(spectral_derivative(f, a));
    return out;
}

template <FieldScalar T>
Field<T> laplacian(const Field<T>& f) {
    const TorusGrid& g = f.grid();
    return apply_symbol(f, [&](std::size_t p) -> cplx { return -g.laplacian_symbol(p); });
}

inline RealField divergence(const VectorField& u) {
    RealField out = spectral_derivative(u.at(0), 0);
    for (std::size_t a = 1; a < u.size(); ++a) out += spectral_derivative(u[a], static_cast<int>(a));
    return out;
}

/// Integral over the unit torus (the mean of the samples).
template <FieldScalar T>
T integrate(const Field<T>& f) {
    T s{};
    for (const auto& v : f) s += v;
    return s / static_cast<double>(f.size());
}

template <FieldScalar T>
double l2_norm(const Field<T>& f) {
    double s = 0.0;
    for (const auto& v : f) s += std::norm(v);
    return std::sqrt(s / static_cast<double>(f.size()));
}

template <FieldScalar T>
double l1_norm(const Field<T>& f) {
    double s = 0.0;
    for (const auto& v : f) s += std::abs(v);
    return s / static_cast<double>(f.size());
}

template <FieldScalar T>
double sup_norm(const Field<T>& f) {
    double s = 0.0;
    for (const auto& v : f) s = std::max(s, std::abs(v));
    return s;
}

inline double min_value(const RealField& f) { return *std::min_element(f.begin(), f.end()); }
inline double max_value(const RealField& f) { return *std::max_element(f.begin(), f.end()); }

/// Relative tolerance for "analytically mean-zero" inputs.
inline constexpr double mean_tolerance_factor = 1e-10;

inline void require_zero_mean(const RealField& f, const char* who) {
    const double m = integrate(f);
    if (std::abs(m) > mean_tolerance_factor * l2_norm(f)) {
        throw NonZeroMean(std::string(who) + ": input mean " + std::to_string(m) + " is not zero");
    }
}

/// Zero-mean g with -Δg = f.
inline RealField inverse_laplacian_zero_mean(const RealField& f) {
    require_zero_mean(f, "inverse_laplacian_zero_mean");
    const TorusGrid& g = f.grid();
    return apply_symbol(f, [&](std::size_t p) -> cplx {
        const double s = g.laplacian_symbol(p);
        return s == 0.0 ? 0.0 : 1.0 / s;
    });
}

/// Zero-mean g with -Δg = f - mean(f). For inputs that are mean-free only
/// up to roundoff of a subtraction (e.g. rho - ∫rho with rho ≈ 1), where
/// the relative check in inverse_laplacian_zero_mean is meaningless.
inline RealField inverse_laplacian_fluctuation(const RealField& f) {
    const TorusGrid& g = f.grid();
    return apply_symbol(f, [&](std::size_t p) -> cplx {
        const double s = g.laplacian_symbol(p);
        return s == 0.0 ? 0.0 : 1.0 / s;
    });
}

/// Ḣ⁻¹ norm of f - mean(f), no mean check.
inline double h_minus1_norm_fluctuation(const RealField& f) {
    const auto spec = to_spectrum(f);
    double s = 0.0;
    for (std::size_t p = 1; p < spec.size(); ++p) s += std::norm(spec[p]) / f.grid().laplacian_symbol(p);
    return std::sqrt(s);
}

/// Homogeneous H^{-1} norm (sum_{k != 0} |f_k|^2 / |2 pi k|^2)^{1/2}.
inline double h_minus1_norm(const RealField& f) {
    require_zero_mean(f, "h_minus1_norm");
    return h_minus1_norm_fluctuation(f);
}

/// Zeroes every mode with |k| > n/3 along some axis (2/3 rule).
template <FieldScalar T>
Field<T> dealias(const Field<T>& f) {
    const TorusGrid& g = f.grid();
    const long cutoff = static_cast<long>(g.n()) / 3;
    return apply_symbol(f, [&](std::size_t p) -> cplx {
        for (int a = 0; a < g.dim(); ++a) {
            if (std::abs(g.wavenumber(p, a)) > cutoff) return 0.0;
        }
        return 1.0;
    });
}

/// Value at an arbitrary point x of the 1-D trigonometric interpolant whose
/// coefficients are `spectrum`. The Nyquist mode is split evenly between
/// +n/2 and -n/2, which keeps interpolants of real data real.
inline cplx evaluate_trig_interpolant(std::span<const cplx> spectrum, double x) {
    const std::size_t n = spectrum.size();
    cplx s = spectrum[0];
    for (std::size_t p = 1; p < n; ++p) {
        const long k = p < n / 2 ? static_cast<long>(p) : static_cast<long>(p) - static_cast<long>(n);
        if (p == n / 2) {
            s += spectrum[p] * std::cos(two_pi * static_cast<double>(n / 2) * x);
            continue;
        }
        const double angle = two_pi * static_cast<double>(k) * x;
        s += spectrum[p] * cplx{std::cos(angle), std::sin(angle)};
    }
    return s;
}

}  // namespace qnlab
