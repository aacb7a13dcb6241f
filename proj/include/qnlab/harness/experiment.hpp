#pragma once

// Experiment orchestration: builds inputs from an ExperimentConfig, runs
// sweep points on a worker pool, and assembles tables and the summary.
// Workers only compute; all files are written afterwards by one thread.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qnlab/euler.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/harness/config.hpp"
#include "qnlab/harness/report.hpp"
#include "qnlab/initial_data.hpp"
#include "qnlab/modulated_energy.hpp"
#include "qnlab/nbody.hpp"
#include "qnlab/poisson_boltzmann.hpp"
#include "qnlab/schrodinger.hpp"

namespace qnlab::harness {

/// Runs fn(0..count-1) on up to `jobs` threads and returns results in index
/// order. If any call throws, the exception of the lowest index is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, unsigned jobs, F&& fn) {
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct Validator {
    std::string name;
    std::string point;  // sweep point label, or "all"
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
};

struct ExperimentResult {
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> plotdata;  // file name -> CSV text
    json summary;

    bool all_pass() const { return summary.value("all_pass", false); }
};

inline RealField read_density_file(const std::string& path, const TorusGrid& g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read density file " + path);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        double x = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (ec != std::errc() || p != tok.data() + tok.size()) throw ConfigError(path + ": bad number '" + tok + "'");
        v.push_back(x);
    }
    if (v.size() != g.size()) {
        throw ConfigError(path + ": expected " + std::to_string(g.size()) + " values, found " + std::to_string(v.size()));
    }
    RealField r(g, std::move(v));
    if (min_value(r) < 0.0 || !(integrate(r) > 0.0)) throw ConfigError(path + ": density must be nonnegative with positive mass");
    r *= 1.0 / integrate(r);
    return r;
}

/// Reference density: density file if given, else ∝ exp(a Σ_axes cos 2πx_a).
inline RealField initial_density(const ExperimentConfig& c, const TorusGrid& g) {
    if (!c.density_file.empty()) return read_density_file(c.density_file, g);
    RealField r = sample(g, [&](double x, double y) {
        double s = std::cos(two_pi * x);
        if (g.dim() == 2) s += std::cos(two_pi * y);
        return std::exp(c.rho_amplitude * s);
    });
    r *= 1.0 / integrate(r);
    return r;
}

/// U0 = a Σ_axes sin(2πx_a)/(2π), so that u0 = ∇U0 has sup a.
inline RealField initial_velocity_potential(const ExperimentConfig& c, const TorusGrid& g) {
    return sample(g, [&](double x, double y) {
        double s = std::sin(two_pi * x);
        if (g.dim() == 2) s += std::sin(two_pi * y);
        return c.u_amplitude * s / two_pi;
    });
}

inline PotentialMode parse_mode(const std::string& m) {
    return m == "linear_poisson" ? PotentialMode::linear_poisson : PotentialMode::poisson_boltzmann;
}

inline std::string point_label(double eps, double hbar) {
    return "eps=" + format_double(eps) + ",hbar=" + format_double(hbar);
}

inline json config_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["grid.dim"] = c.dim;
    j["grid.n"] = c.n;
    j["physics.eps"] = c.eps;
    j["physics.hbar"] = c.hbar;
    j["physics.pairing"] = c.product ? "product" : "zip";
    j["physics.T"] = c.T;
    j["physics.dt"] = c.dt;
    j["physics.mode"] = c.mode;
    j["physics.sample_every"] = c.sample_every;
    j["initial.rho_amplitude"] = c.rho_amplitude;
    j["initial.u_amplitude"] = c.u_amplitude;
    j["initial.density_file"] = c.density_file;
    j["nbody.n"] = c.particles;
    j["nbody.samples"] = c.samples;
    return j;
}

inline json euler_constants_json(const EulerConstants& k) {
    return json{{"sup_grad_u", number_or_null(k.sup_grad_u)},
                {"sup_log_rho_h1", number_or_null(k.sup_log_rho_h1)},
                {"sup_dt_log_rho_h1", number_or_null(k.sup_dt_log_rho_h1)},
                {"log_rho_w1inf_h1", number_or_null(k.log_rho_w1inf_h1)},
                {"sup_grad_transport", number_or_null(k.sup_grad_transport)}};
}

/// Coordinates of every node as leading CSV columns.
inline std::vector<std::string> coordinate_header(const TorusGrid& g) {
    return g.dim() == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

inline std::vector<double> coordinates(const TorusGrid& g, std::size_t p) {
    std::vector<double> c{g.coordinate(g.axis_index(p, 0))};
    if (g.dim() == 2) c.push_back(g.coordinate(g.axis_index(p, 1)));
    return c;
}

struct PointOutcome {
    json point;
    std::vector<Validator> validators;
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> plotdata;
    double sup_total_modulated = 0.0;
};

namespace detail {

inline json validators_json(const std::vector<Validator>& v) {
    json a = json::array();
    for (const auto& x : v) {
        a.push_back({{"name", x.name},
                     {"point", x.point},
                     {"pass", x.pass},
                     {"value", number_or_null(x.value)},
                     {"limit", number_or_null(x.limit)}});
    }
    return a;
}

inline PointOutcome run_pb_point(const ExperimentConfig& c, std::size_t i) {
    const TorusGrid g(c.dim, c.n);
    const RealField h = initial_density(c, g);
    const double eps = c.eps[i];
    const PotentialSplit s = solve_pb(h, eps);
    const RealField v = s.total();
    const std::string label = "eps=" + format_double(eps);

    PointOutcome o;
    const double mass = integrate(s.boltzmann_density());
    const double res = pb_residual_norm(s, h);
    o.point = {{"label", label},
               {"params", {{"eps", eps}}},
               {"maxima",
                {{"newton_iterations", s.newton.iterations},
                 {"linear_iterations", s.newton.linear_iterations},
                 {"residual", number_or_null(res)},
                 {"boltzmann_mass", number_or_null(mass)},
                 {"sup_potential", number_or_null(sup_norm(v))},
                 {"sup_tilde", number_or_null(sup_norm(s.tilde))},
                 {"sup_hat", number_or_null(sup_norm(s.hat))}}}};
    o.validators.push_back({"newton_residual", label, res <= s.newton.tolerance, res, s.newton.tolerance});
    o.validators.push_back({"boltzmann_mass", label, std::abs(mass - 1.0) <= 1e-8, std::abs(mass - 1.0), 1e-8});
    for (const auto& b : validate_elliptic_bounds(s, h).checks) {
        if (b.informational) continue;
        o.validators.push_back({b.name, label, b.pass, b.lhs, b.rhs});
    }

    auto header = coordinate_header(g);
    for (const char* k : {"h", "tilde", "hat", "potential", "boltzmann_density"}) header.push_back(k);
    std::vector<std::vector<double>> rows;
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto r = coordinates(g, p);
        r.insert(r.end(), {h[p], s.tilde[p], s.hat[p], v[p], std::exp(v[p])});
        rows.push_back(std::move(r));
    }
    o.plotdata["pb_point_" + std::to_string(i) + ".csv"] = csv_text(header, rows);
    return o;
}

inline PointOutcome run_sweep_point(const ExperimentConfig& c, double eps, double hbar, std::size_t index) {
    const TorusGrid g(c.dim, c.n);
    const PotentialMode mode = parse_mode(c.mode);
    const WellPreparedSpec spec{initial_density(c, g), initial_velocity_potential(c, g), eps, hbar};
    const WaveFunction w0 = well_prepared(spec);
    const auto euler = run_euler(euler_initial_state(spec), c.T, c.dt, c.sample_every);
    const SchrodingerTrajectory traj = run(w0, c.T, c.dt, c.sample_every, mode);
    if (euler.size() != traj.snapshots.size()) throw InvalidArgument("Euler and Schrodinger sample times differ");
    const auto tests = default_test_fields(g);
    const std::string label = point_label(eps, hbar);

    PointOutcome o;
    double sup_e = 0.0, min_e = 0.0, drift = 0.0, mass_drift = 0.0, sup_current_excess = -1.0;
    bool current_ok = true;
    const double f0 = traj.diagnostics.front().energy.total;
    const double m0 = traj.diagnostics.front().mass;
    std::vector<std::vector<double>> energy_rows;
    for (std::size_t k = 0; k < euler.size(); ++k) {
        const Snapshot& snap = traj.snapshots[k];
        const EnergyReport rep = modulated_total(snap.state, snap.potential, euler[k], traj.dt / 2.0, mode);
        const WeakDistances wd = weak_distances(snap.state, snap.potential, euler[k], tests);
        SweepRow row{eps, hbar, rep.time, rep.kinetic_modulated, rep.field_energy, rep.relative_entropy,
                     rep.total_modulated, rep.conserved_total, wd.h_minus1_density, wd.l1_entropy,
                     wd.max_current_error()};
        o.rows.push_back(row);
        sup_e = std::max(sup_e, rep.total_modulated);
        min_e = k == 0 ? rep.total_modulated : std::min(min_e, rep.total_modulated);
        drift = std::max(drift, std::abs(rep.conserved_total - f0) / (1.0 + std::abs(f0)));
        mass_drift = std::max(mass_drift, std::abs(traj.diagnostics[k].mass - m0));
        for (const auto& ct : wd.currents) {
            current_ok = current_ok && ct.pass;
            sup_current_excess = std::max(sup_current_excess, ct.quantum_error - ct.bound);
        }
        const auto& d = traj.diagnostics[k];
        energy_rows.push_back({d.time, d.mass, d.energy.kinetic, d.energy.field, d.energy.boltzmann, d.energy.total});
    }

    // Closed form of the modulated energy of well-prepared data at t = 0.
    const RealField a2 = well_prepared_amplitude_squared(spec.rho0, eps);
    const RealField amp = a2.map([](double x) { return std::sqrt(x); });
    const RealField v0 = spec.rho0.map([](double x) { return std::log(x); });
    const double closed = hbar * hbar * gradient_energy(amp) + eps * gradient_energy(v0);
    const double initial = o.rows.front().total_modulated;

    const EulerConstants ec = euler_constants(euler);
    o.sup_total_modulated = sup_e;
    o.point = {{"label", label},
               {"params", {{"eps", eps}, {"hbar", hbar}}},
               {"maxima",
                {{"sup_total_modulated", number_or_null(sup_e)},
                 {"initial_total_modulated", number_or_null(initial)},
                 {"initial_closed_form", number_or_null(closed)},
                 {"max_energy_drift", number_or_null(drift)},
                 {"max_mass_drift", number_or_null(mass_drift)},
                 {"steps", traj.steps},
                 {"dt", traj.dt}}},
               {"euler_constants", euler_constants_json(ec)}};
    o.validators.push_back({"total_modulated_nonnegative", label, min_e >= -1e-12, min_e, -1e-12});
    o.validators.push_back({"initial_closed_form", label, std::abs(initial - closed) <= 1e-8, std::abs(initial - closed), 1e-8});
    o.validators.push_back({"energy_drift", label, drift <= 1e-6, drift, 1e-6});
    o.validators.push_back({"mass_drift", label, mass_drift <= 1e-10, mass_drift, 1e-10});
    o.validators.push_back({"weak_current_bound", label, current_ok, sup_current_excess, 1e-10});
    o.plotdata["energy_point_" + std::to_string(index) + ".csv"] =
        csv_text({"time", "mass", "kinetic", "field", "boltzmann", "total"}, energy_rows);
    return o;
}

inline PointOutcome run_nbody_point(const ExperimentConfig& c, std::size_t i) {
    const std::size_t n = c.particles[i];
    const UniformStats s = uniform_statistics(n, c.samples, c.seed + i);
    const double expected = -green::kernel_integral / static_cast<double>(n);
    const std::string label = "N=" + std::to_string(n);
    PointOutcome o;
    const double z = s.energy.standard_error > 0 ? std::abs(s.energy.mean - expected) / s.energy.standard_error : 0.0;
    o.point = {{"label", label},
               {"params", {{"n", n}, {"samples", c.samples}}},
               {"maxima",
                {{"mean_energy", number_or_null(s.energy.mean)},
                 {"energy_standard_error", number_or_null(s.energy.standard_error)},
                 {"expected_mean_energy", number_or_null(expected)},
                 {"mean_w1_squared", number_or_null(s.w1_squared.mean)},
                 {"w1_squared_standard_error", number_or_null(s.w1_squared.standard_error)}}}};
    o.validators.push_back({"mean_energy_within_3se", label, z <= 3.0, z, 3.0});
    return o;
}

}  // namespace detail

/// Runs one experiment. Points are distributed over `jobs` threads.
inline ExperimentResult run_experiment(const ExperimentConfig& c, unsigned jobs = 1) {
    ExperimentResult res;
    std::vector<PointOutcome> outcomes;
    std::vector<Validator> global;

    switch (c.kind) {
        case ExperimentKind::pb_solve:
            outcomes = parallel_map<PointOutcome>(c.eps.size(), jobs, [&](std::size_t i) { return detail::run_pb_point(c, i); });
            break;
        case ExperimentKind::quasineutral_sweep: {
            const auto pts = c.points();
            outcomes = parallel_map<PointOutcome>(pts.size(), jobs, [&](std::size_t i) {
                return detail::run_sweep_point(c, pts[i].first, pts[i].second, i);
            });
            if (outcomes.size() > 1) {
                bool decreasing = true;
                double worst = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 1; i < outcomes.size(); ++i) {
                    const double d = outcomes[i].sup_total_modulated - outcomes[i - 1].sup_total_modulated;
                    decreasing = decreasing && d < 0.0;
                    worst = std::max(worst, d);
                }
                global.push_back({"sup_total_modulated_strictly_decreasing", "all", decreasing, worst, 0.0});
            }
            break;
        }
        case ExperimentKind::schrodinger_run: {
            const auto pts = c.points();
            outcomes.push_back(detail::run_sweep_point(c, pts.front().first, pts.front().second, 0));
            break;
        }
        case ExperimentKind::euler_run: {
            const TorusGrid g(c.dim, c.n);
            const WellPreparedSpec spec{initial_density(c, g), initial_velocity_potential(c, g), 1.0, 1.0};
            const auto traj = run_euler(euler_initial_state(spec), c.T, c.dt, c.sample_every);
            const EulerConstants ec = euler_constants(traj);
            std::vector<std::vector<double>> rows;
            double mass_drift = 0.0;
            for (const auto& s : traj) {
                const double m = integrate(s.rho());
                mass_drift = std::max(mass_drift, std::abs(m - 1.0));
                rows.push_back({s.time, m, sup_velocity_gradient(s.u), l2_norm(s.log_rho)});
            }
            PointOutcome o;
            o.point = {{"label", "euler"},
                       {"params", {{"T", c.T}, {"dt", c.dt}}},
                       {"maxima", {{"max_mass_drift", number_or_null(mass_drift)}, {"samples", traj.size()}}},
                       {"euler_constants", euler_constants_json(ec)}};
            o.validators.push_back({"mass_drift", "euler", mass_drift <= 1e-8, mass_drift, 1e-8});
            o.plotdata["euler.csv"] = csv_text({"time", "mass", "sup_grad_u", "log_rho_l2"}, rows);
            outcomes.push_back(std::move(o));
            break;
        }
        case ExperimentKind::nbody_stats: {
            outcomes = parallel_map<PointOutcome>(c.particles.size(), jobs, [&](std::size_t i) { return detail::run_nbody_point(c, i); });
            std::vector<std::vector<double>> rows;
            std::vector<double> ns, w1;
            for (const auto& o : outcomes) {
                const auto& p = o.point["params"];
                const auto& m = o.point["maxima"];
                const double n = p["n"].get<double>();
                rows.push_back({n, m["mean_energy"].get<double>(), m["energy_standard_error"].get<double>(),
                                m["expected_mean_energy"].get<double>(), m["mean_w1_squared"].get<double>(),
                                m["w1_squared_standard_error"].get<double>()});
                ns.push_back(n);
                w1.push_back(m["mean_w1_squared"].get<double>());
            }
            res.plotdata["nbody.csv"] = csv_text({"n", "mean_energy", "energy_standard_error", "expected_mean_energy",
                                                  "mean_w1_squared", "w1_squared_standard_error"},
                                                 rows);
            if (ns.size() >= 2) {
                const double lambda = fit_decay_exponent(ns, w1);
                global.push_back({"w1_squared_decay_exponent", "all", lambda >= 0.9, lambda, 0.9});
            }
            break;
        }
    }

    json points = json::array();
    std::vector<Validator> all;
    for (auto& o : outcomes) {
        points.push_back(o.point);
        all.insert(all.end(), o.validators.begin(), o.validators.end());
        res.rows.insert(res.rows.end(), o.rows.begin(), o.rows.end());
        for (auto& [k, v] : o.plotdata) res.plotdata[k] = v;
    }
    all.insert(all.end(), global.begin(), global.end());

    if (!res.rows.empty()) {
        // One long-format file per diagnostic column.
        const auto& cols = sweep_columns();
        for (std::size_t k = 3; k < cols.size(); ++k) {
            std::vector<std::vector<double>> rows;
            for (const auto& r : res.rows) {
                const auto v = r.values();
                rows.push_back({v[0], v[1], v[2], v[k]});
            }
            res.plotdata[cols[k] + ".csv"] = csv_text({"eps", "hbar", "time", cols[k]}, rows);
        }
    }

    const bool ok = std::all_of(all.begin(), all.end(), [](const Validator& v) { return v.pass; });
    res.summary = {{"schema_version", 1},
                   {"kind", to_string(c.kind)},
                   {"seed", c.seed},
                   {"grid", {{"dim", c.dim}, {"n", c.n}}},
                   {"parameters", config_json(c)},
                   {"points", points},
                   {"validators", detail::validators_json(all)},
                   {"all_pass", ok}};
    return res;
}

/// Writes sweep.csv, summary.json and plotdata/*.csv under `dir`.
inline void emit_reports(const ExperimentResult& r, const std::filesystem::path& dir) {
    write_atomic(dir / "sweep.csv", sweep_csv(r.rows));
    for (const auto& [name, text] : r.plotdata) write_atomic(dir / "plotdata" / name, text);
    write_atomic(dir / "summary.json", r.summary.dump(2) + "\n");
}

}  // namespace qnlab::harness
