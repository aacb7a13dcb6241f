#pragma once

// Flat key = value experiment configuration.
//
//   # comment
//   kind = quasineutral_sweep
//   physics.eps = 0.1, 0.05
//
// Keys are dotted identifiers; list values are comma separated. Later
// `--set key=value` overrides replace file values.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qnlab/errors.hpp"

namespace qnlab::harness {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    });
}

}  // namespace detail

class Config {
public:
    /// Parses config text; `origin` names the source in error messages.
    static Config parse(const std::string& text, const std::string& origin = "<config>") {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = detail::trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = detail::trim(std::string_view(t).substr(0, eq));
            const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
            if (!detail::valid_key(key)) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
            }
            if (c.values_.count(key)) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            }
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    /// Applies one "key=value" override.
    void set(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
        const std::string key = detail::trim(std::string_view(assignment).substr(0, eq));
        if (!detail::valid_key(key)) throw ConfigError("bad override key '" + key + "'");
        values_[key] = detail::trim(std::string_view(assignment).substr(eq + 1));
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string get_string(const std::string& key, const std::optional<std::string>& fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            if (fallback) return *fallback;
            throw ConfigError("missing required key '" + key + "'");
        }
        return it->second;
    }

    double get_double(const std::string& key, std::optional<double> fallback = {}) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing required key '" + key + "'");
        }
        return to_double(key, values_.at(key));
    }

    std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = {}) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing required key '" + key + "'");
        }
        return to_int(key, values_.at(key));
    }

    std::vector<double> get_double_list(const std::string& key, std::optional<std::vector<double>> fallback = {}) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing required key '" + key + "'");
        }
        std::vector<double> out;
        for (const auto& item : split(values_.at(key))) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key,
                                           std::optional<std::vector<std::int64_t>> fallback = {}) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing required key '" + key + "'");
        }
        std::vector<std::int64_t> out;
        for (const auto& item : split(values_.at(key))) out.push_back(to_int(key, item));
        return out;
    }

    /// Rejects keys outside `known` (catches typos).
    void require_known(const std::set<std::string>& known) const {
        for (const auto& [k, v] : values_) {
            if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");
        }
    }

private:
    static std::vector<std::string> split(const std::string& v) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) out.push_back(detail::trim(item));
        if (out.empty()) out.push_back("");
        return out;
    }

    static double to_double(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || p != end || !std::isfinite(v)) {
            throw ConfigError("key '" + key + "': '" + s + "' is not a finite number");
        }
        return v;
    }

    static std::int64_t to_int(const std::string& key, const std::string& s) {
        std::int64_t v = 0;
        const auto* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || p != end) throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
        return v;
    }

    std::map<std::string, std::string> values_;
};

enum class ExperimentKind { pb_solve, schrodinger_run, euler_run, quasineutral_sweep, nbody_stats };

inline ExperimentKind parse_kind(const std::string& s) {
    if (s == "pb_solve") return ExperimentKind::pb_solve;
    if (s == "schrodinger_run") return ExperimentKind::schrodinger_run;
    if (s == "euler_run") return ExperimentKind::euler_run;
    if (s == "quasineutral_sweep") return ExperimentKind::quasineutral_sweep;
    if (s == "nbody_stats") return ExperimentKind::nbody_stats;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::pb_solve: return "pb_solve";
        case ExperimentKind::schrodinger_run: return "schrodinger_run";
        case ExperimentKind::euler_run: return "euler_run";
        case ExperimentKind::quasineutral_sweep: return "quasineutral_sweep";
        case ExperimentKind::nbody_stats: return "nbody_stats";
    }
    return "?";
}

/// Default seed: $QNLAB_SEED when set, else 12345.
inline std::uint64_t default_seed() {
    const char* env = std::getenv("QNLAB_SEED");
    if (!env || !*env) return 12345;
    std::uint64_t v = 0;
    const std::string s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("QNLAB_SEED='" + s + "' is not an integer");
    return v;
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::pb_solve;
    int dim = 1;
    std::size_t n = 256;
    std::vector<double> eps{0.1};
    std::vector<double> hbar{0.1};
    bool product = false;  // eps x hbar grid instead of zipped pairs
    double T = 0.2;
    double dt = 1e-4;
    std::string mode = "poisson_boltzmann";
    std::size_t sample_every = 10;
    double rho_amplitude = 0.1;
    double u_amplitude = 0.1;
    std::string density_file;
    std::vector<std::size_t> particles{8, 64, 512};
    std::size_t samples = 2000;
    std::uint64_t seed = 12345;
    std::string output_dir = "out";

    /// (eps, hbar) sweep points in output order.
    std::vector<std::pair<double, double>> points() const {
        std::vector<std::pair<double, double>> p;
        if (product) {
            for (double e : eps) {
                for (double h : hbar) p.emplace_back(e, h);
            }
        } else {
            for (std::size_t i = 0; i < eps.size(); ++i) p.emplace_back(eps[i], hbar[i]);
        }
        return p;
    }
};

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "kind",           "grid.dim",           "grid.n",          "physics.eps",          "physics.hbar",
        "physics.pairing", "physics.T",         "physics.dt",      "physics.mode",         "physics.sample_every",
        "initial.rho_amplitude", "initial.u_amplitude", "initial.density_file", "nbody.n", "nbody.samples",
        "seed",           "output.dir"};
    return keys;
}

/// Builds and validates an experiment from parsed key/values.
inline ExperimentConfig make_experiment(const Config& c) {
    c.require_known(known_keys());
    ExperimentConfig e;
    e.kind = parse_kind(c.get_string("kind"));
    e.dim = static_cast<int>(c.get_int("grid.dim", 1));
    if (e.dim != 1 && e.dim != 2) throw ConfigError("grid.dim must be 1 or 2");
    const auto n = c.get_int("grid.n", 256);
    if (n < 8 || (n & (n - 1)) != 0) throw ConfigError("grid.n must be a power of two >= 8");
    e.n = static_cast<std::size_t>(n);
    e.eps = c.get_double_list("physics.eps", std::vector<double>{0.1});
    e.hbar = c.get_double_list("physics.hbar", std::vector<double>{0.1});
    const std::string pairing = c.get_string("physics.pairing", std::string("zip"));
    if (pairing != "zip" && pairing != "product") throw ConfigError("physics.pairing must be zip or product");
    e.product = pairing == "product";
    // Only the Schrödinger kinds pair eps with hbar.
    const bool uses_hbar = e.kind == ExperimentKind::schrodinger_run || e.kind == ExperimentKind::quasineutral_sweep;
    if (uses_hbar && !e.product && e.eps.size() != e.hbar.size()) {
        throw ConfigError("physics.eps and physics.hbar must have equal length when paired by zip");
    }
    for (double v : e.eps) {
        if (!(v > 0.0)) throw ConfigError("every physics.eps must be positive");
    }
    for (double v : e.hbar) {
        if (!(v > 0.0)) throw ConfigError("every physics.hbar must be positive");
    }
    e.T = c.get_double("physics.T", 0.2);
    if (!(e.T >= 0.0)) throw ConfigError("physics.T must be nonnegative");
    e.dt = c.get_double("physics.dt", 1e-4);
    if (!(e.dt > 0.0)) throw ConfigError("physics.dt must be positive");
    e.mode = c.get_string("physics.mode", std::string("poisson_boltzmann"));
    if (e.mode != "poisson_boltzmann" && e.mode != "linear_poisson") {
        throw ConfigError("physics.mode must be poisson_boltzmann or linear_poisson");
    }
    const auto se = c.get_int("physics.sample_every", 10);
    if (se < 1) throw ConfigError("physics.sample_every must be >= 1");
    e.sample_every = static_cast<std::size_t>(se);
    e.rho_amplitude = c.get_double("initial.rho_amplitude", 0.1);
    e.u_amplitude = c.get_double("initial.u_amplitude", 0.1);
    e.density_file = c.get_string("initial.density_file", std::string());
    e.particles.clear();
    for (auto v : c.get_int_list("nbody.n", std::vector<std::int64_t>{8, 64, 512})) {
        if (v < 1) throw ConfigError("nbody.n entries must be >= 1");
        e.particles.push_back(static_cast<std::size_t>(v));
    }
    const auto samples = c.get_int("nbody.samples", 2000);
    if (samples < 2) throw ConfigError("nbody.samples must be >= 2");
    e.samples = static_cast<std::size_t>(samples);
    const auto seed = c.has("seed") ? c.get_int("seed") : static_cast<std::int64_t>(default_seed());
    if (seed < 0) throw ConfigError("seed must be nonnegative");
    e.seed = static_cast<std::uint64_t>(seed);
    e.output_dir = c.get_string("output.dir", std::string("out"));

    // The WKB phase e^{iU0/hbar} must be resolved: n >= 8 max|U0'| / (2π hbar).
    if (e.kind == ExperimentKind::schrodinger_run || e.kind == ExperimentKind::quasineutral_sweep) {
        const double hmin = *std::min_element(e.hbar.begin(), e.hbar.end());
        const double need = 8.0 * std::abs(e.u_amplitude) / (2.0 * 3.14159265358979323846 * hmin);
        if (static_cast<double>(e.n) < need) {
            throw ConfigError("grid.n = " + std::to_string(e.n) + " does not resolve the phase for hbar = " +
                              std::to_string(hmin) + " (need >= " + std::to_string(need) + ")");
        }
    }
    return e;
}

}  // namespace qnlab::harness
