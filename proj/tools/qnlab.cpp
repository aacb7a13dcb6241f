// qnlab <kind> --config FILE [--set k=v]... [--jobs N] [--out DIR]
//
// Exit status: 0 success, 1 solver or I/O failure, 2 configuration error.
// Failures leave error.json in the output directory and print the same
// record as one JSON line on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qnlab/errors.hpp"
#include "qnlab/harness/config.hpp"
#include "qnlab/harness/experiment.hpp"
#include "qnlab/harness/report.hpp"

namespace {

int fail(const std::filesystem::path& out, const std::string& kind, const std::string& message, int code) {
    const nlohmann::json rec{{"error", kind}, {"message", message}, {"exit_code", code}};
    try {
        qnlab::harness::write_atomic(out / "error.json", rec.dump(2) + "\n");
    } catch (const std::exception&) {
        // the stderr record below is still emitted
    }
    std::cerr << rec.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-neutral Schrodinger-Poisson-Boltzmann numerical lab"};
    std::string kind, config_path, out_dir;
    std::vector<std::string> overrides;
    unsigned jobs = 1;
    app.add_option("kind", kind, "pb_solve | schrodinger_run | euler_run | quasineutral_sweep | nbody_stats")->required();
    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--set", overrides, "override one key, key=value (repeatable)");
    app.add_option("--jobs", jobs, "worker threads for sweep points")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory (default: output.dir)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fail(out_dir.empty() ? "out" : out_dir, "UsageError", e.what(), 2);
    }

    std::filesystem::path out = out_dir.empty() ? "out" : out_dir;
    try {
        qnlab::harness::parse_kind(kind);
        auto cfg = qnlab::harness::Config::load(config_path);
        for (const auto& o : overrides) cfg.set(o);
        cfg.set("kind=" + kind);
        const auto exp = qnlab::harness::make_experiment(cfg);
        if (out_dir.empty()) out = exp.output_dir;

        const auto result = qnlab::harness::run_experiment(exp, jobs);
        qnlab::harness::emit_reports(result, out);
        std::cout << kind << ": " << result.rows.size() << " rows, validators "
                  << (result.all_pass() ? "all pass" : "FAILED (see summary.json)") << ", output in " << out.string()
                  << std::endl;
        return 0;
    } catch (const qnlab::ConfigError& e) {
        return fail(out, e.kind(), e.what(), 2);
    } catch (const qnlab::Error& e) {
        return fail(out, e.kind(), e.what(), 1);
    } catch (const std::exception& e) {
        return fail(out, "InternalError", e.what(), 1);
    }
}
