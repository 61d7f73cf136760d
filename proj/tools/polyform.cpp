// polyform: stability analysis, simulation and parameter sweeps for daisy-chain polygon formations.
//
// Exit codes (sysexits):
//   0  success / stable / converged
//   1  simulation did not converge
//   2  analyze: marginal
//   3  analyze: unstable, simulate: diverged
//   64 usage error        65 invalid scenario
//   66 missing input      70 internal error      74 I/O error
#include "polyform/acceptance.hpp"
#include "polyform/io.hpp"
#include "polyform/simulator.hpp"
#include "polyform/stability.hpp"
#include "polyform/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>
#include <tuple>

namespace {

using namespace polyform;

constexpr int exit_usage = 64;
constexpr int exit_data = 65;
constexpr int exit_noinput = 66;
constexpr int exit_software = 70;
constexpr int exit_io = 74;

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::stable: return 0;
        case Verdict::marginal: return 2;
        case Verdict::unstable: return 3;
    }
    return exit_software;
}

unsigned sweep_threads() {
    if (const char* env = std::getenv("POLYFORM_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0') {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<int, int> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    const auto lo = parse_real_list(text.substr(0, colon));
    const auto hi = colon == std::string::npos ? lo : parse_real_list(text.substr(colon + 1));
    if (lo.size() != 1 || hi.size() != 1 || lo[0] != std::floor(lo[0]) || hi[0] != std::floor(hi[0]) || lo[0] < 3 ||
        hi[0] < lo[0]) {
        throw std::invalid_argument("agent range must look like 3:12 with 3 <= lo <= hi");
    }
    return {static_cast<int>(lo[0]), static_cast<int>(hi[0])};
}

std::vector<double> parse_theta_grid(const std::string& text) {
    if (text.rfind("grid:", 0) == 0) {
        const auto count = parse_real_list(text.substr(5));
        if (count.size() != 1 || count[0] < 1 || count[0] != std::floor(count[0])) {
            throw std::invalid_argument("grid:K needs a positive integer K");
        }
        return uniform_theta_grid(static_cast<int>(count[0]));
    }
    auto values = parse_real_list(text);
    for (double v : values) {
        if (!(v > -std::numbers::pi && v <= std::numbers::pi)) {
            throw std::invalid_argument("theta values must lie in (-pi, pi]");
        }
    }
    return values;
}

int cmd_analyze(int n, const std::string& theta_text, const std::string& ratios_text) {
    ShapeSpec spec;
    try {
        spec = ShapeSpec::line(n);
        spec.theta = parse_theta_spec(theta_text, n);
        if (!ratios_text.empty()) {
            spec.ratios = parse_real_list(ratios_text);
        }
        spec.validate(n);
    } catch (const std::exception& e) {
        std::cerr << "polyform analyze: " << e.what() << '\n';
        return exit_usage;
    }
    const StabilityReport report = classify(spec, n);
    std::cout << to_json(report).dump(2) << '\n';
    return verdict_exit(report.verdict);
}

int cmd_simulate(const std::string& path, const std::string& prefix, double tol) {
    Scenario s;
    try {
        s = load_scenario(path);
    } catch (const ScenarioFileError& e) {
        std::cerr << "polyform simulate: " << e.what() << '\n';
        return exit_noinput;
    } catch (const ScenarioError& e) {
        std::cerr << "polyform simulate: invalid scenario at " << e.what() << '\n';
        return exit_data;
    }
    const Trajectory traj = run(s);
    const RunReport report = summarize(s, traj, tol);
    try {
        write_csv(traj, std::filesystem::path(prefix + ".csv"));
        write_svg(traj, {s.law.controls_closing_edge()}, std::filesystem::path(prefix + ".svg"));
        std::ofstream out(prefix + ".report.json", std::ios::binary);
        out << to_json(report).dump(2) << '\n';
        if (!out) {
            throw OutputError("cannot write " + prefix + ".report.json");
        }
    } catch (const OutputError& e) {
        std::cerr << "polyform simulate: " << e.what() << '\n';
        return exit_io;
    }
    std::cout << to_json(report).dump(2) << '\n';
    if (report.diverged) return 3;
    return report.converged ? 0 : 1;
}

int cmd_sweep(const std::string& n_text, const std::string& theta_text, double t_end, double dt, std::uint64_t seed,
              const std::string& out_path) {
    SweepSettings settings;
    try {
        std::tie(settings.n_min, settings.n_max) = parse_range(n_text);
        settings.thetas = parse_theta_grid(theta_text);
        if (!(t_end > 0.0) || !(dt > 0.0)) {
            throw std::invalid_argument("--t-end and --dt must be positive");
        }
    } catch (const std::exception& e) {
        std::cerr << "polyform sweep: " << e.what() << '\n';
        return exit_usage;
    }
    settings.t_end = t_end;
    settings.dt = dt;
    settings.seed = seed;
    const auto rows = sweep(settings, sweep_threads());
    if (out_path.empty()) {
        write_sweep_csv(rows, std::cout);
        return std::cout ? 0 : exit_io;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) {
        std::cerr << "polyform sweep: cannot write " << out_path << '\n';
        return exit_io;
    }
    write_sweep_csv(rows, file);
    return file ? 0 : exit_io;
}

int cmd_verify(const std::string& fixtures) {
    acceptance::Config config;
    config.fixtures = fixtures;
    std::vector<acceptance::CriterionResult> results;
    try {
        results = acceptance::run_all(config);
    } catch (const acceptance::MissingFixture& e) {
        std::cerr << "polyform verify: " << e.what() << '\n';
        return exit_noinput;
    }
    int failed = 0;
    for (const auto& r : results) {
        std::printf("[%s] %2d %-68s %7.3f s\n       %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                    r.detail.c_str());
        failed += r.passed ? 0 : 1;
    }
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed polygonal formation control: analysis, simulation and verification.\n"
                 "Exit codes: 0 ok/stable/converged, 1 not converged, 2 marginal, 3 unstable/diverged,\n"
                 "64 usage, 65 invalid scenario, 66 missing input, 74 I/O error."};
    app.require_subcommand(1);

    int n = 6;
    std::string theta = "regular";
    std::string ratios;
    auto* analyze = app.add_subcommand("analyze", "Spectral stability of a shape (JSON on stdout)");
    analyze->add_option("--n", n, "Agent count")->required();
    analyze->add_option("--theta", theta, "Turn angles: 'regular', a value, or a comma list");
    analyze->add_option("--ratios", ratios, "Comma list of n-1 positive edge ratios");

    std::string scenario;
    std::string prefix = "run";
    double tol = 1e-6;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario file, write <out>.csv/.report.json/.svg");
    simulate->add_option("scenario", scenario, "Scenario JSON file")->required();
    simulate->add_option("--out", prefix, "Output prefix");
    simulate->add_option("--tol", tol, "Convergence tolerance");

    std::string n_range = "3:12";
    std::string theta_grid = "grid:25";
    double t_end = 400.0;
    double dt = 0.25;
    std::uint64_t seed = 1;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Spectral verdict vs. short simulation over an (n, theta) grid");
    sweep->add_option("--n", n_range, "Agent range lo:hi");
    sweep->add_option("--theta", theta_grid, "Comma list of angles or grid:K");
    sweep->add_option("--t-end", t_end, "Simulated horizon per cell");
    sweep->add_option("--dt", dt, "RK4 step");
    sweep->add_option("--seed", seed, "Seed for initial placement");
    sweep->add_option("--out", sweep_out, "CSV path (default stdout)");

    std::string fixtures = POLYFORM_SCENARIO_DIR;
    auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
    verify->add_option("--fixtures", fixtures, "Directory holding hexagon.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*analyze) return cmd_analyze(n, theta, ratios);
        if (*simulate) return cmd_simulate(scenario, prefix, tol);
        if (*sweep) return cmd_sweep(n_range, theta_grid, t_end, dt, seed, sweep_out);
        if (*verify) return cmd_verify(fixtures);
    } catch (const std::exception& e) {
        std::cerr << "polyform: " << e.what() << '\n';
        return exit_software;
    }
    return exit_usage;
}
