#include "polyform/sweep.hpp"

#include "polyform/io.hpp"
#include "polyform/simulator.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace polyform {

std::vector<double> uniform_theta_grid(int k) {
    if (k < 1) {
        throw std::invalid_argument("grid needs at least one point");
    }
    std::vector<double> g;
    for (int j = 1; j <= k; ++j) {
        g.push_back(j == k ? std::numbers::pi : -std::numbers::pi + 2.0 * std::numbers::pi * j / k);
    }
    return g;
}

std::vector<SweepRow> sweep(const SweepSettings& settings, unsigned threads) {
    if (settings.n_min < 3 || settings.n_max < settings.n_min) {
        throw std::invalid_argument("agent range must satisfy 3 <= lo <= hi");
    }
    std::vector<double> thetas = settings.thetas;
    std::sort(thetas.begin(), thetas.end());
    std::vector<SweepRow> rows;
    std::vector<Scenario> runs;
    for (int n = settings.n_min; n <= settings.n_max; ++n) {
        for (double theta : thetas) {
            Scenario s;
            s.n = n;
            s.initial = random_placement(n, settings.seed + static_cast<std::uint64_t>(n), {-1, -1, 1, 1});
            s.law.mode = Mode::polygon;
            s.law.spec = ShapeSpec::uniform(n, theta);
            s.integrator = {settings.dt, settings.t_end, Method::rk4};
            s.record_every = std::numeric_limits<int>::max();
            const StabilityReport report = classify(s.law.spec, n);
            rows.push_back({n, theta, report.min_real, report.verdict, false});
            runs.push_back(std::move(s));
        }
    }
    const auto trajectories = run_batch(runs, threads);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Trajectory& tr = trajectories[i];
        rows[i].empirical_converged =
            !tr.diverged && tr.e_theta_norm.back() <= settings.decay * tr.e_theta_norm.front();
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "n,theta,min_real,verdict,empirical_converged\n";
    for (const auto& r : rows) {
        out << r.n << ',' << format_real(r.theta) << ',' << format_real(r.min_real) << ',' << to_string(r.verdict)
            << ',' << (r.empirical_converged ? "true" : "false") << '\n';
    }
}

}  // namespace polyform
