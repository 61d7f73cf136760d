#include "polyform/acceptance.hpp"

#include "polyform/control.hpp"
#include "polyform/geometry.hpp"
#include "polyform/io.hpp"
#include "polyform/simulator.hpp"
#include "polyform/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

namespace polyform::acceptance {

namespace {

constexpr double pi = std::numbers::pi;

template <typename Body>
CriterionResult timed(int id, std::string name, Body body) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Appends a runtime check to a criterion that carries a stated time budget.
void within_budget(CriterionResult& r, double budget_seconds, std::chrono::steady_clock::time_point start) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= budget_seconds) {
        r.passed = false;
        r.detail += "; runtime " + format_real(elapsed) + " s over budget " + format_real(budget_seconds) + " s";
    }
}

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(3);
    out << x;
    return out.str();
}

/// 25 angles -pi + 2 pi j / 25, j = 1..25, spanning (-pi, pi].
std::vector<double> theta_grid() {
    std::vector<double> g;
    for (int j = 1; j <= 25; ++j) {
        g.push_back(j == 25 ? pi : -pi + 2.0 * pi * j / 25.0);
    }
    return g;
}

/// Greedy nearest matching of each closed-form value (taken twice) against the numerical spectrum.
double spectrum_deviation(std::vector<std::complex<double>> numeric, const std::vector<double>& closed) {
    std::vector<double> doubled;
    for (double x : closed) {
        doubled.push_back(x);
        doubled.push_back(x);
    }
    if (doubled.size() != numeric.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (double target : doubled) {
        auto best = std::min_element(numeric.begin(), numeric.end(), [&](const auto& a, const auto& b) {
            return std::abs(a - target) < std::abs(b - target);
        });
        worst = std::max(worst, std::abs(*best - target));
        numeric.erase(best);
    }
    return worst;
}

ControlLaw polygon_law(int n, double theta, double c = 1.0) {
    ControlLaw law;
    law.mode = Mode::polygon;
    law.c = c;
    law.spec = ShapeSpec::uniform(n, theta);
    return law;
}

/// Least-squares slope of log(y) against t.
double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const auto m = static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
    }
    return (m * sty - st * sy) / (m * stt - st * st);
}

Scenario hexagon_scenario(const std::filesystem::path& fixtures) {
    const auto file = fixtures / "hexagon.json";
    if (!std::filesystem::exists(file)) {
        throw MissingFixture("missing fixture " + file.string());
    }
    return load_scenario(file);
}

/// Index of the last sample with time <= t.
std::size_t sample_at(const Trajectory& traj, double t) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] <= t + 1e-9) {
            idx = i;
        }
    }
    return idx;
}

}  // namespace

CriterionResult eigenvalue_oracle() {
    return timed(1, "eigenvalue oracle: numerical spectrum of A equals closed form twice", [](CriterionResult& r) {
        const auto start = std::chrono::steady_clock::now();
        double worst = 0.0;
        int cells = 0;
        for (int n = 3; n <= 12; ++n) {
            for (double theta : theta_grid()) {
                const auto numeric = numerical_eigs(assemble_A(ShapeSpec::uniform(n, theta), n));
                worst = std::max(worst, spectrum_deviation(numeric, closed_form_eigs(theta, n)));
                ++cells;
            }
        }
        r.passed = worst <= 1e-9;
        r.detail = std::to_string(cells) + " cells, max deviation " + fmt(worst) + " (limit 1e-9)";
        within_budget(r, 5.0, start);
    });
}

CriterionResult stability_bound_both_directions() {
    return timed(2, "stability bound holds in both directions", [](CriterionResult& r) {
        const auto start = std::chrono::steady_clock::now();
        constexpr int steps = 2000;
        constexpr double dt = 0.65;
        r.passed = true;
        std::ostringstream detail;
        for (int n = 4; n <= 10; ++n) {
            for (double factor : {0.95, 1.05}) {
                const double theta = factor * stability_bound(n);
                const ControlLaw law = polygon_law(n, theta);
                const double min_real = classify(law.spec, n).min_real;
                const Topology t(n);

                Stacked p = random_placement(n, 1000 + static_cast<std::uint64_t>(n), {-1, -1, 1, 1});
                p /= deployment_error(p, t, law).e_theta.norm();  // |e(0)| = 1
                const double e0 = deployment_error(p, t, law).e_theta.norm();
                double e_end = 0.0;
                bool diverged = false;
                try {
                    for (int k = 0; k < steps; ++k) {
                        p = step(p, law, dt, Method::rk4, k * dt);
                    }
                    e_end = deployment_error(p, t, law).e_theta.norm();
                } catch (const IntegrationDiverged&) {
                    diverged = true;
                }
                bool ok = false;
                if (factor < 1.0) {
                    ok = min_real > 0.0 && !diverged && e_end < 1e-6;
                } else {
                    ok = min_real < 0.0 && (diverged || e_end > e0);
                }
                if (!ok) {
                    r.passed = false;
                    detail << "n=" << n << " factor " << factor << " min_real " << fmt(min_real) << " |e| "
                           << fmt(e_end) << "; ";
                }
            }
        }
        r.detail = r.passed ? "n=4..10: 0.95 bound decays below 1e-6, 1.05 bound grows" : detail.str();
        within_budget(r, 30.0, start);
    });
}

CriterionResult line_deployment() {
    return timed(3, "line deployment: collinear, equally spaced, path-Laplacian rate", [](CriterionResult& r) {
        const auto start = std::chrono::steady_clock::now();
        r.passed = true;
        std::ostringstream detail;
        for (int n : {3, 5, 8}) {
            const double lambda = 2.0 - 2.0 * std::cos(pi / (n - 1));
            Scenario s;
            s.n = n;
            s.initial = random_placement(n, 20 + static_cast<std::uint64_t>(n), {-10, -10, 10, 10});
            s.law.mode = Mode::line;
            s.law.c = 1.0;
            s.law.spec = ShapeSpec::line(n);
            s.integrator = {0.01, std::ceil(45.0 / lambda), Method::rk4};
            s.record_every = 10;
            const Trajectory traj = run(s);

            const MetricFrame& last = traj.metrics.back();
            const auto [lo, hi] = std::minmax_element(last.spacing.begin(), last.spacing.end());
            const double spread = *hi - *lo;

            const double e0 = traj.e_theta_norm.front();
            std::vector<double> tt, ee;
            for (std::size_t i = 0; i < traj.size(); ++i) {
                const double rel = traj.e_theta_norm[i] / e0;
                if (rel < 1e-3 && rel > 1e-11) {
                    tt.push_back(traj.times[i]);
                    ee.push_back(traj.e_theta_norm[i]);
                }
            }
            const double slope = tt.size() > 2 ? log_slope(tt, ee) : 0.0;
            const double rel_err = std::abs(slope + s.law.c * lambda) / (s.law.c * lambda);
            const bool ok = last.collinearity_residual < 1e-8 && spread < 1e-8 && rel_err < 0.05;
            detail << "n=" << n << " residual " << fmt(last.collinearity_residual) << " spread " << fmt(spread)
                   << " slope " << fmt(slope) << " vs " << fmt(-lambda) << "; ";
            r.passed = r.passed && ok;
        }
        r.detail = detail.str();
        within_budget(r, 10.0, start);
    });
}

CriterionResult ratio_control() {
    return timed(4, "ratio control: r_k z_k = r_{k+1} z_{k+1}", [](CriterionResult& r) {
        const std::vector<double> ratios{1.0, 2.0, 1.0, 2.0};
        Scenario s;
        s.n = 5;
        s.initial = random_placement(5, 44, {-10, -10, 10, 10});
        s.law.mode = Mode::line;
        s.law.spec = ShapeSpec::line(5);
        s.law.spec.ratios = ratios;
        s.integrator = {0.01, 120.0, Method::rk4};
        s.record_every = 1000;
        const Trajectory traj = run(s);
        const Topology t(5);
        const Stacked z = relative_positions(t, traj.positions.back());
        double worst_err = 0.0;
        double worst_ratio = 0.0;
        for (Eigen::Index k = 0; k < 3; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            worst_err = std::max(worst_err, (ratios[uk] * block(z, k) - ratios[uk + 1] * block(z, k + 1)).norm());
            const double realized = block(z, k).norm() / block(z, k + 1).norm();
            worst_ratio = std::max(worst_ratio, std::abs(realized - ratios[uk + 1] / ratios[uk]));
        }
        r.passed = worst_err < 1e-8 && worst_ratio < 1e-6;
        r.detail = "max |r_k z_k - r_{k+1} z_{k+1}| " + fmt(worst_err) + ", max ratio deviation " + fmt(worst_ratio);
    });
}

CriterionResult hexagon_experiment(const std::filesystem::path& fixtures) {
    return timed(5, "hexagon: sides 10 by t=150, sides 30 by t=300", [&](CriterionResult& r) {
        const auto start = std::chrono::steady_clock::now();
        const Scenario s = hexagon_scenario(fixtures);
        const Trajectory traj = run(s);
        if (traj.diverged) {
            r.detail = "run diverged";
            return;
        }
        const auto check = [&](double t, double side, double& side_dev, double& angle_dev) {
            const MetricFrame& m = traj.metrics[sample_at(traj, t)];
            side_dev = std::abs(m.closing_distance - side);
            for (double x : m.spacing) side_dev = std::max(side_dev, std::abs(x - side));
            angle_dev = 0.0;
            for (double a : m.angles) angle_dev = std::max(angle_dev, std::abs(a - pi / 3.0));
            if (m.angles.size() != 4 || m.spacing.size() != 5) side_dev = angle_dev = 1e300;
        };
        double side150 = 0, angle150 = 0, side300 = 0, angle300 = 0;
        check(150.0, 10.0, side150, angle150);
        check(300.0, 30.0, side300, angle300);
        r.passed = side150 < 1e-3 && angle150 < 1e-4 && side300 < 1e-3;
        r.detail = "t=150 side dev " + fmt(side150) + ", angle dev " + fmt(angle150) + "; t=300 side dev " +
                   fmt(side300) + ", angle dev " + fmt(angle300);
        within_budget(r, 10.0, start);
    });
}

CriterionResult spin_about_centroid(const std::filesystem::path& fixtures) {
    return timed(6, "hexagon tail is a rigid spin about a fixed centroid", [&](CriterionResult& r) {
        const Scenario s = hexagon_scenario(fixtures);
        const Trajectory traj = run(s);
        const double tail_start = 250.0;
        const ControlLaw law = s.law_at(tail_start);

        std::vector<double> times, omegas;
        double worst_residual = 0.0, worst_translation = 0.0, drift = 0.0;
        std::optional<Eigen::Vector2d> c0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.times[i] < tail_start) continue;
            const Stacked& p = traj.positions[i];
            const Stacked u = evaluate(law, p);
            const RigidFit fit = fit_rigid_motion(p, u);
            const Eigen::Vector2d c = centroid(p);
            double radius = 0.0;
            for (Eigen::Index k = 0; k < s.n; ++k) radius += (block(p, k) - c).norm();
            radius /= s.n;
            worst_residual = std::max(worst_residual, fit.residual / u.norm());
            worst_translation = std::max(worst_translation, fit.v.norm() / (std::abs(fit.omega) * radius));
            if (!c0) c0 = c;
            drift = std::max(drift, (c - *c0).norm());
            times.push_back(traj.times[i]);
            omegas.push_back(fit.omega);
        }
        constexpr int windows = 5;
        std::vector<double> window_omega(windows, 0.0);
        std::vector<int> window_count(windows, 0);
        const double span = traj.times.back() - tail_start;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const int w = std::min(windows - 1, static_cast<int>((times[i] - tail_start) / span * windows));
            window_omega[static_cast<std::size_t>(w)] += omegas[i];
            ++window_count[static_cast<std::size_t>(w)];
        }
        double mean = 0.0;
        for (int w = 0; w < windows; ++w) {
            window_omega[static_cast<std::size_t>(w)] /= std::max(1, window_count[static_cast<std::size_t>(w)]);
            mean += window_omega[static_cast<std::size_t>(w)] / windows;
        }
        double var = 0.0;
        for (double o : window_omega) var += (o - mean) * (o - mean) / windows;
        const double cv = std::sqrt(var) / std::abs(mean);
        r.passed = !times.empty() && worst_residual < 1e-4 && worst_translation < 1e-4 && cv < 0.01 && drift < 1e-3;
        r.detail = "residual/|u| " + fmt(worst_residual) + ", |v|/(omega R) " + fmt(worst_translation) +
                   ", omega " + fmt(mean) + " cv " + fmt(cv) + ", centroid drift " + fmt(drift);
    });
}

CriterionResult error_dynamics_consistency() {
    return timed(7, "finite-difference de/dt matches -c A e at first order", [](CriterionResult& r) {
        constexpr int n = 6;
        const ControlLaw law = polygon_law(n, pi / 3.0);
        const Topology t(n);
        const Eigen::MatrixXd a = assemble_A(law.spec, n);
        const Stacked p0 = random_placement(n, 77, {-5, -5, 5, 5});
        constexpr double t0 = 1.0;

        std::vector<double> errors;
        for (double h : {1e-2, 5e-3, 2.5e-3}) {
            Scenario s;
            s.n = n;
            s.initial = p0;
            s.law = law;
            s.integrator = {h, t0 + h, Method::rk4};
            const Trajectory traj = run(s);
            const std::size_t last = traj.size() - 1;
            const Stacked e_now = deployment_error(traj.positions[last - 1], t, law).e_theta;
            const Stacked e_next = deployment_error(traj.positions[last], t, law).e_theta;
            const double h_used = traj.times[last] - traj.times[last - 1];
            const Stacked fd = (e_next - e_now) / h_used;
            const Stacked model = -law.c * a * e_now;
            errors.push_back((fd - model).norm() / model.norm());
        }
        const double order1 = std::log2(errors[0] / errors[1]);
        const double order2 = std::log2(errors[1] / errors[2]);
        r.passed = order1 >= 0.9 && order2 >= 0.9;
        r.detail = "relative errors " + fmt(errors[0]) + ", " + fmt(errors[1]) + ", " + fmt(errors[2]) +
                   "; observed orders " + fmt(order1) + ", " + fmt(order2);
    });
}

CriterionResult scale_law_sign(const ScaleField& field) {
    return timed(8, "scale law descends: distance moves monotonically to d", [&](CriterionResult& r) {
        constexpr double d = 2.0;
        constexpr double k_d = 1.0;
        constexpr double dt = 1e-3;
        constexpr int steps = 3000;
        const VelocityField u = [&](const Stacked& p) { return field(p, d, k_d); };
        r.passed = true;
        std::ostringstream detail;
        for (double start_distance : {1.0, 3.0}) {
            Stacked p(4);
            p << 0.3, -0.2, 0.3 + start_distance, -0.2;
            const Eigen::Vector2d mid0 = 0.5 * (block(p, 0) + block(p, 1));
            const double direction = start_distance < d ? 1.0 : -1.0;
            double previous = start_distance;
            bool monotone = true;
            double drift = 0.0;
            try {
                for (int k = 0; k < steps; ++k) {
                    p = step(p, u, dt, Method::rk4, k * dt);
                    const double dist = (block(p, 1) - block(p, 0)).norm();
                    const double change = direction * (dist - previous);
                    // Strict progress is required until the gap reaches round-off, and no overshoot.
                    if (std::abs(previous - d) > 1e-12 && !(change > 0.0)) monotone = false;
                    if (direction * (dist - d) > 1e-12) monotone = false;
                    previous = dist;
                    drift = std::max(drift, (0.5 * (block(p, 0) + block(p, 1)) - mid0).norm());
                }
            } catch (const IntegrationDiverged&) {
                monotone = false;
                previous = std::numeric_limits<double>::infinity();
            }
            const bool ok = monotone && std::abs(previous - d) <= 1e-6 && drift <= 1e-9;
            detail << "start " << start_distance << ": final " << format_real(previous)
                   << (monotone ? " monotone" : " NOT monotone") << ", midpoint drift " << fmt(drift) << "; ";
            r.passed = r.passed && ok;
        }
        r.detail = detail.str();
    });
}

CriterionResult reduction_identities() {
    return timed(9, "reduction identities hold bitwise", [](CriterionResult& r) {
        std::mt19937_64 gen(2024);
        std::uniform_real_distribution<double> coord(-10.0, 10.0);
        std::uniform_int_distribution<int> agents(3, 12);
        std::uniform_real_distribution<double> angle(-pi / 2, pi / 2);
        std::uniform_real_distribution<double> gain(0.1, 5.0);
        const auto positions = [&](int n) {
            Stacked p(2 * n);
            for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = coord(gen);
            return p;
        };
        int failures_line = 0, failures_steer = 0, failures_mismatch = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = agents(gen);
            const Topology t(n);
            const Stacked z = relative_positions(t, positions(n));
            const Stacked a = polygon_error(z, t, ShapeSpec::line(n)).e_theta;
            const Stacked b = line_error(z, t).e_theta;
            failures_line += (a.array() == b.array()).all() ? 0 : 1;
        }
        for (int trial = 0; trial < 100; ++trial) {
            const int n = agents(gen);
            ControlLaw law;
            law.mode = Mode::steered;
            law.c = gain(gen);
            law.k_d = gain(gen);
            law.spec = ShapeSpec::uniform(n, angle(gen));
            law.spec.closing_distance = gain(gen);
            law.motion = MotionParams::uniform(n, 0.0);
            const Stacked p = positions(n);
            const Stacked steered = steering_law(p, law);
            ControlLaw deploy = law;
            deploy.mode = Mode::polygon;
            const Stacked sum = deployment_law(p, deploy) + scale_field(p, *law.spec.closing_distance, law.k_d);
            failures_steer += (steered.array() == sum.array()).all() ? 0 : 1;
        }
        // Power-of-two gains: c z1 - c z2 and c (z1 - z2) then round identically.
        std::uniform_int_distribution<int> exponent(-4, 4);
        for (int trial = 0; trial < 100; ++trial) {
            const double c = std::ldexp(1.0, exponent(gen));
            const Stacked p = positions(3);
            const Stacked m = mismatched_law_3(p, 1.0, 1.0, c, c, DistanceTerms::drop);
            ControlLaw line;
            line.mode = Mode::line;
            line.c = c;
            line.spec = ShapeSpec::line(3);
            const Stacked ref = deployment_law(p, line);
            failures_mismatch += (m.array() == ref.array()).all() ? 0 : 1;
        }
        r.passed = failures_line == 0 && failures_steer == 0 && failures_mismatch == 0;
        r.detail = "mismatches: theta=0 " + std::to_string(failures_line) + "/100, zero-mu steering " +
                   std::to_string(failures_steer) + "/100, mismatch law " + std::to_string(failures_mismatch) +
                   "/100";
    });
}

CriterionResult determinism(const std::filesystem::path& fixtures) {
    return timed(10, "hexagon scenario CSV is byte-identical across runs", [&](CriterionResult& r) {
        std::ostringstream first, second;
        write_csv(run(hexagon_scenario(fixtures)), first);
        write_csv(run(hexagon_scenario(fixtures)), second);
        r.passed = !first.str().empty() && first.str() == second.str();
        r.detail = std::to_string(first.str().size()) + " bytes per run";
    });
}

std::vector<CriterionResult> run_all(const Config& config) {
    if (!std::filesystem::exists(config.fixtures / "hexagon.json")) {
        throw MissingFixture("missing fixture " + (config.fixtures / "hexagon.json").string());
    }
    const ScaleField field = config.scale_field
                                 ? config.scale_field
                                 : ScaleField([](const Stacked& p, double d, double k_d) { return scale_field(p, d, k_d); });
    return {eigenvalue_oracle(),
            stability_bound_both_directions(),
            line_deployment(),
            ratio_control(),
            hexagon_experiment(config.fixtures),
            spin_about_centroid(config.fixtures),
            error_dynamics_consistency(),
            scale_law_sign(field),
            reduction_identities(),
            determinism(config.fixtures)};
}

}  // namespace polyform::acceptance
