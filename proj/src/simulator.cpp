#include "polyform/simulator.hpp"

#include "polyform/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>

namespace polyform {

IntegrationDiverged::IntegrationDiverged(double time)
    : std::runtime_error("integration diverged at t = " + std::to_string(time)), time_(time) {}

namespace {

void check_finite(const Stacked& p, double t) {
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > divergence_limit) {
        throw IntegrationDiverged(t);
    }
}

}  // namespace

Stacked step(const Stacked& p, const VelocityField& u, double dt, Method method, double t) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    Stacked next;
    if (method == Method::euler) {
        next = p + dt * u(p);
    } else {
        const Stacked k1 = u(p);
        const Stacked k2 = u(p + 0.5 * dt * k1);
        const Stacked k3 = u(p + 0.5 * dt * k2);
        const Stacked k4 = u(p + dt * k3);
        next = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check_finite(next, t + dt);
    return next;
}

Stacked step(const Stacked& p, const ControlLaw& law, double dt, Method method, double t) {
    return step(p, [&law](const Stacked& q) { return evaluate(law, q); }, dt, method, t);
}

Stacked random_placement(int n, std::uint64_t seed, const Box& box) {
    if (n < 1) {
        throw std::invalid_argument("agent count must be positive");
    }
    std::mt19937_64 gen(seed);
    const auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    Stacked p(2 * n);
    for (int i = 0; i < n; ++i) {
        p(2 * i) = box.xmin + (box.xmax - box.xmin) * unit();
        p(2 * i + 1) = box.ymin + (box.ymax - box.ymin) * unit();
    }
    return p;
}

void ParameterPatch::apply(ControlLaw& law) const {
    if (d) law.spec.closing_distance = *d;
    if (c) law.c = *c;
    if (k_d) law.k_d = *k_d;
    if (theta) law.spec.theta = *theta;
    if (ratios) law.spec.ratios = *ratios;
    if (motion) law.motion = *motion;
    if (mismatches) law.mismatches = *mismatches;
}

void Scenario::validate() const {
    if (n < 3) {
        throw std::invalid_argument("at least three agents required");
    }
    if (initial.size() != 2 * n || !initial.allFinite()) {
        throw std::invalid_argument("initial positions must hold n finite 2D points");
    }
    if (!(integrator.dt > 0.0) || !std::isfinite(integrator.dt)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (!(integrator.t_end > 0.0) || !std::isfinite(integrator.t_end)) {
        throw std::invalid_argument("t_end must be positive");
    }
    if (record_every < 1) {
        throw std::invalid_argument("output stride must be at least 1");
    }
    law.validate(n);
    ControlLaw patched = law;
    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& e : events) {
        if (!(e.time > previous)) {
            throw std::invalid_argument("event times must be strictly increasing");
        }
        if (e.time < 0.0 || e.time > integrator.t_end) {
            throw std::invalid_argument("event times must lie within [0, t_end]");
        }
        previous = e.time;
        e.patch.apply(patched);
        patched.validate(n);
    }
}

namespace {

bool event_due(const Event& e, double t) { return t >= e.time - 1e-9 * std::max(1.0, e.time); }

}  // namespace

ControlLaw Scenario::law_at(double t) const {
    ControlLaw out = law;
    for (const auto& e : events) {
        if (!event_due(e, t)) {
            break;
        }
        e.patch.apply(out);
    }
    return out;
}

Eigen::Vector2d centroid(const Stacked& p) {
    const Eigen::Index n = p.size() / 2;
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
        c += block(p, i);
    }
    return c / static_cast<double>(n);
}

LineFit collinearity_residual(const Stacked& p) {
    const Eigen::Index n = p.size() / 2;
    if (n < 2) {
        throw std::invalid_argument("collinearity needs at least two agents");
    }
    const Eigen::Vector2d c = centroid(p);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector2d q = block(p, i) - c;
        sxx += q.x() * q.x();
        syy += q.y() * q.y();
        sxy += q.x() * q.y();
    }
    if (sxx == 0.0 && syy == 0.0) {
        return {0.0, true};
    }
    // Principal axis of the scatter matrix minimizes the summed squared orthogonal distance.
    const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Eigen::Vector2d normal(-std::sin(phi), std::cos(phi));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(normal.dot(block(p, i) - c)));
    }
    return {worst, false};
}

std::vector<std::optional<double>> realized_angles(const Stacked& z) {
    const Eigen::Index m = z.size() / 2;
    std::vector<std::optional<double>> out;
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
        const Eigen::Vector2d a = block(z, k);
        const Eigen::Vector2d b = block(z, k + 1);
        if (a.isZero(0.0) || b.isZero(0.0)) {
            out.emplace_back(std::nullopt);
            continue;
        }
        double ang = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
        if (ang <= -std::numbers::pi) {
            ang = std::numbers::pi;
        }
        out.emplace_back(ang);
    }
    return out;
}

RigidFit fit_rigid_motion(const Stacked& p, const Stacked& u) {
    const Eigen::Index n = p.size() / 2;
    if (n < 2 || u.size() != p.size()) {
        throw std::invalid_argument("rigid fit needs at least two agents and matching velocities");
    }
    const Eigen::Vector2d c = centroid(p);
    RigidFit fit;
    double spread = 0.0;
    double moment = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector2d q = block(p, i) - c;
        const Eigen::Vector2d sq(-q.y(), q.x());
        fit.v += block(u, i);
        spread += q.squaredNorm();
        moment += sq.dot(block(u, i));
    }
    if (spread == 0.0) {
        throw std::domain_error("rigid fit undefined for coincident agents");
    }
    fit.v /= static_cast<double>(n);
    fit.omega = moment / spread;
    double misfit = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector2d q = block(p, i) - c;
        const Eigen::Vector2d predicted = fit.v + fit.omega * Eigen::Vector2d(-q.y(), q.x());
        misfit += (block(u, i) - predicted).squaredNorm();
    }
    fit.residual = std::sqrt(misfit / static_cast<double>(n));
    return fit;
}

double feedback_error_norm(const ControlLaw& law, const Stacked& p) {
    if (law.mode == Mode::gradient3 || law.mode == Mode::mismatched3) {
        const Eigen::Vector2d z1 = block(p, 0) - block(p, 1);
        const Eigen::Vector2d z2 = block(p, 1) - block(p, 2);
        return std::hypot(z1.squaredNorm() - law.distances[0] * law.distances[0],
                          z2.squaredNorm() - law.distances[1] * law.distances[1]);
    }
    const Topology t(static_cast<int>(p.size() / 2));
    return deployment_error(p, t, law).e_theta.norm();
}

MetricFrame measure(const ControlLaw& law, const Stacked& p) {
    const Eigen::Index n = p.size() / 2;
    const Topology t(static_cast<int>(n));
    const Stacked z = relative_positions(t, p);
    MetricFrame m;
    m.collinearity_residual = collinearity_residual(p).residual;
    for (Eigen::Index k = 0; k < t.edge_count(); ++k) {
        m.spacing.push_back(block(z, k).norm());
    }
    for (const auto& a : realized_angles(z)) {
        m.angles.push_back(a.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    m.closing_distance = (block(p, n - 1) - block(p, 0)).norm();
    m.centroid = centroid(p);
    try {
        m.rigid_fit = fit_rigid_motion(p, evaluate(law, p));
    } catch (const std::domain_error&) {
        m.rigid_fit = std::nullopt;
    }
    return m;
}

namespace {

void record(Trajectory& traj, const ControlLaw& law, double t, const Stacked& p) {
    traj.times.push_back(t);
    traj.positions.push_back(p);
    traj.e_theta_norm.push_back(feedback_error_norm(law, p));
    if (law.controls_closing_edge()) {
        traj.e_d.emplace_back(closing_distance_error(p, *law.spec.closing_distance).e_d);
    } else {
        traj.e_d.emplace_back(std::nullopt);
    }
    traj.metrics.push_back(measure(law, p));
}

}  // namespace

Trajectory run(const Scenario& s) {
    s.validate();
    const double dt = s.integrator.dt;
    const double t_end = s.integrator.t_end;
    const auto steps = static_cast<long long>(std::ceil(t_end / dt - 1e-9));

    ControlLaw law = s.law;
    Trajectory traj;
    traj.n = s.n;
    Stacked p = s.initial;
    std::size_t next_event = 0;
    const auto apply_due_events = [&](double t) {
        // An event fires at the first grid time at or after its own time, up to round-off.
        while (next_event < s.events.size() && event_due(s.events[next_event], t)) {
            s.events[next_event].patch.apply(law);
            ++next_event;
        }
    };

    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        apply_due_events(t);
        if (k % s.record_every == 0) {
            record(traj, law, t, p);
        }
        const double h = (k == steps - 1) ? t_end - t : dt;
        try {
            p = step(p, law, h, s.integrator.method, t);
        } catch (const IntegrationDiverged& e) {
            traj.diverged = true;
            traj.diverged_at = e.time();
            return traj;
        }
    }
    apply_due_events(t_end);
    record(traj, law, t_end, p);
    return traj;
}

std::vector<Trajectory> run_batch(const std::vector<Scenario>& scenarios, unsigned threads) {
    std::vector<Trajectory> out(scenarios.size());
    if (threads <= 1 || scenarios.size() <= 1) {
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            out[i] = run(scenarios[i]);
        }
        return out;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(scenarios.size());
    const auto worker = [&] {
        for (std::size_t i = cursor++; i < scenarios.size(); i = cursor++) {
            try {
                out[i] = run(scenarios[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    const auto count = std::min<std::size_t>(threads, scenarios.size());
    for (std::size_t w = 0; w < count; ++w) {
        pool.emplace_back(worker);
    }
    pool.clear();
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

std::optional<double> convergence_time(const Trajectory& traj, double tol) {
    if (traj.diverged || traj.size() == 0) {
        return std::nullopt;
    }
    const auto below = [&](std::size_t i) {
        if (!(traj.e_theta_norm[i] < tol)) {
            return false;
        }
        return !traj.e_d[i] || std::abs(*traj.e_d[i]) < tol;
    };
    std::optional<double> since;
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (!below(i)) {
            break;
        }
        since = traj.times[i];
    }
    return since;
}

}  // namespace polyform
