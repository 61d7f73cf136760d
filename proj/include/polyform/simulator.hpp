#pragma once

#include "polyform/control.hpp"
#include "polyform/topology.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace polyform {

using VelocityField = std::function<Stacked(const Stacked&)>;

enum class Method { euler, rk4 };

/// Non-finite (or overflowing) state reached during integration.
class IntegrationDiverged : public std::runtime_error {
public:
    explicit IntegrationDiverged(double time);
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// States whose max-norm exceeds this are treated as diverged.
inline constexpr double divergence_limit = 1e100;

/// One explicit Euler or classical RK4 step of dp/dt = u(p) from time t. A divergence error carries t + dt.
Stacked step(const Stacked& p, const VelocityField& u, double dt, Method method, double t = 0.0);
Stacked step(const Stacked& p, const ControlLaw& law, double dt, Method method, double t = 0.0);

struct Box {
    double xmin = -1.0;
    double ymin = -1.0;
    double xmax = 1.0;
    double ymax = 1.0;
};

/// Uniform placement in `box` from a 64-bit seed. Generator: std::mt19937_64 seeded with `seed`;
/// each draw maps to (word >> 11) * 2^-53 in [0, 1); draws are taken in the order x1, y1, x2, y2, ...
Stacked random_placement(int n, std::uint64_t seed, const Box& box);

struct IntegratorSettings {
    double dt = 0.005;
    double t_end = 10.0;
    Method method = Method::rk4;
};

/// Parameter changes applied by a scheduled event. Positions are never patched.
struct ParameterPatch {
    std::optional<double> d;
    std::optional<double> c;
    std::optional<double> k_d;
    std::optional<std::vector<double>> theta;
    std::optional<std::vector<double>> ratios;
    std::optional<MotionParams> motion;
    std::optional<std::array<double, 2>> mismatches;

    void apply(ControlLaw& law) const;
};

struct Event {
    double time = 0.0;
    ParameterPatch patch;
};

struct Scenario {
    int n = 3;
    Stacked initial;
    ControlLaw law;
    IntegratorSettings integrator;
    std::vector<Event> events;
    int record_every = 1;

    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;
    /// The law in force at time t, after every event due by then.
    ControlLaw law_at(double t) const;
};

struct RigidFit {
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    double omega = 0.0;
    double residual = 0.0;
};

struct LineFit {
    double residual = 0.0;
    /// All agents coincide, no line is defined.
    bool degenerate = false;
};

struct MetricFrame {
    double collinearity_residual = 0.0;
    std::vector<double> spacing;
    /// Signed turn angle from z_k to z_{k+1}; NaN where an edge has zero length.
    std::vector<double> angles;
    double closing_distance = 0.0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    std::optional<RigidFit> rigid_fit;
};

struct Trajectory {
    int n = 0;
    std::vector<double> times;
    std::vector<Stacked> positions;
    std::vector<double> e_theta_norm;
    /// Signed closing-distance error, present only when the law controls the closing edge.
    std::vector<std::optional<double>> e_d;
    std::vector<MetricFrame> metrics;
    bool diverged = false;
    std::optional<double> diverged_at;

    std::size_t size() const noexcept { return times.size(); }
};

/// Maximum orthogonal distance from the agents to their total-least-squares line.
LineFit collinearity_residual(const Stacked& p);

/// Signed angle from z_k to z_{k+1} in (-pi, pi]; nullopt where either vector has zero length.
std::vector<std::optional<double>> realized_angles(const Stacked& z);

/// Least-squares fit u_i ~ v + omega S (p_i - centroid), S the quarter turn.
/// Throws std::domain_error when all agents coincide.
RigidFit fit_rigid_motion(const Stacked& p, const Stacked& u);

Eigen::Vector2d centroid(const Stacked& p);

/// Norm of the feedback error a law sees at p: |e_theta| for chain modes, the distance-error
/// vector for the three-agent gradient modes.
double feedback_error_norm(const ControlLaw& law, const Stacked& p);

MetricFrame measure(const ControlLaw& law, const Stacked& p);

Trajectory run(const Scenario& s);

/// Runs independent scenarios on up to `threads` workers (0 = sequential). Output order matches input.
std::vector<Trajectory> run_batch(const std::vector<Scenario>& scenarios, unsigned threads);

/// First sample time after which every error stays below tol through the end; nullopt if never
/// or if the run diverged.
std::optional<double> convergence_time(const Trajectory& traj, double tol = 1e-6);

}  // namespace polyform
