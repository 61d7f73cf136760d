#pragma once

#include "polyform/geometry.hpp"
#include "polyform/topology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

namespace polyform {

enum class Mode { gradient3, mismatched3, line, polygon, closed_polygon, steered };

std::string_view to_string(Mode m);
/// Throws std::invalid_argument for an unknown name.
Mode parse_mode(std::string_view name);

/// Per-agent coefficients on the two relative vectors an agent can sense.
/// Agent 1 uses (p_n - p_1, z_1), interior agent i uses (z_{i-1}, z_i), agent n uses (p_n - p_1, z_{n-1}).
struct MotionParams {
    std::vector<Eigen::Vector2d> mu;

    static MotionParams uniform(int n, double value);
};

/// Optional position pinning of the chain ends, k_p (target - p).
struct EndpointAnchor {
    double k_p = 0.0;
    Eigen::Vector2d first = Eigen::Vector2d::Zero();
    Eigen::Vector2d last = Eigen::Vector2d::Zero();
};

struct ControlLaw {
    Mode mode = Mode::line;
    double c = 1.0;
    double k_d = 1.0;
    ShapeSpec spec;
    /// Desired edge lengths d_1, d_2 for the three-agent gradient modes.
    std::array<double, 2> distances{1.0, 1.0};
    /// Edge mismatches mu_1, mu_2 for mode mismatched3.
    std::array<double, 2> mismatches{0.0, 0.0};
    std::optional<MotionParams> motion;
    /// Scale control by agent 1 alone (agent n holds still).
    bool pin_last = false;
    std::optional<EndpointAnchor> anchor;

    /// Throws std::invalid_argument describing the first violated requirement.
    void validate(int n) const;
    /// True when the law drives |p_1 - p_n| towards spec.closing_distance.
    bool controls_closing_edge() const { return mode == Mode::closed_polygon || mode == Mode::steered; }
};

Stacked gradient_law_3(const Stacked& p, double d1, double d2);

enum class DistanceTerms { keep, drop };

/// Gradient law plus mu_1 z_1 - mu_2 z_2 at agent 2. With DistanceTerms::drop only the mismatch
/// term remains.
Stacked mismatched_law_3(const Stacked& p, double d1, double d2, double mu1, double mu2,
                         DistanceTerms terms = DistanceTerms::keep);

/// The error signal a law feeds back: line (or scaled) error in mode line, rotational error otherwise.
ErrorSignal deployment_error(const Stacked& p, const Topology& t, const ControlLaw& law);

/// Endpoints hold still, interior agent i moves with c e_{i-1}.
Stacked deployment_law(const Stacked& p, const ControlLaw& law);

struct ScaleVelocities {
    Eigen::Vector2d first = Eigen::Vector2d::Zero();
    Eigen::Vector2d last = Eigen::Vector2d::Zero();
    /// Set when p_1 = p_n but the distance error is nonzero.
    bool degenerate = false;
};

/// Gradient descent on (|p_n - p_1|^2 - d^2)^2 / 4 for the chain ends.
ScaleVelocities scale_law(const Stacked& p, double d, double k_d, bool pin_last = false);

/// scale_law spread onto a full stacked velocity with zeros on interior agents.
Stacked scale_field(const Stacked& p, double d, double k_d, bool pin_last = false);

Stacked steering_law(const Stacked& p, const ControlLaw& law);

/// Dispatches on law.mode and adds the endpoint anchor when present.
Stacked evaluate(const ControlLaw& law, const Stacked& p);

}  // namespace polyform
