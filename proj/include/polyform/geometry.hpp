#pragma once

#include "polyform/topology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace polyform {

/// Counterclockwise rotation by `angle` radians.
struct Rotation2 {
    double angle = 0.0;
    Eigen::Matrix2d matrix = Eigen::Matrix2d::Identity();

    Eigen::Vector2d apply(const Eigen::Vector2d& v) const;
    Eigen::Vector2d apply_transpose(const Eigen::Vector2d& v) const;
};

/// Throws std::invalid_argument for non-finite input.
Rotation2 rot(double alpha);

/// Desired polygon: n-2 turn angles from z_k to z_{k+1}, n-1 positive edge ratios and an
/// optional closing distance between agents 1 and n.
struct ShapeSpec {
    std::vector<double> theta;
    std::vector<double> ratios;
    std::optional<double> closing_distance;

    static ShapeSpec line(int n);
    static ShapeSpec uniform(int n, double theta_star);

    bool unit_ratios() const;
    /// True when every angle equals the first one (bitwise).
    bool uniform_angles() const;

    /// Checks sizes against n and the value ranges; throws std::invalid_argument.
    void validate(int n) const;
};

struct ErrorSignal {
    Stacked e_theta;
    std::optional<double> e_d;
};

/// e_k = z_k - z_{k+1}.
ErrorSignal line_error(const Stacked& z, const Topology& t);

/// e_k = r_k z_k - r_{k+1} z_{k+1}; throws on a nonpositive ratio.
ErrorSignal scaled_error(const Stacked& z, const Topology& t, const std::vector<double>& ratios);

/// e_k = W(theta_k / 2) r_k z_k - W(theta_k / 2)^T r_{k+1} z_{k+1}.
ErrorSignal polygon_error(const Stacked& z, const Topology& t, const ShapeSpec& spec);

/// 2(n-1) x 2(n-2) block matrix with W(theta_k/2)^T at (k,k) and -W(theta_k/2) at (k+1,k),
/// so that polygon_error = B_W^T z for unit ratios.
Eigen::MatrixXd build_BW(const ShapeSpec& spec, int n);

/// Distance error between the chain ends, in linear and quadratic form.
struct ClosingError {
    double e_d;  ///< |p_n - p_1| - d
    double e_q;  ///< |p_n - p_1|^2 - d^2
};

ClosingError closing_distance_error(const Stacked& p, double d);

/// Maps any angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace polyform
