#include "polyform/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polyform {

Eigen::Vector2d Rotation2::apply(const Eigen::Vector2d& v) const {
    const double c = matrix(0, 0);
    const double s = matrix(1, 0);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Eigen::Vector2d Rotation2::apply_transpose(const Eigen::Vector2d& v) const {
    const double c = matrix(0, 0);
    const double s = matrix(1, 0);
    return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Rotation2 rot(double alpha) {
    if (!std::isfinite(alpha)) {
        throw std::invalid_argument("rotation angle must be finite");
    }
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    Rotation2 r;
    r.angle = alpha;
    r.matrix << c, -s, s, c;
    return r;
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    double w = std::remainder(a, 2.0 * pi);
    if (w <= -pi) {
        w += 2.0 * pi;
    }
    return w;
}

ShapeSpec ShapeSpec::line(int n) { return uniform(n, 0.0); }

ShapeSpec ShapeSpec::uniform(int n, double theta_star) {
    if (n < 3) {
        throw std::domain_error("at least three agents required");
    }
    ShapeSpec s;
    s.theta.assign(static_cast<std::size_t>(n - 2), theta_star);
    s.ratios.assign(static_cast<std::size_t>(n - 1), 1.0);
    return s;
}

bool ShapeSpec::unit_ratios() const {
    for (double r : ratios) {
        if (r != 1.0) {
            return false;
        }
    }
    return true;
}

bool ShapeSpec::uniform_angles() const {
    for (double a : theta) {
        if (a != theta.front()) {
            return false;
        }
    }
    return true;
}

void ShapeSpec::validate(int n) const {
    constexpr double pi = std::numbers::pi;
    if (n < 3) {
        throw std::domain_error("at least three agents required");
    }
    if (theta.size() != static_cast<std::size_t>(n - 2)) {
        throw std::invalid_argument("theta must hold n-2 = " + std::to_string(n - 2) + " angles");
    }
    if (ratios.size() != static_cast<std::size_t>(n - 1)) {
        throw std::invalid_argument("ratios must hold n-1 = " + std::to_string(n - 1) + " values");
    }
    for (double a : theta) {
        if (!(a > -pi && a <= pi)) {
            throw std::invalid_argument("theta entries must lie in (-pi, pi]");
        }
    }
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("ratios must be positive");
        }
    }
    if (closing_distance && !(*closing_distance > 0.0 && std::isfinite(*closing_distance))) {
        throw std::invalid_argument("closing distance must be positive");
    }
}

namespace {

void check_z(const Stacked& z, const Topology& t) {
    if (z.size() != 2 * t.edge_count()) {
        throw std::invalid_argument("relative positions must hold " + std::to_string(2 * t.edge_count()) +
                                    " entries, got " + std::to_string(z.size()));
    }
}

void check_ratios(const std::vector<double>& ratios, const Topology& t) {
    if (ratios.size() != static_cast<std::size_t>(t.edge_count())) {
        throw std::invalid_argument("ratios must hold n-1 values");
    }
    for (double r : ratios) {
        if (!(r > 0.0)) {
            throw std::invalid_argument("ratios must be positive");
        }
    }
}

}  // namespace

ErrorSignal line_error(const Stacked& z, const Topology& t) {
    check_z(z, t);
    ErrorSignal out{Stacked(2 * t.angle_count()), std::nullopt};
    for (Eigen::Index k = 0; k < t.angle_count(); ++k) {
        set_block(out.e_theta, k, block(z, k) - block(z, k + 1));
    }
    return out;
}

ErrorSignal scaled_error(const Stacked& z, const Topology& t, const std::vector<double>& ratios) {
    check_z(z, t);
    check_ratios(ratios, t);
    ErrorSignal out{Stacked(2 * t.angle_count()), std::nullopt};
    for (Eigen::Index k = 0; k < t.angle_count(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        set_block(out.e_theta, k, ratios[uk] * block(z, k) - ratios[uk + 1] * block(z, k + 1));
    }
    return out;
}

ErrorSignal polygon_error(const Stacked& z, const Topology& t, const ShapeSpec& spec) {
    check_z(z, t);
    if (spec.theta.size() != static_cast<std::size_t>(t.angle_count())) {
        throw std::invalid_argument("theta must hold n-2 angles");
    }
    check_ratios(spec.ratios, t);
    ErrorSignal out{Stacked(2 * t.angle_count()), std::nullopt};
    for (Eigen::Index k = 0; k < t.angle_count(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const Rotation2 w = rot(spec.theta[uk] / 2.0);
        const Eigen::Vector2d a = spec.ratios[uk] * block(z, k);
        const Eigen::Vector2d b = spec.ratios[uk + 1] * block(z, k + 1);
        set_block(out.e_theta, k, w.apply(a) - w.apply_transpose(b));
    }
    return out;
}

Eigen::MatrixXd build_BW(const ShapeSpec& spec, int n) {
    const Topology t(n);
    if (spec.theta.size() != static_cast<std::size_t>(t.angle_count())) {
        throw std::invalid_argument("theta must hold n-2 angles");
    }
    Eigen::MatrixXd bw = Eigen::MatrixXd::Zero(2 * t.edge_count(), 2 * t.angle_count());
    for (Eigen::Index k = 0; k < t.angle_count(); ++k) {
        const Eigen::Matrix2d w = rot(spec.theta[static_cast<std::size_t>(k)] / 2.0).matrix;
        // Transposed placement so that B_W^T z reproduces polygon_error term by term.
        bw.block<2, 2>(2 * k, 2 * k) = w.transpose();
        bw.block<2, 2>(2 * (k + 1), 2 * k) = -w;
    }
    return bw;
}

ClosingError closing_distance_error(const Stacked& p, double d) {
    if (!(d > 0.0)) {
        throw std::invalid_argument("closing distance must be positive");
    }
    if (p.size() < 4 || p.size() % 2 != 0) {
        throw std::invalid_argument("positions must hold at least two agents");
    }
    const Eigen::Vector2d gap = block(p, p.size() / 2 - 1) - block(p, 0);
    const double sq = gap.squaredNorm();
    return {std::sqrt(sq) - d, sq - d * d};
}

}  // namespace polyform
