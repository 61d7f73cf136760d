#pragma once

#include "polyform/geometry.hpp"
#include "polyform/topology.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace polyform::test {

inline Stacked stacked(std::initializer_list<double> xs) {
    Stacked v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline Stacked random_stacked(std::mt19937_64& gen, Eigen::Index size, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Stacked v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = u(gen);
    return v;
}

/// Chain whose relative vectors turn by `theta` each step: z_{k+1} = W(theta) z_k, |z_k| = side.
inline Stacked turning_chain(int n, double theta, double side, double heading = 0.0) {
    Stacked p(2 * n);
    Eigen::Vector2d at(0.0, 0.0);
    set_block(p, 0, at);
    for (int k = 0; k < n - 1; ++k) {
        const double a = heading + k * theta;
        const Eigen::Vector2d z(side * std::cos(a), side * std::sin(a));
        at -= z;  // z_k = p_k - p_{k+1}
        set_block(p, k + 1, at);
    }
    return p;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace polyform::test
