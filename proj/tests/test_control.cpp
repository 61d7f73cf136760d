#include "polyform/control.hpp"
#include "polyform/simulator.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace polyform;
using polyform::test::stacked;
using std::numbers::pi;

namespace {

ControlLaw line_law(int n, double c = 1.0) {
    ControlLaw law;
    law.mode = Mode::line;
    law.c = c;
    law.spec = ShapeSpec::line(n);
    return law;
}

ControlLaw hexagon_law(double mu) {
    ControlLaw law;
    law.mode = Mode::steered;
    law.spec = ShapeSpec::uniform(6, pi / 3);
    law.spec.closing_distance = 10.0;
    law.motion = MotionParams::uniform(6, mu);
    return law;
}

bool bitwise_equal(const Stacked& a, const Stacked& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("mode names round trip") {
    for (Mode m : {Mode::gradient3, Mode::mismatched3, Mode::line, Mode::polygon, Mode::closed_polygon,
                   Mode::steered}) {
        CHECK(parse_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_mode("spiral"), std::invalid_argument);
}

TEST_CASE("three-agent gradient law") {
    CHECK(gradient_law_3(stacked({0, 0, 1, 0, 2, 0}), 1, 1).isZero(0.0));
    CHECK(gradient_law_3(stacked({0, 0, 2, 0, 4, 0}), 2, 2).isZero(0.0));

    const Stacked u = gradient_law_3(stacked({0, 0, 1, 0, 2, 0}), std::sqrt(2.0), 1);
    CHECK(u(0) == doctest::Approx(-1.0));
    CHECK(u(1) == 0.0);
    CHECK(u(2) == doctest::Approx(1.0));
    CHECK(u.tail(2).isZero(0.0));

    CHECK_THROWS_AS(gradient_law_3(Stacked::Zero(8), 1, 1), std::invalid_argument);
}

TEST_CASE("gradient law is the negative gradient of the distance potential") {
    // V = sum_k (|z_k|^2 - d_k^2)^2 / 4, central differences as the oracle.
    const auto potential = [](const Stacked& p, double d1, double d2) {
        const double e1 = (block(p, 0) - block(p, 1)).squaredNorm() - d1 * d1;
        const double e2 = (block(p, 1) - block(p, 2)).squaredNorm() - d2 * d2;
        return (e1 * e1 + e2 * e2) / 4.0;
    };
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Stacked p = test::random_stacked(gen, 6, 2.0);
        const Stacked u = gradient_law_3(p, 1.3, 0.7);
        for (Eigen::Index j = 0; j < 6; ++j) {
            const double h = 1e-6;
            Stacked plus = p, minus = p;
            plus(j) += h;
            minus(j) -= h;
            const double grad = (potential(plus, 1.3, 0.7) - potential(minus, 1.3, 0.7)) / (2 * h);
            CHECK(u(j) == doctest::Approx(-grad).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("mismatched law") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Stacked p = test::random_stacked(gen, 6);
        CHECK(bitwise_equal(mismatched_law_3(p, 1.5, 2.5, 0, 0), gradient_law_3(p, 1.5, 2.5)));
    }

    // Equal spacing satisfies both distances, so only the mismatch term acts at agent 2.
    const Stacked p = stacked({0, 0, 3, 4, 6, 8});
    const double c = 0.75;
    const Stacked u = mismatched_law_3(p, 5, 5, c, c);
    CHECK(u.isZero(0.0));

    const Stacked bent = stacked({0, 0, 3, 4, 8, 4});
    const Stacked v = mismatched_law_3(bent, 5, 5, c, c);
    CHECK(block(v, 0).isZero(0.0));
    CHECK(block(v, 2).isZero(0.0));
    CHECK(block(v, 1) == c * (Eigen::Vector2d(-3, -4) - Eigen::Vector2d(-5, 0)));
}

TEST_CASE("mismatch with distance terms dropped equals scaled line error at agent 2") {
    std::mt19937_64 gen(19);
    for (int trial = 0; trial < 50; ++trial) {
        const Stacked p = test::random_stacked(gen, 6);
        const double c = std::ldexp(1.0, trial % 7 - 3);
        const Stacked u = mismatched_law_3(p, 1, 1, c, c, DistanceTerms::drop);
        const Topology t(3);
        const Stacked e = line_error(relative_positions(t, p), t).e_theta;
        CHECK(bitwise_equal(block(u, 1), c * e));
        CHECK(block(u, 0).isZero(0.0));
        CHECK(block(u, 2).isZero(0.0));
    }
}

TEST_CASE("deployment law") {
    CHECK(deployment_law(stacked({0, 0, 1, 0, 2, 0, 3, 0}), line_law(4)).isZero(0.0));
    CHECK(deployment_law(stacked({0, 0, 1, 1, 2, 0}), line_law(3)) == stacked({0, 0, 0, -2, 0, 0}));
    CHECK(deployment_law(stacked({0, 0, 1, 1, 2, 0}), line_law(3, 2.5)) == stacked({0, 0, 0, -5, 0, 0}));

    ControlLaw hex;
    hex.mode = Mode::polygon;
    hex.spec = ShapeSpec::uniform(6, pi / 3);
    CHECK(deployment_law(test::turning_chain(6, pi / 3, 10.0, 0.4), hex).norm() < 1e-12);
    // A regular hexagon is not at rest for the wrong turn direction.
    CHECK(deployment_law(test::turning_chain(6, -pi / 3, 10.0), hex).norm() > 1.0);
}

TEST_CASE("deployment law structure") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> angle(-pi, pi);
    for (int n = 3; n <= 9; ++n) {
        ControlLaw law;
        law.mode = Mode::polygon;
        law.c = 1.75;
        law.spec = ShapeSpec::line(n);
        for (auto& a : law.spec.theta) a = angle(gen);
        const Stacked p = test::random_stacked(gen, 2 * n);
        const Stacked u = deployment_law(p, law);
        CHECK(block(u, 0).isZero(0.0));
        CHECK(block(u, n - 1).isZero(0.0));

        const Topology t(n);
        const Stacked e = polygon_error(relative_positions(t, p), t, law.spec).e_theta;
        Eigen::Vector2d total_u = Eigen::Vector2d::Zero(), total_e = Eigen::Vector2d::Zero();
        for (int i = 0; i < n; ++i) total_u += block(u, i);
        for (int k = 0; k < n - 2; ++k) total_e += block(e, k);
        CHECK((total_u - law.c * total_e).norm() < 1e-10);

        Stacked shifted = p;
        for (int i = 0; i < n; ++i) set_block(shifted, i, block(p, i) + Eigen::Vector2d(-4.0, 9.0));
        CHECK(test::max_abs(deployment_law(shifted, law) - u) < 1e-11);
    }
}

TEST_CASE("scaled deployment uses ratios in line mode") {
    ControlLaw law = line_law(3);
    law.spec.ratios = {2.0, 1.0};
    CHECK(deployment_law(stacked({0, 0, 1, 0, 3, 0}), law).isZero(0.0));
    CHECK_FALSE(deployment_law(stacked({0, 0, 1, 0, 2, 0}), law).isZero(0.0));
}

TEST_CASE("scale law") {
    const Stacked at_distance = stacked({0, 0, 5, 5, 3, 4});
    const ScaleVelocities still = scale_law(at_distance, 5.0, 1.0);
    CHECK(still.first.isZero(0.0));
    CHECK(still.last.isZero(0.0));
    CHECK_FALSE(still.degenerate);

    const ScaleVelocities apart = scale_law(stacked({0, 0, 1, 0}), std::sqrt(2.0), 1.0);
    CHECK(apart.first.x() == doctest::Approx(-1.0));
    CHECK(apart.first.y() == 0.0);
    CHECK(apart.last.x() == doctest::Approx(1.0));

    const ScaleVelocities together = scale_law(stacked({0, 0, 2, 0}), 1.0, 1.0);
    CHECK(together.first == Eigen::Vector2d(6, 0));
    CHECK(together.last == Eigen::Vector2d(-6, 0));

    const ScaleVelocities gained = scale_law(stacked({0, 0, 2, 0}), 1.0, 0.5);
    CHECK(gained.first == Eigen::Vector2d(3, 0));

    const ScaleVelocities coincident = scale_law(stacked({1, 1, 5, 5, 1, 1}), 2.0, 1.0);
    CHECK(coincident.degenerate);
    CHECK(coincident.first.isZero(0.0));
    CHECK(coincident.last.isZero(0.0));

    const ScaleVelocities pinned = scale_law(stacked({0, 0, 2, 0}), 1.0, 1.0, true);
    CHECK(pinned.first == Eigen::Vector2d(6, 0));
    CHECK(pinned.last.isZero(0.0));

    CHECK_THROWS_AS(scale_law(stacked({0, 0, 2, 0}), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("scale law descends the closing-edge potential") {
    // V = (|p_n - p_1|^2 - d^2)^2 / 4; u = -grad V up to the k_d factor.
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 20; ++trial) {
        const Stacked p = test::random_stacked(gen, 8, 3.0);
        const double d = 2.0;
        const Stacked u = scale_field(p, d, 1.0);
        const auto potential = [d](const Stacked& q) {
            const double e = (block(q, 3) - block(q, 0)).squaredNorm() - d * d;
            return e * e / 4.0;
        };
        for (Eigen::Index j = 0; j < 8; ++j) {
            const double h = 1e-6;
            Stacked plus = p, minus = p;
            plus(j) += h;
            minus(j) -= h;
            const double grad = (potential(plus) - potential(minus)) / (2 * h);
            CHECK(u(j) == doctest::Approx(-grad).epsilon(1e-6).scale(1.0));
        }
        const Eigen::Vector2d sum = block(u, 0) + block(u, 3);
        CHECK(sum.isZero(0.0));
        CHECK(u.segment(2, 4).isZero(0.0));
    }
}

TEST_CASE("steering law") {
    ControlLaw still = hexagon_law(0.0);
    CHECK(steering_law(test::turning_chain(6, pi / 3, 10.0, 1.1), still).norm() < 1e-11);

    const ControlLaw spin = hexagon_law(0.025);
    const Stacked p = test::turning_chain(6, pi / 3, 10.0, 0.3);
    const Stacked u = steering_law(p, spin);
    CHECK(u.norm() > 0.1);
    const RigidFit fit = fit_rigid_motion(p, u);
    CHECK(fit.residual < 1e-9);
    CHECK(fit.v.norm() < 1e-12);
    CHECK(std::abs(fit.omega) > 0.01);

    ControlLaw missing = spin;
    missing.motion.reset();
    CHECK_THROWS_AS(steering_law(p, missing), std::invalid_argument);
}

TEST_CASE("steering law with zero motion parameters is deployment plus scale") {
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> angle(-pi, pi);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 6;
        ControlLaw law;
        law.mode = Mode::steered;
        law.c = 1.5;
        law.k_d = 0.25;
        law.spec = ShapeSpec::line(n);
        for (auto& a : law.spec.theta) a = angle(gen);
        law.spec.closing_distance = 4.0;
        law.motion = MotionParams::uniform(n, 0.0);
        const Stacked p = test::random_stacked(gen, 2 * n);
        const Stacked expected = deployment_law(p, law) + scale_field(p, 4.0, 0.25);
        CHECK(bitwise_equal(steering_law(p, law), expected));
    }
}

TEST_CASE("evaluate dispatches and adds anchors") {
    const Stacked p = stacked({0, 0, 1, 1, 2, 0});
    CHECK(evaluate(line_law(3), p) == deployment_law(p, line_law(3)));

    ControlLaw closed;
    closed.mode = Mode::closed_polygon;
    closed.spec = ShapeSpec::uniform(3, 2 * pi / 3);
    closed.spec.closing_distance = 1.0;
    CHECK(bitwise_equal(evaluate(closed, p), deployment_law(p, closed) + scale_field(p, 1.0, 1.0)));

    ControlLaw g;
    g.mode = Mode::gradient3;
    g.distances = {1.0, 2.0};
    CHECK(evaluate(g, p) == gradient_law_3(p, 1.0, 2.0));

    ControlLaw anchored = line_law(3);
    anchored.anchor = EndpointAnchor{2.0, Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 2)};
    const Stacked u = evaluate(anchored, p);
    CHECK(block(u, 0) == Eigen::Vector2d(2, 0));
    CHECK(block(u, 1) == Eigen::Vector2d(0, -2));
    CHECK(block(u, 2) == Eigen::Vector2d(0, 4));
}

TEST_CASE("law validation") {
    ControlLaw law = line_law(4);
    CHECK_NOTHROW(law.validate(4));
    CHECK_THROWS_AS(law.validate(5), std::invalid_argument);

    law.c = 0.0;
    CHECK_THROWS_AS(law.validate(4), std::invalid_argument);
    law.c = 1.0;
    law.k_d = -1.0;
    CHECK_THROWS_AS(law.validate(4), std::invalid_argument);

    ControlLaw g;
    g.mode = Mode::gradient3;
    CHECK_NOTHROW(g.validate(3));
    CHECK_THROWS_AS(g.validate(4), std::invalid_argument);
    g.distances = {1.0, 0.0};
    CHECK_THROWS_AS(g.validate(3), std::invalid_argument);

    ControlLaw steer = hexagon_law(0.025);
    CHECK_NOTHROW(steer.validate(6));
    steer.motion->mu.pop_back();
    CHECK_THROWS_AS(steer.validate(6), std::invalid_argument);
    steer.motion.reset();
    CHECK_THROWS_AS(steer.validate(6), std::invalid_argument);

    ControlLaw closed = hexagon_law(0.0);
    closed.mode = Mode::closed_polygon;
    closed.spec.closing_distance.reset();
    CHECK_THROWS_AS(closed.validate(6), std::invalid_argument);
}

}
