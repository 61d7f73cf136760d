#include "polyform/control.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace polyform {

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::gradient3: return "gradient3";
        case Mode::mismatched3: return "mismatched3";
        case Mode::line: return "line";
        case Mode::polygon: return "polygon";
        case Mode::closed_polygon: return "closed_polygon";
        case Mode::steered: return "steered";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    for (Mode m : {Mode::gradient3, Mode::mismatched3, Mode::line, Mode::polygon, Mode::closed_polygon,
                   Mode::steered}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown control mode '" + std::string(name) + "'");
}

MotionParams MotionParams::uniform(int n, double value) {
    return {std::vector<Eigen::Vector2d>(static_cast<std::size_t>(n), Eigen::Vector2d(value, value))};
}

void ControlLaw::validate(int n) const {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("gain c must be positive");
    }
    if (!(k_d > 0.0) || !std::isfinite(k_d)) {
        throw std::invalid_argument("gain k_d must be positive");
    }
    if (mode == Mode::gradient3 || mode == Mode::mismatched3) {
        if (n != 3) {
            throw std::invalid_argument("mode " + std::string(to_string(mode)) + " needs exactly three agents");
        }
        if (!(distances[0] > 0.0) || !(distances[1] > 0.0)) {
            throw std::invalid_argument("distances must be positive");
        }
        return;
    }
    spec.validate(n);
    if (controls_closing_edge() && !spec.closing_distance) {
        throw std::invalid_argument("mode " + std::string(to_string(mode)) + " needs a closing distance d");
    }
    if (mode == Mode::steered) {
        if (!motion) {
            throw std::invalid_argument("mode steered needs motion parameters");
        }
        if (motion->mu.size() != static_cast<std::size_t>(n)) {
            throw std::invalid_argument("motion parameters must hold one pair per agent");
        }
        for (const auto& m : motion->mu) {
            if (!m.allFinite()) {
                throw std::invalid_argument("motion parameters must be finite");
            }
        }
    }
    if (anchor && !(anchor->k_p >= 0.0)) {
        throw std::invalid_argument("anchor gain must be nonnegative");
    }
}

namespace {

void require_three(const Stacked& p) {
    if (p.size() != 6) {
        throw std::invalid_argument("three-agent law needs exactly three agents");
    }
}

}  // namespace

Stacked gradient_law_3(const Stacked& p, double d1, double d2) {
    return mismatched_law_3(p, d1, d2, 0.0, 0.0);
}

Stacked mismatched_law_3(const Stacked& p, double d1, double d2, double mu1, double mu2, DistanceTerms terms) {
    require_three(p);
    const Eigen::Vector2d z1 = block(p, 0) - block(p, 1);
    const Eigen::Vector2d z2 = block(p, 1) - block(p, 2);
    Stacked u = Stacked::Zero(6);
    if (terms == DistanceTerms::keep) {
        const double e1 = z1.squaredNorm() - d1 * d1;
        const double e2 = z2.squaredNorm() - d2 * d2;
        set_block(u, 0, -z1 * e1);
        set_block(u, 1, z1 * e1 - z2 * e2);
        set_block(u, 2, z2 * e2);
    }
    set_block(u, 1, block(u, 1) + (mu1 * z1 - mu2 * z2));
    return u;
}

ErrorSignal deployment_error(const Stacked& p, const Topology& t, const ControlLaw& law) {
    const Stacked z = relative_positions(t, p);
    if (law.mode == Mode::line) {
        return law.spec.unit_ratios() ? line_error(z, t) : scaled_error(z, t, law.spec.ratios);
    }
    return polygon_error(z, t, law.spec);
}

Stacked deployment_law(const Stacked& p, const ControlLaw& law) {
    if (p.size() % 2 != 0) {
        throw std::invalid_argument("positions must hold an even number of entries");
    }
    const Topology t(static_cast<int>(p.size() / 2));
    const Stacked e = deployment_error(p, t, law).e_theta;
    Stacked u = Stacked::Zero(p.size());
    for (Eigen::Index i = 1; i < t.agents() - 1; ++i) {
        set_block(u, i, law.c * block(e, i - 1));
    }
    return u;
}

ScaleVelocities scale_law(const Stacked& p, double d, double k_d, bool pin_last) {
    const ClosingError err = closing_distance_error(p, d);
    const Eigen::Index n = p.size() / 2;
    const Eigen::Vector2d gap = block(p, n - 1) - block(p, 0);
    ScaleVelocities v;
    v.degenerate = gap.isZero(0.0) && err.e_q != 0.0;
    if (v.degenerate) {
        return v;
    }
    v.first = k_d * err.e_q * gap;
    if (!pin_last) {
        v.last = -k_d * err.e_q * gap;
    }
    return v;
}

Stacked scale_field(const Stacked& p, double d, double k_d, bool pin_last) {
    const ScaleVelocities v = scale_law(p, d, k_d, pin_last);
    Stacked u = Stacked::Zero(p.size());
    set_block(u, 0, v.first);
    set_block(u, p.size() / 2 - 1, v.last);
    return u;
}

Stacked steering_law(const Stacked& p, const ControlLaw& law) {
    if (!law.motion) {
        throw std::invalid_argument("steering law needs motion parameters");
    }
    if (!law.spec.closing_distance) {
        throw std::invalid_argument("steering law needs a closing distance d");
    }
    const Topology t(static_cast<int>(p.size() / 2));
    const Eigen::Index n = t.agents();
    if (law.motion->mu.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("motion parameters must hold one pair per agent");
    }
    const Stacked z = relative_positions(t, p);
    const Stacked e = deployment_error(p, t, law).e_theta;
    const ScaleVelocities s = scale_law(p, *law.spec.closing_distance, law.k_d, law.pin_last);
    const auto& mu = law.motion->mu;
    const Eigen::Vector2d closing = block(p, n - 1) - block(p, 0);

    Stacked u(p.size());
    set_block(u, 0, s.first + mu[0].x() * closing + mu[0].y() * block(z, 0));
    for (Eigen::Index i = 1; i < n - 1; ++i) {
        const auto& m = mu[static_cast<std::size_t>(i)];
        set_block(u, i, law.c * block(e, i - 1) + m.x() * block(z, i - 1) + m.y() * block(z, i));
    }
    const auto& last = mu[static_cast<std::size_t>(n - 1)];
    set_block(u, n - 1, s.last + last.x() * closing + last.y() * block(z, n - 2));
    return u;
}

Stacked evaluate(const ControlLaw& law, const Stacked& p) {
    Stacked u;
    switch (law.mode) {
        case Mode::gradient3:
            u = gradient_law_3(p, law.distances[0], law.distances[1]);
            break;
        case Mode::mismatched3:
            u = mismatched_law_3(p, law.distances[0], law.distances[1], law.mismatches[0], law.mismatches[1]);
            break;
        case Mode::line:
        case Mode::polygon:
            u = deployment_law(p, law);
            break;
        case Mode::closed_polygon:
            u = deployment_law(p, law) +
                scale_field(p, law.spec.closing_distance.value(), law.k_d, law.pin_last);
            break;
        case Mode::steered:
            u = steering_law(p, law);
            break;
    }
    if (law.anchor) {
        const Eigen::Index n = p.size() / 2;
        set_block(u, 0, block(u, 0) + law.anchor->k_p * (law.anchor->first - block(p, 0)));
        set_block(u, n - 1, block(u, n - 1) + law.anchor->k_p * (law.anchor->last - block(p, n - 1)));
    }
    return u;
}

}  // namespace polyform
