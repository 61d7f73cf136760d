#include "polyform/stability.hpp"

#include "polyform/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace polyform {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::marginal: return "marginal";
        case Verdict::unstable: return "unstable";
    }
    return "unknown";
}

Eigen::MatrixXd assemble_A(const ShapeSpec& spec, int n) {
    const Topology t(n);
    const Eigen::MatrixXd bw = build_BW(spec, n);
    const Eigen::MatrixXd bt = kron2(angle_incidence_matrix(t));
    if (spec.ratios.empty() || spec.unit_ratios()) {
        return bw.transpose() * bt;
    }
    if (spec.ratios.size() != static_cast<std::size_t>(t.edge_count())) {
        throw std::invalid_argument("ratios must hold n-1 values");
    }
    Eigen::VectorXd dr(2 * t.edge_count());
    for (Eigen::Index k = 0; k < t.edge_count(); ++k) {
        dr(2 * k) = dr(2 * k + 1) = spec.ratios[static_cast<std::size_t>(k)];
    }
    return bw.transpose() * dr.asDiagonal() * bt;
}

Eigen::MatrixXcd assemble_C(double theta_star, int n) {
    const Topology t(n);
    const Eigen::Index m = t.angle_count();
    const std::complex<double> w = std::polar(1.0, theta_star / 2.0);
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        c(k, k) = 2.0 * std::cos(theta_star / 2.0);
        if (k + 1 < m) {
            c(k, k + 1) = -w;
            c(k + 1, k) = -std::conj(w);
        }
    }
    return c;
}

std::vector<double> closed_form_eigs(double theta_star, int n) {
    const Topology t(n);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(t.angle_count()));
    const double diag = 2.0 * std::cos(theta_star / 2.0);
    for (int k = 1; k <= t.angle_count(); ++k) {
        out.push_back(diag + 2.0 * std::cos(k * std::numbers::pi / (n - 1)));
    }
    return out;
}

std::vector<std::complex<double>> numerical_eigs(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("eigenvalues need a square matrix");
    }
    if (m.rows() > 256) {
        throw std::invalid_argument("eigenvalue routine limited to dimension 256");
    }
    if (m.rows() == 0) {
        return {};
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue iteration did not converge");
    }
    const Eigen::VectorXcd ev = solver.eigenvalues();
    std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return out;
}

double stability_bound(int n) {
    if (n < 3) {
        throw std::domain_error("at least three agents required");
    }
    return 2.0 * std::numbers::pi / (n - 1);
}

double regular_polygon_angle(int n) {
    if (n < 3) {
        throw std::domain_error("at least three agents required");
    }
    return 2.0 * std::numbers::pi / n;
}

Verdict verdict_for(double min_real) {
    if (min_real > marginal_tolerance) {
        return Verdict::stable;
    }
    if (std::abs(min_real) <= marginal_tolerance) {
        return Verdict::marginal;
    }
    return Verdict::unstable;
}

StabilityReport classify(const ShapeSpec& spec, int n) {
    spec.validate(n);
    StabilityReport r;
    r.n = n;
    r.theta = spec.theta;
    r.eigenvalues = numerical_eigs(assemble_A(spec, n));
    r.min_real = std::numeric_limits<double>::infinity();
    for (const auto& ev : r.eigenvalues) {
        r.min_real = std::min(r.min_real, ev.real());
    }
    r.bound = stability_bound(n);
    r.verdict = verdict_for(r.min_real);
    if (spec.uniform_angles() && spec.unit_ratios()) {
        r.closed_form = closed_form_eigs(spec.theta.front(), n);
    }
    return r;
}

}  // namespace polyform
