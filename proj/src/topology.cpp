#include "polyform/topology.hpp"

#include <stdexcept>
#include <string>

namespace polyform {

Topology::Topology(int n) : n_(n) {
    if (n < 3) {
        throw std::domain_error("at least three agents required");
    }
    edges_.reserve(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k) {
        edges_.push_back({k, k + 1});
    }
}

Topology build_daisy_chain(int n) { return Topology(n); }

namespace {

Eigen::MatrixXd chain_incidence(Eigen::Index rows) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, rows - 1);
    for (Eigen::Index k = 0; k < rows - 1; ++k) {
        b(k, k) = 1.0;
        b(k + 1, k) = -1.0;
    }
    return b;
}

}  // namespace

Eigen::MatrixXd incidence_matrix(const Topology& t) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(t.agents(), t.edge_count());
    for (std::size_t k = 0; k < t.edges().size(); ++k) {
        const auto& e = t.edges()[k];
        b(e.tail - 1, static_cast<Eigen::Index>(k)) = 1.0;
        b(e.head - 1, static_cast<Eigen::Index>(k)) = -1.0;
    }
    return b;
}

Eigen::MatrixXd angle_incidence_matrix(const Topology& t) { return chain_incidence(t.edge_count()); }

Eigen::MatrixXd kron2(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out(2 * i, 2 * j) = m(i, j);
            out(2 * i + 1, 2 * j + 1) = m(i, j);
        }
    }
    return out;
}

Stacked relative_positions(const Topology& t, const Stacked& p) {
    const Eigen::Index n = t.agents();
    if (p.size() != 2 * n) {
        throw std::invalid_argument("positions must hold " + std::to_string(2 * n) + " entries, got " +
                                    std::to_string(p.size()));
    }
    Stacked z(2 * (n - 1));
    for (Eigen::Index k = 0; k < n - 1; ++k) {
        set_block(z, k, block(p, k) - block(p, k + 1));
    }
    return z;
}

}  // namespace polyform
