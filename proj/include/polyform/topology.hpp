#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace polyform {

/// Stacked 2D positions (x1, y1, x2, y2, ...) or stacked 2D relative vectors.
using Stacked = Eigen::VectorXd;

/// An edge of the sensing graph, 1-based agent indices.
struct Edge {
    int tail;
    int head;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Open daisy chain 1 - 2 - ... - n with edge k = (k, k+1).
class Topology {
public:
    /// Throws std::domain_error when n < 3.
    explicit Topology(int n);

    int agents() const noexcept { return n_; }
    int edge_count() const noexcept { return n_ - 1; }
    /// Number of controlled consecutive-edge angles, n - 2.
    int angle_count() const noexcept { return n_ - 2; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

private:
    int n_;
    std::vector<Edge> edges_;
};

Topology build_daisy_chain(int n);

/// Dense vertex-by-edge matrix with +1 at the tail and -1 at the head of every edge.
Eigen::MatrixXd incidence_matrix(const Topology& t);

/// Incidence matrix of the chain of edges, (n-1) x (n-2). Column k couples z_k and z_{k+1}.
Eigen::MatrixXd angle_incidence_matrix(const Topology& t);

/// M kron I2.
Eigen::MatrixXd kron2(const Eigen::MatrixXd& m);

/// z_k = p_k - p_{k+1}. Throws std::invalid_argument if p does not hold 2n entries.
Stacked relative_positions(const Topology& t, const Stacked& p);

/// Block accessors for stacked 2-vectors, 0-based block index.
inline Eigen::Vector2d block(const Stacked& v, Eigen::Index i) { return v.segment<2>(2 * i); }
inline void set_block(Stacked& v, Eigen::Index i, const Eigen::Vector2d& b) { v.segment<2>(2 * i) = b; }

}  // namespace polyform
