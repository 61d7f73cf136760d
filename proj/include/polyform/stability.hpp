#pragma once

#include "polyform/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

namespace polyform {

enum class Verdict { stable, marginal, unstable };

std::string_view to_string(Verdict v);

/// Real parts within this distance of zero are reported as marginal.
inline constexpr double marginal_tolerance = 1e-9;

struct StabilityReport {
    int n = 0;
    std::vector<double> theta;
    std::vector<std::complex<double>> eigenvalues;
    double min_real = 0.0;
    double bound = 0.0;
    Verdict verdict = Verdict::stable;
    /// Closed-form spectrum, present for uniform angles and unit ratios.
    std::optional<std::vector<double>> closed_form;
};

/// Error-dynamics matrix B_W^T D_r kron(B_theta), so that de/dt = -c A e.
/// The ratio factor is skipped when all ratios are one.
Eigen::MatrixXd assemble_A(const ShapeSpec& spec, int n);

/// Hermitian tridiagonal Toeplitz matrix with 2cos(theta/2) on the diagonal,
/// -exp(i theta/2) above and its conjugate below.
Eigen::MatrixXcd assemble_C(double theta_star, int n);

/// 2cos(theta/2) + 2cos(k pi / (n-1)) for k = 1..n-2, in descending order.
std::vector<double> closed_form_eigs(double theta_star, int n);

/// Dense nonsymmetric eigenvalues via Hessenberg reduction and shifted QR.
std::vector<std::complex<double>> numerical_eigs(const Eigen::MatrixXd& m);

/// Largest admissible uniform turn angle, 2 pi / (n - 1).
double stability_bound(int n);

/// Turn angle of a regular n-gon, 2 pi / n.
double regular_polygon_angle(int n);

Verdict verdict_for(double min_real);

StabilityReport classify(const ShapeSpec& spec, int n);

}  // namespace polyform
