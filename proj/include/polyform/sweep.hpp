#pragma once

#include "polyform/stability.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace polyform {

struct SweepSettings {
    int n_min = 3;
    int n_max = 12;
    std::vector<double> thetas;
    double t_end = 400.0;
    double dt = 0.25;
    std::uint64_t seed = 1;
    /// A cell converged empirically when |e(t_end)| <= decay * |e(0)|.
    double decay = 1e-3;
};

struct SweepRow {
    int n = 0;
    double theta = 0.0;
    double min_real = 0.0;
    Verdict verdict = Verdict::stable;
    bool empirical_converged = false;
};

/// Spectral verdict and a short polygon-mode simulation per (n, theta) cell. Rows come back sorted
/// by (n, theta) whatever the thread count.
std::vector<SweepRow> sweep(const SweepSettings& settings, unsigned threads);

/// K angles -pi + 2 pi j / K, j = 1..K, the last one exactly pi.
std::vector<double> uniform_theta_grid(int k);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace polyform
