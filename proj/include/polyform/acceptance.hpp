#pragma once

#include "polyform/topology.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace polyform::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Endpoint scale field under test: (positions, d, k_d) -> stacked velocities.
using ScaleField = std::function<Stacked(const Stacked&, double, double)>;

struct Config {
    std::filesystem::path fixtures;
    ScaleField scale_field;  ///< empty: the library's scale_field
};

/// Thrown when the bundled scenario fixtures cannot be found.
class MissingFixture : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

CriterionResult eigenvalue_oracle();
CriterionResult stability_bound_both_directions();
CriterionResult line_deployment();
CriterionResult ratio_control();
CriterionResult hexagon_experiment(const std::filesystem::path& fixtures);
CriterionResult spin_about_centroid(const std::filesystem::path& fixtures);
CriterionResult error_dynamics_consistency();
CriterionResult scale_law_sign(const ScaleField& field);
CriterionResult reduction_identities();
CriterionResult determinism(const std::filesystem::path& fixtures);

/// Runs every criterion in order. Throws MissingFixture before running anything if hexagon.json is absent.
std::vector<CriterionResult> run_all(const Config& config);

}  // namespace polyform::acceptance
