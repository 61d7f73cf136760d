#pragma once

#include "polyform/simulator.hpp"
#include "polyform/stability.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyform {

/// Schema violation in a scenario document; `path()` names the offending key (e.g. "law.theta").
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string path, const std::string& what);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// The scenario file could not be opened or is not JSON at all.
class ScenarioFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output file could not be written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& file);

/// Expands "regular", a single value, or a comma-separated list into n-2 angles.
/// Throws std::invalid_argument on malformed text.
std::vector<double> parse_theta_spec(const std::string& text, int n);

/// Parses a comma-separated list of reals; throws std::invalid_argument.
std::vector<double> parse_real_list(const std::string& text);

/// Shortest decimal with 17 significant digits, locale independent.
std::string format_real(double x);

void write_csv(const Trajectory& traj, std::ostream& out);
void write_csv(const Trajectory& traj, const std::filesystem::path& file);

/// Reads a file written by write_csv back into times, positions and error columns.
Trajectory read_csv(std::istream& in);

struct SvgStyle {
    bool closing_edge = false;
};

void write_svg(const Trajectory& traj, const SvgStyle& style, std::ostream& out);
void write_svg(const Trajectory& traj, const SvgStyle& style, const std::filesystem::path& file);

struct RunReport {
    bool converged = false;
    std::optional<double> convergence_time;
    bool diverged = false;
    std::optional<double> diverged_at;
    std::vector<double> final_sides;
    std::vector<double> final_angles;
    std::optional<double> e_d_final;
    std::optional<Verdict> verdict;
    std::optional<RigidFit> rigid_fit;
};

/// Summarizes a trajectory. The rigid fit averages v and omega over samples in the last 10% of the
/// run and reports the largest residual among them.
RunReport summarize(const Scenario& s, const Trajectory& traj, double tol = 1e-6);

nlohmann::json to_json(const RunReport& r);
nlohmann::json to_json(const StabilityReport& r);

}  // namespace polyform
