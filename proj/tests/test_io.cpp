#include "polyform/io.hpp"
#include "polyform/sweep.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

using namespace polyform;
using nlohmann::json;
using std::numbers::pi;

namespace {

json minimal() {
    return json::parse(R"({
        "n": 3,
        "initial": {"positions": [[0, 0], [1, 1], [2, 0]]},
        "law": {"mode": "line"},
        "integrator": {"t_end": 1.0}
    })");
}

std::string error_path(const json& doc) {
    try {
        parse_scenario(doc);
    } catch (const ScenarioError& e) {
        return e.path();
    }
    return "<accepted>";
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t hits = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++hits;
    return hits;
}

/// Element nesting check: every opening tag is closed in order.
bool balanced_tags(const std::string& svg) {
    std::vector<std::string> stack;
    const std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)[^>]*?(/?)>)");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        if (m[1].length()) {
            if (stack.empty() || stack.back() != m[2].str()) return false;
            stack.pop_back();
        } else if (!m[3].length()) {
            stack.push_back(m[2].str());
        }
    }
    return stack.empty();
}

Trajectory one_sample_n3() {
    Trajectory t;
    t.n = 3;
    t.times = {0.0};
    t.positions = {test::stacked({0.1, 1.0 / 3.0, -2.5e-17, 7.0, 1e300, -0.0})};
    t.e_theta_norm = {std::sqrt(2.0)};
    t.e_d = {std::nullopt};
    t.metrics = {MetricFrame{}};
    return t;
}

Scenario fixture(const std::string& name) { return load_scenario(std::filesystem::path(POLYFORM_SCENARIO_DIR) / name); }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal scenario and defaults") {
    const Scenario s = parse_scenario(minimal());
    CHECK(s.n == 3);
    CHECK(s.initial == test::stacked({0, 0, 1, 1, 2, 0}));
    CHECK(s.law.mode == Mode::line);
    CHECK(s.law.c == 1.0);
    CHECK(s.integrator.dt == 0.005);
    CHECK(s.integrator.method == Method::rk4);
    CHECK(s.integrator.t_end == 1.0);
    CHECK(s.events.empty());
    CHECK(s.record_every == 1);
}

TEST_CASE("bundled hexagon fixture") {
    const Scenario s = fixture("hexagon.json");
    CHECK(s.n == 6);
    CHECK(s.law.mode == Mode::steered);
    CHECK(s.law.spec.theta == std::vector<double>(4, regular_polygon_angle(6)));
    CHECK(s.law.spec.closing_distance == 10.0);
    REQUIRE(s.law.motion);
    for (const auto& m : s.law.motion->mu) CHECK(m == Eigen::Vector2d(0.025, 0.025));
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0].time == 150.0);
    CHECK(s.events[0].patch.d == 30.0);
    CHECK(s.initial == random_placement(6, 7, {-15, -15, 15, 15}));
    CHECK(s.law_at(200.0).spec.closing_distance == 30.0);
}

TEST_CASE("law keys") {
    json doc = minimal();
    doc["n"] = 4;
    doc["initial"] = json::parse(R"({"seed": 3, "box": [-1, -2, 1, 2]})");
    doc["law"] = json::parse(R"({
        "mode": "steered", "c": 0.5, "k_d": 0.25, "theta": [0.1, -0.2], "ratios": [1, 2, 3], "d": 4,
        "motion_params": [[1, 2], [3, 4], [5, 6], [7, 8]], "pin_last": true,
        "anchor": {"k_p": 2, "first": [0, 0], "last": [1, 1]}
    })");
    doc["integrator"] = json::parse(R"({"dt": 0.1, "t_end": 2, "method": "euler"})");
    doc["events"] = json::parse(R"([{"t": 1, "set": {"c": 2, "theta": 0.3, "motion_params": 0}}])");
    doc["output"] = json::parse(R"({"stride": 4})");
    const Scenario s = parse_scenario(doc);
    CHECK(s.law.c == 0.5);
    CHECK(s.law.k_d == 0.25);
    CHECK(s.law.spec.theta == std::vector<double>{0.1, -0.2});
    CHECK(s.law.spec.ratios == std::vector<double>{1, 2, 3});
    CHECK(s.law.motion->mu[3] == Eigen::Vector2d(7, 8));
    CHECK(s.law.pin_last);
    REQUIRE(s.law.anchor);
    CHECK(s.law.anchor->last == Eigen::Vector2d(1, 1));
    CHECK(s.integrator.method == Method::euler);
    CHECK(s.record_every == 4);
    const ControlLaw later = s.law_at(1.5);
    CHECK(later.c == 2.0);
    CHECK(later.spec.theta == std::vector<double>{0.3, 0.3});
    CHECK(later.motion->mu[0] == Eigen::Vector2d(0, 0));

    json g = minimal();
    g["law"] = json::parse(R"({"mode": "mismatched3", "distances": [1, 2], "mismatches": [0.5, 0.25]})");
    const Scenario m = parse_scenario(g);
    CHECK(m.law.distances == std::array<double, 2>{1, 2});
    CHECK(m.law.mismatches == std::array<double, 2>{0.5, 0.25});
}

TEST_CASE("schema errors name the offending path") {
    json doc = minimal();
    doc["colour"] = "red";
    CHECK(error_path(doc) == "colour");

    doc = minimal();
    doc["law"]["gain"] = 1;
    CHECK(error_path(doc) == "law.gain");

    doc = minimal();
    doc.erase("integrator");
    CHECK(error_path(doc) == "integrator");

    doc = minimal();
    doc["integrator"].erase("t_end");
    CHECK(error_path(doc) == "integrator.t_end");

    doc = minimal();
    doc["n"] = 2;
    CHECK(error_path(doc) == "n");

    doc = minimal();
    doc["initial"]["positions"][1] = json::array({1});
    CHECK(error_path(doc) == "initial.positions[1]");

    doc = minimal();
    doc["law"]["mode"] = "spiral";
    CHECK(error_path(doc) == "law.mode");

    doc = minimal();
    doc["law"]["theta"] = json::array({0.1, 0.2});
    CHECK(error_path(doc) == "law.theta");

    doc = minimal();
    doc["law"]["ratios"] = json::array({1, -1});
    CHECK(error_path(doc) == "law.ratios[1]");

    doc = minimal();
    doc["law"]["c"] = "fast";
    CHECK(error_path(doc) == "law.c");

    doc = minimal();
    doc["integrator"]["method"] = "midpoint";
    CHECK(error_path(doc) == "integrator.method");

    doc = minimal();
    doc["events"] = json::parse(R"([{"t": 0.5, "set": {"speed": 1}}])");
    CHECK(error_path(doc) == "events[0].set.speed");

    doc = minimal();
    doc["output"] = json::parse(R"({"stride": 0})");
    CHECK(error_path(doc) == "output.stride");

    doc = minimal();
    doc["initial"]["seed"] = 3;
    CHECK(error_path(doc) == "initial");

    // Cross-field failures surface after the per-key checks.
    doc = minimal();
    doc["law"]["mode"] = "steered";
    CHECK(error_path(doc) == "<scenario>");
    doc = minimal();
    doc["events"] = json::parse(R"([{"t": 5, "set": {}}])");
    CHECK(error_path(doc) == "<scenario>");
}

TEST_CASE("loading files") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ScenarioFileError);

    const auto dir = std::filesystem::temp_directory_path() / "polyform_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "broken.json") << "{ \"n\": 3,";
    }
    try {
        load_scenario(dir / "broken.json");
        FAIL("accepted broken JSON");
    } catch (const ScenarioError& e) {
        CHECK(e.path() == "<document>");
    }
    {
        std::ofstream(dir / "ok.json") << minimal().dump();
    }
    CHECK(load_scenario(dir / "ok.json").n == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("theta and real lists") {
    CHECK(parse_theta_spec("regular", 6) == std::vector<double>(4, regular_polygon_angle(6)));
    CHECK(parse_theta_spec("0.5", 5) == std::vector<double>(3, 0.5));
    CHECK(parse_theta_spec("0.1,0.2,-0.3", 5) == std::vector<double>{0.1, 0.2, -0.3});
    CHECK_THROWS_AS(parse_theta_spec("0.1,0.2", 5), std::invalid_argument);
    CHECK_THROWS_AS(parse_theta_spec("abc", 5), std::invalid_argument);
    CHECK_THROWS_AS(parse_theta_spec("", 5), std::invalid_argument);

    CHECK(parse_real_list("1,2.5,-3e2") == std::vector<double>{1, 2.5, -300});
    CHECK_THROWS_AS(parse_real_list("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_real_list("1x"), std::invalid_argument);
}

TEST_CASE("number formatting round trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 5e-324, 123456789.125, -0.0, 0.0}) {
        const std::string s = format_real(x);
        double back = 1.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(res.ec == std::errc());
        CHECK(res.ptr == s.data() + s.size());
        CHECK(back == x);
        CHECK(std::signbit(back) == std::signbit(x));
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_real(2.0) == "2");
}

TEST_CASE("CSV") {
    std::ostringstream out;
    const Trajectory t = one_sample_n3();
    write_csv(t, out);
    const std::string text = out.str();
    std::istringstream lines(text);
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header == "t,x1,y1,x2,y2,x3,y3,e_theta_norm,e_d");
    CHECK(count(row, ",") == 8);
    CHECK(row.back() == ',');

    std::istringstream in(text);
    const Trajectory back = read_csv(in);
    CHECK(back.n == 3);
    REQUIRE(back.size() == 1);
    CHECK(back.times[0] == 0.0);
    CHECK((back.positions[0].array() == t.positions[0].array()).all());
    CHECK(std::signbit(back.positions[0](5)));
    CHECK(back.e_theta_norm[0] == t.e_theta_norm[0]);
    CHECK_FALSE(back.e_d[0]);
}

TEST_CASE("CSV of a simulated run is deterministic and lossless") {
    Scenario s = fixture("hexagon.json");
    s.integrator.t_end = 5.0;
    s.events.clear();
    const Trajectory traj = run(s);
    std::ostringstream a, b;
    write_csv(traj, a);
    write_csv(run(s), b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    const Trajectory back = read_csv(in);
    REQUIRE(back.size() == traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        CHECK(back.times[k] == traj.times[k]);
        CHECK(back.positions[k] == traj.positions[k]);
        CHECK(back.e_d[k] == traj.e_d[k]);
    }
}

TEST_CASE("SVG") {
    Scenario s = fixture("hexagon.json");
    s.integrator.t_end = 2.0;
    s.events.clear();
    std::ostringstream out;
    write_svg(run(s), SvgStyle{true}, out);
    const std::string svg = out.str();
    CHECK(count(svg, "<polyline class=\"trajectory\"") == 6);
    CHECK(count(svg, "<path class=\"initial\"") == 6);
    CHECK(count(svg, "<circle class=\"final\"") == 6);
    CHECK(count(svg, "<line class=\"closing\"") == 1);
    CHECK(count(svg, "stroke-dasharray") == 1);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("viewBox=") != std::string::npos);
    CHECK(balanced_tags(svg));

    const Scenario rest = fixture("equilibrium.json");
    std::ostringstream still;
    write_svg(run(rest), SvgStyle{false}, still);
    const std::string quiet = still.str();
    CHECK(count(quiet, "<polyline class=\"trajectory\"") == 4);
    CHECK(count(quiet, "<path class=\"initial\"") == 4);
    CHECK(count(quiet, "<line class=\"closing\"") == 0);
    CHECK(balanced_tags(quiet));
}

TEST_CASE("writing to an unwritable path fails cleanly") {
    const Trajectory t = one_sample_n3();
    CHECK_THROWS_AS(write_csv(t, std::filesystem::path("/nonexistent/dir/out.csv")), OutputError);
    CHECK_THROWS_AS(write_svg(t, {}, std::filesystem::path("/nonexistent/dir/out.svg")), OutputError);
}

TEST_CASE("run report") {
    const Scenario rest = fixture("equilibrium.json");
    const RunReport r = summarize(rest, run(rest));
    CHECK(r.converged);
    CHECK(r.convergence_time == 0.0);
    CHECK_FALSE(r.diverged);
    CHECK(r.final_sides == std::vector<double>{1, 1, 1});
    CHECK(r.final_angles == std::vector<double>{0, 0});
    CHECK_FALSE(r.e_d_final);
    CHECK(r.verdict == Verdict::stable);

    const json j = to_json(r);
    for (const char* key : {"converged", "convergence_time", "diverged", "diverged_at", "final_sides", "final_angles",
                            "e_d_final", "verdict", "rigid_fit"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["verdict"] == "stable");
    CHECK(j["e_d_final"].is_null());
    CHECK(j["rigid_fit"].contains("omega"));

    Scenario hex = fixture("hexagon.json");
    hex.integrator.t_end = 150.0;
    hex.events.clear();
    const RunReport h = summarize(hex, run(hex));
    CHECK(h.converged);
    REQUIRE(h.final_sides.size() == 6);
    for (double side : h.final_sides) CHECK(side == doctest::Approx(10.0).epsilon(1e-4));
    REQUIRE(h.e_d_final);
    CHECK(std::abs(*h.e_d_final) < 1e-3);
    REQUIRE(h.rigid_fit);
    CHECK(std::abs(h.rigid_fit->omega) > 0.01);
}

TEST_CASE("stability report JSON") {
    const json j = to_json(classify(ShapeSpec::uniform(6, pi / 3), 6));
    CHECK(j["n"] == 6);
    CHECK(j["verdict"] == "stable");
    CHECK(j["eigenvalues"].size() == 8);
    CHECK(j["eigenvalues"][0].contains("re"));
    CHECK(j["bound"].get<double>() == doctest::Approx(2 * pi / 5));
    CHECK(j["closed_form"].size() == 4);
    CHECK(j["min_real"].get<double>() == doctest::Approx(0.11401).epsilon(1e-4));
}

TEST_CASE("theta grid") {
    const auto g = uniform_theta_grid(25);
    REQUIRE(g.size() == 25);
    CHECK(g.back() == pi);
    CHECK(g.front() > -pi);
    for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] > g[j - 1]);
}

TEST_CASE("sweep") {
    SweepSettings settings;
    settings.n_min = 3;
    settings.n_max = 8;
    settings.thetas = uniform_theta_grid(24);
    const auto rows = sweep(settings, 4);
    REQUIRE(rows.size() == 6 * 24);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const bool ordered = rows[k - 1].n < rows[k].n ||
                             (rows[k - 1].n == rows[k].n && rows[k - 1].theta < rows[k].theta);
        CHECK(ordered);
    }

    CHECK(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.theta == 0.0; }) == 6);
    for (const auto& r : rows) {
        if (r.n == 3 && r.theta < pi) CHECK(r.verdict == Verdict::stable);
        if (r.theta == 0.0) CHECK(r.verdict == Verdict::stable);
        if (std::abs(r.min_real) > 0.02) CHECK(r.empirical_converged == (r.verdict == Verdict::stable));
    }

    // n = 6 changes sign between the grid points straddling the bound.
    std::vector<SweepRow> six;
    for (const auto& r : rows) {
        if (r.n == 6 && r.theta > 0.0) six.push_back(r);
    }
    for (const auto& r : six) CHECK((r.min_real > 0.0) == (r.theta < 2 * pi / 5));

    const auto sequential = sweep(settings, 0);
    std::ostringstream a, b;
    write_sweep_csv(rows, a);
    write_sweep_csv(sequential, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("n,theta,min_real,verdict,empirical_converged\n", 0) == 0);
}

}
