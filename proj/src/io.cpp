#include "polyform/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace polyform {

using nlohmann::json;

ScenarioError::ScenarioError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

std::string index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ScenarioError(path.empty() ? "<root>" : path, "expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.contains(key)) {
            throw ScenarioError(join(path, key), "unknown key");
        }
    }
}

const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) {
        throw ScenarioError(join(path, key), "missing required key");
    }
    return obj.at(key);
}

double real(const json& v, const std::string& path) {
    if (!v.is_number()) {
        throw ScenarioError(path, "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ScenarioError(path, "expected a finite number");
    }
    return x;
}

double positive(const json& v, const std::string& path) {
    const double x = real(v, path);
    if (!(x > 0.0)) {
        throw ScenarioError(path, "must be positive");
    }
    return x;
}

std::vector<double> real_array(const json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ScenarioError(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(real(v[i], index(path, i)));
    }
    return out;
}

Eigen::Vector2d point(const json& v, const std::string& path) {
    const auto xs = real_array(v, path);
    if (xs.size() != 2) {
        throw ScenarioError(path, "expected [x, y]");
    }
    return {xs[0], xs[1]};
}

std::vector<double> theta_from(const json& v, const std::string& path, int n) {
    if (v.is_string()) {
        if (v.get<std::string>() != "regular") {
            throw ScenarioError(path, "expected \"regular\", a number or an array");
        }
        return std::vector<double>(static_cast<std::size_t>(n - 2), regular_polygon_angle(n));
    }
    if (v.is_number()) {
        return std::vector<double>(static_cast<std::size_t>(n - 2), real(v, path));
    }
    auto out = real_array(v, path);
    if (out.size() != static_cast<std::size_t>(n - 2)) {
        throw ScenarioError(path, "expected n-2 = " + std::to_string(n - 2) + " angles");
    }
    return out;
}

std::vector<double> ratios_from(const json& v, const std::string& path, int n) {
    auto out = real_array(v, path);
    if (out.size() != static_cast<std::size_t>(n - 1)) {
        throw ScenarioError(path, "expected n-1 = " + std::to_string(n - 1) + " ratios");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0)) {
            throw ScenarioError(index(path, i), "must be positive");
        }
    }
    return out;
}

MotionParams motion_from(const json& v, const std::string& path, int n) {
    if (v.is_number()) {
        return MotionParams::uniform(n, real(v, path));
    }
    if (!v.is_array() || v.size() != static_cast<std::size_t>(n)) {
        throw ScenarioError(path, "expected a number or n = " + std::to_string(n) + " pairs");
    }
    MotionParams m;
    for (std::size_t i = 0; i < v.size(); ++i) {
        m.mu.push_back(point(v[i], index(path, i)));
    }
    return m;
}

std::array<double, 2> pair_from(const json& v, const std::string& path) {
    const Eigen::Vector2d p = point(v, path);
    return {p.x(), p.y()};
}

ControlLaw law_from(const json& v, const std::string& path, int n) {
    only_keys(v, path, {"mode", "c", "k_d", "theta", "ratios", "d", "motion_params", "mismatches", "distances",
                        "pin_last", "anchor"});
    ControlLaw law;
    const json& mode = require(v, path, "mode");
    if (!mode.is_string()) {
        throw ScenarioError(join(path, "mode"), "expected a string");
    }
    try {
        law.mode = parse_mode(mode.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(join(path, "mode"), e.what());
    }
    if (v.contains("c")) law.c = positive(v["c"], join(path, "c"));
    if (v.contains("k_d")) law.k_d = positive(v["k_d"], join(path, "k_d"));
    if (n >= 3) {
        law.spec = ShapeSpec::line(n);
    }
    if (v.contains("theta")) law.spec.theta = theta_from(v["theta"], join(path, "theta"), n);
    if (v.contains("ratios")) law.spec.ratios = ratios_from(v["ratios"], join(path, "ratios"), n);
    if (v.contains("d")) law.spec.closing_distance = positive(v["d"], join(path, "d"));
    if (v.contains("motion_params")) law.motion = motion_from(v["motion_params"], join(path, "motion_params"), n);
    if (v.contains("mismatches")) law.mismatches = pair_from(v["mismatches"], join(path, "mismatches"));
    if (v.contains("distances")) {
        law.distances = pair_from(v["distances"], join(path, "distances"));
        if (!(law.distances[0] > 0.0 && law.distances[1] > 0.0)) {
            throw ScenarioError(join(path, "distances"), "must be positive");
        }
    }
    if (v.contains("pin_last")) {
        if (!v["pin_last"].is_boolean()) {
            throw ScenarioError(join(path, "pin_last"), "expected a boolean");
        }
        law.pin_last = v["pin_last"].get<bool>();
    }
    if (v.contains("anchor")) {
        const std::string ap = join(path, "anchor");
        const json& a = v["anchor"];
        only_keys(a, ap, {"k_p", "first", "last"});
        EndpointAnchor anchor;
        anchor.k_p = positive(require(a, ap, "k_p"), join(ap, "k_p"));
        anchor.first = point(require(a, ap, "first"), join(ap, "first"));
        anchor.last = point(require(a, ap, "last"), join(ap, "last"));
        law.anchor = anchor;
    }
    return law;
}

ParameterPatch patch_from(const json& v, const std::string& path, int n) {
    only_keys(v, path, {"d", "c", "k_d", "theta", "ratios", "motion_params", "mismatches"});
    ParameterPatch patch;
    if (v.contains("d")) patch.d = positive(v["d"], join(path, "d"));
    if (v.contains("c")) patch.c = positive(v["c"], join(path, "c"));
    if (v.contains("k_d")) patch.k_d = positive(v["k_d"], join(path, "k_d"));
    if (v.contains("theta")) patch.theta = theta_from(v["theta"], join(path, "theta"), n);
    if (v.contains("ratios")) patch.ratios = ratios_from(v["ratios"], join(path, "ratios"), n);
    if (v.contains("motion_params")) patch.motion = motion_from(v["motion_params"], join(path, "motion_params"), n);
    if (v.contains("mismatches")) patch.mismatches = pair_from(v["mismatches"], join(path, "mismatches"));
    return patch;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    only_keys(doc, "", {"n", "initial", "law", "integrator", "events", "output"});
    Scenario s;
    const json& n = require(doc, "", "n");
    if (!n.is_number_integer() || n.get<long long>() < 3 || n.get<long long>() > 100000) {
        throw ScenarioError("n", "expected an integer of at least 3");
    }
    s.n = n.get<int>();

    const json& init = require(doc, "", "initial");
    only_keys(init, "initial", {"positions", "seed", "box"});
    if (init.contains("positions")) {
        if (init.contains("seed") || init.contains("box")) {
            throw ScenarioError("initial", "give either positions or seed and box, not both");
        }
        const json& pos = init["positions"];
        if (!pos.is_array() || pos.size() != static_cast<std::size_t>(s.n)) {
            throw ScenarioError("initial.positions", "expected n = " + std::to_string(s.n) + " points");
        }
        s.initial.resize(2 * s.n);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            set_block(s.initial, static_cast<Eigen::Index>(i), point(pos[i], index("initial.positions", i)));
        }
    } else {
        const json& seed = require(init, "initial", "seed");
        if (!seed.is_number_unsigned()) {
            throw ScenarioError("initial.seed", "expected a nonnegative integer");
        }
        const auto box = real_array(require(init, "initial", "box"), "initial.box");
        if (box.size() != 4 || !(box[2] >= box[0]) || !(box[3] >= box[1])) {
            throw ScenarioError("initial.box", "expected [xmin, ymin, xmax, ymax]");
        }
        s.initial = random_placement(s.n, seed.get<std::uint64_t>(), {box[0], box[1], box[2], box[3]});
    }

    s.law = law_from(require(doc, "", "law"), "law", s.n);

    const json& integ = require(doc, "", "integrator");
    only_keys(integ, "integrator", {"dt", "t_end", "method"});
    if (integ.contains("dt")) s.integrator.dt = positive(integ["dt"], "integrator.dt");
    s.integrator.t_end = positive(require(integ, "integrator", "t_end"), "integrator.t_end");
    if (integ.contains("method")) {
        const json& m = integ["method"];
        if (m == "euler") {
            s.integrator.method = Method::euler;
        } else if (m == "rk4") {
            s.integrator.method = Method::rk4;
        } else {
            throw ScenarioError("integrator.method", "expected \"euler\" or \"rk4\"");
        }
    }

    if (doc.contains("events")) {
        const json& events = doc["events"];
        if (!events.is_array()) {
            throw ScenarioError("events", "expected an array");
        }
        for (std::size_t i = 0; i < events.size(); ++i) {
            const std::string ep = index("events", i);
            only_keys(events[i], ep, {"t", "set"});
            Event e;
            e.time = real(require(events[i], ep, "t"), join(ep, "t"));
            e.patch = patch_from(require(events[i], ep, "set"), join(ep, "set"), s.n);
            s.events.push_back(std::move(e));
        }
    }

    if (doc.contains("output")) {
        only_keys(doc["output"], "output", {"stride"});
        if (doc["output"].contains("stride")) {
            const json& st = doc["output"]["stride"];
            if (!st.is_number_integer() || st.get<long long>() < 1) {
                throw ScenarioError("output.stride", "expected a positive integer");
            }
            s.record_every = st.get<int>();
        }
    }

    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("<scenario>", e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ScenarioFileError("cannot open " + file.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("<document>", std::string("not valid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        std::string item = text.substr(start, comma - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(x)) {
            throw std::invalid_argument("malformed number '" + item + "'");
        }
        out.push_back(x);
        start = comma + 1;
    }
    return out;
}

std::vector<double> parse_theta_spec(const std::string& text, int n) {
    if (n < 3) {
        throw std::invalid_argument("at least three agents required");
    }
    const auto count = static_cast<std::size_t>(n - 2);
    if (text == "regular") {
        return std::vector<double>(count, regular_polygon_angle(n));
    }
    auto values = parse_real_list(text);
    if (values.size() == 1) {
        return std::vector<double>(count, values.front());
    }
    if (values.size() != count) {
        throw std::invalid_argument("theta list must hold n-2 = " + std::to_string(count) + " values");
    }
    return values;
}

std::string format_real(double x) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    if (ec != std::errc()) {
        throw std::runtime_error("number formatting failed");
    }
    return {buf.data(), ptr};
}

void write_csv(const Trajectory& traj, std::ostream& out) {
    if (traj.size() == 0) {
        throw std::invalid_argument("cannot write an empty trajectory");
    }
    out << 't';
    for (int i = 1; i <= traj.n; ++i) {
        out << ",x" << i << ",y" << i;
    }
    out << ",e_theta_norm,e_d\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        out << format_real(traj.times[s]);
        for (Eigen::Index j = 0; j < traj.positions[s].size(); ++j) {
            out << ',' << format_real(traj.positions[s](j));
        }
        out << ',' << format_real(traj.e_theta_norm[s]) << ',';
        if (traj.e_d[s]) {
            out << format_real(*traj.e_d[s]);
        }
        out << '\n';
    }
}

void write_csv(const Trajectory& traj, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw OutputError("cannot write " + file.string());
    }
    write_csv(traj, out);
    if (!out) {
        throw OutputError("write failed for " + file.string());
    }
}

Trajectory read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("empty CSV");
    }
    const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 5 || (columns - 3) % 2 != 0) {
        throw std::invalid_argument("unexpected CSV header");
    }
    Trajectory traj;
    traj.n = (columns - 3) / 2;
    const auto parse = [](const std::string& cell) {
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            throw std::invalid_argument("malformed CSV cell '" + cell + "'");
        }
        return x;
    };
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        if (static_cast<int>(cells.size()) != columns) {
            throw std::invalid_argument("CSV row has the wrong number of cells");
        }
        traj.times.push_back(parse(cells[0]));
        Stacked p(2 * traj.n);
        for (int j = 0; j < 2 * traj.n; ++j) {
            p(j) = parse(cells[static_cast<std::size_t>(j + 1)]);
        }
        traj.positions.push_back(std::move(p));
        traj.e_theta_norm.push_back(parse(cells[cells.size() - 2]));
        if (cells.back().empty()) {
            traj.e_d.emplace_back(std::nullopt);
        } else {
            traj.e_d.emplace_back(parse(cells.back()));
        }
    }
    return traj;
}

namespace {

constexpr std::array<const char*, 10> palette{"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                              "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};

const char* agent_color(int i, int n) {
    // Agent n gets magenta so the two chain ends read as red and magenta.
    if (i == n - 1 && n > 1) {
        return "#cc00cc";
    }
    return palette[static_cast<std::size_t>(i) % palette.size()];
}

}  // namespace

void write_svg(const Trajectory& traj, const SvgStyle& style, std::ostream& out) {
    if (traj.size() == 0) {
        throw std::invalid_argument("cannot plot an empty trajectory");
    }
    const int n = traj.n;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : traj.positions) {
        for (int i = 0; i < n; ++i) {
            xmin = std::min(xmin, p(2 * i));
            xmax = std::max(xmax, p(2 * i));
            ymin = std::min(ymin, p(2 * i + 1));
            ymax = std::max(ymax, p(2 * i + 1));
        }
    }
    double span = std::max(xmax - xmin, ymax - ymin);
    if (!(span > 0.0)) {
        span = 1.0;
    }
    const double w = std::max(xmax - xmin, 1e-3 * span);
    const double h = std::max(ymax - ymin, 1e-3 * span);
    const double mx = 0.05 * w;
    const double my = 0.05 * h;
    const double cx = 0.5 * (xmin + xmax);
    const double cy = 0.5 * (ymin + ymax);
    const double vx = cx - 0.5 * w - mx;
    const double vy = -(cy + 0.5 * h + my);  // y axis points up in the plot
    const double vw = w + 2.0 * mx;
    const double vh = h + 2.0 * my;
    const double stroke = 0.004 * std::max(vw, vh);
    const double mark = 0.015 * std::max(vw, vh);
    const auto X = [](double x) { return format_real(x); };
    const auto Y = [](double y) { return format_real(-y); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
        << "preserveAspectRatio=\"xMidYMid meet\" viewBox=\"" << X(vx) << ' ' << X(vy) << ' ' << X(vw) << ' ' << X(vh)
        << "\">\n"
        << "<title>agent trajectories</title>\n"
        << "<rect x=\"" << X(vx) << "\" y=\"" << X(vy) << "\" width=\"" << X(vw) << "\" height=\"" << X(vh)
        << "\" fill=\"white\"/>\n";

    for (int i = 0; i < n; ++i) {
        out << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"" << agent_color(i, n) << "\" stroke-width=\""
            << X(stroke) << "\" points=\"";
        for (std::size_t s = 0; s < traj.size(); ++s) {
            out << (s ? " " : "") << X(traj.positions[s](2 * i)) << ',' << Y(traj.positions[s](2 * i + 1));
        }
        out << "\"/>\n";
    }
    const Stacked& first = traj.positions.front();
    const Stacked& last = traj.positions.back();
    for (int i = 0; i < n; ++i) {
        const double x = first(2 * i);
        const double y = -first(2 * i + 1);
        out << "<path class=\"initial\" fill=\"none\" stroke=\"" << agent_color(i, n) << "\" stroke-width=\""
            << X(stroke) << "\" d=\"M " << X(x - mark) << ' ' << X(y - mark) << " L " << X(x + mark) << ' '
            << X(y + mark) << " M " << X(x - mark) << ' ' << X(y + mark) << " L " << X(x + mark) << ' '
            << X(y - mark) << "\"/>\n";
    }
    for (int i = 0; i < n; ++i) {
        out << "<circle class=\"final\" fill=\"" << agent_color(i, n) << "\" cx=\"" << X(last(2 * i)) << "\" cy=\""
            << Y(last(2 * i + 1)) << "\" r=\"" << X(0.6 * mark) << "\"/>\n";
    }
    if (style.closing_edge) {
        out << "<line class=\"closing\" stroke=\"#d62728\" stroke-width=\"" << X(stroke) << "\" stroke-dasharray=\""
            << X(3 * stroke) << ',' << X(2 * stroke) << "\" x1=\"" << X(last(0)) << "\" y1=\"" << Y(last(1))
            << "\" x2=\"" << X(last(2 * n - 2)) << "\" y2=\"" << Y(last(2 * n - 1)) << "\"/>\n";
    }
    out << "</svg>\n";
}

void write_svg(const Trajectory& traj, const SvgStyle& style, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw OutputError("cannot write " + file.string());
    }
    write_svg(traj, style, out);
    if (!out) {
        throw OutputError("write failed for " + file.string());
    }
}

RunReport summarize(const Scenario& s, const Trajectory& traj, double tol) {
    RunReport r;
    r.diverged = traj.diverged;
    r.diverged_at = traj.diverged_at;
    r.convergence_time = convergence_time(traj, tol);
    r.converged = r.convergence_time.has_value();
    if (traj.size() == 0) {
        return r;
    }
    const ControlLaw law = s.law_at(traj.times.back());
    const MetricFrame& final_frame = traj.metrics.back();
    r.final_sides = final_frame.spacing;
    if (law.controls_closing_edge()) {
        r.final_sides.push_back(final_frame.closing_distance);
    }
    r.final_angles = final_frame.angles;
    r.e_d_final = traj.e_d.back();
    if (law.mode != Mode::gradient3 && law.mode != Mode::mismatched3) {
        r.verdict = classify(law.spec, s.n).verdict;
    }
    if (!traj.diverged) {
        const double start = traj.times.back() - 0.1 * (traj.times.back() - traj.times.front());
        RigidFit mean;
        double worst = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.times[i] < start || !traj.metrics[i].rigid_fit) {
                continue;
            }
            const RigidFit& f = *traj.metrics[i].rigid_fit;
            mean.v += f.v;
            mean.omega += f.omega;
            worst = std::max(worst, f.residual);
            ++count;
        }
        if (count > 0) {
            mean.v /= count;
            mean.omega /= count;
            mean.residual = worst;
            r.rigid_fit = mean;
        }
    }
    return r;
}

namespace {

json optional_real(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json to_json(const RunReport& r) {
    json j;
    j["converged"] = r.converged;
    j["convergence_time"] = optional_real(r.convergence_time);
    j["diverged"] = r.diverged;
    j["diverged_at"] = optional_real(r.diverged_at);
    j["final_sides"] = json::array();
    for (double x : r.final_sides) j["final_sides"].push_back(finite_or_null(x));
    j["final_angles"] = json::array();
    for (double x : r.final_angles) j["final_angles"].push_back(finite_or_null(x));
    j["e_d_final"] = optional_real(r.e_d_final);
    j["verdict"] = r.verdict ? json(std::string(to_string(*r.verdict))) : json(nullptr);
    if (r.rigid_fit) {
        j["rigid_fit"] = {{"v", {r.rigid_fit->v.x(), r.rigid_fit->v.y()}},
                          {"omega", r.rigid_fit->omega},
                          {"residual", r.rigid_fit->residual}};
    } else {
        j["rigid_fit"] = nullptr;
    }
    return j;
}

json to_json(const StabilityReport& r) {
    json j;
    j["n"] = r.n;
    j["theta"] = r.theta;
    j["eigenvalues"] = json::array();
    for (const auto& ev : r.eigenvalues) {
        j["eigenvalues"].push_back({{"re", ev.real()}, {"im", ev.imag()}});
    }
    j["min_real"] = r.min_real;
    j["bound"] = r.bound;
    j["verdict"] = std::string(to_string(r.verdict));
    j["closed_form"] = r.closed_form ? json(*r.closed_form) : json(nullptr);
    return j;
}

}  // namespace polyform
