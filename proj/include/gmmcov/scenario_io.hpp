#pragma once

// Scenario files (JSON) and CSV export. Needs nlohmann/json on the include path.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmmcov/sim.hpp"

namespace gmmcov {

struct ScenarioFile {
    Scenario base;  // controller field unused
    std::vector<Controller> controllers;
    std::string output_dir = "out";
    long long seed = 0;  // reserved; every component is deterministic

    std::vector<Scenario> scenarios() const {
        std::vector<Scenario> out;
        for (const Controller c : controllers) {
            Scenario s = base;
            s.controller = c;
            out.push_back(std::move(s));
        }
        return out;
    }
};

namespace io_detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ParseError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

inline const Json& require(const Json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ParseError("missing key '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
    return obj.at(key);
}

inline double number(const Json& j, const std::string& key) {
    if (!j.is_number()) throw ParseError("'" + key + "' must be a number");
    return j.get<double>();
}

inline int integer(const Json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ParseError("'" + key + "' must be an integer");
    return j.get<int>();
}

inline Point2 point(const Json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2) throw ParseError("'" + key + "' must be an [x, y] pair");
    return {number(j[0], key), number(j[1], key)};
}

inline std::vector<Point2> points(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ParseError("'" + key + "' must be a list of [x, y] pairs");
    std::vector<Point2> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(point(j[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<double> numbers(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ParseError("'" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(number(x, key));
    return out;
}

inline QuadratureSpec quadrature(const Json& j, const std::string& key) {
    reject_unknown(j, key, {"order", "max_depth", "rel_tol"});
    QuadratureSpec q;
    if (j.contains("order")) q.triangle_rule_order = integer(j["order"], key + ".order");
    if (j.contains("max_depth")) q.max_subdivision_depth = integer(j["max_depth"], key + ".max_depth");
    if (j.contains("rel_tol")) q.target_rel_tol = number(j["rel_tol"], key + ".rel_tol");
    try {
        validate(q);
    } catch (const ValidationError& e) {
        throw ValidationError(key + ": " + e.what());
    }
    return q;
}

// Explicit per-component waypoints.
inline std::vector<GaussComponent> explicit_components(const Json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("'components' must be a non-empty list");
    std::vector<GaussComponent> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string where = "components[" + std::to_string(k) + "]";
        reject_unknown(j[k], where, {"weight", "sigma", "waypoints"});
        const Json& wps = require(j[k], where, "waypoints");
        if (!wps.is_array()) throw ParseError("'" + where + ".waypoints' must be a list");
        std::vector<Waypoint> schedule;
        for (std::size_t w = 0; w < wps.size(); ++w) {
            const std::string wk = where + ".waypoints[" + std::to_string(w) + "]";
            reject_unknown(wps[w], wk, {"t", "position"});
            schedule.push_back({number(require(wps[w], wk, "t"), wk + ".t"), point(require(wps[w], wk, "position"), wk + ".position")});
        }
        try {
            GaussComponent c{number(require(j[k], where, "weight"), where + ".weight"),
                             number(require(j[k], where, "sigma"), where + ".sigma"), SourceSchedule(schedule)};
            validate(c);
            out.push_back(std::move(c));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

// Every source moves through a shared list of configurations: it dwells at the first one
// until start_time, then travels one leg per entry of leg_durations.
inline std::vector<GaussComponent> configuration_components(const Json& j) {
    const std::string where = "configurations";
    reject_unknown(j, where, {"positions", "start_time", "leg_durations", "weights", "sigmas"});
    const Json& pos = require(j, where, "positions");
    if (!pos.is_array() || pos.empty()) throw ParseError("'configurations.positions' must be a non-empty list");
    std::vector<std::vector<Point2>> configs;
    for (std::size_t l = 0; l < pos.size(); ++l)
        configs.push_back(points(pos[l], "configurations.positions[" + std::to_string(l) + "]"));
    const double start = number(require(j, where, "start_time"), "configurations.start_time");
    const auto legs = numbers(require(j, where, "leg_durations"), "configurations.leg_durations");
    const auto weights = numbers(require(j, where, "weights"), "configurations.weights");
    const auto sigmas = numbers(require(j, where, "sigmas"), "configurations.sigmas");
    const std::size_t K = configs.front().size();
    for (const auto& c : configs)
        if (c.size() != K) throw ValidationError("configurations.positions: every configuration needs " + std::to_string(K) + " sources");
    if (legs.size() + 1 != configs.size())
        throw ValidationError("configurations.leg_durations: expected " + std::to_string(configs.size() - 1) + " entries");
    if (weights.size() != K) throw ValidationError("configurations.weights: expected " + std::to_string(K) + " entries");
    if (sigmas.size() != K) throw ValidationError("configurations.sigmas: expected " + std::to_string(K) + " entries");
    std::vector<GaussComponent> out;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<Waypoint> wps{{start, configs[0][k]}};
        double t = start;
        for (std::size_t l = 0; l < legs.size(); ++l) {
            t += legs[l];
            wps.push_back({t, configs[l + 1][k]});
        }
        try {
            GaussComponent c{weights[k], sigmas[k], SourceSchedule(wps)};
            validate(c);
            out.push_back(std::move(c));
        } catch (const ValidationError& e) {
            throw ValidationError("configurations, source " + std::to_string(k) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace io_detail

inline ScenarioFile parse_scenario_text(const std::string& text) {
    using io_detail::Json;
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("malformed scenario file: ") + e.what());
    }
    io_detail::reject_unknown(j, "", {"omega", "agents", "components", "configurations", "control", "controllers", "dt",
                                      "t_end", "quadrature", "cost_quadrature", "output_dir", "log_stride", "seed"});

    std::vector<GaussComponent> comps;
    if (j.contains("components") == j.contains("configurations"))
        throw ParseError("give exactly one of 'components' or 'configurations'");
    comps = j.contains("components") ? io_detail::explicit_components(j["components"])
                                     : io_detail::configuration_components(j["configurations"]);

    std::optional<ConvexPolygon> omega;
    try {
        omega.emplace(io_detail::points(io_detail::require(j, "", "omega"), "omega"));
    } catch (const InvalidPolygon& e) {
        throw ValidationError(std::string("omega: ") + e.what());
    }

    ControlParams params;
    if (j.contains("control")) {
        const Json& c = j["control"];
        io_detail::reject_unknown(c, "control", {"beta", "epsilon", "s_max"});
        if (c.contains("beta")) params.beta = io_detail::number(c["beta"], "control.beta");
        if (c.contains("epsilon")) params.epsilon = io_detail::number(c["epsilon"], "control.epsilon");
        if (c.contains("s_max")) params.s_max = io_detail::number(c["s_max"], "control.s_max");
    }

    ScenarioFile f{Scenario{*omega, GmmDensity(std::move(comps)), io_detail::points(io_detail::require(j, "", "agents"), "agents"),
                            params, Controller::Gmm, 0.05, 0.0, {}, {}, 1},
                   {Controller::Lloyd, Controller::DynamicLloyd, Controller::Gmm}};
    Scenario& s = f.base;
    s.t_end = io_detail::number(io_detail::require(j, "", "t_end"), "t_end");
    if (j.contains("dt")) s.dt = io_detail::number(j["dt"], "dt");
    if (j.contains("log_stride")) s.log_stride = io_detail::integer(j["log_stride"], "log_stride");
    if (j.contains("quadrature")) s.quadrature = io_detail::quadrature(j["quadrature"], "quadrature");
    s.cost_eval_spec = j.contains("cost_quadrature") ? io_detail::quadrature(j["cost_quadrature"], "cost_quadrature")
                                                     : s.quadrature;
    if (j.contains("controllers")) {
        const Json& cs = j["controllers"];
        if (!cs.is_array()) throw ParseError("'controllers' must be a list of names");
        f.controllers.clear();
        for (const auto& name : cs) {
            if (!name.is_string()) throw ParseError("'controllers' must be a list of names");
            const auto c = controller_from_name(name.get<std::string>());
            if (!c) throw ValidationError("controllers: unknown controller '" + name.get<std::string>() + "'");
            f.controllers.push_back(*c);
        }
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) throw ParseError("'output_dir' must be a string");
        f.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ParseError("'seed' must be an integer");
        f.seed = j["seed"].get<long long>();
    }
    validate(s);
    return f;
}

inline ScenarioFile load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

/// One Scenario per requested controller.
inline std::vector<Scenario> parse_scenario(const std::filesystem::path& path) {
    return load_scenario_file(path).scenarios();
}

struct RunSummary {
    Controller controller;
    double final_normalized = 0.0;
    double mean_normalized = 0.0;
    double motion_mean_normalized = 0.0;  // over logged times inside the source-motion window
    std::optional<std::string> error;
};

inline RunSummary summarize(const Scenario& sc, const SimTrace& trace) {
    RunSummary s;
    s.controller = sc.controller;
    s.error = trace.error;
    if (trace.size() == 0) return s;
    const double t0 = sc.gmm.motion_start(), t1 = sc.gmm.motion_end();
    double sum = 0.0, motion = 0.0;
    std::size_t in_motion = 0;
    for (std::size_t j = 0; j < trace.size(); ++j) {
        const double h = trace.normalized_cost(j);
        sum += h;
        if (trace.times[j] >= t0 && trace.times[j] <= t1) {
            motion += h;
            ++in_motion;
        }
    }
    s.final_normalized = trace.normalized_cost(trace.size() - 1);
    s.mean_normalized = sum / static_cast<double>(trace.size());
    s.motion_mean_normalized = in_motion ? motion / static_cast<double>(in_motion) : s.mean_normalized;
    return s;
}

namespace io_detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline void write_trace(const std::filesystem::path& dir, const Scenario& sc, const SimTrace& trace) {
    const std::string name(controller_name(sc.controller));
    auto out = open_csv(dir / ("trace_" + name + ".csv"));
    out << "t,agent,x,y,m_i,cx,cy,dist_to_centroid,speed,clamped,switched\n";
    for (std::size_t j = 0; j < trace.size(); ++j) {
        for (std::size_t i = 0; i < trace.positions[j].size(); ++i) {
            const auto& p = trace.positions[j][i];
            const auto& d = trace.diagnostics[j][i];
            out << fmt(trace.times[j]) << ',' << i << ',' << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(d.mass) << ','
                << fmt(d.centroid.x) << ',' << fmt(d.centroid.y) << ',' << fmt(d.dist_to_centroid) << ','
                << fmt(d.speed) << ',' << (d.clamped ? 1 : 0) << ',' << (d.switched ? 1 : 0) << '\n';
        }
    }
    auto cost = open_csv(dir / ("cost_" + name + ".csv"));
    cost << "t,H,H_normalized\n";
    for (std::size_t j = 0; j < trace.size(); ++j)
        cost << fmt(trace.times[j]) << ',' << fmt(trace.cost[j]) << ',' << fmt(trace.normalized_cost(j)) << '\n';
    if (!out || !cost) throw IoError("write failed in " + dir.string());
}

}  // namespace io_detail

/// Runs every scenario and writes trace_<c>.csv, cost_<c>.csv and summary.csv into
/// `outdir`. Returns 0 on success and 2 if any run stopped early; the partial traces
/// are still written.
inline int run_and_export(const std::vector<Scenario>& scenarios, const std::filesystem::path& outdir,
                          std::vector<RunSummary>* summaries = nullptr) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create " + outdir.string() + ": " + ec.message());
    auto summary = io_detail::open_csv(outdir / "summary.csv");
    summary << "controller,final_normalized_cost,mean_normalized_cost,motion_mean_normalized_cost,status\n";
    int status = 0;
    for (const auto& sc : scenarios) {
        const SimTrace trace = run(sc);
        io_detail::write_trace(outdir, sc, trace);
        const RunSummary s = summarize(sc, trace);
        summary << controller_name(sc.controller) << ',' << io_detail::fmt(s.final_normalized) << ','
                << io_detail::fmt(s.mean_normalized) << ',' << io_detail::fmt(s.motion_mean_normalized) << ','
                << (s.error ? "aborted" : "ok") << '\n';
        summary.flush();
        if (s.error) status = 2;
        if (summaries) summaries->push_back(s);
    }
    if (!summary) throw IoError("write failed for summary.csv");
    return status;
}

}  // namespace gmmcov
