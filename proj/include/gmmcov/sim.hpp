#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmmcov/control.hpp"
#include "gmmcov/density.hpp"
#include "gmmcov/errors.hpp"
#include "gmmcov/geometry.hpp"
#include "gmmcov/quadrature.hpp"

namespace gmmcov {

enum class Controller { Lloyd, DynamicLloyd, Gmm };

inline std::string_view controller_name(Controller c) {
    switch (c) {
        case Controller::Lloyd: return "lloyd";
        case Controller::DynamicLloyd: return "dynamic";
        case Controller::Gmm: return "gmm";
    }
    return "unknown";
}

inline std::optional<Controller> controller_from_name(std::string_view s) {
    if (s == "lloyd") return Controller::Lloyd;
    if (s == "dynamic") return Controller::DynamicLloyd;
    if (s == "gmm") return Controller::Gmm;
    return std::nullopt;
}

struct Scenario {
    ConvexPolygon omega;
    GmmDensity gmm;
    std::vector<Point2> initial_positions;
    ControlParams params;
    Controller controller = Controller::Gmm;
    double dt = 0.05;
    double t_end = 0.0;
    QuadratureSpec quadrature;
    QuadratureSpec cost_eval_spec;
    int log_stride = 1;
};

inline void check_positions(std::span<const Point2> positions, const ConvexPolygon& omega) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!is_finite(positions[i]) || !contains(omega, positions[i]))
            throw ValidationError("agent " + std::to_string(i) + " at (" + std::to_string(positions[i].x) + ", " +
                                  std::to_string(positions[i].y) + ") lies outside the region");
        for (std::size_t j = 0; j < i; ++j)
            if (distance(positions[i], positions[j]) < tolerance::coincident_agents)
                throw ValidationError("agents " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
    }
}

inline void validate(const Scenario& s) {
    if (s.initial_positions.empty()) throw ValidationError("scenario needs at least one agent");
    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) throw ValidationError("dt must be > 0 (got " + std::to_string(s.dt) + ")");
    if (!(s.t_end >= 0.0) || !std::isfinite(s.t_end)) throw ValidationError("t_end must be >= 0 (got " + std::to_string(s.t_end) + ")");
    if (s.log_stride < 1) throw ValidationError("log_stride must be >= 1");
    validate(s.params);
    validate(s.quadrature);
    validate(s.cost_eval_spec);
    check_positions(s.initial_positions, s.omega);
}

struct SimState {
    std::vector<Point2> positions;
    double t = 0.0;
};

struct AgentDiagnostics {
    double mass = 0.0;
    Point2 centroid;
    double dist_to_centroid = 0.0;
    double speed = 0.0;  // of the applied (clamped) velocity
    bool clamped = false;
    bool switched = false;
};

struct StepResult {
    SimState next;
    std::vector<AgentDiagnostics> diagnostics;
};

/// H = 1/2 sum_i integral over V_i of |q - p_i|^2 phi(q, t).
inline double coverage_cost(std::span<const Point2> positions, const ConvexPolygon& omega, const GmmDensity& gmm,
                            double t, const QuadratureSpec& spec) {
    const auto cells = tessellate(positions, omega);
    double h = 0.0;
    for (const auto& cell : cells) h += polygon_second_moment(cell.polygon, cell.site, gmm, t, spec);
    return 0.5 * h;
}

namespace detail {

struct Commands {
    std::vector<Vec2> velocity;  // clamped
    std::vector<AgentDiagnostics> diagnostics;
    std::vector<double> second_moment;  // integral of |q - p_i|^2 phi over each cell
};

// Controls for every agent from one snapshot. `order` only changes the evaluation order.
inline Commands compute_commands(std::span<const VoronoiCell> cells, const Scenario& sc, double t,
                                 std::span<const std::size_t> order) {
    Commands out;
    out.velocity.resize(cells.size());
    out.diagnostics.resize(cells.size());
    out.second_moment.resize(cells.size());
    for (const std::size_t i : order) {
        const LocalView view =
            make_local_view(cells[i], sc.gmm, t, sc.quadrature, sc.controller == Controller::DynamicLloyd);
        ControlOutput u;
        switch (sc.controller) {
            case Controller::Lloyd: u.velocity = lloyd_control(view, sc.params); break;
            case Controller::DynamicLloyd: u.velocity = dynamic_lloyd_control(view, sc.params); break;
            case Controller::Gmm: u = gmm_control_detail(view, sc.params); break;
        }
        const Vec2 v = clamp_speed(u.velocity, sc.params.s_max);
        out.velocity[i] = v;
        out.second_moment[i] = view.moments.second_moment(view.self_pos);
        AgentDiagnostics& d = out.diagnostics[i];
        d.mass = view.moments.mass;
        d.centroid = view.moments.centroid;
        d.dist_to_centroid = distance(view.self_pos, view.moments.centroid);
        d.speed = norm(v);
        d.clamped = !(v == u.velocity);
        d.switched = u.switched;
    }
    return out;
}

inline std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
}

inline std::vector<Point2> advance(std::span<const Point2> positions, std::span<const Vec2> velocity, double dt,
                                   const ConvexPolygon& omega) {
    std::vector<Point2> next(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) next[i] = project_onto(omega, positions[i] + velocity[i] * dt);
    return next;
}

}  // namespace detail

/// One synchronous forward-Euler step: every control is computed from the time-t
/// snapshot before any agent moves.
inline StepResult step(const SimState& state, const Scenario& sc, std::span<const std::size_t> order = {}) {
    const auto cells = tessellate(state.positions, sc.omega);
    const auto default_order = detail::identity_order(cells.size());
    const auto cmd = detail::compute_commands(cells, sc, state.t, order.empty() ? std::span(default_order) : order);
    return {{detail::advance(state.positions, cmd.velocity, sc.dt, sc.omega), state.t + sc.dt}, cmd.diagnostics};
}

struct SimTrace {
    std::vector<double> times;
    std::vector<std::vector<Point2>> positions;
    std::vector<double> cost;
    std::vector<std::vector<AgentDiagnostics>> diagnostics;
    std::optional<std::string> error;  // set when the run aborted early

    std::size_t size() const { return times.size(); }
    double normalized_cost(std::size_t j) const { return cost[j] / cost.front(); }
};

inline std::size_t step_count(const Scenario& sc) {
    return static_cast<std::size_t>(std::llround(sc.t_end / sc.dt));
}

/// Runs from t = 0 to t_end, logging every `log_stride` steps. A sub-module failure
/// stops the run; the trace up to that point is returned with `error` set.
inline SimTrace run(const Scenario& sc) {
    SimTrace trace;
    const std::size_t n = step_count(sc);
    const auto order = detail::identity_order(sc.initial_positions.size());
    std::vector<Point2> positions = sc.initial_positions;
    try {
        validate(sc);
        for (std::size_t j = 0; j <= n; ++j) {
            const double t = static_cast<double>(j) * sc.dt;
            const bool logged = j % static_cast<std::size_t>(sc.log_stride) == 0;
            if (!logged && j == n) break;
            const auto cells = tessellate(positions, sc.omega);
            const auto cmd = detail::compute_commands(cells, sc, t, order);
            if (logged) {
                // The control pass already integrated the cost when both specs agree.
                double h = 0.0;
                if (sc.cost_eval_spec == sc.quadrature) {
                    for (const double s : cmd.second_moment) h += s;
                } else {
                    for (const auto& cell : cells)
                        h += polygon_second_moment(cell.polygon, cell.site, sc.gmm, t, sc.cost_eval_spec);
                }
                trace.times.push_back(t);
                trace.positions.push_back(positions);
                trace.cost.push_back(0.5 * h);
                trace.diagnostics.push_back(cmd.diagnostics);
            }
            if (j < n) positions = detail::advance(positions, cmd.velocity, sc.dt, sc.omega);
        }
    } catch (const Error& e) {
        trace.error = e.what();
    }
    return trace;
}

}  // namespace gmmcov
