#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gmmcov/density.hpp"
#include "gmmcov/errors.hpp"
#include "gmmcov/geometry.hpp"
#include "gmmcov/quadrature.hpp"
#include "gmmcov/vec2.hpp"

namespace gmmcov {

struct ControlParams {
    double beta = 0.05;     // 1/s, centroid-tracking gain
    double epsilon = 1e-3;  // m, switch threshold
    double s_max = 3.5;     // m/s
};

inline void validate(const ControlParams& p) {
    if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw ValidationError("beta must be > 0 (got " + std::to_string(p.beta) + ")");
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) throw ValidationError("epsilon must be > 0 (got " + std::to_string(p.epsilon) + ")");
    if (!(p.s_max > 0.0)) throw ValidationError("s_max must be > 0 (got " + std::to_string(p.s_max) + ")");
}

/// Everything one agent knows when choosing its velocity: its own cell and moments,
/// the source velocities, and the boundary flux vectors of its cell.
struct LocalView {
    Point2 self_pos;
    VoronoiCell cell;
    CellMoments moments;
    std::vector<Vec2> source_velocities;          // w_k(t)
    std::vector<Vec2> omega_flux;                 // per component: integral over the region-boundary part of the cell of |q-p|^2 n phi_k
    std::optional<MomentPartials> partials;       // only for the dynamic Lloyd law
};

inline LocalView make_local_view(const VoronoiCell& cell, const GmmDensity& gmm, double t,
                                 const QuadratureSpec& spec, bool with_partials) {
    LocalView view{cell.site, cell, cell_moments(cell, gmm, t, spec), gmm.velocities(t), {}, std::nullopt};
    const auto boundary = omega_segments(cell);
    view.omega_flux.reserve(gmm.size());
    for (std::size_t k = 0; k < gmm.size(); ++k) {
        const Vec2 w = view.source_velocities[k];
        if (boundary.empty() || (w.x == 0.0 && w.y == 0.0)) {
            view.omega_flux.push_back({});
        } else {
            view.omega_flux.push_back(boundary_flux_vector(boundary, cell.site, gmm[k], t, spec));
        }
    }
    if (with_partials) view.partials = moment_partials(cell, gmm, t, view.moments, spec);
    return view;
}

struct ControlOutput {
    Vec2 velocity;
    bool switched = false;       // near-centroid branch without the gain correction
    double gain_correction = 0;  // F_i
};

inline Vec2 lloyd_control(const LocalView& view, const ControlParams& params) {
    const Vec2 diff = view.self_pos - view.moments.centroid;
    return diff * (-0.5 * params.beta);
}

inline Vec2 dynamic_lloyd_control(const LocalView& view, const ControlParams& params) {
    if (!view.partials) throw MissingPartials("dynamic Lloyd control needs dm/dt and dc/dt");
    const Vec2 diff = view.self_pos - view.moments.centroid;
    const double gain = view.partials->mass_rate / view.moments.mass + params.beta;
    return view.partials->centroid_rate + diff * (-0.5 * gain);
}

/// F_i: moment offsets first, then region-boundary flux, both in component order.
inline double gain_correction(const LocalView& view) {
    const CellMoments& m = view.moments;
    double f = 0.0;
    for (std::size_t k = 0; k < view.source_velocities.size(); ++k)
        f += 2.0 * m.component_mass[k] * dot(view.source_velocities[k], m.centroid - m.component_centroid[k]);
    for (std::size_t k = 0; k < view.source_velocities.size(); ++k)
        f += dot(view.source_velocities[k], view.omega_flux[k]);
    return f;
}

// Mass-weighted mean of the source velocities.
inline Vec2 feed_forward(const LocalView& view) {
    Vec2 acc{};
    for (std::size_t k = 0; k < view.source_velocities.size(); ++k)
        acc += view.source_velocities[k] * view.moments.component_mass[k];
    return acc / view.moments.mass;
}

inline ControlOutput gmm_control_detail(const LocalView& view, const ControlParams& params) {
    const Vec2 diff = view.self_pos - view.moments.centroid;
    const double d = norm(diff);
    ControlOutput out;
    const Vec2 ff = feed_forward(view);
    if (d <= params.epsilon) {
        out.switched = true;
        out.velocity = ff + diff * (-0.5 * params.beta);
        return out;
    }
    out.gain_correction = gain_correction(view);
    const double gain = params.beta - out.gain_correction / (view.moments.mass * d * d);
    out.velocity = ff + diff * (-0.5 * gain);
    return out;
}

inline Vec2 gmm_control(const LocalView& view, const ControlParams& params) {
    return gmm_control_detail(view, params).velocity;
}

inline Vec2 clamp_speed(const Vec2& v, double s_max) {
    const double s = norm(v);
    if (s <= s_max) return v;
    return v * (s_max / s);
}

}  // namespace gmmcov
