#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gmmcov/errors.hpp"
#include "gmmcov/vec2.hpp"

namespace gmmcov {

struct Waypoint {
    double time = 0.0;  // s
    Point2 position;
};

/// Piecewise-linear source trajectory. Outside the waypoint span the source rests at
/// the first/last waypoint; velocities are right-continuous at waypoint instants.
class SourceSchedule {
public:
    explicit SourceSchedule(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {
        if (waypoints_.empty()) throw ValidationError("source schedule needs at least one waypoint");
        for (std::size_t i = 0; i < waypoints_.size(); ++i) {
            if (!std::isfinite(waypoints_[i].time) || !is_finite(waypoints_[i].position))
                throw ValidationError("source schedule waypoint " + std::to_string(i) + " is not finite");
            if (i > 0 && !(waypoints_[i].time > waypoints_[i - 1].time))
                throw ValidationError("source schedule times must be strictly increasing");
        }
    }

    static SourceSchedule stationary(Point2 p) { return SourceSchedule({{0.0, p}}); }

    const std::vector<Waypoint>& waypoints() const { return waypoints_; }
    double start_time() const { return waypoints_.front().time; }
    double end_time() const { return waypoints_.back().time; }

    Point2 position(double t) const {
        if (t <= waypoints_.front().time) return waypoints_.front().position;
        if (t >= waypoints_.back().time) return waypoints_.back().position;
        const std::size_t i = leg_index(t);
        const Waypoint& a = waypoints_[i];
        const Waypoint& b = waypoints_[i + 1];
        const double s = (t - a.time) / (b.time - a.time);
        return a.position + (b.position - a.position) * s;
    }

    Vec2 velocity(double t) const {
        if (t < waypoints_.front().time || t >= waypoints_.back().time) return {};
        const std::size_t i = leg_index(t);
        const Waypoint& a = waypoints_[i];
        const Waypoint& b = waypoints_[i + 1];
        return (b.position - a.position) / (b.time - a.time);
    }

private:
    // Index i of the leg [t_i, t_{i+1}) containing t; requires t inside the span.
    std::size_t leg_index(double t) const {
        auto it = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.time; });
        return static_cast<std::size_t>(it - waypoints_.begin()) - 1;
    }

    std::vector<Waypoint> waypoints_;
};

struct GaussComponent {
    double weight = 1.0;  // a_k
    double sigma = 1.0;   // m
    SourceSchedule schedule = SourceSchedule::stationary({});

    Point2 mean(double t) const { return schedule.position(t); }
    Vec2 velocity(double t) const { return schedule.velocity(t); }

    double value(const Point2& q, double t) const {
        return weight * std::exp(-norm2(q - mean(t)) / (2.0 * sigma * sigma));
    }

    Vec2 gradient(const Point2& q, double t) const {
        const Vec2 r = q - mean(t);
        return r * (-weight * std::exp(-norm2(r) / (2.0 * sigma * sigma)) / (sigma * sigma));
    }

    double time_derivative(const Point2& q, double t) const {
        const Vec2 r = q - mean(t);
        return dot(velocity(t), r) / (sigma * sigma) * weight * std::exp(-norm2(r) / (2.0 * sigma * sigma));
    }
};

inline void validate(const GaussComponent& c) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw ValidationError("component weight must be > 0");
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw ValidationError("component sigma must be > 0");
}

/// Sum of isotropic Gaussians with moving means.
class GmmDensity {
public:
    explicit GmmDensity(std::vector<GaussComponent> components) : components_(std::move(components)) {
        if (components_.empty()) throw ValidationError("density needs at least one component");
        for (const auto& c : components_) validate(c);
    }

    const std::vector<GaussComponent>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    const GaussComponent& operator[](std::size_t k) const { return components_[k]; }

    std::vector<Vec2> velocities(double t) const {
        std::vector<Vec2> w;
        w.reserve(components_.size());
        for (const auto& c : components_) w.push_back(c.velocity(t));
        return w;
    }

    // Earliest and latest instants at which any source moves.
    double motion_start() const {
        double t = components_.front().schedule.start_time();
        for (const auto& c : components_) t = std::min(t, c.schedule.start_time());
        return t;
    }
    double motion_end() const {
        double t = components_.front().schedule.end_time();
        for (const auto& c : components_) t = std::max(t, c.schedule.end_time());
        return t;
    }

private:
    std::vector<GaussComponent> components_;
};

inline Point2 source_position(const SourceSchedule& sched, double t) { return sched.position(t); }
inline Vec2 source_velocity(const SourceSchedule& sched, double t) { return sched.velocity(t); }

inline double eval_phi(const GmmDensity& gmm, const Point2& q, double t) {
    double v = 0.0;
    for (const auto& c : gmm.components()) v += c.value(q, t);
    return v;
}

inline Vec2 grad_phi_k(const GaussComponent& comp, const Point2& q, double t) { return comp.gradient(q, t); }

inline Vec2 grad_phi(const GmmDensity& gmm, const Point2& q, double t) {
    Vec2 g{};
    for (const auto& c : gmm.components()) g += c.gradient(q, t);
    return g;
}

inline double dphi_dt(const GmmDensity& gmm, const Point2& q, double t) {
    double v = 0.0;
    for (const auto& c : gmm.components()) v += c.time_derivative(q, t);
    return v;
}

}  // namespace gmmcov
