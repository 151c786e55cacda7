#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gmmcov/density.hpp"
#include "gmmcov/errors.hpp"
#include "gmmcov/geometry.hpp"
#include "gmmcov/rules.hpp"
#include "gmmcov/vec2.hpp"

namespace gmmcov {

struct QuadratureSpec {
    int triangle_rule_order = 7;
    int max_subdivision_depth = 6;
    double target_rel_tol = 1e-9;

    friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

inline void validate(const QuadratureSpec& spec) {
    if (spec.triangle_rule_order < 1) throw ValidationError("quadrature order must be >= 1");
    if (spec.max_subdivision_depth < 0) throw ValidationError("quadrature depth must be >= 0");
    if (!(spec.target_rel_tol > 0.0)) throw ValidationError("quadrature tolerance must be > 0");
}

template <std::size_t N>
using Channels = std::array<double, N>;

struct Triangle {
    Point2 a;
    Point2 b;
    Point2 c;

    double area() const { return 0.5 * std::abs(cross(b - a, c - a)); }
    double max_edge() const { return std::max({distance(a, b), distance(b, c), distance(c, a)}); }
};

inline double distance_to_triangle(const Triangle& t, const Point2& q) {
    const double s0 = cross(t.b - t.a, q - t.a);
    const double s1 = cross(t.c - t.b, q - t.b);
    const double s2 = cross(t.a - t.c, q - t.c);
    const bool has_neg = s0 < 0 || s1 < 0 || s2 < 0;
    const bool has_pos = s0 > 0 || s1 > 0 || s2 > 0;
    if (!(has_neg && has_pos)) return 0.0;
    return std::min({distance(q, closest_point_on_segment(t.a, t.b, q)),
                     distance(q, closest_point_on_segment(t.b, t.c, q)),
                     distance(q, closest_point_on_segment(t.c, t.a, q))});
}

inline std::array<Triangle, 4> split4(const Triangle& t) {
    const Point2 ab = (t.a + t.b) * 0.5;
    const Point2 bc = (t.b + t.c) * 0.5;
    const Point2 ca = (t.c + t.a) * 0.5;
    return {Triangle{t.a, ab, ca}, Triangle{ab, t.b, bc}, Triangle{ca, bc, t.c}, Triangle{ab, bc, ca}};
}

/// Triangles smaller than `sigma / 2` are required wherever the integrand may peak,
/// i.e. within `radius` of `center`.
struct Resolution {
    Point2 center;
    double sigma = 1.0;
    double radius = std::numeric_limits<double>::infinity();
};

namespace detail {

template <std::size_t N>
struct RuleResult {
    Channels<N> value{};
    Channels<N> magnitude{};  // same rule applied to |f|
};

template <std::size_t N, class F>
RuleResult<N> apply_rule(const TriangleRule& rule, const Triangle& t, F& f) {
    RuleResult<N> r;
    const double area = t.area();
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
        const auto& l = rule.points[j];
        const Point2 q{l[0] * t.a.x + l[1] * t.b.x + l[2] * t.c.x, l[0] * t.a.y + l[1] * t.b.y + l[2] * t.c.y};
        const Channels<N> v = f(q);
        const double w = rule.weights[j] * area;
        for (std::size_t c = 0; c < N; ++c) {
            r.value[c] += w * v[c];
            r.magnitude[c] += w * std::abs(v[c]);
        }
    }
    return r;
}

template <std::size_t N, class F>
class AdaptiveTriangleIntegrator {
public:
    AdaptiveTriangleIntegrator(F& f, const TriangleRule& rule, const QuadratureSpec& spec, double total_area)
        : f_(f), rule_(rule), spec_(spec), total_area_(total_area) {}

    void set_budget(const Channels<N>& magnitude) { magnitude_ = magnitude; }

    // Accept when the change is small relative to either the triangle's own |f| integral
    // or its area share of the whole |f| integral; summed over triangles this bounds the
    // total change by 2 * tol * integral of |f|.
    bool accepted(const RuleResult<N>& coarse, const Channels<N>& fine, double area) const {
        const double frac = area / total_area_;
        for (std::size_t c = 0; c < N; ++c) {
            const double budget = std::max(coarse.magnitude[c], magnitude_[c] * frac);
            if (!(budget > 0.0)) continue;
            if (std::abs(fine[c] - coarse.value[c]) > spec_.target_rel_tol * budget) return false;
        }
        return true;
    }

    Channels<N> refine(const Triangle& t, const RuleResult<N>& coarse, int level) const {
        const auto kids = split4(t);
        std::array<RuleResult<N>, 4> parts{};
        Channels<N> fine{};
        for (std::size_t i = 0; i < 4; ++i) {
            parts[i] = apply_rule<N>(rule_, kids[i], f_);
            for (std::size_t c = 0; c < N; ++c) fine[c] += parts[i].value[c];
        }
        if (accepted(coarse, fine, t.area())) return fine;
        if (level >= spec_.max_subdivision_depth) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "quadrature did not reach relative tolerance %g within depth %d",
                          spec_.target_rel_tol, spec_.max_subdivision_depth);
            throw QuadratureNotConverged(msg);
        }
        Channels<N> sum{};
        for (std::size_t i = 0; i < 4; ++i) {
            const Channels<N> part = refine(kids[i], parts[i], level + 1);
            for (std::size_t c = 0; c < N; ++c) sum[c] += part[c];
        }
        return sum;
    }

private:
    F& f_;
    const TriangleRule& rule_;
    const QuadratureSpec& spec_;
    double total_area_;
    Channels<N> magnitude_{};
};

// Halves t across its longest edge.
inline std::array<Triangle, 2> bisect(const Triangle& t) {
    const double ab = norm2(t.b - t.a), bc = norm2(t.c - t.b), ca = norm2(t.a - t.c);
    if (ab >= bc && ab >= ca) {
        const Point2 m = (t.a + t.b) * 0.5;
        return {Triangle{t.a, m, t.c}, Triangle{m, t.b, t.c}};
    }
    if (bc >= ca) {
        const Point2 m = (t.b + t.c) * 0.5;
        return {Triangle{t.b, m, t.a}, Triangle{m, t.c, t.a}};
    }
    const Point2 m = (t.c + t.a) * 0.5;
    return {Triangle{t.c, m, t.b}, Triangle{m, t.a, t.b}};
}

inline void resolve(const Triangle& t, const Resolution& res, int level, std::vector<Triangle>& out) {
    constexpr int max_resolution_levels = 48;
    if (level < max_resolution_levels && t.max_edge() > 0.5 * res.sigma &&
        distance_to_triangle(t, res.center) < res.radius) {
        for (const auto& kid : bisect(t)) resolve(kid, res, level + 1, out);
        return;
    }
    out.push_back(t);
}

}  // namespace detail

/// Integrates f over a convex polygon. The polygon is fan-triangulated from its
/// centroid, triangles near the resolution center are split until their edges are at most
/// sigma/2, and every resulting triangle is then refined by 1-to-4 splitting until the
/// change between successive refinements is within the relative tolerance.
template <std::size_t N, class F>
Channels<N> integrate_polygon(const ConvexPolygon& poly, F&& f, const Resolution& res, const QuadratureSpec& spec) {
    const TriangleRule& rule = triangle_rule(spec.triangle_rule_order);
    const Point2 o = polygon_centroid(poly);
    std::vector<Triangle> leaves;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Triangle t{o, poly[i], poly.vertex(i + 1)};
        if (t.area() < tolerance::degenerate_area) continue;
        detail::resolve(t, res, 0, leaves);
    }
    double total_area = 0.0;
    for (const auto& t : leaves) total_area += t.area();

    std::vector<detail::RuleResult<N>> coarse;
    coarse.reserve(leaves.size());
    Channels<N> magnitude{};
    Channels<N> sum{};
    for (const auto& t : leaves) {
        const auto r = detail::apply_rule<N>(rule, t, f);
        coarse.push_back(r);
        for (std::size_t c = 0; c < N; ++c) {
            magnitude[c] += r.magnitude[c];
            sum[c] += r.value[c];
        }
    }
    if (spec.max_subdivision_depth == 0) return sum;

    detail::AdaptiveTriangleIntegrator<N, std::remove_reference_t<F>> integrator(f, rule, spec, total_area);
    integrator.set_budget(magnitude);
    Channels<N> result{};
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const Channels<N> part = integrator.refine(leaves[i], coarse[i], 1);
        for (std::size_t c = 0; c < N; ++c) result[c] += part[c];
    }
    return result;
}

/// Gauss-Legendre line integral of f along a -> b, split into pieces of length at most
/// `max_piece`.
template <std::size_t N, class F>
Channels<N> integrate_segment(const Point2& a, const Point2& b, F&& f, double max_piece, int points) {
    const LineRule& rule = line_rule(points);
    const double len = distance(a, b);
    Channels<N> sum{};
    if (len == 0.0) return sum;
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_piece)));
    const Vec2 step = (b - a) / static_cast<double>(pieces);
    const double half = 0.5 * len / pieces;
    for (int p = 0; p < pieces; ++p) {
        const Point2 mid = a + step * (p + 0.5);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const Channels<N> v = f(mid + step * (0.5 * rule.nodes[j]));
            for (std::size_t c = 0; c < N; ++c) sum[c] += half * rule.weights[j] * v[c];
        }
    }
    return sum;
}

/// Integral of a Gaussian bump times weights g(q), kept in scaled form so that the
/// ratios between channels survive when the bump is far from the polygon:
/// true integral = value * exp(log_scale).
template <std::size_t N>
struct ScaledIntegrals {
    Channels<N> value{};
    double log_scale = 0.0;

    double unscaled(std::size_t c) const { return value[c] * std::exp(log_scale); }
};

template <std::size_t N, class G>
ScaledIntegrals<N> integrate_gaussian_weighted(const ConvexPolygon& poly, const Point2& center, double sigma,
                                               double amplitude, G&& g, const QuadratureSpec& spec) {
    // |q - c|^2 - r0^2 expanded around the closest point x0 to avoid cancellation.
    const Point2 x0 = project_onto(poly, center);
    const Vec2 away = x0 - center;
    const double r0 = norm(away);
    const double two_s2 = 2.0 * sigma * sigma;
    const double r0sq = r0 * r0;
    auto f = [&](const Point2& q) {
        const Vec2 d = q - x0;
        const double e = amplitude * std::exp(-(norm2(d) + 2.0 * dot(d, away)) / two_s2);
        Channels<N> v = g(q);
        for (auto& x : v) x *= e;
        return v;
    };
    const double cutoff = std::log(1.0 / spec.target_rel_tol) + 4.0;
    // Seen from a distance r0 the bump decays across the polygon on a length scale of
    // sigma^2 / r0; the error-driven levels resolve the last factor of eight.
    const double scale = std::min(sigma, 8.0 * sigma * sigma / std::max(r0, sigma));
    const Resolution res{center, scale, std::sqrt(r0sq + two_s2 * cutoff)};
    return {integrate_polygon<N>(poly, f, res, spec), -r0sq / two_s2};
}

/// Per-component masses and centroids of one cell plus their aggregates.
struct CellMoments {
    std::vector<double> component_mass;
    std::vector<Point2> component_centroid;
    double mass = 0.0;
    Point2 centroid;
    double inertia = 0.0;  // integral of |q - centroid|^2 phi

    // Integral of |q - p|^2 phi over the cell.
    double second_moment(const Point2& p) const { return inertia + mass * norm2(p - centroid); }
};

inline CellMoments polygon_moments(const ConvexPolygon& poly, const GmmDensity& gmm, double t,
                                   const QuadratureSpec& spec) {
    const std::size_t K = gmm.size();
    const Point2 ref = vertex_average(poly);
    CellMoments m;
    m.component_mass.resize(K);
    m.component_centroid.resize(K);
    std::vector<double> scaled_mass(K);
    std::vector<double> log_scale(K);
    std::vector<double> own_inertia(K);
    for (std::size_t k = 0; k < K; ++k) {
        const GaussComponent& comp = gmm[k];
        const auto r = integrate_gaussian_weighted<4>(
            poly, comp.mean(t), comp.sigma, comp.weight,
            [&](const Point2& q) {
                const Vec2 d = q - ref;
                return Channels<4>{1.0, d.x, d.y, norm2(d)};
            },
            spec);
        scaled_mass[k] = r.value[0];
        log_scale[k] = r.log_scale;
        const Vec2 offset{r.value[1] / r.value[0], r.value[2] / r.value[0]};
        m.component_centroid[k] = ref + offset;
        m.component_mass[k] = std::max(r.unscaled(0), std::numeric_limits<double>::denorm_min());
        own_inertia[k] = std::max(0.0, r.value[3] - r.value[0] * norm2(offset)) * std::exp(r.log_scale);
    }
    const double top = *std::max_element(log_scale.begin(), log_scale.end());
    double wsum = 0.0;
    Vec2 acc{};
    for (std::size_t k = 0; k < K; ++k) {
        m.mass += m.component_mass[k];
        const double w = scaled_mass[k] * std::exp(log_scale[k] - top);
        wsum += w;
        acc += (m.component_centroid[k] - ref) * w;
    }
    m.centroid = ref + acc / wsum;
    for (std::size_t k = 0; k < K; ++k)
        m.inertia += own_inertia[k] + m.component_mass[k] * norm2(m.component_centroid[k] - m.centroid);
    return m;
}

inline CellMoments cell_moments(const VoronoiCell& cell, const GmmDensity& gmm, double t,
                                const QuadratureSpec& spec) {
    return polygon_moments(cell.polygon, gmm, t, spec);
}

struct MomentPartials {
    double mass_rate = 0.0;  // dm_i/dt
    Vec2 centroid_rate;      // dc_i/dt
};

/// Partial time derivatives of mass and centroid over a frozen cell.
inline MomentPartials moment_partials(const VoronoiCell& cell, const GmmDensity& gmm, double t,
                                      const CellMoments& moments, const QuadratureSpec& spec) {
    const Point2 ref = vertex_average(cell.polygon);
    double dm = 0.0;
    Vec2 dq{};  // integral of (q - ref) dphi/dt
    for (const auto& comp : gmm.components()) {
        const Vec2 w = comp.velocity(t);
        if (w.x == 0.0 && w.y == 0.0) continue;
        const Point2 s = comp.mean(t);
        const double inv_s2 = 1.0 / (comp.sigma * comp.sigma);
        const auto r = integrate_gaussian_weighted<3>(
            cell.polygon, s, comp.sigma, comp.weight,
            [&](const Point2& q) {
                const double rate = dot(w, q - s) * inv_s2;
                return Channels<3>{rate, (q.x - ref.x) * rate, (q.y - ref.y) * rate};
            },
            spec);
        const double scale = std::exp(r.log_scale);
        dm += r.value[0] * scale;
        dq += Vec2{r.value[1], r.value[2]} * scale;
    }
    MomentPartials out;
    out.mass_rate = dm;
    out.centroid_rate = (dq - (moments.centroid - ref) * dm) / moments.mass;
    return out;
}

inline std::vector<BoundarySegment> omega_segments(const VoronoiCell& cell) {
    std::vector<BoundarySegment> out;
    for (const auto& s : cell.segments)
        if (s.kind == SegmentKind::OmegaEdge) out.push_back(s);
    return out;
}

inline int line_points(const QuadratureSpec& spec) { return std::max(2, spec.triangle_rule_order); }

/// Sum over segments of n * integral of |q - p|^2 phi_k(q) along the segment.
inline Vec2 boundary_flux_vector(std::span<const BoundarySegment> segments, const Point2& p,
                                 const GaussComponent& comp, double t, const QuadratureSpec& spec) {
    const Point2 s = comp.mean(t);
    const double two_s2 = 2.0 * comp.sigma * comp.sigma;
    Vec2 total{};
    for (const auto& seg : segments) {
        const auto v = integrate_segment<1>(
            seg.a, seg.b,
            [&](const Point2& q) {
                return Channels<1>{norm2(q - p) * comp.weight * std::exp(-norm2(q - s) / two_s2)};
            },
            0.5 * comp.sigma, line_points(spec));
        total += seg.outward_normal * v[0];
    }
    return total;
}

/// Integral over the segments of |q - p|^2 w_k^T n phi_k(q).
inline double boundary_flux_integral(std::span<const BoundarySegment> segments, const Point2& p,
                                     const GaussComponent& comp, double t, const QuadratureSpec& spec) {
    const Vec2 w = comp.velocity(t);
    if (segments.empty() || (w.x == 0.0 && w.y == 0.0)) return 0.0;
    return dot(w, boundary_flux_vector(segments, p, comp, t, spec));
}

/// Integral over the polygon of |q - p|^2 phi(q, t).
inline double polygon_second_moment(const ConvexPolygon& poly, const Point2& p, const GmmDensity& gmm, double t,
                                    const QuadratureSpec& spec) {
    double total = 0.0;
    for (const auto& comp : gmm.components()) {
        const auto r = integrate_gaussian_weighted<1>(
            poly, comp.mean(t), comp.sigma, comp.weight,
            [&](const Point2& q) { return Channels<1>{norm2(q - p)}; }, spec);
        total += r.unscaled(0);
    }
    return total;
}

}  // namespace gmmcov
