#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmmcov/errors.hpp"
#include "gmmcov/vec2.hpp"

namespace gmmcov {

namespace tolerance {
inline constexpr double vertex_merge = 1e-9;      // m
inline constexpr double collinear_cross = 1e-12;  // |cross| below this merges the middle vertex
inline constexpr double degenerate_area = 1e-12;  // m^2
inline constexpr double min_edge_length = 1e-9;   // m
inline constexpr double coincident_agents = 1e-6; // m
inline constexpr double containment = 1e-9;       // m
}  // namespace tolerance

namespace detail {

// Which supporting line an edge lies on: an edge of the region, or the bisector with another agent.
struct EdgeLabel {
    enum class Kind { Omega, Neighbor };
    Kind kind = Kind::Omega;
    int id = 0;  // region edge index or neighbor agent id

    friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

// Vertex together with the label of the edge leaving it.
struct LabeledVertex {
    Point2 p;
    EdgeLabel label;
};

using LabeledRing = std::vector<LabeledVertex>;

inline double ring_signed_area(const LabeledRing& ring) {
    double a = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(ring[i].p, ring[(i + 1) % n].p);
    return 0.5 * a;
}

// Merges near-duplicate vertices and collinear middle vertices. Returns false when
// fewer than three vertices survive.
inline bool normalize_ring(LabeledRing& ring) {
    bool changed = true;
    while (changed && ring.size() >= 3) {
        changed = false;
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            if (distance(ring[i].p, ring[j].p) < tolerance::vertex_merge) {
                // zero-length edge i->j disappears; the surviving vertex starts edge j
                ring[i].label = ring[j].label;
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
                break;
            }
        }
        if (changed || ring.size() < 3) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = (i + n - 1) % n;
            const std::size_t next = (i + 1) % n;
            const double c = cross(ring[i].p - ring[prev].p, ring[next].p - ring[i].p);
            if (std::abs(c) < tolerance::collinear_cross) {
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return ring.size() >= 3;
}

// Keeps the part of the ring with (q - on_line) . inward >= 0; the new edge on the
// clipping line receives `clip_label`.
inline LabeledRing clip_ring(const LabeledRing& ring, const Point2& on_line, const Vec2& inward,
                             const EdgeLabel& clip_label) {
    LabeledRing out;
    const std::size_t n = ring.size();
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const LabeledVertex& cur = ring[i];
        const LabeledVertex& nxt = ring[(i + 1) % n];
        const double dc = dot(cur.p - on_line, inward);
        const double dn = dot(nxt.p - on_line, inward);
        const bool cur_in = dc >= 0.0;
        const bool nxt_in = dn >= 0.0;
        if (cur_in) out.push_back(cur);
        if (cur_in != nxt_in) {
            const double s = dc / (dc - dn);
            const Point2 x = cur.p + (nxt.p - cur.p) * s;
            if (cur_in) {
                out.push_back({x, clip_label});
            } else {
                out.push_back({x, cur.label});
            }
        }
    }
    return out;
}

}  // namespace detail

/// Convex polygon with counterclockwise vertices. Construction normalizes the input
/// (drops repeated and collinear vertices, fixes orientation) and throws
/// InvalidPolygon when the result is not a proper convex polygon.
class ConvexPolygon {
public:
    explicit ConvexPolygon(std::vector<Point2> vertices) {
        detail::LabeledRing ring;
        ring.reserve(vertices.size());
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            if (!is_finite(vertices[i])) throw InvalidPolygon("polygon vertex is not finite");
            ring.push_back({vertices[i], {detail::EdgeLabel::Kind::Omega, static_cast<int>(i)}});
        }
        if (detail::ring_signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
        init_from_ring(std::move(ring));
    }

    static ConvexPolygon rectangle(double x0, double y0, double x1, double y1) {
        return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
    }

    const std::vector<Point2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Point2& operator[](std::size_t i) const { return vertices_[i]; }
    const Point2& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

    // Edge i runs from vertex i to vertex i+1.
    Vec2 edge(std::size_t i) const { return vertex(i + 1) - vertex(i); }
    Vec2 outward_normal(std::size_t i) const {
        const Vec2 e = edge(i);
        return Vec2{e.y, -e.x} / norm(e);
    }

private:
    friend std::optional<ConvexPolygon> clip_half_plane(const ConvexPolygon&, const Point2&,
                                                        const Vec2&);
    friend struct PolygonAccess;

    struct FromRing {};
    ConvexPolygon(FromRing, detail::LabeledRing ring) { init_from_ring(std::move(ring)); }

    void init_from_ring(detail::LabeledRing ring) {
        if (!detail::normalize_ring(ring)) throw InvalidPolygon("polygon has fewer than 3 distinct vertices");
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 e0 = ring[(i + 1) % n].p - ring[i].p;
            const Vec2 e1 = ring[(i + 2) % n].p - ring[(i + 1) % n].p;
            if (cross(e0, e1) <= -tolerance::collinear_cross) throw InvalidPolygon("polygon is not convex");
        }
        if (detail::ring_signed_area(ring) < tolerance::degenerate_area)
            throw InvalidPolygon("polygon area is degenerate");
        vertices_.reserve(n);
        for (const auto& v : ring) vertices_.push_back(v.p);
    }

    std::vector<Point2> vertices_;
};

inline double polygon_area(const ConvexPolygon& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly.vertex(i + 1));
    return 0.5 * a;
}

inline double polygon_perimeter(const ConvexPolygon& poly) {
    double p = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) p += norm(poly.edge(i));
    return p;
}

// Area centroid.
inline Point2 polygon_centroid(const ConvexPolygon& poly) {
    double a = 0.0;
    Vec2 c{};
    const Point2 o = poly[0];
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        const Vec2 u = poly[i] - o;
        const Vec2 v = poly[i + 1] - o;
        const double w = cross(u, v);
        a += w;
        c += (u + v) * w;
    }
    return o + c / (3.0 * a);
}

inline Point2 vertex_average(const ConvexPolygon& poly) {
    Vec2 s{};
    for (const auto& v : poly.vertices()) s += v;
    return s / static_cast<double>(poly.size());
}

inline double polygon_diameter(const ConvexPolygon& poly) {
    double d = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, distance(poly[i], poly[j]));
    return d;
}

// Signed distance to the boundary, positive inside.
inline double inset_distance(const ConvexPolygon& poly, const Point2& q) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) d = std::min(d, -dot(q - poly[i], poly.outward_normal(i)));
    return d;
}

inline bool contains(const ConvexPolygon& poly, const Point2& q, double tol = tolerance::containment) {
    return inset_distance(poly, q) >= -tol;
}

inline Point2 closest_point_on_segment(const Point2& a, const Point2& b, const Point2& q) {
    const Vec2 e = b - a;
    const double len2 = norm2(e);
    if (len2 == 0.0) return a;
    const double s = std::clamp(dot(q - a, e) / len2, 0.0, 1.0);
    return a + e * s;
}

/// Euclidean projection onto the polygon; points already inside are returned unchanged.
inline Point2 project_onto(const ConvexPolygon& poly, const Point2& q) {
    if (inset_distance(poly, q) >= 0.0) return q;
    Point2 best = poly[0];
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 c = closest_point_on_segment(poly[i], poly.vertex(i + 1), q);
        const double d = distance(c, q);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Distance from q to the polygon (zero inside).
inline double distance_to_polygon(const ConvexPolygon& poly, const Point2& q) {
    return distance(project_onto(poly, q), q);
}

/// Subset of `poly` with (q - point_on_line) . inward_normal >= 0, or nullopt when
/// the intersection is degenerate.
inline std::optional<ConvexPolygon> clip_half_plane(const ConvexPolygon& poly, const Point2& point_on_line,
                                                    const Vec2& inward_normal) {
    detail::LabeledRing ring;
    ring.reserve(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i)
        ring.push_back({poly[i], {detail::EdgeLabel::Kind::Omega, static_cast<int>(i)}});
    ring = detail::clip_ring(ring, point_on_line, inward_normal, {detail::EdgeLabel::Kind::Neighbor, -1});
    if (!detail::normalize_ring(ring) || detail::ring_signed_area(ring) < tolerance::degenerate_area)
        return std::nullopt;
    return ConvexPolygon(ConvexPolygon::FromRing{}, std::move(ring));
}

enum class SegmentKind { NeighborEdge, OmegaEdge };

struct BoundarySegment {
    Point2 a;
    Point2 b;
    Vec2 outward_normal;
    SegmentKind kind = SegmentKind::OmegaEdge;
    int neighbor = -1;  // agent id for NeighborEdge

    double length() const { return distance(a, b); }
};

struct AgentPosition {
    int id = 0;
    Point2 pos;
};

struct VoronoiCell {
    int owner = 0;
    Point2 site;
    ConvexPolygon polygon;
    std::vector<BoundarySegment> segments;
    std::vector<int> neighbors;  // sorted ascending
};

struct PolygonAccess {
    static ConvexPolygon from_ring(detail::LabeledRing ring) {
        return ConvexPolygon(ConvexPolygon::FromRing{}, std::move(ring));
    }
};

/// Cell of `owner` at `self_pos`: the region clipped by the bisector half-plane of every
/// other agent. Neighbors are the agents whose bisector leaves an edge of positive length.
inline VoronoiCell voronoi_cell(int owner, const Point2& self_pos, std::span<const AgentPosition> others,
                                const ConvexPolygon& omega) {
    if (!is_finite(self_pos)) throw OutsideOmega("agent " + std::to_string(owner) + " position is not finite");
    if (!contains(omega, self_pos))
        throw OutsideOmega("agent " + std::to_string(owner) + " lies outside the region");

    detail::LabeledRing ring;
    ring.reserve(omega.size() + others.size());
    for (std::size_t i = 0; i < omega.size(); ++i)
        ring.push_back({omega[i], {detail::EdgeLabel::Kind::Omega, static_cast<int>(i)}});

    for (const auto& other : others) {
        const Vec2 d = other.pos - self_pos;
        if (norm(d) < tolerance::coincident_agents)
            throw CoincidentAgents("agents " + std::to_string(owner) + " and " + std::to_string(other.id) +
                                   " coincide");
        const Point2 mid = (self_pos + other.pos) * 0.5;
        ring = detail::clip_ring(ring, mid, -d, {detail::EdgeLabel::Kind::Neighbor, other.id});
        if (ring.size() < 3) break;
    }
    if (!detail::normalize_ring(ring) || detail::ring_signed_area(ring) < tolerance::degenerate_area)
        throw InvalidPolygon("cell of agent " + std::to_string(owner) + " is degenerate");

    VoronoiCell cell{owner, self_pos, PolygonAccess::from_ring(ring), {}, {}};
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i].p;
        const Point2& b = ring[(i + 1) % n].p;
        if (distance(a, b) < tolerance::min_edge_length) continue;
        BoundarySegment seg{a, b, {}, SegmentKind::OmegaEdge, -1};
        if (ring[i].label.kind == detail::EdgeLabel::Kind::Neighbor) {
            seg.kind = SegmentKind::NeighborEdge;
            seg.neighbor = ring[i].label.id;
            for (const auto& other : others) {
                if (other.id == seg.neighbor) {
                    const Vec2 d = other.pos - self_pos;
                    seg.outward_normal = d / norm(d);
                    break;
                }
            }
            cell.neighbors.push_back(seg.neighbor);
        } else {
            seg.outward_normal = omega.outward_normal(static_cast<std::size_t>(ring[i].label.id));
        }
        cell.segments.push_back(seg);
    }
    std::sort(cell.neighbors.begin(), cell.neighbors.end());
    cell.neighbors.erase(std::unique(cell.neighbors.begin(), cell.neighbors.end()), cell.neighbors.end());
    return cell;
}

/// Full tessellation; agent ids are the indices into `positions`.
inline std::vector<VoronoiCell> tessellate(std::span<const Point2> positions, const ConvexPolygon& omega) {
    std::vector<VoronoiCell> cells;
    cells.reserve(positions.size());
    std::vector<AgentPosition> others;
    others.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        others.clear();
        for (std::size_t j = 0; j < positions.size(); ++j)
            if (j != i) others.push_back({static_cast<int>(j), positions[j]});
        cells.push_back(voronoi_cell(static_cast<int>(i), positions[i], others, omega));
    }
    return cells;
}

}  // namespace gmmcov
