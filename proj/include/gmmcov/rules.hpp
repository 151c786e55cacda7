#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gmmcov {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct LineRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline LineRule make_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    LineRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0;
            double p0 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double pm = p0;
                p0 = p1;
                p1 = ((2.0 * k - 1.0) * x * p0 - (k - 1.0) * pm) / k;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = -x;
        r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(i)] = w;
        r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return r;
}

/// Triangle rule in barycentric coordinates; weights sum to one.
struct TriangleRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};

namespace detail {

inline void add_orbit_centroid(TriangleRule& r, double w) {
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(w);
}

// (a, a, 1-2a) and its rotations.
inline void add_orbit_3(TriangleRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({a, a, b});
    r.points.push_back({a, b, a});
    r.points.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

// All six permutations of (a, b, 1-a-b).
inline void add_orbit_6(TriangleRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    for (int i = 0; i < 6; ++i) r.weights.push_back(w);
}

inline TriangleRule symmetric_rule(int degree) {
    TriangleRule r;
    switch (degree) {
        case 1:
            r.degree = 1;
            add_orbit_centroid(r, 1.0);
            break;
        case 2:
            r.degree = 2;
            add_orbit_3(r, 1.0 / 6.0, 1.0 / 3.0);
            break;
        case 4:
            r.degree = 4;
            add_orbit_3(r, 0.445948490915965, 0.223381589678011);
            add_orbit_3(r, 0.091576213509771, 0.109951743655322);
            break;
        case 5: {
            // Radon's 7-point rule, closed form.
            r.degree = 5;
            const double s = std::sqrt(15.0);
            add_orbit_centroid(r, 9.0 / 40.0);
            add_orbit_3(r, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            add_orbit_3(r, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
            break;
        }
        case 6:
            r.degree = 6;
            add_orbit_3(r, 0.249286745170910, 0.116786275726379);
            add_orbit_3(r, 0.063089014491502, 0.050844906370207);
            add_orbit_6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
            break;
        case 7:
            r.degree = 7;
            add_orbit_centroid(r, -0.149570044467682);
            add_orbit_3(r, 0.260345966079040, 0.175615257433208);
            add_orbit_3(r, 0.065130102902216, 0.053347235608838);
            add_orbit_6(r, 0.048690315425316, 0.312865496004874, 0.077113760890257);
            break;
        case 8:
            r.degree = 8;
            add_orbit_centroid(r, 0.144315607677787);
            add_orbit_3(r, 0.459292588292723, 0.095091634267285);
            add_orbit_3(r, 0.170569307751760, 0.103217370534718);
            add_orbit_3(r, 0.050547228317031, 0.032458497623198);
            add_orbit_6(r, 0.008394777409958, 0.263112829634638, 0.027230314174435);
            break;
        default:
            throw std::invalid_argument("no tabulated symmetric rule of this degree");
    }
    return r;
}

// Collapsed Gauss-Legendre product rule of polynomial degree >= `degree`.
inline TriangleRule conical_product_rule(int degree) {
    const int n = (degree + 3) / 2;
    const LineRule g = make_gauss_legendre(n);
    TriangleRule r;
    r.degree = 2 * n - 2;
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (g.nodes[static_cast<std::size_t>(i)] + 1.0);
        const double wu = 0.5 * g.weights[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (g.nodes[static_cast<std::size_t>(j)] + 1.0);
            const double wv = 0.5 * g.weights[static_cast<std::size_t>(j)];
            // (x, y) = (u, v (1 - u)) on the reference triangle of area 1/2
            const double x = u;
            const double y = v * (1.0 - u);
            r.points.push_back({1.0 - x - y, x, y});
            r.weights.push_back(2.0 * wu * wv * (1.0 - u));
        }
    }
    return r;
}

}  // namespace detail

/// Rule exact for polynomials of degree `order`: the tabulated symmetric rule when one
/// exists for that degree, otherwise a collapsed Gauss product rule.
inline const TriangleRule& triangle_rule(int order) {
    if (order < 1) throw std::invalid_argument("triangle rule order must be >= 1");
    static std::mutex mu;
    static std::map<int, TriangleRule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    TriangleRule rule;
    switch (order) {
        case 1: case 2: case 4: case 5: case 6: case 7: case 8:
            rule = detail::symmetric_rule(order);
            break;
        case 3:
            rule = detail::symmetric_rule(4);
            break;
        default:
            rule = detail::conical_product_rule(order);
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

inline const LineRule& line_rule(int n) {
    static std::mutex mu;
    static std::map<int, LineRule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    return cache.emplace(n, make_gauss_legendre(n)).first->second;
}

}  // namespace gmmcov
