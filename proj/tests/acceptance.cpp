// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "gmmcov/scenario_io.hpp"

using namespace gmmcov;

namespace {

const std::filesystem::path kScenarios = GMMCOV_SCENARIO_DIR;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GaussComponent still(double a, double sigma, Point2 s) { return {a, sigma, SourceSchedule::stationary(s)}; }

// ---------------------------------------------------------------------------------------
// A1: along an unclamped, unswitched GMM-controller trajectory the finite-difference cost
// rate matches -(beta/2) sum m_i |p_i - c_i|^2.
Verdict decrease_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = parse_scenario(kScenarios / "desk.json").front();
    const SimTrace trace = run(sc);
    if (trace.error) return {false, "run aborted: " + *trace.error};
    std::size_t good = 0, steps = 0, clamped = 0, switched = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < trace.size(); ++j) {
        double rate = 0.0;
        for (const auto& d : trace.diagnostics[j]) {
            rate += 0.5 * sc.params.beta * d.mass * d.dist_to_centroid * d.dist_to_centroid;
            clamped += d.clamped;
            switched += d.switched;
        }
        const double fd = (trace.cost[j + 1] - trace.cost[j]) / sc.dt;
        const double rel = std::abs(fd + rate) / rate;
        worst = std::max(worst, rel);
        good += rel < 0.02;
        ++steps;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = steps == 2000 && good >= 0.99 * static_cast<double>(steps) && clamped == 0 && switched == 0 &&
                      elapsed < 60.0;
    return {pass, format("%zu/%zu steps within 2%% (worst %.2e), clamped %zu, switched %zu, %.1f s", good, steps, worst,
                         clamped, switched, elapsed)};
}

// ---------------------------------------------------------------------------------------
// A2: benchmark ordering over the source-motion window.
Verdict benchmark_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto scenarios = parse_scenario(kScenarios / "benchmark.json");
    std::map<Controller, SimTrace> traces;
    std::map<Controller, RunSummary> summaries;
    std::string aborted;
    for (const auto& sc : scenarios) {
        traces[sc.controller] = run(sc);
        const auto& tr = traces[sc.controller];
        summaries[sc.controller] = summarize(sc, tr);
        if (tr.error)
            aborted += format("; %s stopped at t=%.2f (%s)", std::string(controller_name(sc.controller)).c_str(),
                              tr.times.empty() ? 0.0 : tr.times.back(), tr.error->c_str());
    }
    const double lloyd = summaries[Controller::Lloyd].motion_mean_normalized;
    const double dyn = summaries[Controller::DynamicLloyd].motion_mean_normalized;
    const double gmm = summaries[Controller::Gmm].motion_mean_normalized;

    // An aborted run only contributes the steps it reached; the criterion needs all of them.
    const auto& g = traces[Controller::Gmm];
    const auto& d = traces[Controller::DynamicLloyd];
    const double m0 = scenarios.front().gmm.motion_start(), m1 = scenarios.front().gmm.motion_end();
    std::size_t wins = 0, logged = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g.times[j] < m0 || g.times[j] > m1) continue;
        ++logged;
        wins += j < d.size() && g.normalized_cost(j) < d.normalized_cost(j);
    }
    const double share = logged ? static_cast<double>(wins) / static_cast<double>(logged) : 0.0;
    const double elapsed = seconds_since(t0);
    const bool pass = aborted.empty() && gmm < dyn && dyn < lloyd && share >= 0.8 && elapsed < 600.0;
    return {pass, format("motion-window mean H/H0: gmm %.4f, dynamic %.4f, lloyd %.4f; gmm < dynamic at %.1f%% of "
                         "%zu steps, %.1f s%s",
                         gmm, dyn, lloyd, 100.0 * share, logged, elapsed, aborted.c_str())};
}

// ---------------------------------------------------------------------------------------
// A3: with a static density the three laws give one trajectory, which settles on a
// centroidal configuration without the cost ever rising.
Verdict static_reduction() {
    const auto scenarios = parse_scenario(kScenarios / "static.json");
    std::vector<SimTrace> traces;
    for (const auto& sc : scenarios) {
        traces.push_back(run(sc));
        if (traces.back().error) return {false, "run aborted: " + *traces.back().error};
    }
    double divergence = 0.0;
    for (std::size_t c = 1; c < traces.size(); ++c)
        for (std::size_t j = 0; j < traces[0].size(); ++j)
            for (std::size_t i = 0; i < traces[0].positions[j].size(); ++i)
                divergence = std::max(divergence, distance(traces[0].positions[j][i], traces[c].positions[j][i]));
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (const auto& tr : traces)
        for (std::size_t j = 1; j < tr.size(); ++j) worst_rise = std::max(worst_rise, tr.cost[j] / tr.cost[j - 1] - 1.0);
    double final_dist = 0.0;
    for (const auto& tr : traces)
        for (const auto& d : tr.diagnostics.back()) final_dist = std::max(final_dist, d.dist_to_centroid);
    const std::size_t steps = traces[0].size() - 1;
    const bool pass = steps >= 500 && divergence < 1e-9 && worst_rise <= 1e-6 && final_dist < 1e-3;
    return {pass, format("%zu steps: max divergence %.1e m, largest relative cost rise %.1e, final max |p-c| %.1e m",
                         steps, divergence, worst_rise, final_dist)};
}

// ---------------------------------------------------------------------------------------
// A4: quadrature against closed forms and integration by parts.
double erf_difference(double a, double b) {
    if (a > 0 && b > 0) return std::erfc(a) - std::erfc(b);
    if (a < 0 && b < 0) return std::erfc(-b) - std::erfc(-a);
    return std::erf(b) - std::erf(a);
}

Verdict quadrature_oracles() {
    const QuadratureSpec spec;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> corner(-100, 100), size(5, 200), sig(0.5, 40), u(-0.3, 1.3);
    double worst_erf = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x0 = corner(rng), y0 = corner(rng);
        const double x1 = x0 + size(rng), y1 = y0 + size(rng);
        const double sigma = sig(rng);
        const Point2 s{x0 + u(rng) * (x1 - x0), y0 + u(rng) * (y1 - y0)};
        const double r = sigma * std::numbers::sqrt2;
        const double expect = 100.0 * 2.0 * std::numbers::pi * sigma * sigma *
                              erf_difference((x0 - s.x) / r, (x1 - s.x) / r) *
                              erf_difference((y0 - s.y) / r, (y1 - s.y) / r) / 4.0;
        const auto m =
            polygon_moments(ConvexPolygon::rectangle(x0, y0, x1, y1), GmmDensity({still(100, sigma, s)}), 0.0, spec);
        worst_erf = std::max(worst_erf, std::abs(m.mass - expect) / expect);
    }

    // Random adjacent pairs: integration by parts on both cells and cancellation on the
    // shared edge.
    std::uniform_real_distribution<double> ux(0, 200), uy(0, 100), uw(-3, 3), us(5, 25);
    const auto omega = ConvexPolygon::rectangle(0, 0, 200, 100);
    double worst_green = 0.0, worst_cancel = 0.0;
    int pairs = 0;
    while (pairs < 50) {
        std::vector<Point2> p;
        for (int i = 0; i < 6; ++i) p.push_back({ux(rng), uy(rng)});
        const auto cells = tessellate(p, omega);
        const Vec2 w{uw(rng), uw(rng)};
        const Point2 s{ux(rng), uy(rng)};
        const GaussComponent comp{100, us(rng), SourceSchedule({{0, s - w * 5.0}, {10, s + w * 5.0}})};
        const double t = 5.0;
        const auto& ci = cells[0];
        if (ci.neighbors.empty()) continue;
        const auto& cj = cells[static_cast<std::size_t>(ci.neighbors.front())];
        for (const VoronoiCell* cell : {&ci, &cj}) {
            const Point2 pi = cell->site;
            const double inv_s2 = 1.0 / (comp.sigma * comp.sigma);
            const auto lhs = integrate_gaussian_weighted<1>(
                cell->polygon, s, comp.sigma, comp.weight,
                [&](const Point2& q) { return Channels<1>{norm2(q - pi) * dot(w, (s - q) * inv_s2)}; }, spec);
            const auto div = integrate_gaussian_weighted<1>(
                cell->polygon, s, comp.sigma, comp.weight,
                [&](const Point2& q) { return Channels<1>{2.0 * dot(w, q - pi)}; }, spec);
            const double boundary = boundary_flux_integral(cell->segments, pi, comp, t, spec);
            const double scale = std::abs(lhs.unscaled(0)) + std::abs(boundary) + std::abs(div.unscaled(0));
            worst_green = std::max(worst_green, std::abs(lhs.unscaled(0) - (boundary - div.unscaled(0))) / scale);
        }
        const auto shared = [](const VoronoiCell& a, int other) {
            for (const auto& seg : a.segments)
                if (seg.kind == SegmentKind::NeighborEdge && seg.neighbor == other) return seg;
            throw std::logic_error("missing shared edge");
        };
        const auto si = shared(ci, cj.owner), sj = shared(cj, ci.owner);
        const double a = boundary_flux_integral(std::span(&si, 1), ci.site, comp, t, spec);
        const double b = boundary_flux_integral(std::span(&sj, 1), cj.site, comp, t, spec);
        worst_cancel = std::max(worst_cancel, std::abs(a + b) / std::max(std::abs(a), 1e-300));
        ++pairs;
    }
    const bool pass = worst_erf < 1e-8 && worst_green < 1e-6 && worst_cancel < 1e-6;
    return {pass, format("erf product worst %.1e over 100 cases; Green worst %.1e, shared-edge worst %.1e over %d pairs",
                         worst_erf, worst_green, worst_cancel, pairs)};
}

// ---------------------------------------------------------------------------------------
// A5: density PDE, moment partials and the min-form cost.
Verdict derivative_identities() {
    const auto bench = load_scenario_file(kScenarios / "benchmark.json");
    const GmmDensity& gmm = bench.base.gmm;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0, 200), uy(0, 100), ut(0, 280);
    double worst_pde = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Point2 q{ux(rng), uy(rng)};
        const double t = ut(rng);
        double residual = dphi_dt(gmm, q, t);
        for (const auto& c : gmm.components()) residual += dot(c.velocity(t), grad_phi_k(c, q, t));
        worst_pde = std::max(worst_pde, std::abs(residual));
    }

    const QuadratureSpec tight{7, 12, 1e-13};
    const double t = 100.0, h = 1e-4;
    const std::vector<Point2> p{{40, 30}, {80, 60}, {110, 40}, {150, 80}, {20, 80}};
    double worst_partial = 0.0;
    for (const auto& cell : tessellate(p, bench.base.omega)) {
        const auto m = cell_moments(cell, gmm, t, tight);
        const auto d = moment_partials(cell, gmm, t, m, tight);
        const auto mp = cell_moments(cell, gmm, t + h, tight);
        const auto mm = cell_moments(cell, gmm, t - h, tight);
        const double fd_m = (mp.mass - mm.mass) / (2 * h);
        const Vec2 fd_c = (mp.centroid - mm.centroid) / (2 * h);
        worst_partial = std::max({worst_partial, std::abs(d.mass_rate - fd_m) / std::abs(fd_m),
                                  norm(d.centroid_rate - fd_c) / norm(fd_c)});
    }

    const auto& agents = bench.base.initial_positions;
    const int n = 500;
    const double hx = 200.0 / n, hy = 100.0 / n;
    double grid = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Point2 q{(i + 0.5) * hx, (j + 0.5) * hy};
            double best = std::numeric_limits<double>::infinity();
            for (const auto& a : agents) best = std::min(best, norm2(q - a));
            grid += best * eval_phi(gmm, q, 0.0);
        }
    }
    grid *= 0.5 * hx * hy;
    const double tess = coverage_cost(agents, bench.base.omega, gmm, 0.0, bench.base.cost_eval_spec);
    const double grid_rel = std::abs(grid - tess) / tess;

    const bool pass = worst_pde < 1e-12 && worst_partial < 1e-5 && grid_rel < 1e-3;
    return {pass, format("PDE residual worst %.1e; partials vs finite differences worst %.1e; grid vs tessellated %.1e",
                         worst_pde, worst_partial, grid_rel)};
}

// ---------------------------------------------------------------------------------------
// A6: tessellation properties on random configurations.
Verdict geometry_suite() {
    std::mt19937_64 rng(31);
    const ConvexPolygon omega({{0, 0}, {120, 0}, {150, 60}, {70, 110}, {-20, 70}});
    const double area = polygon_area(omega);
    std::uniform_real_distribution<double> ux(-20, 150), uy(0, 110);
    std::uniform_int_distribution<int> count(2, 10);
    auto sample = [&] {
        for (;;) {
            const Point2 q{ux(rng), uy(rng)};
            if (contains(omega, q, 0.0)) return q;
        }
    };
    double worst_area = 0.0;
    std::size_t asymmetric = 0, misplaced = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2> p(static_cast<std::size_t>(count(rng)));
        for (auto& x : p) x = sample();
        const auto cells = tessellate(p, omega);
        double total = 0.0;
        for (const auto& c : cells) {
            total += polygon_area(c.polygon);
            for (const int j : c.neighbors) {
                const auto& back = cells[static_cast<std::size_t>(j)].neighbors;
                asymmetric += !std::binary_search(back.begin(), back.end(), c.owner);
            }
        }
        worst_area = std::max(worst_area, std::abs(total - area) / area);
        for (int s = 0; s < 10000; ++s) {
            const Point2 q = sample();
            std::size_t nearest = 0;
            for (std::size_t i = 1; i < p.size(); ++i)
                if (norm2(q - p[i]) < norm2(q - p[nearest])) nearest = i;
            // Ties within the containment tolerance are accepted either way.
            if (!contains(cells[nearest].polygon, q)) ++misplaced;
        }
    }
    const bool pass = worst_area < 1e-9 && asymmetric == 0 && misplaced == 0;
    return {pass, format("area worst %.1e, asymmetric neighbor links %zu, misplaced samples %zu of 1000000", worst_area,
                         asymmetric, misplaced)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"A1 decrease identity", decrease_identity},   {"A2 benchmark ordering", benchmark_ordering},
        {"A3 static reduction", static_reduction},     {"A4 quadrature oracles", quadrature_oracles},
        {"A5 derivative identities", derivative_identities}, {"A6 geometry", geometry_suite},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
