#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gmmcov/control.hpp"

using namespace gmmcov;

namespace {

const ConvexPolygon kBox = ConvexPolygon::rectangle(-100, -100, 100, 100);

// A hand-assembled view: one interior-looking cell with K components whose masses and
// centroids are given directly.
LocalView synthetic_view(Point2 p, Point2 c, std::vector<double> masses, std::vector<Point2> centroids,
                         std::vector<Vec2> velocities) {
    const Point2 site{0, 0};
    const std::vector<Point2> one{site};
    LocalView v{p, tessellate(one, kBox).front(), {}, std::move(velocities), {}, std::nullopt};
    v.moments.component_mass = std::move(masses);
    v.moments.component_centroid = std::move(centroids);
    for (double m : v.moments.component_mass) v.moments.mass += m;
    v.moments.centroid = c;
    v.omega_flux.assign(v.source_velocities.size(), Vec2{});
    return v;
}

GaussComponent still(double a, double sigma, Point2 s) { return {a, sigma, SourceSchedule::stationary(s)}; }

}  // namespace

TEST(Lloyd, Examples) {
    const ControlParams params;
    auto v = synthetic_view({10, 0}, {0, 0}, {1.0}, {{0, 0}}, {{0, 0}});
    EXPECT_EQ(lloyd_control(v, params), (Vec2{-0.25, 0}));
    v.source_velocities = {{3, -7}};
    EXPECT_EQ(lloyd_control(v, params), (Vec2{-0.25, 0}));
    v.self_pos = v.moments.centroid;
    EXPECT_EQ(lloyd_control(v, params), (Vec2{0, 0}));
}

TEST(DynamicLloyd, Examples) {
    const ControlParams params;
    auto v = synthetic_view({10, 0}, {0, 0}, {4.0}, {{0, 0}}, {{1, 0}});
    EXPECT_THROW(dynamic_lloyd_control(v, params), MissingPartials);

    v.partials = MomentPartials{0.1 * 4.0, {0, 0}};
    const Vec2 u = dynamic_lloyd_control(v, params);
    EXPECT_NEAR(u.x, -0.75, 1e-15);
    EXPECT_EQ(u.y, 0.0);

    v.partials = MomentPartials{0.3, {0.7, -0.2}};
    v.self_pos = v.moments.centroid;
    EXPECT_EQ(dynamic_lloyd_control(v, params), (Vec2{0.7, -0.2}));

    v.self_pos = {3, 4};
    v.partials = MomentPartials{};
    EXPECT_EQ(dynamic_lloyd_control(v, params), lloyd_control(v, params));
}

TEST(GmmControl, Examples) {
    const ControlParams params;
    // single component, c_i = c_ik
    auto v = synthetic_view({10, 0}, {0, 0}, {2.5}, {{0, 0}}, {{2, 0}});
    const auto out = gmm_control_detail(v, params);
    EXPECT_FALSE(out.switched);
    EXPECT_EQ(out.gain_correction, 0.0);
    EXPECT_NEAR(out.velocity.x, 1.75, 1e-15);
    EXPECT_EQ(out.velocity.y, 0.0);

    // static: identical to Lloyd
    auto s = synthetic_view({4, -3}, {1, 1}, {1.0, 2.0}, {{0, 2}, {1.5, 0.5}}, {{0, 0}, {0, 0}});
    EXPECT_EQ(gmm_control(s, params), lloyd_control(s, params));

    // at the centroid with a shared velocity
    auto w = synthetic_view({1, 1}, {1, 1}, {1.0, 3.0, 0.5}, {{0, 2}, {1.5, 0.5}, {9, 9}},
                            {{0.3, -1.1}, {0.3, -1.1}, {0.3, -1.1}});
    const auto at = gmm_control_detail(w, params);
    EXPECT_TRUE(at.switched);
    EXPECT_DOUBLE_EQ(at.velocity.x, 0.3);
    EXPECT_DOUBLE_EQ(at.velocity.y, -1.1);
}

TEST(GmmControl, SwitchGapMatchesClosedForm) {
    ControlParams params;
    params.epsilon = 0.01;
    // |p - c| is exactly epsilon
    auto v = synthetic_view({0, params.epsilon}, {0, 0}, {1.0, 2.0}, {{0, 2}, {1.5, 0.5}}, {{0.5, 0}, {0, -1}});
    v.omega_flux = {{0.2, 0.1}, {-0.4, 0.3}};
    const double f = gain_correction(v);
    ASSERT_NE(f, 0.0);

    const auto near = gmm_control_detail(v, params);
    EXPECT_TRUE(near.switched);
    ControlParams tight = params;
    tight.epsilon = params.epsilon / 2;
    const auto full = gmm_control_detail(v, tight);
    EXPECT_FALSE(full.switched);
    const double gap = norm(full.velocity - near.velocity);
    const double expected = std::abs(f) / (2.0 * v.moments.mass * params.epsilon);
    EXPECT_NEAR(gap, expected, 1e-12 * expected);
}

TEST(GmmControl, GainCorrectionAssembly) {
    auto v = synthetic_view({5, 0}, {1, 1}, {1.0, 2.0}, {{0, 2}, {1.5, 0.5}}, {{0.5, 0}, {0, -1}});
    v.omega_flux = {{0.2, 0.1}, {-0.4, 0.3}};
    const double moment_terms = 2 * 1.0 * dot(Vec2{0.5, 0}, Vec2{1, -1}) + 2 * 2.0 * dot(Vec2{0, -1}, Vec2{-0.5, 0.5});
    const double boundary_terms = dot(Vec2{0.5, 0}, Vec2{0.2, 0.1}) + dot(Vec2{0, -1}, Vec2{-0.4, 0.3});
    EXPECT_DOUBLE_EQ(gain_correction(v), moment_terms + boundary_terms);
}

TEST(ClampSpeed, Examples) {
    EXPECT_EQ(clamp_speed({1, 0}, 3.5), (Vec2{1, 0}));
    EXPECT_EQ(clamp_speed({6, 8}, 5), (Vec2{3, 4}));
    EXPECT_EQ(clamp_speed({0, 0}, 3.5), (Vec2{0, 0}));
}

TEST(ClampSpeed, BoundAndDirection) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0, 10);
    std::uniform_real_distribution<double> s(0.1, 8);
    for (int i = 0; i < 10000; ++i) {
        const Vec2 v{n(rng), n(rng)};
        const double smax = s(rng);
        const Vec2 c = clamp_speed(v, smax);
        EXPECT_LE(norm(c), smax * (1 + 1e-15));
        if (norm(v) > 0) {
            EXPECT_NEAR(dot(c, v) / (norm(c) * norm(v)), 1.0, 1e-14);
        }
    }
}

TEST(ControlProperties, StaticDensityLawsAgreeBitwise) {
    const GmmDensity gmm({still(100, 15, {30, 15}), still(80, 10, {60, 70}), still(60, 20, {150, 40})});
    const auto omega = ConvexPolygon::rectangle(0, 0, 200, 100);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ux(0, 200), uy(0, 100);
    const ControlParams params;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Point2> p;
        for (int i = 0; i < 6; ++i) p.push_back({ux(rng), uy(rng)});
        for (const auto& cell : tessellate(p, omega)) {
            const LocalView v = make_local_view(cell, gmm, 0.0, {}, true);
            const Vec2 a = lloyd_control(v, params);
            EXPECT_EQ(dynamic_lloyd_control(v, params), a);
            EXPECT_EQ(gmm_control(v, params), a);
        }
    }
}

TEST(ControlParams, Validation) {
    EXPECT_NO_THROW(validate(ControlParams{}));
    EXPECT_THROW(validate(ControlParams{0.0, 1e-3, 3.5}), ValidationError);
    EXPECT_THROW(validate(ControlParams{0.05, 0.0, 3.5}), ValidationError);
    EXPECT_THROW(validate(ControlParams{0.05, 1e-3, -1}), ValidationError);
}
