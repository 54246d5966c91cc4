#include "ferroservo/controller.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace ferroservo;

namespace {

struct RandomScenes {
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> u{-1.0, 1.0};

    explicit RandomScenes(std::uint64_t seed) : rng(seed) {}

    Vec2 point(double radius) {
        for (;;) {
            const Vec2 p{radius * u(rng), radius * u(rng)};
            if (norm(p) <= radius) return p;
        }
    }

    ServoScene scene(const WorkspaceConfig& rig, const VelocityModel& model, double current) {
        const Vec2 p = point(3.9);
        Vec2 t = point(3.9);
        while (distance(p, t) < 1e-3) t = point(3.9);
        return make_scene(p, t, rig, model, current);
    }
};

int abs_min_coefficient_exceeds(const ServoScene& s, const ControllerWeights& w, double eps) {
    for (double c : pattern_coefficients(s, w)) {
        if (std::abs(c) < eps) return 0;
    }
    return 1;
}

Vec2 reflect_across(const Vec2& v, const Vec2& axis) {
    const Vec2 a = axis / norm(axis);
    return 2.0 * dot(v, a) * a - v;
}

}  // namespace

TEST(ExpectedVelocities, EqualMagnitudesAtCentreWithRadialDirections) {
    const WorkspaceConfig rig = default_rig();
    const auto v = expected_velocities({0.0, 0.0}, rig, make_velocity_model(), 1.43);
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        EXPECT_NEAR(norm(v[i]), 3.17 / 5.1 + 0.03, 1e-12);
        const Vec2 outward = (Vec2{} - tip_projection(rig.solenoids[i])) / 5.1;
        EXPECT_NEAR(dot(v[i], outward), norm(v[i]), 1e-12);
    }
}

TEST(ExpectedVelocities, HandEvaluatedExamples) {
    const auto v = expected_velocities({-2.0, 0.0}, default_rig(), make_velocity_model(), 1.43);
    EXPECT_NEAR(v[4].x, 1.0526, 1e-4);
    EXPECT_NEAR(v[4].y, 0.0, 1e-12);
    EXPECT_NEAR(v[0].x, -0.4765, 1e-4);
}

TEST(ExpectedVelocities, OnATipIsDomainError) {
    WorkspaceConfig rig = default_rig();
    EXPECT_THROW(expected_velocities({5.1, 0.0}, rig, make_velocity_model(), 1.43), std::domain_error);
}

TEST(Project, AlignedOrthogonalAndNormPreserving) {
    const Vec2 p{0.0, 0.0};
    const Vec2 t{2.0, 0.0};
    Projection pr = project({1.0, 0.0}, p, t);
    EXPECT_DOUBLE_EQ(pr.parallel, 1.0);
    EXPECT_DOUBLE_EQ(pr.perpendicular, 0.0);
    pr = project({0.0, 1.0}, p, t);
    EXPECT_DOUBLE_EQ(pr.parallel, 0.0);
    EXPECT_DOUBLE_EQ(pr.perpendicular, 1.0);
    pr = project({1.0, 1.0}, p, t);
    EXPECT_DOUBLE_EQ(pr.parallel, 1.0);
    EXPECT_DOUBLE_EQ(pr.perpendicular, 1.0);
    EXPECT_NEAR(std::hypot(pr.parallel, pr.perpendicular), std::sqrt(2.0), 1e-15);
    EXPECT_THROW(project({1.0, 0.0}, p, p), std::domain_error);
}

TEST(SolvePattern, HandEvaluatedLineScene) {
    const ServoScene s = make_scene({-2.0, 0.0}, {2.0, 0.0}, default_rig(), make_velocity_model(), 1.43);
    const ControllerWeights w;
    const auto c = pattern_coefficients(s, w);
    EXPECT_NEAR(c[4], 0.4145 * 1.0526 - 0.0001 / 16.0, 1e-4);
    EXPECT_NEAR(c[4], 0.4363, 1e-4);
    EXPECT_LT(c[0], 0.0);
    const ActuationPattern pat = solve_pattern(s, w);
    EXPECT_TRUE(pat.on(4));
    EXPECT_FALSE(pat.on(0));
}

TEST(SolvePattern, DeadbandGivesAllOff) {
    const ControllerWeights w;
    const ServoScene s = make_scene({1.0, 1.0}, {1.0 + 0.03, 1.0 - 0.03}, default_rig(),
                                    make_velocity_model(), 1.43);
    EXPECT_EQ(solve_pattern(s, w), ActuationPattern::all_off());
    EXPECT_EQ(enumerate_oracle(s, w), ActuationPattern::all_off());
}

TEST(SolvePattern, AllNegativeAndAllPositiveCoefficients) {
    ServoScene s;
    s.particle = {0.0, 0.0};
    s.target = {1.0, 0.0};
    ControllerWeights w;
    w.beta = 0.0;
    w.gamma = 0.0;
    for (auto& v : s.expected_velocities) v = {-1.0, 0.0};
    EXPECT_EQ(solve_pattern(s, w).bits(), 0);
    EXPECT_EQ(enumerate_oracle(s, w).bits(), 0);
    for (auto& v : s.expected_velocities) v = {1.0, 0.0};
    EXPECT_EQ(solve_pattern(s, w).bits(), 255);
    EXPECT_EQ(enumerate_oracle(s, w).bits(), 255);
}

TEST(SolvePattern, ZeroCoefficientIsOff) {
    ServoScene s;
    s.particle = {0.0, 0.0};
    s.target = {1.0, 0.0};
    ControllerWeights w;
    w.gamma = 0.0;
    s.expected_velocities.fill({0.0, 0.0});
    EXPECT_EQ(solve_pattern(s, w).bits(), 0);
    EXPECT_EQ(enumerate_oracle(s, w).bits(), 0);
}

TEST(EnumerateOracle, IsTheArgmaxOverAllPatterns) {
    RandomScenes gen(3);
    const WorkspaceConfig rig = default_rig();
    const VelocityModel m = make_velocity_model(GainPreset::Fig2d);
    const ControllerWeights w;
    for (int i = 0; i < 300; ++i) {
        const ServoScene s = gen.scene(rig, m, 1.2);
        if (distance(s.particle, s.target) <= w.deadband_mm) continue;
        const double best = objective(s, w, enumerate_oracle(s, w));
        for (unsigned code = 0; code < 256; ++code) {
            EXPECT_GE(best, objective(s, w, ActuationPattern{static_cast<std::uint8_t>(code)}));
        }
    }
}

TEST(SolvePattern, EqualsExhaustiveOracleOnRandomScenes) {
    RandomScenes gen(17);
    std::uniform_real_distribution<double> gain(0.3, 1.7);
    std::uniform_real_distribution<double> current(0.2, 1.8);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        WorkspaceConfig rig = default_rig();
        for (auto& s : rig.solenoids) s.gain = gain(gen.rng);
        const VelocityModel m = make_velocity_model(i % 2 ? GainPreset::Fig2d : GainPreset::Unit);
        const ServoScene s = gen.scene(rig, m, current(gen.rng));
        ControllerWeights w;
        w.gamma = (i % 3 == 0) ? 0.05 : 1e-4;
        mismatches += solve_pattern(s, w) == enumerate_oracle(s, w) ? 0 : 1;
    }
    EXPECT_EQ(mismatches, 0);
}

TEST(SolvePattern, RotationByEighthTurnsPermutesPattern) {
    RandomScenes gen(23);
    const WorkspaceConfig rig = default_rig();
    const VelocityModel m = make_velocity_model();
    const ControllerWeights w;
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const ServoScene s = gen.scene(rig, m, 1.43);
        if (!abs_min_coefficient_exceeds(s, w, 1e-9)) continue;
        const int k = i % 8;
        const double a = k * kPi / 4.0;
        const ServoScene r = make_scene(rotated(s.particle, a), rotated(s.target, a), rig, m, 1.43);
        EXPECT_EQ(solve_pattern(r, w), solve_pattern(s, w).rotated(k)) << "scene " << i;
        ++checked;
    }
    EXPECT_GT(checked, 990);
}

TEST(SolvePattern, MirrorAcrossPtLineLeavesPatternUnchanged) {
    RandomScenes gen(29);
    const WorkspaceConfig rig = default_rig();
    const VelocityModel m = make_velocity_model(GainPreset::Fig2d);
    const ControllerWeights w;
    for (int i = 0; i < 1000; ++i) {
        const ServoScene s = gen.scene(rig, m, 1.0);
        ServoScene mirrored = s;
        for (auto& v : mirrored.expected_velocities) v = reflect_across(v, s.target - s.particle);
        for (std::size_t j = 0; j < kSolenoidCount; ++j) {
            const Projection a = project(s.expected_velocities[j], s.particle, s.target);
            const Projection b = project(mirrored.expected_velocities[j], s.particle, s.target);
            EXPECT_NEAR(a.perpendicular, -b.perpendicular, 1e-12);
        }
        if (!abs_min_coefficient_exceeds(s, w, 1e-9)) continue;
        EXPECT_EQ(solve_pattern(mirrored, w), solve_pattern(s, w));
    }
}

TEST(SolvePattern, LargerGammaNeverAddsSolenoids) {
    RandomScenes gen(31);
    const WorkspaceConfig rig = default_rig();
    const VelocityModel m = make_velocity_model();
    for (int i = 0; i < 1000; ++i) {
        const ServoScene s = gen.scene(rig, m, 1.43);
        ControllerWeights w;
        int prev = 9;
        for (double g : {0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0}) {
            w.gamma = g;
            const int n = solve_pattern(s, w).count();
            EXPECT_LE(n, prev);
            prev = n;
        }
    }
}

TEST(SolvePattern, ScalingVelocitiesWithoutGammaKeepsPattern) {
    RandomScenes gen(37);
    std::uniform_real_distribution<double> lambda(0.01, 100.0);
    const WorkspaceConfig rig = default_rig();
    const VelocityModel m = make_velocity_model(GainPreset::Fig2d);
    ControllerWeights w;
    w.gamma = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const ServoScene s = gen.scene(rig, m, 1.43);
        ServoScene scaled = s;
        const double l = lambda(gen.rng);
        for (auto& v : scaled.expected_velocities) v = v * l;
        if (!abs_min_coefficient_exceeds(s, w, 1e-9)) continue;
        EXPECT_EQ(solve_pattern(scaled, w), solve_pattern(s, w));
    }
}

TEST(ControllerWeights, Validation) {
    ControllerWeights w;
    EXPECT_NO_THROW(w.validate());
    w.deadband_mm = 0.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
    w = ControllerWeights{};
    w.alpha = -1.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
    w = ControllerWeights{};
    w.lookahead_mm = 0.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

namespace {

std::vector<Vec2> straight(int n, double spacing) {
    std::vector<Vec2> out;
    for (int i = 0; i < n; ++i) out.push_back({i * spacing, 0.0});
    return out;
}

}  // namespace

TEST(WaypointTracker, CarrotIsFifthSampleAheadAtStart) {
    WaypointTracker t(straight(30, 0.1), 0.5, 0.1);
    const Vec2 c = t.advance({0.0, 0.0});
    EXPECT_EQ(t.index(), 0U);
    EXPECT_EQ(t.carrot_index(), 5U);
    EXPECT_NEAR(c.x, 0.5, 1e-12);
}

TEST(WaypointTracker, BeyondFinalSampleClampsToIt) {
    WaypointTracker t(straight(30, 0.1), 0.5, 0.1);
    for (double x = 0.0; x <= 3.5; x += 0.05) t.advance({x, 0.0});
    EXPECT_TRUE(t.at_final_sample());
    EXPECT_EQ(t.carrot(), t.final_sample());
}

TEST(WaypointTracker, IndexNeverDecreases) {
    WaypointTracker t(straight(60, 0.05), 0.2, 0.1);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.1);
    std::size_t prev = 0;
    for (int k = 0; k < 400; ++k) {
        t.advance({0.01 * k + n(rng), n(rng)});
        EXPECT_GE(t.index(), prev);
        prev = t.index();
    }
}

TEST(WaypointTracker, CarrotHeldAtCornerUntilReached) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 20; ++i) pts.push_back({i * 0.05, 0.0});
    for (int i = 1; i <= 20; ++i) pts.push_back({1.0, i * 0.05});
    WaypointTracker t(pts, 0.2, 0.1);
    ASSERT_EQ(t.corners().size(), 1U);
    EXPECT_EQ(t.corners()[0], 20U);
    for (int i = 0; i <= 17; ++i) t.advance({i * 0.05, 0.0});
    EXPECT_EQ(t.index(), 17U);
    EXPECT_EQ(t.carrot_index(), 20U);  // would be 21 without the hold
    t.advance({0.88, 0.0});
    EXPECT_EQ(t.carrot_index(), 20U);
    t.advance({0.93, 0.02});  // within reach of the corner
    EXPECT_GT(t.carrot_index(), 20U);
}

TEST(WaypointTracker, ClosedPathDoesNotFinishAtStart) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 40; ++i) {
        const double a = 2.0 * kPi * i / 40;
        pts.push_back({std::cos(a), std::sin(a)});
    }
    pts.back() = pts.front();
    WaypointTracker t(pts, 0.2, 0.1);
    t.advance(pts.front());
    EXPECT_FALSE(t.at_final_sample());
}

TEST(WaypointTracker, RejectsEmptyPathAndBadLookahead) {
    EXPECT_THROW(WaypointTracker({}, 0.2, 0.1), std::invalid_argument);
    EXPECT_THROW(WaypointTracker(straight(3, 0.1), 0.0, 0.1), std::invalid_argument);
}
