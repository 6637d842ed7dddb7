// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "viewforge/trajectory.hpp"

namespace vf = viewforge;
using vf::Action;
using vf::ActionKind;
using vf::Pose;

namespace {

Action fwd(double m) { return Action::meters(ActionKind::move_forward, m); }
Action back(double m) { return Action::meters(ActionKind::move_backward, m); }
Action tl(double d) { return Action::degrees(ActionKind::turn_left, d); }

vf::Scene empty_scene() {
    vf::Scene s;
    s.id = "s";
    s.domain = "scannet_undetect";
    return s;
}

}  // namespace

TEST(TrajectoryConfig, Validation) {
    vf::TrajectoryConfig c;
    EXPECT_NO_THROW(c.validate());
    c.min_frames = 7;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.max_translation_steps = 61;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrajectoryGroup, KeyFormat) {
    EXPECT_EQ(vf::trajectory_group(vf::ActionSequence{fwd(1.0), tl(30)}), "forward_turnleft:1.0m_30d");
    EXPECT_EQ(vf::trajectory_group(vf::ActionSequence{Action::meters(ActionKind::shift_right, 0.4)}), "shiftright:0.4m");
}

TEST(ExpandProgram, EightFramesOfTenCentimeters) {
    const auto t = vf::expand_program({}, {fwd(0.8)});
    ASSERT_EQ(t.frames.size(), 9u);
    EXPECT_EQ(t.frames[0].pose, Pose{});
    EXPECT_TRUE(t.frames[0].cumulative.empty());
    for (std::size_t i = 1; i < t.frames.size(); ++i) {
        EXPECT_EQ(t.frames[i].cumulative, vf::ActionSequence({Action{ActionKind::move_forward, static_cast<int>(10 * i)}}));
    }
}

TEST(ExpandProgram, PresetIncrements) {
    const vf::ActionSequence program{fwd(1.0), tl(30)};
    const auto t = vf::expand_program({1, 2, 3}, program);
    // 10 translation increments then 3 rotation increments; 13 frames already meet the minimum.
    ASSERT_EQ(t.frames.size(), 14u);
    for (int i = 1; i <= 10; ++i) EXPECT_EQ(t.frames[static_cast<std::size_t>(i)].cumulative.size(), 1u);
    for (int i = 11; i <= 13; ++i) {
        const auto& c = t.frames[static_cast<std::size_t>(i)].cumulative;
        ASSERT_EQ(c.size(), 2u);
        EXPECT_EQ(c[1], Action(ActionKind::turn_left, 10 * (i - 10)));
    }
    EXPECT_TRUE(vf::poses_close(t.frames.back().pose, vf::apply_sequence({1, 2, 3}, program), 1e-12));
}

TEST(ExpandProgram, ShortProgramsUseSubGridFrames) {
    const auto t = vf::expand_program({}, {tl(30)});
    EXPECT_GE(t.frames.size(), 9u);
    EXPECT_EQ(t.frames.back().cumulative, vf::ActionSequence({tl(30)}));
    const auto u = vf::expand_program({}, {fwd(0.1)});
    EXPECT_GE(u.frames.size(), 9u);
    EXPECT_EQ(u.frames.back().cumulative, vf::ActionSequence({fwd(0.1)}));
}

TEST(ExpandProgram, EveryFrameReplaysItsCumulativeMotion) {
    std::mt19937_64 rng(5);
    const vf::TrajectoryConfig cfg;
    for (int i = 0; i < 500; ++i) {
        const Pose anchor{std::uniform_real_distribution<double>(-5, 5)(rng), 0.25, 17.0};
        const auto t = vf::sample_trajectory(rng(), cfg, anchor);
        ASSERT_GE(t.frames.size(), 9u);
        EXPECT_EQ(t.frames.front().pose, anchor);
        for (const auto& f : t.frames) {
            EXPECT_TRUE(vf::poses_close(f.pose, vf::apply_sequence(anchor, f.cumulative), 1e-9));
        }
        EXPECT_EQ(t.frames.back().cumulative, vf::merge_runs(t.program));
    }
}

TEST(SampleTrajectory, Deterministic) {
    const vf::TrajectoryConfig cfg;
    const auto a = vf::sample_trajectory(99, cfg, {});
    const auto b = vf::sample_trajectory(99, cfg, {});
    EXPECT_EQ(a.program, b.program);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) EXPECT_EQ(a.frames[i].pose, b.frames[i].pose);
}

TEST(SampleProgram, CoversSinglesAndPresetsWithinCaps) {
    std::mt19937_64 rng(1);
    const vf::TrajectoryConfig cfg;
    std::set<std::size_t> lengths;
    std::set<ActionKind> kinds;
    for (int i = 0; i < 5000; ++i) {
        const auto p = vf::sample_program(rng, cfg);
        lengths.insert(p.size());
        for (const auto& a : p) {
            kinds.insert(a.kind);
            EXPECT_TRUE(a.on_grid());
            EXPECT_TRUE(a.within_caps());
        }
    }
    EXPECT_EQ(lengths, (std::set<std::size_t>{1, 2, 3}));
    EXPECT_EQ(kinds.size(), 6u);
    vf::TrajectoryConfig singles;
    singles.use_presets = false;
    for (int i = 0; i < 500; ++i) EXPECT_EQ(vf::sample_program(rng, singles).size(), 1u);
}

TEST(MaxDisplacementPair, ForwardTargetsLastFrame) {
    const auto t = vf::expand_program({}, {fwd(2.0)});
    const auto tr = vf::max_displacement_pair(t, empty_scene(), vf::PairingMode::motion_only);
    EXPECT_EQ(tr.target_frame, static_cast<int>(t.frames.size()) - 1);
    EXPECT_EQ(tr.ground_truth, vf::ActionSequence({fwd(2.0)}));
    EXPECT_EQ(tr.trajectory_group, "forward:2.0m");
}

TEST(MaxDisplacementPair, PureRotationTieBreaksToLastFrame) {
    const auto t = vf::expand_program({}, {tl(70)});
    const auto tr = vf::max_displacement_pair(t, empty_scene(), vf::PairingMode::motion_only);
    EXPECT_EQ(tr.target_frame, static_cast<int>(t.frames.size()) - 1);
    EXPECT_EQ(tr.ground_truth, vf::ActionSequence({tl(70)}));
}

TEST(MaxDisplacementPair, ApexBeatsEndpoint) {
    const auto t = vf::expand_program({}, {fwd(2.0), back(1.0)});
    const auto tr = vf::max_displacement_pair(t, empty_scene(), vf::PairingMode::motion_only);
    EXPECT_EQ(tr.target_frame, 20);
    EXPECT_EQ(tr.ground_truth, vf::ActionSequence({fwd(2.0)}));
    EXPECT_NEAR(tr.target_pose.y, 2.0, 1e-12);
}

TEST(MaxDisplacementPair, GroundTruthReplays) {
    std::mt19937_64 rng(21);
    const vf::TrajectoryConfig cfg;
    for (int i = 0; i < 300; ++i) {
        const auto t = vf::sample_trajectory(rng(), cfg, {0.5, -0.5, 45});
        const auto tr = vf::max_displacement_pair(t, empty_scene(), vf::PairingMode::motion_only);
        EXPECT_TRUE(vf::poses_close(vf::apply_sequence(tr.source_pose, tr.ground_truth), tr.target_pose, 1e-9));
        for (const auto& a : tr.ground_truth) EXPECT_TRUE(a.on_grid());
    }
}

TEST(MaxDisplacementPair, GroundedNeedsAMatch) {
    const auto t = vf::expand_program({}, {fwd(1.0)});
    EXPECT_THROW((void)vf::max_displacement_pair(t, empty_scene(), vf::PairingMode::object_grounded), vf::NoValidFrame);

    vf::Scene s = empty_scene();
    s.domain = "scannet_detect";
    s.objects.push_back({"o1", "sofa", {0.0, 5.0, 0.5}, {2.0, 1.0, 1.0}});
    const auto tr = vf::max_displacement_pair(t, s, vf::PairingMode::object_grounded);
    EXPECT_GT(tr.target_frame, 0);
}
