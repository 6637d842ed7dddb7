// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "viewforge/scene.hpp"

namespace vf = viewforge;
using vf::Action;
using vf::ActionKind;
using vf::Pose;

namespace {

vf::Scene one_object(vf::Vec3 center, vf::Vec3 size, std::string label = "chair") {
    vf::Scene s;
    s.id = "s0";
    s.domain = "scannet_detect";
    s.seed = 42;
    s.objects.push_back({"o1", std::move(label), center, size});
    return s;
}

vf::Detection det(std::string id, std::string label, vf::BoxI b, double conf) {
    return {std::move(id), std::move(label), b, conf};
}

}  // namespace

TEST(Box, BasicsAndFormat) {
    const vf::BoxI b{48, 558, 226, 681};
    EXPECT_EQ(vf::format_box(b), "[48, 558, 226, 681]");
    EXPECT_TRUE(b.ordered());
    EXPECT_TRUE(b.in_image());
    EXPECT_EQ(b.area(), 178.0 * 123.0);
    EXPECT_FALSE((vf::BoxI{500, 500, 100, 100}).ordered());
    EXPECT_EQ((vf::BoxI{500, 500, 100, 100}).area(), 0.0);
    EXPECT_NEAR(vf::iou(vf::BoxD{0, 0, 10, 10}, vf::BoxD{5, 0, 15, 10}), 50.0 / 150.0, 1e-15);
    EXPECT_EQ(vf::iou(vf::BoxD{0, 0, 10, 10}, vf::BoxD{20, 20, 30, 30}), 0.0);
}

TEST(ValidateScene, Invariants) {
    auto s = one_object({0, 3, 1}, {1, 1, 1});
    EXPECT_NO_THROW(vf::validate_scene(s));
    auto dup = s;
    dup.objects.push_back(dup.objects.front());
    EXPECT_THROW(vf::validate_scene(dup), std::invalid_argument);
    auto flat = s;
    flat.objects.front().size.z = 0.0;
    EXPECT_THROW(vf::validate_scene(flat), std::invalid_argument);
    auto low = s;
    low.camera_height = 0.0;
    EXPECT_THROW(vf::validate_scene(low), std::invalid_argument);
}

TEST(ProjectBox, OnAxisObjectIsCentered) {
    const auto s = one_object({0.0, 5.0, 1.5}, {1.0, 1.0, 1.0});
    const auto pb = vf::project_box(s, {}, "o1");
    ASSERT_TRUE(pb.has_value());
    EXPECT_NEAR((pb->bbox.x1 + pb->bbox.x2) / 2.0, 500.0, 1.0);
    EXPECT_NEAR((pb->bbox.y1 + pb->bbox.y2) / 2.0, 500.0, 1.0);
    EXPECT_DOUBLE_EQ(pb->depth, 5.0);
}

TEST(ProjectBox, BehindCameraIsAbsent) {
    const auto s = one_object({0.0, -5.0, 1.5}, {1.0, 1.0, 1.0});
    EXPECT_FALSE(vf::project_box(s, {}, "o1").has_value());
}

TEST(ProjectBox, UnknownObjectThrows) {
    const auto s = one_object({0.0, 5.0, 1.5}, {1.0, 1.0, 1.0});
    EXPECT_THROW((void)vf::project_box(s, {}, "nope"), std::out_of_range);
}

TEST(ProjectBox, WidthDoublesWhenDepthHalves) {
    // Thin frontal panel 1 m wide. Oracle: width = 2 * f * (w / 2) / depth, f = 500 at 90 degrees.
    const auto s = one_object({0.0, 5.0, 1.5}, {1.0, 0.001, 0.5});
    const auto far = vf::project_box(s, {0, 0, 0}, "o1");
    const auto near = vf::project_box(s, {0, 2.5, 0}, "o1");
    ASSERT_TRUE(far && near);
    const double f = 500.0;
    EXPECT_NEAR(far->bbox.width(), f * 1.0 / (5.0 - 0.0005), 1.0);
    EXPECT_NEAR(near->bbox.width(), f * 1.0 / (2.5 - 0.0005), 1.0);
    EXPECT_NEAR(near->bbox.width(), 2.0 * far->bbox.width(), 1.0);
}

TEST(ProjectBox, RotatedCameraSeesObjectToItsRight) {
    // Yaw 90 faces +x: an object at (5, 0) is straight ahead.
    const auto s = one_object({5.0, 0.0, 1.5}, {1.0, 1.0, 1.0});
    const auto pb = vf::project_box(s, {0, 0, 90}, "o1");
    ASSERT_TRUE(pb.has_value());
    EXPECT_NEAR((pb->bbox.x1 + pb->bbox.x2) / 2.0, 500.0, 1.0);
    // Facing 45 degrees the same object sits on the right frustum edge.
    const auto side = vf::project_box(s, {0, 0, 45}, "o1");
    ASSERT_TRUE(side.has_value());
    EXPECT_GT((side->bbox.x1 + side->bbox.x2) / 2.0, 500.0);
}

TEST(ProjectBox, ClippedAndOrdered) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-6, 6), yaw(-179, 180);
    auto s = one_object({1.0, 2.0, 0.5}, {0.8, 0.6, 1.0});
    for (int i = 0; i < 2000; ++i) {
        const auto pb = vf::project_box(s, {pos(rng), pos(rng), yaw(rng)}, "o1");
        if (!pb) continue;
        EXPECT_TRUE(pb->bbox.in_image());
        EXPECT_LE(pb->bbox.x1, pb->bbox.x2);
        EXPECT_LE(pb->bbox.y1, pb->bbox.y2);
    }
}

TEST(SynthDetections, EmptyScene) {
    vf::Scene s;
    s.id = "empty";
    s.domain = "scannet_detect";
    EXPECT_TRUE(vf::synth_detections(s, {}).empty());
}

TEST(SynthDetections, LargeFrontalObjectPassesThreshold) {
    // 2 m cube 4 m ahead: area ratio ~0.06 so confidence >= 0.5 + 0.5 * 0.06^0.25 - 0.1 > 0.3.
    const auto s = one_object({0.0, 4.0, 1.5}, {2.0, 2.0, 2.0});
    const auto d = vf::synth_detections(s, {});
    ASSERT_EQ(d.size(), 1u);
    EXPECT_GT(d[0].confidence, 0.3);
    EXPECT_EQ(vf::filter_detections(d).size(), 1u);
}

TEST(SynthDetections, ConfidenceFormula) {
    vf::ProjectedBox pb;
    pb.bbox = {0, 0, 500, 500};
    pb.raw = {-500.0, 0.0, 500.0, 500.0};
    // area 0.25, truncation 0.5: 0.5 + 0.5 * 0.25^0.25 - 0.3 + 0.05
    EXPECT_NEAR(vf::detection_confidence(pb, 0.05), 0.5 + 0.5 * std::sqrt(0.5) - 0.3 + 0.05, 1e-12);
    EXPECT_EQ(vf::detection_confidence(pb, -5.0), 0.0);
    EXPECT_EQ(vf::detection_confidence(pb, 5.0), 1.0);
}

TEST(SynthDetections, Deterministic) {
    const auto s = one_object({0.3, 4.0, 1.0}, {1.0, 1.0, 1.0});
    const Pose p{0.1, 0.2, 3.0};
    const auto a = vf::synth_detections(s, p);
    const auto b = vf::synth_detections(s, p);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].bbox, b[i].bbox);
        EXPECT_EQ(a[i].confidence, b[i].confidence);
    }
    for (int i = 0; i < 1000; ++i) {
        const double n = vf::detection_noise(7, "o" + std::to_string(i), {i * 0.1, 0, 0});
        EXPECT_GE(n, -0.1);
        EXPECT_LE(n, 0.1);
    }
}

TEST(FilterDetections, ConfidenceThreshold) {
    std::vector<vf::Detection> d{det("a", "chair", {100, 100, 300, 300}, 0.29)};
    EXPECT_TRUE(vf::filter_detections(d).empty());
    d[0].confidence = 0.3;
    EXPECT_EQ(vf::filter_detections(d).size(), 1u);
}

TEST(FilterDetections, BorderMargin) {
    EXPECT_TRUE(vf::filter_detections({det("a", "chair", {0, 100, 300, 300}, 0.9)}).empty());
    EXPECT_TRUE(vf::filter_detections({det("a", "chair", {100, 100, 995, 300}, 0.9)}).empty());
    EXPECT_EQ(vf::filter_detections({det("a", "chair", {10, 10, 300, 300}, 0.9)}).size(), 1u);
}

TEST(FilterDetections, AreaBounds) {
    EXPECT_TRUE(vf::filter_detections({det("a", "cup", {100, 100, 190, 190}, 0.9)}).empty());  // 0.0081
    EXPECT_TRUE(vf::filter_detections({det("a", "bed", {10, 10, 900, 900}, 0.9)}).empty());    // 0.79
    EXPECT_EQ(vf::filter_detections({det("a", "cup", {100, 100, 200, 200}, 0.9)}).size(), 1u);  // 0.01
}

TEST(FilterDetections, GreedyNmsKeepsHigherConfidence) {
    // Same-height boxes offset by w/4 horizontally: IoU = 0.75 / 1.25 = 0.6.
    const auto a = det("a", "chair", {100, 100, 300, 300}, 0.9);
    const auto b = det("b", "chair", {150, 100, 350, 300}, 0.8);
    ASSERT_NEAR(vf::iou(a.bbox, b.bbox), 0.6, 1e-12);
    const auto kept = vf::filter_detections({b, a});
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].object_id, "a");
    // Different labels do not suppress each other.
    auto c = b;
    c.label = "table";
    EXPECT_EQ(vf::filter_detections({a, c}).size(), 2u);
}

TEST(FilterDetections, OnePerInstance) {
    const auto kept = vf::filter_detections(
        {det("a", "chair", {100, 100, 300, 300}, 0.7), det("a", "chair", {600, 600, 800, 800}, 0.9)});
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_DOUBLE_EQ(kept[0].confidence, 0.9);
}

TEST(VisibilityAfter, ZeroNetMotionKeepsVisibility) {
    const auto s = one_object({0.0, 4.0, 1.2}, {1.0, 1.0, 1.0});
    const vf::ActionSequence none{Action::meters(ActionKind::move_forward, 1.0),
                                  Action::meters(ActionKind::move_backward, 1.0)};
    const bool now = vf::visibility_after(s, {}, {}, "o1");
    EXPECT_TRUE(now);
    EXPECT_EQ(vf::visibility_after(s, {}, none, "o1"), now);
}

TEST(VisibilityAfter, PassingTheObjectHidesIt) {
    const auto s = one_object({0.0, 4.0, 1.2}, {1.0, 1.0, 1.0});
    EXPECT_FALSE(vf::visibility_after(s, {}, vf::ActionSequence{Action::meters(ActionKind::move_forward, 5.5)}, "o1"));
}

TEST(VisibilityAfter, SmallBackwardStepKeepsIt) {
    const auto s = one_object({0.0, 4.0, 1.2}, {1.0, 1.0, 1.0});
    EXPECT_TRUE(vf::visibility_after(s, {}, vf::ActionSequence{Action::meters(ActionKind::move_backward, 0.5)}, "o1"));
}

TEST(MatchInstances, Cases) {
    const std::vector<vf::Detection> a{det("x", "chair", {}, 1), det("y", "cup", {}, 1), det("z", "tv", {}, 1)};
    const std::vector<vf::Detection> b{det("p", "chair", {}, 1), det("q", "cup", {}, 1)};
    EXPECT_TRUE(vf::match_instances(a, b).empty());
    EXPECT_EQ(vf::match_instances(a, a).size(), 3u);
    const std::vector<vf::Detection> c{det("p", "chair", {}, 1), det("y", "cup", {}, 1), det("r", "tv", {}, 1)};
    const auto m = vf::match_instances(a, c);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].first.object_id, "y");
}

TEST(SceneFile, RoundTrip) {
    vf::Scene s = one_object({0.1, 2.345, 0.75}, {0.33, 0.2, 1.0 / 3.0});
    s.objects.push_back({"o2", "table", {-1.0, 3.0, 0.375}, {1.2, 0.8, 0.75}});
    s.intrinsics.horizontal_fov = 75.5;
    std::stringstream ss;
    ss << "# header\n";
    vf::write_scene(ss, s);
    const auto back = vf::read_scenes(ss);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], s);
}

TEST(SceneFile, Errors) {
    std::stringstream bad("scene a\ndomain x\nobject o1 chair 1 2\nend\n");
    try {
        (void)vf::read_scenes(bad);
        FAIL() << "expected SceneFormatError";
    } catch (const vf::SceneFormatError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::stringstream open("scene a\ndomain x\n");
    EXPECT_THROW((void)vf::read_scenes(open), vf::SceneFormatError);
    std::stringstream dup("scene a\ndomain x\nobject o chair 0 1 1 1 1 1\nobject o cup 0 1 1 1 1 1\nend\n");
    EXPECT_THROW((void)vf::read_scenes(dup), vf::SceneFormatError);
}
