// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "viewforge/pipeline.hpp"

namespace vf = viewforge;
using vf::TaskType;

namespace {

const std::vector<vf::TaskRecord>& small_run() {
    static const auto recs = [] {
        vf::RunConfig cfg;
        cfg.seed = 3;
        return vf::generate_dataset(cfg, vf::generate_scenes(cfg));
    }();
    return recs;
}

}  // namespace

TEST(RunConfig, DefaultsValidate) {
    vf::RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.scene_count = 3;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.objects_max = 2;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.hfov = 180;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunConfig, JsonOverlay) {
    vf::RunConfig c;
    vf::apply_config_json(c, nlohmann::json::parse(R"({"seed": 9, "per_task": 4, "trajectory": {"min_frames": 12}})"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.per_task, 4);
    EXPECT_EQ(c.trajectory.min_frames, 12);
    EXPECT_THROW(vf::apply_config_json(c, nlohmann::json::parse(R"({"sed": 1})")), std::invalid_argument);
    EXPECT_THROW(vf::apply_config_json(c, nlohmann::json::parse(R"({"trajectory": {"x": 1}})")), std::invalid_argument);
    EXPECT_THROW(vf::apply_config_json(c, nlohmann::json::parse(R"({"per_task": "many"})")), std::invalid_argument);
    EXPECT_THROW(vf::apply_config_json(c, nlohmann::json::parse("[1]")), std::invalid_argument);

    vf::RunConfig round;
    vf::apply_config_json(round, vf::config_json(c));
    EXPECT_EQ(vf::config_json(round), vf::config_json(c));
}

TEST(RunConfig, HashIsStableAndSensitive) {
    vf::RunConfig a;
    vf::RunConfig b;
    EXPECT_EQ(vf::config_hash(a), vf::config_hash(b));
    EXPECT_EQ(vf::config_hash(a).size(), 16u);
    b.seed = 1;
    EXPECT_NE(vf::config_hash(a), vf::config_hash(b));
    const auto h = vf::header_json(vf::make_header(a, "gen-scenes"));
    const auto& inner = h.at("viewforge_header");
    EXPECT_EQ(inner.at("config_hash"), vf::config_hash(a));
    EXPECT_EQ(inner.at("seed"), 0u);
    EXPECT_EQ(inner.at("provenance").at("guidance_scale"), 4.0);
    EXPECT_EQ(inner.at("provenance").at("camera_scale"), 2.0);
}

TEST(GenerateScenes, DeterministicAndValid) {
    vf::RunConfig cfg;
    cfg.seed = 5;
    const auto a = vf::generate_scenes(cfg);
    const auto b = vf::generate_scenes(cfg);
    ASSERT_EQ(a.size(), 32u);
    const auto h = vf::make_header(cfg, "gen-scenes");
    EXPECT_EQ(vf::scenes_text(h, a), vf::scenes_text(h, b));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].domain, vf::kSourceBuckets[i % 4]);
        EXPECT_GE(static_cast<int>(a[i].objects.size()), cfg.objects_min);
        EXPECT_LE(static_cast<int>(a[i].objects.size()), cfg.objects_max);
        EXPECT_NO_THROW(vf::validate_scene(a[i]));
    }
    cfg.seed = 6;
    EXPECT_NE(vf::scenes_text(h, a), vf::scenes_text(h, vf::generate_scenes(cfg)));
}

TEST(GenerationTargets, SplitsEvenly) {
    const auto t = vf::generation_targets(10);
    EXPECT_EQ(t.size(), 32u);
    EXPECT_EQ(t.at({TaskType::A1, "scannet_detect"}), 3);
    EXPECT_EQ(t.at({TaskType::A1, "scannet_undetect"}), 3);
    EXPECT_EQ(t.at({TaskType::A1, "mulset_detect"}), 2);
    EXPECT_EQ(t.at({TaskType::A1, "mulset_undetect"}), 2);
}

TEST(GenerateDataset, EightyValidRecords) {
    const auto& recs = small_run();
    ASSERT_EQ(recs.size(), 80u);
    const auto s = vf::corpus_stats(recs);
    for (const auto& [k, v] : s.by_task) EXPECT_EQ(v, 10u) << k;
    EXPECT_EQ(s.by_direction.at("inverse"), 40u);
    EXPECT_EQ(s.by_direction.at("forward"), 40u);
    std::set<std::string> ids;
    for (const auto& r : recs) {
        EXPECT_FALSE(vf::validate_record(r).has_value()) << r.id;
        ids.insert(r.id);
    }
    EXPECT_EQ(ids.size(), recs.size());
}

TEST(GenerateDataset, AnswerPolaritiesAreMixed) {
    std::map<std::string, std::set<std::string>> answers;
    for (const auto& r : small_run()) {
        if (r.task == TaskType::A4 || r.task == TaskType::D2 || r.task == TaskType::D4) {
            answers[std::string(vf::to_string(r.task))].insert(r.answer);
        }
    }
    EXPECT_EQ(answers["A4"], (std::set<std::string>{"true", "false"}));
    EXPECT_EQ(answers["D2"], (std::set<std::string>{"yes", "no"}));
    EXPECT_EQ(answers["D4"], (std::set<std::string>{"yes", "no"}));
}

TEST(GenerateDataset, Deterministic) {
    vf::RunConfig cfg;
    cfg.seed = 3;
    const auto again = vf::generate_dataset(cfg, vf::generate_scenes(cfg));
    EXPECT_EQ(again, small_run());
}

TEST(GenerateDataset, RecordsReplayThroughTheSceneOracle) {
    vf::RunConfig cfg;
    cfg.seed = 3;
    const auto scenes = vf::generate_scenes(cfg);
    std::map<std::string, const vf::Scene*> by_id;
    for (const auto& s : scenes) by_id[s.id] = &s;
    for (const auto& r : small_run()) {
        if (r.task != TaskType::D1) continue;
        const auto scene_id = r.images[0].substr(0, r.images[0].find('/'));
        const auto& scene = *by_id.at(scene_id);
        EXPECT_EQ(scene.domain, r.source_bucket);
        const auto dets = vf::filter_detections(vf::synth_detections(scene, *r.meta.target_pose),
                                                vf::annotation_filter(r.source_bucket));
        const auto target = r.meta.boxes.at("target");
        const bool found = std::any_of(dets.begin(), dets.end(), [&](const vf::Detection& d) { return d.bbox == target; });
        EXPECT_TRUE(found) << r.id;
    }
}

TEST(GenerateDataset, ExhaustionIsReported) {
    vf::RunConfig cfg;
    cfg.max_attempts = 5;
    EXPECT_THROW((void)vf::generate_dataset(cfg, vf::generate_scenes(cfg)), vf::GenerationExhausted);
    std::vector<vf::Scene> one_bucket = vf::generate_scenes(cfg);
    std::erase_if(one_bucket, [](const vf::Scene& s) { return s.domain != "scannet_detect"; });
    EXPECT_THROW((void)vf::generate_dataset(vf::RunConfig{}, one_bucket), vf::GenerationExhausted);
}

TEST(AnnotationFilter, ModesByBucket) {
    EXPECT_EQ(vf::annotation_filter("scannet_detect").min_confidence, vf::DetectionFilter{}.min_confidence);
    EXPECT_EQ(vf::annotation_filter("mulset_undetect").min_confidence, 0.0);
    EXPECT_GT(vf::annotation_filter("mulset_undetect").nms_iou, 1.0);
}
