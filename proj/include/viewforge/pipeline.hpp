// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end offline generation: synthetic scenes, sampled trajectories,
// transitions and validated task records, all a pure function of the run
// configuration.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewforge/dataset.hpp"
#include "viewforge/scene.hpp"
#include "viewforge/task.hpp"
#include "viewforge/task_forge.hpp"
#include "viewforge/trajectory.hpp"

namespace viewforge {

struct RunConfig {
    std::uint64_t seed{0};

    // scenes
    int scene_count{32};
    int objects_min{6};
    int objects_max{12};
    double room_extent{10.0};  // side of the square room, meters
    double camera_height{1.5};
    double hfov{90.0};

    TrajectoryConfig trajectory{};

    // records
    int per_task{10};
    bool action_menu{false};
    int max_attempts{200000};

    // inert provenance copied into output headers
    double guidance_scale{4.0};
    double camera_scale{2.0};

    void validate() const {
        if (scene_count < static_cast<int>(kSourceBuckets.size())) {
            throw std::invalid_argument("config: scene_count must cover every source bucket");
        }
        if (objects_min < 1 || objects_max < objects_min) throw std::invalid_argument("config: bad object count range");
        if (!(room_extent > 2.0)) throw std::invalid_argument("config: room_extent must exceed 2 m");
        if (!(camera_height > 0.0)) throw std::invalid_argument("config: camera_height must be positive");
        if (!(hfov > 0.0 && hfov < 180.0)) throw std::invalid_argument("config: hfov must be in (0, 180)");
        if (per_task < 0) throw std::invalid_argument("config: per_task must be non-negative");
        if (max_attempts < 1) throw std::invalid_argument("config: max_attempts must be positive");
        trajectory.validate();
    }
};

[[nodiscard]] inline json config_json(const RunConfig& c) {
    const auto& t = c.trajectory;
    return {{"seed", c.seed},
            {"scene_count", c.scene_count},
            {"objects_min", c.objects_min},
            {"objects_max", c.objects_max},
            {"room_extent", c.room_extent},
            {"camera_height", c.camera_height},
            {"hfov", c.hfov},
            {"trajectory",
             {{"max_translation_steps", t.max_translation_steps},
              {"max_rotation_steps", t.max_rotation_steps},
              {"min_frames", t.min_frames},
              {"per_frame_translation", t.per_frame_translation},
              {"per_frame_rotation", t.per_frame_rotation},
              {"use_presets", t.use_presets}}},
            {"per_task", c.per_task},
            {"action_menu", c.action_menu},
            {"max_attempts", c.max_attempts},
            {"guidance_scale", c.guidance_scale},
            {"camera_scale", c.camera_scale}};
}

/// Overlays the keys present in `j` onto `c`; unknown keys are an error.
inline void apply_config_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    for (const auto& [k, v] : j.items()) {
        try {
            if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "scene_count") c.scene_count = v.get<int>();
            else if (k == "objects_min") c.objects_min = v.get<int>();
            else if (k == "objects_max") c.objects_max = v.get<int>();
            else if (k == "room_extent") c.room_extent = v.get<double>();
            else if (k == "camera_height") c.camera_height = v.get<double>();
            else if (k == "hfov") c.hfov = v.get<double>();
            else if (k == "per_task") c.per_task = v.get<int>();
            else if (k == "action_menu") c.action_menu = v.get<bool>();
            else if (k == "max_attempts") c.max_attempts = v.get<int>();
            else if (k == "guidance_scale") c.guidance_scale = v.get<double>();
            else if (k == "camera_scale") c.camera_scale = v.get<double>();
            else if (k == "trajectory") {
                auto& t = c.trajectory;
                for (const auto& [tk, tv] : v.items()) {
                    if (tk == "max_translation_steps") t.max_translation_steps = tv.get<int>();
                    else if (tk == "max_rotation_steps") t.max_rotation_steps = tv.get<int>();
                    else if (tk == "min_frames") t.min_frames = tv.get<int>();
                    else if (tk == "per_frame_translation") t.per_frame_translation = tv.get<int>();
                    else if (tk == "per_frame_rotation") t.per_frame_rotation = tv.get<int>();
                    else if (tk == "use_presets") t.use_presets = tv.get<bool>();
                    else throw std::invalid_argument("config: unknown key trajectory." + tk);
                }
            } else {
                throw std::invalid_argument("config: unknown key " + k);
            }
        } catch (const json::exception& e) {
            throw std::invalid_argument("config: bad value for " + k + ": " + e.what());
        }
    }
}

/// 16 hex digits of FNV-1a over the canonical (key-sorted, compact) config.
[[nodiscard]] inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(config_json(c).dump())));
    return buf;
}

[[nodiscard]] inline OutputHeader make_header(const RunConfig& c, std::string command) {
    return {config_hash(c), c.seed, std::move(command),
            json{{"guidance_scale", c.guidance_scale}, {"camera_scale", c.camera_scale}}};
}

// ---------------------------------------------------------------------------
// Scenes.

namespace detail {

struct LabelPrior {
    const char* label;
    double w, d, h, elevation;
};

inline constexpr std::array<LabelPrior, 16> kLabelPriors = {{
    {"chair", 0.5, 0.5, 0.9, 0.0},       {"table", 1.2, 0.8, 0.75, 0.0},   {"sofa", 2.0, 0.9, 0.85, 0.0},
    {"bed", 2.0, 1.6, 0.6, 0.0},         {"cabinet", 0.8, 0.5, 1.2, 0.0},  {"refrigerator", 0.8, 0.7, 1.8, 0.0},
    {"plant", 0.4, 0.4, 0.8, 0.0},       {"lamp", 0.3, 0.3, 1.5, 0.0},     {"tv", 1.0, 0.1, 0.6, 0.8},
    {"monitor", 0.55, 0.2, 0.4, 0.75},   {"microwave", 0.5, 0.35, 0.3, 0.9}, {"cup", 0.09, 0.09, 0.11, 0.75},
    {"bottle", 0.08, 0.08, 0.25, 0.75},  {"toilet", 0.4, 0.6, 0.8, 0.0},   {"sink", 0.6, 0.5, 0.2, 0.85},
    {"bookshelf", 0.9, 0.3, 1.8, 0.0},
}};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

inline double round_to(double v, double q) { return std::round(v / q) * q; }

}  // namespace detail

/// Scene i lands in source bucket i mod 4; its domain token is the bucket name.
[[nodiscard]] inline std::vector<Scene> generate_scenes(const RunConfig& cfg) {
    cfg.validate();
    std::vector<Scene> out;
    out.reserve(static_cast<std::size_t>(cfg.scene_count));
    for (int i = 0; i < cfg.scene_count; ++i) {
        std::mt19937_64 rng(detail::derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(i)));
        Scene s;
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04d", i);
        s.id = id;
        s.domain = kSourceBuckets[static_cast<std::size_t>(i) % kSourceBuckets.size()];
        s.camera_height = cfg.camera_height;
        s.intrinsics.horizontal_fov = cfg.hfov;
        s.seed = rng();
        const int n = std::uniform_int_distribution<int>(cfg.objects_min, cfg.objects_max)(rng);
        const double half = cfg.room_extent / 2.0 - 0.5;
        std::uniform_real_distribution<double> pos(-half, half);
        std::uniform_real_distribution<double> jitter(0.85, 1.15);
        std::uniform_int_distribution<std::size_t> pick(0, detail::kLabelPriors.size() - 1);
        for (int k = 0; k < n; ++k) {
            const auto& p = detail::kLabelPriors[pick(rng)];
            const double j = jitter(rng);
            SceneObject o;
            o.id = "obj" + std::to_string(k);
            o.label = p.label;
            o.size = {detail::round_to(p.w * j, 0.01), detail::round_to(p.d * j, 0.01), detail::round_to(p.h * j, 0.01)};
            o.center = {detail::round_to(pos(rng), 0.01), detail::round_to(pos(rng), 0.01),
                        detail::round_to(p.elevation + o.size.z / 2.0, 0.001)};
            s.objects.push_back(std::move(o));
        }
        validate_scene(s);
        out.push_back(std::move(s));
    }
    return out;
}

[[nodiscard]] inline std::string scenes_text(const OutputHeader& h, const std::vector<Scene>& scenes) {
    std::string out = "# " + header_json(h).dump() + "\n";
    std::ostringstream os;
    for (const auto& s : scenes) write_scene(os, s);
    return out + os.str();
}

// ---------------------------------------------------------------------------
// Records.

/// Detector-grounded buckets use the noisy detector; the others annotate with
/// every projected box that passes the geometric filters.
[[nodiscard]] inline DetectionFilter annotation_filter(std::string_view bucket) {
    if (bucket.ends_with("_detect")) return {};
    DetectionFilter f;
    f.min_confidence = 0.0;
    f.nms_iou = 2.0;  // IoU never reaches 2, so no suppression
    return f;
}

class GenerationExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline ObjectView view_of(const Detection& d) { return {d.object_id, d.label, d.bbox}; }

inline std::string view_id(const std::string& scene, std::size_t attempt, int frame) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s/t%06zu/f%03d", scene.c_str(), attempt, frame);
    return buf;
}

}  // namespace detail

/// Per-(task, bucket) record targets: per_task split as evenly as possible over
/// the buckets in their canonical order.
[[nodiscard]] inline std::map<Cell, int> generation_targets(int per_task) {
    std::map<Cell, int> out;
    const int nb = static_cast<int>(kSourceBuckets.size());
    for (auto t : kAllTasks) {
        for (int b = 0; b < nb; ++b) out[{t, kSourceBuckets[static_cast<std::size_t>(b)]}] = per_task / nb + (b < per_task % nb ? 1 : 0);
    }
    return out;
}

/// Samples trajectories round-robin over buckets and instantiates every task
/// still short of its target from each transition. Every emitted record passes
/// validate_record.
[[nodiscard]] inline std::vector<TaskRecord> generate_dataset(const RunConfig& cfg, const std::vector<Scene>& scenes) {
    cfg.validate();
    std::map<std::string, std::vector<const Scene*>> by_bucket;
    for (const auto& s : scenes) by_bucket[s.domain].push_back(&s);
    for (const auto& b : kSourceBuckets) {
        if (by_bucket[b].empty()) throw GenerationExhausted("no scenes for source bucket " + b);
    }

    auto need = generation_targets(cfg.per_task);
    std::map<Cell, int> made;
    int outstanding = 0;
    for (const auto& [c, n] : need) outstanding += n;

    const PromptOptions opts{cfg.action_menu};
    std::vector<TaskRecord> out;
    const double anchor_half = cfg.room_extent / 4.0;

    for (std::size_t k = 0; outstanding > 0; ++k) {
        if (k >= static_cast<std::size_t>(cfg.max_attempts)) {
            std::string missing;
            for (const auto& [c, n] : need) {
                if (n > 0) missing += " (" + std::string(to_string(c.first)) + ", " + c.second + ")";
            }
            throw GenerationExhausted("attempt budget exhausted; short cells:" + missing);
        }
        const std::string& bucket = kSourceBuckets[k % kSourceBuckets.size()];
        const auto& pool = by_bucket[bucket];
        const Scene& scene = *pool[(k / kSourceBuckets.size()) % pool.size()];
        bool wanted = false;
        for (auto t : kAllTasks) wanted = wanted || need[{t, bucket}] > 0;
        if (!wanted) continue;

        std::mt19937_64 rng(detail::derive_seed(cfg.seed, 2, k));
        std::uniform_real_distribution<double> pos(-anchor_half, anchor_half);
        Pose anchor{detail::round_to(pos(rng), 0.01), detail::round_to(pos(rng), 0.01),
                    static_cast<double>(std::uniform_int_distribution<int>(-179, 180)(rng))};
        const Trajectory traj = sample_trajectory(rng(), cfg.trajectory, anchor);
        const DetectionFilter filter = annotation_filter(bucket);

        const Transition motion = max_displacement_pair(traj, scene, PairingMode::motion_only, filter);
        std::optional<Transition> grounded;
        try {
            grounded = max_displacement_pair(traj, scene, PairingMode::object_grounded, filter);
        } catch (const NoValidFrame&) {
        }
        const auto src_dets = filter_detections(synth_detections(scene, anchor), filter);
        std::vector<Detection> tgt_dets;
        std::vector<std::pair<Detection, Detection>> matches;
        if (grounded) {
            tgt_dets = filter_detections(synth_detections(scene, grounded->target_pose), filter);
            matches = match_instances(src_dets, tgt_dets);
        }

        auto base_inputs = [&](const Transition& tr) {
            TaskInputs in;
            in.source_bucket = bucket;
            in.views = {detail::view_id(scene.id, k, tr.source_frame), detail::view_id(scene.id, k, tr.target_frame)};
            in.ground_truth = tr.ground_truth;
            in.trajectory_group = tr.trajectory_group;
            in.source_pose = tr.source_pose;
            in.target_pose = tr.target_pose;
            return in;
        };

        for (auto task : kAllTasks) {
            const Cell cell{task, bucket};
            if (need[cell] <= 0) continue;
            const int parity = made[cell] % 2;
            std::optional<TaskInputs> in;
            switch (task) {
                case TaskType::A1:
                case TaskType::A2: {
                    const bool rot = task == TaskType::A2;
                    if (motion.ground_truth.size() == 1 && is_rotation(motion.ground_truth[0].kind) == rot) {
                        in = base_inputs(motion);
                    }
                    break;
                }
                case TaskType::A3:
                    if (motion.ground_truth.size() >= 2 && motion.ground_truth.size() <= 3) in = base_inputs(motion);
                    break;
                case TaskType::A4:
                    in = base_inputs(motion);
                    in->claim = parity == 0 ? motion.ground_truth : make_false_claim(motion.ground_truth, rng());
                    break;
                case TaskType::D1:
                case TaskType::D3: {
                    if (!grounded || matches.empty()) break;
                    if (task == TaskType::D3 && grounded->ground_truth.size() > 2) break;
                    const auto& m = matches[std::uniform_int_distribution<std::size_t>(0, matches.size() - 1)(rng)];
                    in = base_inputs(*grounded);
                    in->source_object = detail::view_of(m.first);
                    in->target_object = detail::view_of(m.second);
                    break;
                }
                case TaskType::D2: {
                    if (src_dets.empty()) break;
                    const bool want_visible = parity == 0;
                    const Detection* chosen = nullptr;
                    bool visible = false;
                    for (const auto& d : src_dets) {
                        const bool v = visibility_after(scene, anchor, motion.ground_truth, d.object_id, filter);
                        if (v == want_visible) {
                            chosen = &d;
                            visible = v;
                            break;
                        }
                    }
                    if (chosen == nullptr) break;
                    in = base_inputs(motion);
                    in->source_object = detail::view_of(*chosen);
                    in->visible_after = visible;
                    break;
                }
                case TaskType::D4: {
                    if (!grounded || matches.empty()) break;
                    const auto& m = matches[std::uniform_int_distribution<std::size_t>(0, matches.size() - 1)(rng)];
                    const Detection* shown = &m.second;
                    if (parity == 1) {
                        // A different instance, preferring one that shares the label.
                        shown = nullptr;
                        for (const auto& d : tgt_dets) {
                            if (d.object_id == m.first.object_id) continue;
                            if (d.label == m.first.label) {
                                shown = &d;
                                break;
                            }
                            if (shown == nullptr) shown = &d;
                        }
                        if (shown == nullptr) break;
                    }
                    in = base_inputs(*grounded);
                    in->source_object = detail::view_of(m.first);
                    in->target_object = detail::view_of(*shown);
                    break;
                }
            }
            if (!in) continue;
            char id[64];
            std::snprintf(id, sizeof id, "%s-%s-%05d", std::string(to_string(task)).c_str(), bucket.c_str(), made[cell]);
            in->id = id;
            TaskRecord rec = instantiate(task, *in, opts);
            if (auto rej = validate_record(rec)) {
                throw std::logic_error("generated record " + rec.id + " failed validation: " + rej->detail);
            }
            out.push_back(std::move(rec));
            ++made[cell];
            --need[cell];
            --outstanding;
        }
    }
    return out;
}

}  // namespace viewforge
