// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "viewforge/geometry.hpp"
#include "viewforge/scene.hpp"

namespace viewforge {

/// Short composed programs sampled next to the six single-step actions.
enum class ProgramPreset : std::uint8_t {
    forward_then_turn_left,
    turn_right_then_forward,
    shift_left_then_forward_then_turn_right,
};

inline constexpr std::array<ProgramPreset, 3> kAllPresets = {
    ProgramPreset::forward_then_turn_left,
    ProgramPreset::turn_right_then_forward,
    ProgramPreset::shift_left_then_forward_then_turn_right,
};

[[nodiscard]] inline std::vector<ActionKind> preset_kinds(ProgramPreset p) {
    switch (p) {
        case ProgramPreset::forward_then_turn_left: return {ActionKind::move_forward, ActionKind::turn_left};
        case ProgramPreset::turn_right_then_forward: return {ActionKind::turn_right, ActionKind::move_forward};
        case ProgramPreset::shift_left_then_forward_then_turn_right:
            return {ActionKind::shift_left, ActionKind::move_forward, ActionKind::turn_right};
    }
    return {};
}

struct TrajectoryConfig {
    std::int32_t max_translation_steps{kMaxTranslationSteps};  // grid steps of 0.1 m
    std::int32_t max_rotation_steps{kMaxRotationSteps};        // grid steps of 10 degrees
    std::int32_t min_frames{8};                                // synthesized frames after the anchor
    std::int32_t per_frame_translation{kGridStep};             // centimeters
    std::int32_t per_frame_rotation{kGridStep};                // degrees
    bool use_presets{true};

    void validate() const {
        if (min_frames < 8) throw std::invalid_argument("trajectory config: min_frames must be >= 8");
        if (max_translation_steps < 1 || max_translation_steps > kMaxTranslationSteps ||
            max_rotation_steps < 1 || max_rotation_steps > kMaxRotationSteps) {
            throw std::invalid_argument("trajectory config: magnitude caps out of range");
        }
        if (per_frame_translation <= 0 || per_frame_rotation <= 0) {
            throw std::invalid_argument("trajectory config: per-frame increments must be positive");
        }
    }
};

struct Frame {
    int index{0};
    Pose pose;
    ActionSequence cumulative;  // merged motion from the anchor; empty for frame 0
};

struct Trajectory {
    Pose anchor;
    ActionSequence program;
    std::vector<Frame> frames;
};

/// "forward_turnleft:1.0m_30d" style balancing key for a semantic program.
[[nodiscard]] inline std::string trajectory_group(std::span<const Action> program) {
    auto token = [](ActionKind k) -> const char* {
        switch (k) {
            case ActionKind::move_forward: return "forward";
            case ActionKind::move_backward: return "backward";
            case ActionKind::shift_left: return "shiftleft";
            case ActionKind::shift_right: return "shiftright";
            case ActionKind::turn_left: return "turnleft";
            case ActionKind::turn_right: return "turnright";
        }
        return "?";
    };
    std::string kinds, mags;
    for (std::size_t i = 0; i < program.size(); ++i) {
        if (i) {
            kinds += '_';
            mags += '_';
        }
        kinds += token(program[i].kind);
        char buf[32];
        if (is_rotation(program[i].kind)) {
            std::snprintf(buf, sizeof buf, "%dd", program[i].amount);
        } else {
            std::snprintf(buf, sizeof buf, "%.1fm", program[i].magnitude());
        }
        mags += buf;
    }
    return kinds + ":" + mags;
}

/// Uniform over the six single-step actions and the presets; magnitudes uniform
/// on their grids up to the caps (presets reuse the single-step caps).
[[nodiscard]] inline ActionSequence sample_program(std::mt19937_64& rng, const TrajectoryConfig& cfg) {
    const int choices = static_cast<int>(kAllActionKinds.size()) + (cfg.use_presets ? static_cast<int>(kAllPresets.size()) : 0);
    const int pick = std::uniform_int_distribution<int>(0, choices - 1)(rng);
    std::vector<ActionKind> kinds;
    if (pick < static_cast<int>(kAllActionKinds.size())) {
        kinds.push_back(kAllActionKinds[static_cast<std::size_t>(pick)]);
    } else {
        kinds = preset_kinds(kAllPresets[static_cast<std::size_t>(pick) - kAllActionKinds.size()]);
    }
    ActionSequence program;
    for (auto k : kinds) {
        const int cap = is_rotation(k) ? cfg.max_rotation_steps : cfg.max_translation_steps;
        program.push_back(Action::steps(k, std::uniform_int_distribution<int>(1, cap)(rng)));
    }
    return program;
}

/// Expands a semantic program into per-frame increments. When the grid-unit
/// split yields fewer than `min_frames` increments, every increment is split
/// into the smallest equal number of sub-grid pieces that reaches it.
[[nodiscard]] inline Trajectory expand_program(const Pose& anchor, ActionSequence program,
                                               const TrajectoryConfig& cfg = {}) {
    cfg.validate();
    if (program.empty()) throw std::invalid_argument("expand_program: empty program");
    ActionSequence steps;
    for (const auto& a : program) {
        if (a.amount <= 0) throw std::invalid_argument("expand_program: non-positive magnitude");
        auto parts = split_amount(a, is_rotation(a.kind) ? cfg.per_frame_rotation : cfg.per_frame_translation);
        steps.insert(steps.end(), parts.begin(), parts.end());
    }
    if (static_cast<std::int32_t>(steps.size()) < cfg.min_frames) {
        std::int32_t factor = 0;
        for (std::int32_t s = 2; s <= kGridStep; ++s) {
            const bool divides =
                std::all_of(steps.begin(), steps.end(), [s](const Action& a) { return a.amount % s == 0; });
            if (divides && static_cast<std::int32_t>(steps.size()) * s >= cfg.min_frames) {
                factor = s;
                break;
            }
        }
        if (factor == 0) throw std::invalid_argument("expand_program: cannot reach min_frames");
        ActionSequence fine;
        for (const auto& a : steps) {
            for (std::int32_t i = 0; i < factor; ++i) fine.push_back({a.kind, a.amount / factor});
        }
        steps = std::move(fine);
    }

    Trajectory traj;
    traj.anchor = anchor;
    traj.program = std::move(program);
    traj.frames.reserve(steps.size() + 1);
    traj.frames.push_back({0, anchor, {}});
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& prev = traj.frames.back();
        Frame f{static_cast<int>(i + 1), apply_action(prev.pose, steps[i]), prev.cumulative};
        if (!f.cumulative.empty() && f.cumulative.back().kind == steps[i].kind) {
            f.cumulative.back().amount += steps[i].amount;
        } else {
            f.cumulative.push_back(steps[i]);
        }
        traj.frames.push_back(std::move(f));
    }
    return traj;
}

[[nodiscard]] inline Trajectory sample_trajectory(std::uint64_t seed, const TrajectoryConfig& cfg, const Pose& anchor) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    return expand_program(anchor, sample_program(rng, cfg), cfg);
}

struct Transition {
    int source_frame{0};
    int target_frame{0};
    Pose source_pose;
    Pose target_pose;
    ActionSequence ground_truth;
    std::string scene_id;
    std::string trajectory_group;
};

class NoValidFrame : public std::runtime_error {
public:
    NoValidFrame() : std::runtime_error("trajectory has no valid target frame") {}
};

/// Pairs the anchor with the valid frame farthest from it (later frame on
/// ties). Only frames whose merged motion lies on the action grid qualify.
template <std::predicate<const Frame&> Valid>
[[nodiscard]] Transition max_displacement_pair(const Trajectory& traj, Valid&& valid, std::string scene_id = {}) {
    constexpr double kTie = 1e-9;
    const Frame* best = nullptr;
    double best_d = -1.0;
    for (std::size_t i = 1; i < traj.frames.size(); ++i) {
        const auto& f = traj.frames[i];
        const bool grid = std::all_of(f.cumulative.begin(), f.cumulative.end(), [](const Action& a) { return a.on_grid(); });
        if (!grid || !valid(f)) continue;
        const double d = planar_distance(traj.anchor, f.pose);
        if (best == nullptr || d >= best_d - kTie) {
            best = &f;
            best_d = std::max(d, best_d);
        }
    }
    if (best == nullptr) throw NoValidFrame();
    Transition t;
    t.source_frame = 0;
    t.target_frame = best->index;
    t.source_pose = traj.anchor;
    t.target_pose = best->pose;
    t.ground_truth = best->cumulative;
    t.scene_id = std::move(scene_id);
    t.trajectory_group = trajectory_group(traj.program);
    return t;
}

enum class PairingMode : std::uint8_t { motion_only, object_grounded };

/// Motion-only pairing treats every frame as valid; object-grounded pairing
/// needs at least one filtered detection matched between anchor and frame.
[[nodiscard]] inline Transition max_displacement_pair(const Trajectory& traj, const Scene& scene, PairingMode mode,
                                                      const DetectionFilter& filter = {}) {
    if (mode == PairingMode::motion_only) {
        return max_displacement_pair(traj, [](const Frame&) { return true; }, scene.id);
    }
    const auto src = filter_detections(synth_detections(scene, traj.anchor), filter);
    return max_displacement_pair(
        traj,
        [&](const Frame& f) {
            return !src.empty() && !match_instances(src, filter_detections(synth_detections(scene, f.pose), filter)).empty();
        },
        scene.id);
}

}  // namespace viewforge
