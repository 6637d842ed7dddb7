// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task identities and the supervision record shared by the generator, the
// dataset pipeline and the reward engine.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "viewforge/box.hpp"
#include "viewforge/geometry.hpp"

namespace viewforge {

/// Placeholder marking one image in a prompt.
inline constexpr std::string_view kImageToken = "<image>";

enum class TaskType : std::uint8_t { A1, A2, A3, A4, D1, D2, D3, D4 };

inline constexpr std::array<TaskType, 8> kAllTasks = {TaskType::A1, TaskType::A2, TaskType::A3, TaskType::A4,
                                                      TaskType::D1, TaskType::D2, TaskType::D3, TaskType::D4};

enum class Direction : std::uint8_t { inverse, forward };

[[nodiscard]] constexpr std::string_view to_string(TaskType t) noexcept {
    constexpr std::array<std::string_view, 8> names = {"A1", "A2", "A3", "A4", "D1", "D2", "D3", "D4"};
    return names[static_cast<std::size_t>(t)];
}

[[nodiscard]] inline std::optional<TaskType> task_from_string(std::string_view s) noexcept {
    for (auto t : kAllTasks) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

[[nodiscard]] constexpr std::string_view to_string(Direction d) noexcept {
    return d == Direction::inverse ? "inverse" : "forward";
}

[[nodiscard]] inline std::optional<Direction> direction_from_string(std::string_view s) noexcept {
    if (s == "inverse") return Direction::inverse;
    if (s == "forward") return Direction::forward;
    return std::nullopt;
}

/// Inverse tasks recover motion from a view change; forward tasks predict the
/// consequence of a given motion.
[[nodiscard]] constexpr Direction direction_of(TaskType t) noexcept {
    switch (t) {
        case TaskType::A1:
        case TaskType::A2:
        case TaskType::A3:
        case TaskType::D3: return Direction::inverse;
        default: return Direction::forward;
    }
}

[[nodiscard]] constexpr bool is_object_grounded(TaskType t) noexcept {
    return t == TaskType::D1 || t == TaskType::D2 || t == TaskType::D3 || t == TaskType::D4;
}

[[nodiscard]] constexpr int image_count(TaskType t) noexcept { return t == TaskType::D2 ? 1 : 2; }

struct RecordMeta {
    ActionSequence actions;                    // ground truth, source -> target
    std::map<std::string, BoxI> boxes;         // "source", "target"
    std::map<std::string, std::string> labels; // "source", "target"
    std::string trajectory_group;
    std::optional<Pose> source_pose;
    std::optional<Pose> target_pose;

    friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct TaskRecord {
    std::string id;
    TaskType task{TaskType::A1};
    Direction direction{Direction::inverse};
    std::string source_bucket;
    std::vector<std::string> images;
    std::string prompt;
    std::string answer;
    RecordMeta meta;

    friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

}  // namespace viewforge
