// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scene-free record corpora and seeded corruptions shared by the dataset
// tests and the acceptance gate.

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "viewforge/dataset.hpp"
#include "viewforge/task_forge.hpp"
#include "viewforge/trajectory.hpp"

namespace viewforge::testing {

inline Action steps(ActionKind k, int n) { return Action::steps(k, n); }

/// One valid record of `task` in `bucket`; `i` varies magnitudes, answers
/// and trajectory groups.
inline TaskRecord synthetic_record(TaskType task, const std::string& bucket, int i) {
    const auto fwd = steps(ActionKind::move_forward, 1 + i % 60);
    const auto turn = steps(ActionKind::turn_left, 1 + i % 10);
    ActionSequence gt;
    switch (task) {
        case TaskType::A1: gt = {fwd}; break;
        case TaskType::A2: gt = {turn}; break;
        case TaskType::A3:
        case TaskType::D3: gt = {fwd, turn}; break;
        default: gt = {steps(i % 2 ? ActionKind::move_backward : ActionKind::move_forward, 1 + i % 30)}; break;
    }
    TaskInputs in;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%s-%05d", std::string(to_string(task)).c_str(), bucket.c_str(), i);
    in.id = id;
    in.source_bucket = bucket;
    in.views = {"scene_0000/t" + std::to_string(i) + "/f000", "scene_0000/t" + std::to_string(i) + "/f010"};
    in.trajectory_group = trajectory_group(gt);
    in.ground_truth = gt;
    const Pose src{0.1 * (i % 7), -0.2 * (i % 5), static_cast<double>(i % 90)};
    in.source_pose = src;
    in.target_pose = apply_sequence(src, gt);
    const int s = 10 * (i % 40);
    const ObjectView a{"obj1", "chair", {100 + s, 200, 300 + s, 420}};
    const ObjectView b{"obj1", "chair", {80 + s, 180, 330 + s, 470}};
    switch (task) {
        case TaskType::A4: in.claim = i % 2 ? gt : make_false_claim(gt, static_cast<std::uint64_t>(i)); break;
        case TaskType::D1:
        case TaskType::D3:
            in.source_object = a;
            in.target_object = b;
            break;
        case TaskType::D2:
            in.source_object = a;
            in.visible_after = i % 2 == 0;
            break;
        case TaskType::D4:
            in.source_object = a;
            in.target_object = i % 2 ? b : ObjectView{"obj2", "chair", {500, 300, 640, 520}};
            break;
        default: break;
    }
    return instantiate(task, in);
}

/// `per_cell` records for every (task, bucket) cell.
inline std::vector<TaskRecord> synthetic_corpus(int per_cell) {
    std::vector<TaskRecord> out;
    for (auto t : kAllTasks) {
        for (const auto& b : kSourceBuckets) {
            for (int i = 0; i < per_cell; ++i) out.push_back(synthetic_record(t, b, i));
        }
    }
    return out;
}

enum class Corruption { truncated_answer, swapped_box, off_grid_magnitude };

/// Reason code each corruption must be rejected with.
constexpr RejectReason expected_reason(Corruption c) noexcept {
    switch (c) {
        case Corruption::truncated_answer: return RejectReason::malformed_answer;
        case Corruption::swapped_box: return RejectReason::invalid_box;
        case Corruption::off_grid_magnitude: return RejectReason::action_mismatch;
    }
    return RejectReason::schema;
}

/// Whether the corruption applies to a record of this task.
constexpr bool applicable(Corruption c, TaskType t) noexcept {
    return c != Corruption::swapped_box || is_object_grounded(t);
}

/// Truncation cuts one character off the last token; a swapped box exchanges
/// corners of the D1 answer (or of the source meta box on other grounded
/// tasks); an off-grid magnitude moves the first ground-truth action 3 fine
/// units off its grid, in meta and in an action answer.
inline TaskRecord corrupt(TaskRecord r, Corruption c) {
    switch (c) {
        case Corruption::truncated_answer: r.answer.pop_back(); break;
        case Corruption::swapped_box:
            if (r.task == TaskType::D1) {
                const auto& t = r.meta.boxes.at("target");
                r.answer = format_box({t.x2, t.y2, t.x1, t.y1});
            } else {
                auto& s = r.meta.boxes.at("source");
                s = {s.x2, s.y2, s.x1, s.y1};
            }
            break;
        case Corruption::off_grid_magnitude: {
            auto& a = r.meta.actions.front();
            a.amount = a.amount + (a.amount + 3 <= (is_rotation(a.kind) ? 100 : 600) ? 3 : -3);
            const auto dir = direction_of(r.task);
            if (dir == Direction::inverse) r.answer = serialize_action_text(r.meta.actions, TextStyle::semicolon);
            break;
        }
    }
    return r;
}

}  // namespace viewforge::testing
