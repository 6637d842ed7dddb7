// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Turns a transition and its oracle observations into one of the eight
// supervision records. Prompts are single-line renderings of the canonical
// templates with inline "<image>" tokens.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewforge/action_text.hpp"
#include "viewforge/box.hpp"
#include "viewforge/geometry.hpp"
#include "viewforge/task.hpp"

namespace viewforge {

/// An object as observed in one view.
struct ObjectView {
    std::string object_id;
    std::string label;
    BoxI bbox;
};

/// Everything a template needs: the transition's ground truth plus the oracle
/// observations relevant to the task.
struct TaskInputs {
    std::string id;
    std::string source_bucket;
    std::vector<std::string> views;  // {source, target}
    ActionSequence ground_truth;
    std::string trajectory_group;
    std::optional<Pose> source_pose;
    std::optional<Pose> target_pose;

    std::optional<ActionSequence> claim;         // A4
    std::optional<ObjectView> source_object;     // D1-D4
    std::optional<ObjectView> target_object;     // D1, D3, D4 (D4: the object shown)
    std::optional<bool> visible_after;           // D2
};

struct PromptOptions {
    bool action_menu{false};  // append the allowed-action list to A3/D3 prompts
};

class PreconditionError : public std::invalid_argument {
public:
    PreconditionError(TaskType task, const std::string& what)
        : std::invalid_argument(std::string(to_string(task)) + ": " + what), task_(task) {}
    [[nodiscard]] TaskType task() const noexcept { return task_; }

private:
    TaskType task_;
};

namespace detail {

inline std::string direction_word(ActionKind k) {
    switch (k) {
        case ActionKind::move_forward: return "forward";
        case ActionKind::move_backward: return "backward";
        case ActionKind::shift_left:
        case ActionKind::turn_left: return "left";
        case ActionKind::shift_right:
        case ActionKind::turn_right: return "right";
    }
    return {};
}

inline std::string images(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += kImageToken;
    return s;
}

inline constexpr std::string_view kActionMenu =
    " Allowed actions:\n- move forward/backward/left/right X meters\n- turn left/right X degrees";

}  // namespace detail

/// Builds the record for `task`; throws PreconditionError when the inputs
/// cannot support it.
[[nodiscard]] inline TaskRecord instantiate(TaskType task, const TaskInputs& in, const PromptOptions& opt = {}) {
    auto fail = [&](const std::string& why) { return PreconditionError(task, why); };
    const auto& gt = in.ground_truth;
    if (gt.empty()) throw fail("empty ground truth");
    if (!std::all_of(gt.begin(), gt.end(), [](const Action& a) { return a.on_grid() && a.within_caps(); })) {
        throw fail("ground truth off the action grid");
    }
    if (static_cast<int>(in.views.size()) < image_count(task)) throw fail("missing view identifiers");

    auto need_object = [&](const std::optional<ObjectView>& o, const char* which) -> const ObjectView& {
        if (!o) throw fail(std::string("missing ") + which + " object");
        if (!o->bbox.ordered() || !o->bbox.in_image()) throw fail(std::string("invalid ") + which + " box");
        return *o;
    };

    TaskRecord rec;
    rec.id = in.id;
    rec.task = task;
    rec.direction = direction_of(task);
    rec.source_bucket = in.source_bucket;
    rec.images.assign(in.views.begin(), in.views.begin() + image_count(task));
    rec.meta.actions = gt;
    rec.meta.trajectory_group = in.trajectory_group;
    rec.meta.source_pose = in.source_pose;
    rec.meta.target_pose = in.target_pose;

    const std::string img = detail::images(image_count(task));
    const std::string prose = serialize_action_text(gt, TextStyle::prose);

    switch (task) {
        case TaskType::A1:
        case TaskType::A2: {
            const bool rot = task == TaskType::A2;
            if (gt.size() != 1 || is_rotation(gt[0].kind) != rot) {
                throw fail(rot ? "needs a single rotation" : "needs a single translation");
            }
            const auto dir = detail::direction_word(gt[0].kind);
            rec.prompt = rot ? img + "How many degrees did the camera turn to get the second image? Answer as: turn " +
                                   dir + " X degrees."
                             : img + "How many meters did the camera move to get the second image? Answer as: move " +
                                   dir + " X meters.";
            rec.answer = action_text(gt[0]);
            break;
        }
        case TaskType::A3: {
            if (gt.size() < 2 || gt.size() > 3) throw fail("needs a 2-3 step program");
            rec.prompt = img +
                         "To move from the first image to the second image, the camera used 2 or 3 actions in order. "
                         "Write the full action sequence using ';' as a separator.";
            if (opt.action_menu) rec.prompt += detail::kActionMenu;
            rec.answer = serialize_action_text(gt, TextStyle::semicolon);
            break;
        }
        case TaskType::A4: {
            if (!in.claim || in.claim->empty()) throw fail("missing claim");
            rec.prompt = img + "True or false: the camera did \"" + serialize_action_text(*in.claim, TextStyle::prose) +
                         "\" to get the second image.";
            rec.answer = *in.claim == gt ? "true" : "false";
            break;
        }
        case TaskType::D1: {
            const auto& src = need_object(in.source_object, "source");
            const auto& tgt = need_object(in.target_object, "target");
            if (src.object_id != tgt.object_id) throw fail("source and target objects differ");
            rec.prompt = img + "In the first image, the " + src.label + " is at bbox " + format_box(src.bbox) +
                         ". Bboxes use normalized integer coordinates in [0,1000]. After the camera does \"" + prose +
                         "\", give the bbox of the same " + src.label +
                         " in the second image. Answer with bbox [x1, y1, x2, y2] only.";
            rec.answer = format_box(tgt.bbox);
            rec.meta.boxes = {{"source", src.bbox}, {"target", tgt.bbox}};
            rec.meta.labels = {{"source", src.label}, {"target", tgt.label}};
            break;
        }
        case TaskType::D2: {
            const auto& src = need_object(in.source_object, "source");
            if (!in.visible_after) throw fail("missing visibility");
            rec.prompt = img + "In the image, the " + src.label + " is at bbox " + format_box(src.bbox) +
                         ". After the camera does \"" + prose + "\", does this " + src.label +
                         " disappear from view? Answer: yes or no.";
            rec.answer = *in.visible_after ? "no" : "yes";
            rec.meta.boxes = {{"source", src.bbox}};
            rec.meta.labels = {{"source", src.label}};
            break;
        }
        case TaskType::D3: {
            if (gt.size() > 2) throw fail("needs a 1-2 step program");
            const auto& src = need_object(in.source_object, "source");
            const auto& tgt = need_object(in.target_object, "target");
            if (src.object_id != tgt.object_id) throw fail("source and target objects differ");
            rec.prompt = img + "The " + src.label + " in the first image (bbox " + format_box(src.bbox) + ") and the " +
                         tgt.label + " in the second image (bbox " + format_box(tgt.bbox) +
                         ") are the same physical object. The camera used 1 or 2 actions in order. "
                         "Write the full action sequence using ';' as a separator.";
            if (opt.action_menu) rec.prompt += detail::kActionMenu;
            rec.answer = serialize_action_text(gt, TextStyle::semicolon);
            rec.meta.boxes = {{"source", src.bbox}, {"target", tgt.bbox}};
            rec.meta.labels = {{"source", src.label}, {"target", tgt.label}};
            break;
        }
        case TaskType::D4: {
            const auto& src = need_object(in.source_object, "source");
            const auto& tgt = need_object(in.target_object, "target");
            rec.prompt = img + "In the first image, the " + src.label + " is at bbox " + format_box(src.bbox) +
                         ". After the camera does \"" + prose + "\", the second image shows a " + tgt.label +
                         " at bbox " + format_box(tgt.bbox) + ". Are these the same physical object instance? Answer: yes or no.";
            rec.answer = src.object_id == tgt.object_id ? "yes" : "no";
            rec.meta.boxes = {{"source", src.bbox}, {"target", tgt.bbox}};
            rec.meta.labels = {{"source", src.label}, {"target", tgt.label}};
            break;
        }
    }
    return rec;
}

enum class Perturbation : std::uint8_t { direction_flip, magnitude, adjacent_swap };

/// Smallest magnitude change of a false claim: 1.0 m or 20 degrees, above the
/// full-credit numeric tolerances (0.5 m, 5 degrees).
inline constexpr std::int32_t kClaimTranslationFloor = 100;  // centimeters
inline constexpr std::int32_t kClaimRotationFloor = 20;      // degrees

/// True when executing `claim` lands measurably away from executing `truth`
/// (more than 0.5 m or 5 degrees apart).
[[nodiscard]] inline bool claim_separated(std::span<const Action> truth, std::span<const Action> claim) noexcept {
    const Pose a = apply_sequence({}, truth);
    const Pose b = apply_sequence({}, claim);
    return planar_distance(a, b) > 0.5 || yaw_difference(a, b) > 5.0;
}

/// Candidate false claims of one perturbation family that differ from `seq`
/// in exactly one respect and stay separated from its endpoint.
[[nodiscard]] inline std::vector<ActionSequence> false_claim_candidates(std::span<const Action> seq, Perturbation p) {
    std::vector<ActionSequence> out;
    const ActionSequence base(seq.begin(), seq.end());
    switch (p) {
        case Perturbation::direction_flip:
            for (std::size_t i = 0; i < base.size(); ++i) {
                auto c = base;
                c[i].kind = opposite(c[i].kind);
                out.push_back(std::move(c));
            }
            break;
        case Perturbation::magnitude:
            for (std::size_t i = 0; i < base.size(); ++i) {
                const bool rot = is_rotation(base[i].kind);
                const std::int32_t cap = (rot ? kMaxRotationSteps : kMaxTranslationSteps) * kGridStep;
                const std::int32_t floor = rot ? kClaimRotationFloor : kClaimTranslationFloor;
                for (std::int32_t v = kGridStep; v <= cap; v += kGridStep) {
                    if (std::abs(v - base[i].amount) < floor) continue;
                    auto c = base;
                    c[i].amount = v;
                    out.push_back(std::move(c));
                }
            }
            break;
        case Perturbation::adjacent_swap:
            for (std::size_t i = 0; i + 1 < base.size(); ++i) {
                if (base[i].kind == base[i + 1].kind) continue;
                auto c = base;
                std::swap(c[i], c[i + 1]);
                out.push_back(std::move(c));
            }
            break;
    }
    std::erase_if(out, [&](const ActionSequence& c) { return c == base || !claim_separated(base, c); });
    return out;
}

/// A seeded negative claim for verification tasks. The perturbation family is
/// `preferred` when given, otherwise drawn at random; families with no
/// admissible candidate fall back to a magnitude change, which always exists.
[[nodiscard]] inline ActionSequence make_false_claim(std::span<const Action> seq, std::uint64_t seed,
                                                     std::optional<Perturbation> preferred = std::nullopt) {
    if (seq.empty()) throw std::invalid_argument("make_false_claim: empty sequence");
    std::mt19937_64 rng(seed);
    const auto family =
        preferred.value_or(static_cast<Perturbation>(std::uniform_int_distribution<int>(0, 2)(rng)));
    auto cands = false_claim_candidates(seq, family);
    if (cands.empty()) cands = false_claim_candidates(seq, Perturbation::magnitude);
    if (cands.empty()) throw std::invalid_argument("make_false_claim: no admissible perturbation");
    return cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)];
}

}  // namespace viewforge
