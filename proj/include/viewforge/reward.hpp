// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task-aware reward for group-relative policy refinement. Each task family
// activates its own subset of terms:
//
//   A1, A2      0.10 fmt + 0.35 sem + 0.55 num
//   A3, D3      max(0, 0.10 fmt + 0.25 sem + 0.35 ord + 0.30 num - 0.03 * extra)
//   A4, D2, D4  0.20 fmt + 0.80 sem
//   D1          0.20 fmt + 0.15 valid + 0.65 geo
//
// Responses longer than 200 characters score 0 with fmt 0 before any task
// logic runs.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "viewforge/box.hpp"
#include "viewforge/parsers.hpp"
#include "viewforge/task.hpp"

namespace viewforge {

struct RewardWeights {
    struct Motion {
        double fmt, sem, num;
    };
    struct Sequence {
        double fmt, sem, ord, num, extra_action;
    };
    struct Binary {
        double fmt, sem;
    };
    struct Bbox {
        double fmt, valid, geo;
        double iou, center, l1, size;  // localization mix
        double geo_floor, geo_valid;         // geo = base * (floor + geo_valid * valid)
        double valid_ordered, valid_overflow;  // valid = ordered share + overflow share
    };

    Motion motion{0.10, 0.35, 0.55};
    Sequence sequence{0.10, 0.25, 0.35, 0.30, 0.03};
    Binary binary{0.20, 0.80};
    Bbox bbox{0.20, 0.15, 0.65, 0.45, 0.20, 0.20, 0.15, 0.3, 0.7, 0.7, 0.3};
};

inline constexpr RewardWeights kRewardWeights{};

/// Active coefficient vector of a task's scalar reward (penalties excluded).
[[nodiscard]] inline std::vector<double> active_weights(TaskType t) {
    const auto& w = kRewardWeights;
    switch (t) {
        case TaskType::A1:
        case TaskType::A2: return {w.motion.fmt, w.motion.sem, w.motion.num};
        case TaskType::A3:
        case TaskType::D3: return {w.sequence.fmt, w.sequence.sem, w.sequence.ord, w.sequence.num};
        case TaskType::A4:
        case TaskType::D2:
        case TaskType::D4: return {w.binary.fmt, w.binary.sem};
        case TaskType::D1: return {w.bbox.fmt, w.bbox.valid, w.bbox.geo};
    }
    return {};
}

/// Localization components of the D1 geometric term.
struct BoxTerms {
    double iou{0.0};
    double center{0.0};
    double l1{0.0};
    double size{0.0};
    double base{0.0};
};

/// Scalar reward plus its sub-scores; a term absent from the optional is
/// inactive for the task (not zero).
struct RewardBreakdown {
    double reward{0.0};
    std::optional<double> fmt, sem, num, ord, geo, valid;
    bool overlength{false};
    double extra_action_penalty{0.0};
    std::optional<BoxTerms> box;
};

enum class MagnitudeFamily : std::uint8_t { translation, rotation };

[[nodiscard]] constexpr MagnitudeFamily family_of(ActionKind k) noexcept {
    return is_rotation(k) ? MagnitudeFamily::rotation : MagnitudeFamily::translation;
}

/// Piecewise-linear precision: 1 up to tau_low, 0 from tau_high, linear
/// between. (0.5 m, 5.0 m) for translations, (5, 90) degrees for turns.
[[nodiscard]] inline double s_num(double pred, double gt, MagnitudeFamily fam) noexcept {
    const double lo = fam == MagnitudeFamily::translation ? 0.5 : 5.0;
    const double hi = fam == MagnitudeFamily::translation ? 5.0 : 90.0;
    const double err = std::abs(pred - gt);
    if (err <= lo) return 1.0;
    if (err >= hi || std::isnan(err)) return 0.0;
    return 1.0 - (err - lo) / (hi - lo);
}

/// A1/A2: only kind-matching candidates earn numeric credit.
[[nodiscard]] inline RewardBreakdown reward_motion(std::string_view response, const ParsedAction& gt) {
    const auto pred = parse_action_sequence(preprocess(response));
    double sem = 0.0, num = 0.0;
    for (const auto& p : pred) {
        if (p.kind != gt.kind) continue;
        sem = 1.0;
        num = std::max(num, s_num(p.magnitude, gt.magnitude, family_of(gt.kind)));
    }
    RewardBreakdown r;
    r.fmt = pred.empty() ? 0.0 : 1.0;
    r.sem = sem;
    r.num = num;
    const auto& w = kRewardWeights.motion;
    r.reward = w.fmt * *r.fmt + w.sem * sem + w.num * num;
    return r;
}

/// A3/D3. Position-wise equality compares action kinds (direction included);
/// magnitudes are credited only through s_num.
[[nodiscard]] inline RewardBreakdown reward_sequence(std::string_view response, std::span<const ParsedAction> gt) {
    const auto pred = parse_action_sequence(preprocess(response));
    const std::size_t n = pred.size();
    const std::size_t m = gt.size();

    std::array<int, kAllActionKinds.size()> cp{}, cg{};
    for (const auto& p : pred) ++cp[static_cast<std::size_t>(p.kind)];
    for (const auto& g : gt) ++cg[static_cast<std::size_t>(g.kind)];
    int common = 0;
    for (std::size_t k = 0; k < cp.size(); ++k) common += std::min(cp[k], cg[k]);

    double ord = 0.0, num = 0.0;
    for (std::size_t i = 0; i < std::min(n, m); ++i) {
        if (pred[i].kind != gt[i].kind) continue;
        ord += 1.0;
        num += s_num(pred[i].magnitude, gt[i].magnitude, family_of(gt[i].kind));
    }
    const double md = m > 0 ? static_cast<double>(m) : 1.0;

    RewardBreakdown r;
    r.fmt = n > 0 ? 1.0 : 0.0;
    r.sem = static_cast<double>(common) / static_cast<double>(std::max<std::size_t>({n, m, 1}));
    r.ord = ord / md;
    r.num = num / md;
    const auto& w = kRewardWeights.sequence;
    const double pre = w.fmt * *r.fmt + w.sem * *r.sem + w.ord * *r.ord + w.num * *r.num;
    r.extra_action_penalty = w.extra_action * static_cast<double>(n > m ? n - m : 0);
    r.reward = std::max(0.0, pre - r.extra_action_penalty);
    return r;
}

/// A4/D2/D4.
[[nodiscard]] inline RewardBreakdown reward_binary(std::string_view response, bool gt) {
    const auto pred = parse_boolean(preprocess(response));
    RewardBreakdown r;
    r.fmt = pred ? 1.0 : 0.0;
    r.sem = (pred && *pred == gt) ? 1.0 : 0.0;
    const auto& w = kRewardWeights.binary;
    r.reward = w.fmt * *r.fmt + w.sem * *r.sem;
    return r;
}

struct CanonicalBox {
    BoxD box;
    double overflow{0.0};  // mean distance outside [0, 1000] over the raw coordinates
    bool ordered{false};   // x1 < x2 and y1 < y2 on the raw coordinates
};

[[nodiscard]] inline CanonicalBox canonicalize_box(const BoxD& raw) noexcept {
    static constexpr double hi = kImageExtent;
    auto out_of_range = [](double v) { return std::max(0.0, -v) + std::max(0.0, v - hi); };
    CanonicalBox c;
    c.ordered = raw.ordered();
    c.overflow = (out_of_range(raw.x1) + out_of_range(raw.y1) + out_of_range(raw.x2) + out_of_range(raw.y2)) / 4.0;
    BoxD b = raw;
    if (b.x1 > b.x2) std::swap(b.x1, b.x2);
    if (b.y1 > b.y2) std::swap(b.y1, b.y2);
    auto clip = [](double v) { return std::clamp(v, 0.0, hi); };
    c.box = {clip(b.x1), clip(b.y1), clip(b.x2), clip(b.y2)};
    return c;
}

/// Localization quality of a canonical prediction against the target box.
[[nodiscard]] inline BoxTerms box_terms(const BoxD& pred, const BoxD& gt) noexcept {
    const auto& w = kRewardWeights.bbox;
    BoxTerms t;
    t.iou = iou(pred, gt);
    const double dist = std::hypot(pred.center_x() - gt.center_x(), pred.center_y() - gt.center_y());
    const double diag = std::hypot(gt.width(), gt.height());
    t.center = std::max(0.0, 1.0 - dist / std::max(80.0, 0.6 * diag));
    const double pw = pred.width(), ph = pred.height();
    if (pw > 0.0 && ph > 0.0 && gt.width() > 0.0 && gt.height() > 0.0) {
        const double spread = std::abs(std::log(pw / gt.width())) + std::abs(std::log(ph / gt.height()));
        t.size = std::max(0.0, 1.0 - spread / 1.6);
    }
    const double l1 = (std::abs(pred.x1 - gt.x1) + std::abs(pred.y1 - gt.y1) + std::abs(pred.x2 - gt.x2) +
                       std::abs(pred.y2 - gt.y2)) / 4.0;
    t.l1 = std::max(0.0, 1.0 - l1 / 180.0);
    t.base = w.iou * t.iou + w.center * t.center + w.l1 * t.l1 + w.size * t.size;
    return t;
}

/// D1. Format credit 1.0 for an exact box string, 0.4 for an embedded one.
/// Validity is judged on the raw coordinates, localization on canonical ones.
[[nodiscard]] inline RewardBreakdown reward_bbox(std::string_view raw_response, const BoxD& gt) {
    const auto& w = kRewardWeights.bbox;
    RewardBreakdown r;
    const auto parsed = parse_bbox(raw_response);
    if (!parsed) {
        r.fmt = 0.0;
        return r;
    }
    r.fmt = parsed->format == BoxFormat::exact ? 1.0 : 0.4;
    const auto canon = canonicalize_box(parsed->coords);
    const double valid = w.valid_ordered * (canon.ordered ? 1.0 : 0.0) +
                         w.valid_overflow * std::max(0.0, 1.0 - canon.overflow / 200.0);
    const auto terms = box_terms(canon.box, gt);
    r.valid = valid;
    r.geo = terms.base * (w.geo_floor + w.geo_valid * valid);
    r.box = terms;
    r.reward = w.fmt * *r.fmt + w.valid * valid + w.geo * *r.geo;
    return r;
}

enum class ScoreErrorCode : std::uint8_t { unknown_task, bad_reference };

[[nodiscard]] constexpr std::string_view to_string(ScoreErrorCode c) noexcept {
    return c == ScoreErrorCode::unknown_task ? "unknown_task" : "bad_reference";
}

class ScoreError : public std::runtime_error {
public:
    ScoreError(ScoreErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ScoreErrorCode code() const noexcept { return code_; }

private:
    ScoreErrorCode code_;
};

/// A reference answer decoded under its task's grammar.
struct Reference {
    TaskType task{TaskType::A1};
    std::variant<ParsedAction, std::vector<ParsedAction>, bool, BoxD> value;
};

namespace detail {

inline bool reference_magnitude_ok(const ParsedAction& a) noexcept {
    return std::isfinite(a.magnitude) && a.magnitude >= 0.0;
}

}  // namespace detail

/// Throws ScoreError(bad_reference) when `text` is not a well-formed answer
/// for `task`.
[[nodiscard]] inline Reference parse_reference(TaskType task, std::string_view text) {
    auto bad = [&](const char* why) {
        return ScoreError(ScoreErrorCode::bad_reference,
                          std::string("reference for ") + std::string(to_string(task)) + ": " + why);
    };
    switch (task) {
        case TaskType::A1:
        case TaskType::A2: {
            auto list = parse_action_list(preprocess(text));
            if (!list || list->size() != 1) throw bad("expected exactly one action");
            const auto& a = list->front();
            if (is_rotation(a.kind) != (task == TaskType::A2)) throw bad("wrong action family");
            if (!detail::reference_magnitude_ok(a)) throw bad("magnitude out of range");
            return {task, a};
        }
        case TaskType::A3:
        case TaskType::D3: {
            auto list = parse_action_list(preprocess(text));
            if (!list || list->empty() || list->size() > 3) throw bad("expected 1 to 3 actions");
            for (const auto& a : *list) {
                if (!detail::reference_magnitude_ok(a)) throw bad("magnitude out of range");
            }
            return {task, std::move(*list)};
        }
        case TaskType::A4:
        case TaskType::D2:
        case TaskType::D4: {
            auto b = parse_boolean(preprocess(text));
            if (!b) throw bad("expected yes/no/true/false");
            return {task, *b};
        }
        case TaskType::D1: {
            auto b = parse_bbox(text);
            if (!b || b->format != BoxFormat::exact) throw bad("expected [x1, y1, x2, y2]");
            if (!b->coords.ordered() || !b->coords.in_image()) throw bad("box unordered or outside [0,1000]");
            return {task, b->coords};
        }
    }
    throw bad("unhandled task");
}

[[nodiscard]] inline TaskType parse_task(std::string_view name) {
    auto t = task_from_string(name);
    if (!t) throw ScoreError(ScoreErrorCode::unknown_task, "unknown task '" + std::string(name) + "'");
    return *t;
}

/// Dispatches to the task's reward after the overlength gate.
[[nodiscard]] inline RewardBreakdown score(const Reference& ref, std::string_view raw_response) {
    if (is_overlength(raw_response)) {
        RewardBreakdown r;
        r.fmt = 0.0;
        r.overlength = true;
        return r;
    }
    switch (ref.task) {
        case TaskType::A1:
        case TaskType::A2: return reward_motion(raw_response, std::get<ParsedAction>(ref.value));
        case TaskType::A3:
        case TaskType::D3: return reward_sequence(raw_response, std::get<std::vector<ParsedAction>>(ref.value));
        case TaskType::A4:
        case TaskType::D2:
        case TaskType::D4: return reward_binary(raw_response, std::get<bool>(ref.value));
        case TaskType::D1: return reward_bbox(raw_response, std::get<BoxD>(ref.value));
    }
    return {};
}

[[nodiscard]] inline RewardBreakdown score(TaskType task, std::string_view raw_response, std::string_view reference) {
    return score(parse_reference(task, reference), raw_response);
}

[[nodiscard]] inline RewardBreakdown score(std::string_view task, std::string_view raw_response,
                                           std::string_view reference) {
    return score(parse_task(task), raw_response, reference);
}

}  // namespace viewforge
