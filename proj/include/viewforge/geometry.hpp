// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Planar egocentric camera kinematics.
//
// Frame convention: yaw 0 faces +y, yaw grows clockwise (turn-right adds),
// heading h(yaw) = (sin yaw, cos yaw), right vector (cos yaw, -sin yaw).
// Yaw is kept in degrees in (-180, 180].

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace viewforge {

enum class ActionKind : std::uint8_t {
    move_forward,
    move_backward,
    shift_left,
    shift_right,
    turn_left,
    turn_right,
};

inline constexpr std::array<ActionKind, 6> kAllActionKinds = {
    ActionKind::move_forward, ActionKind::move_backward, ActionKind::shift_left,
    ActionKind::shift_right,  ActionKind::turn_left,     ActionKind::turn_right,
};

[[nodiscard]] constexpr bool is_rotation(ActionKind k) noexcept {
    return k == ActionKind::turn_left || k == ActionKind::turn_right;
}

[[nodiscard]] constexpr ActionKind opposite(ActionKind k) noexcept {
    switch (k) {
        case ActionKind::move_forward: return ActionKind::move_backward;
        case ActionKind::move_backward: return ActionKind::move_forward;
        case ActionKind::shift_left: return ActionKind::shift_right;
        case ActionKind::shift_right: return ActionKind::shift_left;
        case ActionKind::turn_left: return ActionKind::turn_right;
        case ActionKind::turn_right: return ActionKind::turn_left;
    }
    return k;
}

[[nodiscard]] constexpr std::string_view to_string(ActionKind k) noexcept {
    switch (k) {
        case ActionKind::move_forward: return "move_forward";
        case ActionKind::move_backward: return "move_backward";
        case ActionKind::shift_left: return "shift_left";
        case ActionKind::shift_right: return "shift_right";
        case ActionKind::turn_left: return "turn_left";
        case ActionKind::turn_right: return "turn_right";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<ActionKind> action_kind_from_string(std::string_view s) noexcept {
    for (auto k : kAllActionKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

/// Amounts are integers in fine units: centimeters for translations, degrees
/// for rotations. One grid step (0.1 m or 10 degrees) is kGridStep fine units.
inline constexpr std::int32_t kGridStep = 10;
inline constexpr std::int32_t kMaxTranslationSteps = 60;  // 6.0 m
inline constexpr std::int32_t kMaxRotationSteps = 10;     // 100 degrees

struct Action {
    ActionKind kind{ActionKind::move_forward};
    std::int32_t amount{0};

    /// Builds a translation from meters; the value must land on a whole centimeter.
    [[nodiscard]] static Action meters(ActionKind k, double m) {
        if (is_rotation(k)) throw std::invalid_argument("Action::meters: rotation kind");
        return Action{k, to_fine(m * 100.0)};
    }

    [[nodiscard]] static Action degrees(ActionKind k, double deg) {
        if (!is_rotation(k)) throw std::invalid_argument("Action::degrees: translation kind");
        return Action{k, to_fine(deg)};
    }

    [[nodiscard]] static constexpr Action steps(ActionKind k, std::int32_t grid_steps) noexcept {
        return Action{k, grid_steps * kGridStep};
    }

    /// Meters for translations, degrees for rotations.
    [[nodiscard]] constexpr double magnitude() const noexcept {
        return is_rotation(kind) ? static_cast<double>(amount) : static_cast<double>(amount) / 100.0;
    }

    [[nodiscard]] constexpr bool on_grid() const noexcept { return amount > 0 && amount % kGridStep == 0; }
    [[nodiscard]] constexpr std::int32_t grid_steps() const noexcept { return amount / kGridStep; }

    [[nodiscard]] constexpr bool within_caps() const noexcept {
        const auto cap = is_rotation(kind) ? kMaxRotationSteps : kMaxTranslationSteps;
        return amount > 0 && amount <= cap * kGridStep;
    }

    friend constexpr bool operator==(const Action&, const Action&) = default;

private:
    static std::int32_t to_fine(double v) {
        const double r = std::round(v);
        if (!std::isfinite(v) || r <= 0.0 || std::abs(v - r) > 1e-6 || r > 1e9) {
            throw std::invalid_argument("Action: magnitude not a positive whole fine unit");
        }
        return static_cast<std::int32_t>(r);
    }
};

/// Ordered, order-significant. Semantic programs are non-empty; a trajectory's
/// anchor frame carries the empty sequence.
using ActionSequence = std::vector<Action>;

struct Pose {
    double x{0.0};
    double y{0.0};
    double yaw{0.0};

    friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

/// Maps any angle in degrees into (-180, 180].
[[nodiscard]] inline double normalize_yaw(double deg) noexcept {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

/// sin and cos of an angle in degrees, exact on multiples of 90.
[[nodiscard]] inline std::pair<double, double> sincos_deg(double deg) noexcept {
    const double r = normalize_yaw(deg);
    if (r == 0.0) return {0.0, 1.0};
    if (r == 90.0) return {1.0, 0.0};
    if (r == 180.0) return {0.0, -1.0};
    if (r == -90.0) return {-1.0, 0.0};
    const double rad = r * std::numbers::pi / 180.0;
    return {std::sin(rad), std::cos(rad)};
}

[[nodiscard]] inline Pose apply_action(const Pose& pose, const Action& action) noexcept {
    const double m = action.magnitude();
    const auto [s, c] = sincos_deg(pose.yaw);
    Pose out = pose;
    switch (action.kind) {
        case ActionKind::move_forward: out.x += m * s; out.y += m * c; break;
        case ActionKind::move_backward: out.x -= m * s; out.y -= m * c; break;
        case ActionKind::shift_right: out.x += m * c; out.y -= m * s; break;
        case ActionKind::shift_left: out.x -= m * c; out.y += m * s; break;
        case ActionKind::turn_right: out.yaw = normalize_yaw(pose.yaw + m); break;
        case ActionKind::turn_left: out.yaw = normalize_yaw(pose.yaw - m); break;
    }
    return out;
}

[[nodiscard]] inline Pose apply_sequence(Pose pose, std::span<const Action> seq) noexcept {
    for (const auto& a : seq) pose = apply_action(pose, a);
    return pose;
}

/// Reverses order and flips every action, so that
/// apply_sequence(apply_sequence(p, s), inverse(s)) == p.
[[nodiscard]] inline ActionSequence inverse(std::span<const Action> seq) {
    ActionSequence out;
    out.reserve(seq.size());
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) out.push_back({opposite(it->kind), it->amount});
    return out;
}

/// [steps[0..1], steps[0..2], ..., steps[0..n]].
[[nodiscard]] inline std::vector<ActionSequence> cumulative_prefixes(std::span<const Action> seq) {
    std::vector<ActionSequence> out;
    out.reserve(seq.size());
    for (std::size_t k = 1; k <= seq.size(); ++k) out.emplace_back(seq.begin(), seq.begin() + k);
    return out;
}

/// Splits an action into same-kind pieces of at most `max_amount` fine units;
/// all but the last piece equal `max_amount`.
[[nodiscard]] inline ActionSequence split_amount(const Action& action, std::int32_t max_amount) {
    if (max_amount <= 0) throw std::invalid_argument("split_amount: max_amount must be positive");
    ActionSequence out;
    std::int32_t left = action.amount;
    out.reserve(static_cast<std::size_t>(left / max_amount + 1));
    while (left > 0) {
        const auto piece = std::min(left, max_amount);
        out.push_back({action.kind, piece});
        left -= piece;
    }
    return out;
}

/// Decomposes a long motion into per-frame increments of at most `max_step`
/// (meters or degrees, matching the action). `max_step` must be a positive
/// multiple of the grid (0.1 m or 10 degrees).
[[nodiscard]] inline ActionSequence decompose(const Action& action, double max_step) {
    const double fine = is_rotation(action.kind) ? max_step : max_step * 100.0;
    const double grid = std::round(fine / kGridStep);
    if (!std::isfinite(fine) || grid < 1.0 || std::abs(fine - grid * kGridStep) > 1e-6) {
        throw std::invalid_argument("decompose: max_step is not a positive grid multiple");
    }
    return split_amount(action, static_cast<std::int32_t>(grid) * kGridStep);
}

/// Merges contiguous same-kind actions (inverse of per-frame decomposition).
[[nodiscard]] inline ActionSequence merge_runs(std::span<const Action> seq) {
    ActionSequence out;
    for (const auto& a : seq) {
        if (!out.empty() && out.back().kind == a.kind) {
            out.back().amount += a.amount;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

[[nodiscard]] inline double planar_distance(const Pose& a, const Pose& b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Absolute wrapped yaw difference in [0, 180].
[[nodiscard]] inline double yaw_difference(const Pose& a, const Pose& b) noexcept {
    return std::abs(normalize_yaw(a.yaw - b.yaw));
}

[[nodiscard]] inline bool poses_close(const Pose& a, const Pose& b, double tol) noexcept {
    return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && yaw_difference(a, b) <= tol;
}

}  // namespace viewforge
