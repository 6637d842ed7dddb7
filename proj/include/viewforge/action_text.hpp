// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "viewforge/geometry.hpp"

namespace viewforge {

enum class TextStyle : std::uint8_t {
    semicolon,  // "a; b; c"
    prose,      // "a, b and c"
};

/// Meters render without a decimal point when whole, otherwise with one
/// decimal (two for sub-grid centimeters); degrees are integers.
[[nodiscard]] inline std::string format_magnitude(const Action& a) {
    if (is_rotation(a.kind)) return std::to_string(a.amount);
    const int whole = a.amount / 100;
    const int cm = a.amount % 100;
    if (cm == 0) return std::to_string(whole);
    if (cm % 10 == 0) return std::to_string(whole) + "." + std::to_string(cm / 10);
    return std::to_string(whole) + (cm < 10 ? ".0" : ".") + std::to_string(cm);
}

[[nodiscard]] inline std::string action_text(const Action& a) {
    switch (a.kind) {
        case ActionKind::move_forward: return "move forward " + format_magnitude(a) + " meters";
        case ActionKind::move_backward: return "move backward " + format_magnitude(a) + " meters";
        case ActionKind::shift_left: return "move left " + format_magnitude(a) + " meters";
        case ActionKind::shift_right: return "move right " + format_magnitude(a) + " meters";
        case ActionKind::turn_left: return "turn left " + format_magnitude(a) + " degrees";
        case ActionKind::turn_right: return "turn right " + format_magnitude(a) + " degrees";
    }
    return {};
}

[[nodiscard]] inline std::string serialize_action_text(std::span<const Action> seq, TextStyle style) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) {
            if (style == TextStyle::semicolon) {
                out += "; ";
            } else {
                out += (i + 1 == seq.size()) ? " and " : ", ";
            }
        }
        out += action_text(seq[i]);
    }
    return out;
}

}  // namespace viewforge
