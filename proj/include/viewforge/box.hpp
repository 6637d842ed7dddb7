// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

namespace viewforge {

/// Normalized image extent; boxes live in [0, kImageExtent]^2.
inline constexpr int kImageExtent = 1000;

/// Axis-aligned box in corner form (x1, y1, x2, y2), image y pointing down.
template <typename T>
struct Box {
    T x1{};
    T y1{};
    T x2{};
    T y2{};

    [[nodiscard]] constexpr T width() const noexcept { return x2 - x1; }
    [[nodiscard]] constexpr T height() const noexcept { return y2 - y1; }
    [[nodiscard]] constexpr bool ordered() const noexcept { return x1 < x2 && y1 < y2; }

    [[nodiscard]] constexpr double area() const noexcept {
        if (x2 <= x1 || y2 <= y1) return 0.0;
        return static_cast<double>(x2 - x1) * static_cast<double>(y2 - y1);
    }

    [[nodiscard]] constexpr double center_x() const noexcept { return (static_cast<double>(x1) + x2) / 2.0; }
    [[nodiscard]] constexpr double center_y() const noexcept { return (static_cast<double>(y1) + y2) / 2.0; }

    [[nodiscard]] constexpr bool in_image() const noexcept {
        return x1 >= 0 && y1 >= 0 && x2 <= kImageExtent && y2 <= kImageExtent;
    }

    template <typename U>
    [[nodiscard]] constexpr Box<U> as() const noexcept {
        return {static_cast<U>(x1), static_cast<U>(y1), static_cast<U>(x2), static_cast<U>(y2)};
    }

    friend constexpr bool operator==(const Box&, const Box&) = default;
};

using BoxI = Box<int>;
using BoxD = Box<double>;

template <typename T>
[[nodiscard]] constexpr double intersection_area(const Box<T>& a, const Box<T>& b) noexcept {
    const double iw = std::max(0.0, static_cast<double>(std::min(a.x2, b.x2)) - std::max(a.x1, b.x1));
    const double ih = std::max(0.0, static_cast<double>(std::min(a.y2, b.y2)) - std::max(a.y1, b.y1));
    return iw * ih;
}

/// Intersection over union; 0 when the union is empty.
template <typename T>
[[nodiscard]] constexpr double iou(const Box<T>& a, const Box<T>& b) noexcept {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// "[x1, y1, x2, y2]" with integer coordinates.
[[nodiscard]] inline std::string format_box(const BoxI& b) {
    return "[" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) + ", " +
           std::to_string(b.y2) + "]";
}

}  // namespace viewforge
