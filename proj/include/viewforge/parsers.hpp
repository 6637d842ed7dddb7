// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Response normalization and the action / box / boolean parsers used by the
// reward engine and by record validation. None of these functions throw on
// arbitrary input.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "viewforge/box.hpp"
#include "viewforge/geometry.hpp"

namespace viewforge {

/// Lowercased ASCII, whitespace runs collapsed to one space, no leading or
/// trailing whitespace, no trailing run of . ! ? ; : ,
class NormalizedText {
public:
    NormalizedText() = default;

    [[nodiscard]] std::string_view view() const noexcept { return text_; }
    [[nodiscard]] const std::string& str() const noexcept { return text_; }
    [[nodiscard]] bool empty() const noexcept { return text_.empty(); }

    friend bool operator==(const NormalizedText&, const NormalizedText&) = default;

private:
    explicit NormalizedText(std::string s) noexcept : text_(std::move(s)) {}
    friend NormalizedText preprocess(std::string_view raw);

    std::string text_;
};

namespace detail {

constexpr bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

constexpr bool is_trailing_punct(char c) noexcept {
    return c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',';
}

constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// Word characters of normalized text.
constexpr bool is_word(char c) noexcept { return (c >= 'a' && c <= 'z') || is_digit(c); }

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline double to_double(std::string_view digits) noexcept {
    double v = 0.0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec == std::errc::result_out_of_range) return std::numeric_limits<double>::infinity();
    return v;
}

// Unsigned decimal: [0-9]+ ( . [0-9]+ )?  Returns the length consumed, 0 on failure.
inline std::size_t scan_number(std::string_view s, std::size_t i) noexcept {
    const std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == start) return 0;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
        i += 2;
        while (i < s.size() && is_digit(s[i])) ++i;
    }
    return i - start;
}

inline bool eat(std::string_view s, std::size_t& i, std::string_view lit) noexcept {
    if (s.substr(i, lit.size()) != lit) return false;
    i += lit.size();
    return true;
}

}  // namespace detail

[[nodiscard]] inline NormalizedText preprocess(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (detail::is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    while (!out.empty() && (detail::is_trailing_punct(out.back()) || out.back() == ' ')) out.pop_back();
    return NormalizedText(std::move(out));
}

/// An action as read from text; the magnitude may be off-grid.
struct ParsedAction {
    ActionKind kind{ActionKind::move_forward};
    double magnitude{0.0};

    friend bool operator==(const ParsedAction&, const ParsedAction&) = default;
};

[[nodiscard]] inline ParsedAction to_parsed(const Action& a) noexcept { return {a.kind, a.magnitude()}; }

namespace detail {

// One action pattern anchored at i; on success sets `end` past the unit word.
inline std::optional<ParsedAction> match_action_at(std::string_view t, std::size_t i, std::size_t& end) noexcept {
    ActionKind kind{};
    bool rotation = false;
    if (eat(t, i, "move ")) {
        if (eat(t, i, "forward ")) kind = ActionKind::move_forward;
        else if (eat(t, i, "backward ")) kind = ActionKind::move_backward;
        else if (eat(t, i, "left ")) kind = ActionKind::shift_left;
        else if (eat(t, i, "right ")) kind = ActionKind::shift_right;
        else return std::nullopt;
    } else if (eat(t, i, "turn ")) {
        rotation = true;
        if (eat(t, i, "left ")) kind = ActionKind::turn_left;
        else if (eat(t, i, "right ")) kind = ActionKind::turn_right;
        else return std::nullopt;
    } else {
        return std::nullopt;
    }
    const std::size_t len = scan_number(t, i);
    if (len == 0) return std::nullopt;
    const double value = to_double(t.substr(i, len));
    i += len;
    if (!eat(t, i, " ") || !eat(t, i, rotation ? "degree" : "meter")) return std::nullopt;
    const auto boundary = [&](std::size_t k) { return k >= t.size() || !is_word(t[k]); };
    if (i < t.size() && t[i] == 's' && boundary(i + 1)) {
        end = i + 1;
    } else if (boundary(i)) {
        end = i;
    } else {
        return std::nullopt;
    }
    return ParsedAction{kind, value};
}

}  // namespace detail

/// Every "move {forward|backward|left|right} X meter(s)" and
/// "turn {left|right} X degree(s)" in textual order; surrounding text ignored.
[[nodiscard]] inline std::vector<ParsedAction> parse_action_sequence(const NormalizedText& text) {
    const std::string_view t = text.view();
    std::vector<ParsedAction> out;
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t end = i;
        if ((i == 0 || !detail::is_word(t[i - 1])) && (t[i] == 'm' || t[i] == 't')) {
            if (auto a = detail::match_action_at(t, i, end)) {
                out.push_back(*a);
                i = end;
                continue;
            }
        }
        ++i;
    }
    return out;
}

/// Whole-text action list "a; b; c" with nothing else around it.
[[nodiscard]] inline std::optional<std::vector<ParsedAction>> parse_action_list(const NormalizedText& text) {
    const std::string_view t = text.view();
    std::vector<ParsedAction> out;
    std::size_t i = 0;
    while (true) {
        std::size_t end = i;
        auto a = detail::match_action_at(t, i, end);
        if (!a) return std::nullopt;
        out.push_back(*a);
        i = end;
        if (i == t.size()) return out;
        detail::eat(t, i, " ");
        if (!detail::eat(t, i, ";")) return std::nullopt;
        detail::eat(t, i, " ");
    }
}

enum class BoxFormat : std::uint8_t { exact, embedded };

struct ParsedBox {
    BoxD coords;
    BoxFormat format{BoxFormat::exact};
};

namespace detail {

// '[' ' '* NUM ' '* ',' ... ']' with NUM = -?[0-9]+(.[0-9]+)?
inline std::optional<BoxD> match_box_at(std::string_view s, std::size_t i, std::size_t& end) noexcept {
    if (i >= s.size() || s[i] != '[') return std::nullopt;
    ++i;
    double v[4];
    for (int k = 0; k < 4; ++k) {
        while (i < s.size() && s[i] == ' ') ++i;
        const std::size_t start = i;
        if (i < s.size() && s[i] == '-') ++i;
        const std::size_t len = scan_number(s, i);
        if (len == 0) return std::nullopt;
        i += len;
        v[k] = to_double(s.substr(start, i - start));
        if (v[k] == std::numeric_limits<double>::infinity() && s[start] == '-') v[k] = -v[k];
        while (i < s.size() && s[i] == ' ') ++i;
        if (i >= s.size() || s[i] != (k == 3 ? ']' : ',')) return std::nullopt;
        ++i;
    }
    end = i;
    return BoxD{v[0], v[1], v[2], v[3]};
}

}  // namespace detail

/// Exact when the trimmed response is a single bracketed 4-tuple; embedded
/// when one occurs anywhere (first occurrence wins).
[[nodiscard]] inline std::optional<ParsedBox> parse_bbox(std::string_view raw) {
    const std::string_view t = detail::trim(raw);
    std::size_t end = 0;
    if (auto b = detail::match_box_at(t, 0, end); b && end == t.size()) return ParsedBox{*b, BoxFormat::exact};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '[') continue;
        if (auto b = detail::match_box_at(raw, i, end)) return ParsedBox{*b, BoxFormat::embedded};
    }
    return std::nullopt;
}

/// Bare short-form labels only: yes/true are positive, no/false negative.
[[nodiscard]] inline std::optional<bool> parse_boolean(const NormalizedText& text) noexcept {
    const auto t = text.view();
    if (t == "yes" || t == "true") return true;
    if (t == "no" || t == "false") return false;
    return std::nullopt;
}

/// Decoded character count (UTF-8 code points; stray continuation bytes are
/// not counted).
[[nodiscard]] inline std::size_t count_text_units(std::string_view raw) noexcept {
    std::size_t n = 0;
    for (unsigned char c : raw) n += (c & 0xC0) != 0x80;
    return n;
}

inline constexpr std::size_t kMaxResponseUnits = 200;

[[nodiscard]] inline bool is_overlength(std::string_view raw) noexcept {
    return count_text_units(raw) > kMaxResponseUnits;
}

}  // namespace viewforge
