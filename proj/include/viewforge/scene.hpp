// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic 3D scenes observed through an analytic pinhole camera. This is the
// stand-in for a generative world model: every view is a pose, and every
// observation (projected box, detection, visibility) is exact geometry.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "viewforge/box.hpp"
#include "viewforge/geometry.hpp"

namespace viewforge {

struct Vec3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

struct SceneObject {
    std::string id;
    std::string label;
    Vec3 center;
    Vec3 size;  // (w, d, h) along world x, y, z

    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct CameraIntrinsics {
    double horizontal_fov{90.0};  // degrees, in (0, 180); square image

    [[nodiscard]] double focal() const noexcept {
        return (kImageExtent / 2.0) / std::tan(horizontal_fov * std::numbers::pi / 360.0);
    }

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Corners closer than this along the view axis are dropped from the hull.
inline constexpr double kNearPlane = 0.05;

struct Scene {
    std::string id;
    std::string domain;  // source family, e.g. "scannet" or "mulset"
    std::vector<SceneObject> objects;
    double camera_height{1.5};
    CameraIntrinsics intrinsics{};
    std::uint64_t seed{0};

    [[nodiscard]] const SceneObject* find(std::string_view object_id) const noexcept {
        for (const auto& o : objects) {
            if (o.id == object_id) return &o;
        }
        return nullptr;
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

namespace detail {

inline bool is_token(std::string_view s) noexcept {
    if (s.empty()) return false;
    return std::none_of(s.begin(), s.end(), [](unsigned char c) { return c <= ' ' || c == 0x7f; });
}

}  // namespace detail

/// Throws std::invalid_argument naming the first violated invariant.
inline void validate_scene(const Scene& scene) {
    if (!detail::is_token(scene.id)) throw std::invalid_argument("scene: id must be a non-empty token");
    if (!detail::is_token(scene.domain)) throw std::invalid_argument("scene " + scene.id + ": bad domain");
    if (!(scene.camera_height > 0.0) || !std::isfinite(scene.camera_height)) {
        throw std::invalid_argument("scene " + scene.id + ": camera_height must be > 0");
    }
    const double fov = scene.intrinsics.horizontal_fov;
    if (!(fov > 0.0 && fov < 180.0)) throw std::invalid_argument("scene " + scene.id + ": fov must be in (0, 180)");
    std::unordered_set<std::string> ids;
    for (const auto& o : scene.objects) {
        if (!detail::is_token(o.id) || !detail::is_token(o.label)) {
            throw std::invalid_argument("scene " + scene.id + ": object id/label must be non-empty tokens");
        }
        if (!ids.insert(o.id).second) throw std::invalid_argument("scene " + scene.id + ": duplicate object " + o.id);
        if (!(o.size.x > 0.0 && o.size.y > 0.0 && o.size.z > 0.0)) {
            throw std::invalid_argument("scene " + scene.id + ": object " + o.id + " has non-positive size");
        }
    }
}

struct ProjectedBox {
    std::string object_id;
    BoxI bbox;       // clipped to the image, integer-rounded
    BoxD raw;        // unclipped hull of the projected corners
    double depth{};  // view-axis distance to the object center
    bool in_front{true};
};

struct Detection {
    std::string object_id;
    std::string label;
    BoxI bbox;
    double confidence{};

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Hull of the object's eight corners through the camera at `pose`. Absent when
/// fewer than two corners lie beyond the near plane.
[[nodiscard]] inline std::optional<ProjectedBox> project_object(const Scene& scene, const Pose& pose,
                                                                const SceneObject& obj) {
    const auto [s, c] = sincos_deg(pose.yaw);
    const double f = scene.intrinsics.focal();
    const double half = kImageExtent / 2.0;

    double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
    int kept = 0;
    for (int i = 0; i < 8; ++i) {
        const double px = obj.center.x + ((i & 1) ? 0.5 : -0.5) * obj.size.x;
        const double py = obj.center.y + ((i & 2) ? 0.5 : -0.5) * obj.size.y;
        const double pz = obj.center.z + ((i & 4) ? 0.5 : -0.5) * obj.size.z;
        const double dx = px - pose.x, dy = py - pose.y, dz = pz - scene.camera_height;
        const double depth = dx * s + dy * c;
        if (depth < kNearPlane) continue;
        const double side = dx * c - dy * s;
        const double u = half + f * side / depth;
        const double v = half - f * dz / depth;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        ++kept;
    }
    if (kept < 2) return std::nullopt;

    auto clip = [](double v) {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, static_cast<double>(kImageExtent))));
    };
    ProjectedBox out;
    out.object_id = obj.id;
    out.raw = {umin, vmin, umax, vmax};
    out.bbox = {clip(umin), clip(vmin), clip(umax), clip(vmax)};
    out.depth = (obj.center.x - pose.x) * s + (obj.center.y - pose.y) * c;
    return out;
}

/// Throws std::out_of_range when the object is not in the scene.
[[nodiscard]] inline std::optional<ProjectedBox> project_box(const Scene& scene, const Pose& pose,
                                                             std::string_view object_id) {
    const auto* obj = scene.find(object_id);
    if (obj == nullptr) throw std::out_of_range("project_box: unknown object " + std::string(object_id));
    return project_object(scene, pose, *obj);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_double(std::uint64_t h, double v) noexcept {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(v));
    return splitmix64(h ^ bits);
}

}  // namespace detail

/// Synthetic detector noise in [-0.1, 0.1], a pure function of (seed, object, pose).
[[nodiscard]] inline double detection_noise(std::uint64_t seed, std::string_view object_id, const Pose& pose) noexcept {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::fnv1a(object_id, h);
    h = detail::mix_double(h, pose.x);
    h = detail::mix_double(h, pose.y);
    h = detail::mix_double(h, pose.yaw);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return -0.1 + 0.2 * u;
}

/// clamp(0.5 + 0.5 * area^0.25 - 0.6 * truncation + noise, 0, 1), where area is
/// the clipped box area over the image area and truncation the fraction of the
/// unclipped hull that falls outside the image.
[[nodiscard]] inline double detection_confidence(const ProjectedBox& pb, double noise) noexcept {
    const double image_area = static_cast<double>(kImageExtent) * kImageExtent;
    const double area = pb.bbox.area() / image_area;
    const BoxD frame{0.0, 0.0, static_cast<double>(kImageExtent), static_cast<double>(kImageExtent)};
    const double raw_area = pb.raw.area();
    const double truncation = raw_area > 0.0 ? 1.0 - intersection_area(pb.raw, frame) / raw_area : 1.0;
    const double conf = 0.5 + 0.5 * std::pow(area, 0.25) - 0.6 * truncation + noise;
    return std::clamp(conf, 0.0, 1.0);
}

/// One candidate per object whose clipped projection has positive area.
[[nodiscard]] inline std::vector<Detection> synth_detections(const Scene& scene, const Pose& pose) {
    std::vector<Detection> out;
    for (const auto& obj : scene.objects) {
        auto pb = project_object(scene, pose, obj);
        if (!pb || pb->bbox.area() <= 0.0) continue;
        const double conf = detection_confidence(*pb, detection_noise(scene.seed, obj.id, pose));
        out.push_back({obj.id, obj.label, pb->bbox, conf});
    }
    return out;
}

struct DetectionFilter {
    double min_confidence{0.3};
    double nms_iou{0.5};
    double min_area_ratio{0.01};
    double max_area_ratio{0.6};
    int border_margin{10};  // 1% of the image extent

    [[nodiscard]] bool box_ok(const BoxI& b) const noexcept {
        const double ratio = b.area() / (static_cast<double>(kImageExtent) * kImageExtent);
        return ratio >= min_area_ratio && ratio <= max_area_ratio && b.x1 >= border_margin &&
               b.y1 >= border_margin && b.x2 <= kImageExtent - border_margin &&
               b.y2 <= kImageExtent - border_margin;
    }
};

/// Threshold, area and margin filters, then greedy per-label NMS in descending
/// confidence, then one detection per instance (the most confident).
[[nodiscard]] inline std::vector<Detection> filter_detections(std::vector<Detection> dets,
                                                              const DetectionFilter& cfg = {}) {
    std::erase_if(dets, [&](const Detection& d) { return d.confidence < cfg.min_confidence || !cfg.box_ok(d.bbox); });
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.object_id < b.object_id;
    });
    std::vector<Detection> kept;
    for (auto& d : dets) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return (k.label == d.label && iou(k.bbox, d.bbox) >= cfg.nms_iou) || k.object_id == d.object_id;
        });
        if (!suppressed) kept.push_back(std::move(d));
    }
    return kept;
}

/// Whether the object is framed after executing `seq` from `pose`: its box must
/// pass the area and border-margin checks of the detection filter.
[[nodiscard]] inline bool visibility_after(const Scene& scene, const Pose& pose, std::span<const Action> seq,
                                           std::string_view object_id, const DetectionFilter& cfg = {}) {
    const auto pb = project_box(scene, apply_sequence(pose, seq), object_id);
    return pb.has_value() && cfg.box_ok(pb->bbox);
}

/// Pairs detections that share an object id, in source order.
[[nodiscard]] inline std::vector<std::pair<Detection, Detection>> match_instances(const std::vector<Detection>& src,
                                                                                  const std::vector<Detection>& tgt) {
    std::vector<std::pair<Detection, Detection>> out;
    for (const auto& s : src) {
        auto it = std::find_if(tgt.begin(), tgt.end(), [&](const Detection& t) { return t.object_id == s.object_id; });
        if (it != tgt.end()) out.emplace_back(s, *it);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scene files.
//
//   # comment lines are ignored
//   scene <id>
//   domain <token>
//   seed <u64>
//   camera_height <real>
//   hfov <real>
//   object <id> <label> <cx> <cy> <cz> <w> <d> <h>
//   end
//
// Reals are written in shortest round-trip form, so files round-trip exactly.

class SceneFormatError : public std::runtime_error {
public:
    SceneFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("scene file line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

[[nodiscard]] inline std::string format_real(double v) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

inline void write_scene(std::ostream& os, const Scene& scene) {
    validate_scene(scene);
    os << "scene " << scene.id << '\n'
       << "domain " << scene.domain << '\n'
       << "seed " << scene.seed << '\n'
       << "camera_height " << format_real(scene.camera_height) << '\n'
       << "hfov " << format_real(scene.intrinsics.horizontal_fov) << '\n';
    for (const auto& o : scene.objects) {
        os << "object " << o.id << ' ' << o.label << ' ' << format_real(o.center.x) << ' ' << format_real(o.center.y)
           << ' ' << format_real(o.center.z) << ' ' << format_real(o.size.x) << ' ' << format_real(o.size.y) << ' '
           << format_real(o.size.z) << '\n';
    }
    os << "end\n";
}

[[nodiscard]] inline std::vector<Scene> read_scenes(std::istream& is) {
    std::vector<Scene> scenes;
    std::optional<Scene> cur;
    std::string line;
    std::size_t lineno = 0;

    auto real = [&](const std::string& tok) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v)) {
            throw SceneFormatError(lineno, "bad number '" + tok + "'");
        }
        return v;
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::vector<std::string> args;
        for (std::string t; ls >> t;) args.push_back(t);
        auto want = [&](std::size_t n) {
            if (args.size() != n) throw SceneFormatError(lineno, "'" + key + "' expects " + std::to_string(n) + " fields");
        };
        if (key == "scene") {
            if (cur) throw SceneFormatError(lineno, "nested scene (missing 'end')");
            want(1);
            cur.emplace();
            cur->id = args[0];
            continue;
        }
        if (!cur) throw SceneFormatError(lineno, "'" + key + "' outside a scene block");
        if (key == "domain") {
            want(1);
            cur->domain = args[0];
        } else if (key == "seed") {
            want(1);
            auto [p, ec] = std::from_chars(args[0].data(), args[0].data() + args[0].size(), cur->seed);
            if (ec != std::errc{} || p != args[0].data() + args[0].size()) throw SceneFormatError(lineno, "bad seed");
        } else if (key == "camera_height") {
            want(1);
            cur->camera_height = real(args[0]);
        } else if (key == "hfov") {
            want(1);
            cur->intrinsics.horizontal_fov = real(args[0]);
        } else if (key == "object") {
            want(8);
            cur->objects.push_back({args[0], args[1], {real(args[2]), real(args[3]), real(args[4])},
                                    {real(args[5]), real(args[6]), real(args[7])}});
        } else if (key == "end") {
            want(0);
            try {
                validate_scene(*cur);
            } catch (const std::invalid_argument& e) {
                throw SceneFormatError(lineno, e.what());
            }
            scenes.push_back(std::move(*cur));
            cur.reset();
        } else {
            throw SceneFormatError(lineno, "unknown key '" + key + "'");
        }
    }
    if (cur) throw SceneFormatError(lineno, "unterminated scene " + cur->id);
    return scenes;
}

}  // namespace viewforge
