// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited record I/O, record validation, corpus statistics and the
// quota-balanced refinement subset.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewforge/action_text.hpp"
#include "viewforge/box.hpp"
#include "viewforge/geometry.hpp"
#include "viewforge/parsers.hpp"
#include "viewforge/task.hpp"

namespace viewforge {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Output headers and atomic files.

inline constexpr std::string_view kHeaderKey = "viewforge_header";

/// Provenance carried on the first line of every output file.
struct OutputHeader {
    std::string config_hash;
    std::uint64_t seed{0};
    std::string command;
    json provenance = json::object();
};

[[nodiscard]] inline json header_json(const OutputHeader& h) {
    return json{{std::string(kHeaderKey),
                 {{"config_hash", h.config_hash}, {"seed", h.seed}, {"command", h.command}, {"provenance", h.provenance}}}};
}

[[nodiscard]] inline bool is_header_line(const json& j) { return j.is_object() && j.contains(std::string(kHeaderKey)); }

/// Writes `content` to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("rename failed: " + path.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// Record wire format.

/// A line that does not decode to a record of the fixed schema.
class RecordSchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline json action_json(const Action& a) {
    return {{"kind", std::string(to_string(a.kind))}, {"magnitude", a.magnitude()}};
}

[[nodiscard]] inline Action action_from_json(const json& j) {
    const auto kind = action_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw RecordSchemaError("unknown action kind");
    const double m = j.at("magnitude").get<double>();
    try {
        return is_rotation(*kind) ? Action::degrees(*kind, m) : Action::meters(*kind, m);
    } catch (const std::invalid_argument&) {
        throw RecordSchemaError("action magnitude is not a positive whole centimeter or degree");
    }
}

[[nodiscard]] inline json record_json(const TaskRecord& r) {
    json meta;
    meta["actions"] = json::array();
    for (const auto& a : r.meta.actions) meta["actions"].push_back(action_json(a));
    meta["boxes"] = json::object();
    for (const auto& [k, b] : r.meta.boxes) meta["boxes"][k] = {b.x1, b.y1, b.x2, b.y2};
    meta["labels"] = r.meta.labels;
    meta["trajectory_group"] = r.meta.trajectory_group;
    if (r.meta.source_pose && r.meta.target_pose) {
        const auto& s = *r.meta.source_pose;
        const auto& t = *r.meta.target_pose;
        meta["poses"] = {{"source", {s.x, s.y, s.yaw}}, {"target", {t.x, t.y, t.yaw}}};
    }
    return {{"id", r.id},
            {"task", std::string(to_string(r.task))},
            {"direction", std::string(to_string(r.direction))},
            {"source_bucket", r.source_bucket},
            {"images", r.images},
            {"prompt", r.prompt},
            {"answer", r.answer},
            {"meta", std::move(meta)}};
}

/// Throws RecordSchemaError on missing fields, wrong types or unknown enums.
[[nodiscard]] inline TaskRecord record_from_json(const json& j) {
    try {
        TaskRecord r;
        r.id = j.at("id").get<std::string>();
        const auto task = task_from_string(j.at("task").get<std::string>());
        if (!task) throw RecordSchemaError("unknown task");
        r.task = *task;
        const auto dir = direction_from_string(j.at("direction").get<std::string>());
        if (!dir) throw RecordSchemaError("unknown direction");
        r.direction = *dir;
        r.source_bucket = j.at("source_bucket").get<std::string>();
        r.images = j.at("images").get<std::vector<std::string>>();
        r.prompt = j.at("prompt").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        const auto& m = j.at("meta");
        for (const auto& a : m.at("actions")) r.meta.actions.push_back(action_from_json(a));
        for (const auto& [k, v] : m.at("boxes").items()) {
            const auto c = v.get<std::vector<int>>();
            if (c.size() != 4) throw RecordSchemaError("box must have 4 coordinates");
            r.meta.boxes[k] = BoxI{c[0], c[1], c[2], c[3]};
        }
        r.meta.labels = m.at("labels").get<std::map<std::string, std::string>>();
        r.meta.trajectory_group = m.at("trajectory_group").get<std::string>();
        if (m.contains("poses")) {
            const auto s = m.at("poses").at("source").get<std::vector<double>>();
            const auto t = m.at("poses").at("target").get<std::vector<double>>();
            if (s.size() != 3 || t.size() != 3) throw RecordSchemaError("pose must be [x, y, yaw]");
            r.meta.source_pose = Pose{s[0], s[1], s[2]};
            r.meta.target_pose = Pose{t[0], t[1], t[2]};
        }
        return r;
    } catch (const json::exception& e) {
        throw RecordSchemaError(e.what());
    }
}

/// Data lines of a line-delimited file; header and blank lines are skipped.
/// Reports the 1-based line number of the first undecodable line.
class DataFileError : public std::runtime_error {
public:
    DataFileError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct DataLine {
    std::size_t line{0};
    json value;
};

[[nodiscard]] inline std::vector<DataLine> read_json_lines(std::istream& is, std::optional<json>* header = nullptr) {
    std::vector<DataLine> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataFileError(n, "not valid JSON");
        if (is_header_line(j)) {
            if (header != nullptr) *header = j.at(std::string(kHeaderKey));
            continue;
        }
        out.push_back({n, std::move(j)});
    }
    return out;
}

[[nodiscard]] inline std::vector<TaskRecord> read_records(std::istream& is) {
    std::vector<TaskRecord> out;
    for (auto& dl : read_json_lines(is)) {
        try {
            out.push_back(record_from_json(dl.value));
        } catch (const RecordSchemaError& e) {
            throw DataFileError(dl.line, e.what());
        }
    }
    return out;
}

[[nodiscard]] inline std::string records_text(const OutputHeader& h, const std::vector<TaskRecord>& recs) {
    std::string out = header_json(h).dump() + "\n";
    for (const auto& r : recs) out += record_json(r).dump() + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Validation.

enum class RejectReason : std::uint8_t { schema, malformed_answer, invalid_box, action_mismatch };

[[nodiscard]] constexpr std::string_view to_string(RejectReason r) noexcept {
    switch (r) {
        case RejectReason::schema: return "schema";
        case RejectReason::malformed_answer: return "malformed_answer";
        case RejectReason::invalid_box: return "invalid_box";
        case RejectReason::action_mismatch: return "action_mismatch";
    }
    return "schema";
}

struct Rejection {
    RejectReason reason{RejectReason::schema};
    std::string detail;
};

inline constexpr double kReplayTolerance = 1e-9;

namespace detail {

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
    return n;
}

// The answer must be the canonical rendering of an on-grid action list.
inline std::optional<ActionSequence> canonical_actions(std::string_view answer) {
    auto parsed = parse_action_list(preprocess(answer));
    if (!parsed || parsed->empty()) return std::nullopt;
    ActionSequence seq;
    for (const auto& p : *parsed) {
        try {
            seq.push_back(is_rotation(p.kind) ? Action::degrees(p.kind, p.magnitude) : Action::meters(p.kind, p.magnitude));
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    }
    if (serialize_action_text(seq, TextStyle::semicolon) != answer) return std::nullopt;
    return seq;
}

// Text between the first pair of double quotes.
inline std::optional<std::string_view> quoted(std::string_view s) {
    const auto a = s.find('"');
    if (a == std::string_view::npos) return std::nullopt;
    const auto b = s.find('"', a + 1);
    if (b == std::string_view::npos) return std::nullopt;
    return s.substr(a + 1, b - a - 1);
}

inline bool box_valid(const BoxI& b) { return b.ordered() && b.in_image(); }

}  // namespace detail

/// nullopt when the record is well formed; otherwise the first failing check.
/// Checks run in order: schema, meta ground truth, meta boxes, answer.
[[nodiscard]] inline std::optional<Rejection> validate_record(const TaskRecord& r) {
    auto reject = [](RejectReason why, std::string what) { return std::optional<Rejection>(Rejection{why, std::move(what)}); };

    if (r.id.empty()) return reject(RejectReason::schema, "empty id");
    if (r.direction != direction_of(r.task)) return reject(RejectReason::schema, "direction does not match task");
    if (static_cast<int>(r.images.size()) != image_count(r.task)) return reject(RejectReason::schema, "wrong image count");
    if (detail::count_occurrences(r.prompt, kImageToken) != r.images.size()) {
        return reject(RejectReason::schema, "prompt image tokens do not match images");
    }
    if (r.source_bucket.empty() || r.meta.trajectory_group.empty()) {
        return reject(RejectReason::schema, "missing source bucket or trajectory group");
    }

    const auto& gt = r.meta.actions;
    if (gt.empty()) return reject(RejectReason::action_mismatch, "empty ground truth");
    for (const auto& a : gt) {
        if (!a.on_grid() || !a.within_caps()) return reject(RejectReason::action_mismatch, "ground truth off the action grid");
    }
    if (r.meta.source_pose.has_value() != r.meta.target_pose.has_value()) {
        return reject(RejectReason::schema, "incomplete pose pair");
    }
    if (r.meta.source_pose && !poses_close(apply_sequence(*r.meta.source_pose, gt), *r.meta.target_pose, kReplayTolerance)) {
        return reject(RejectReason::action_mismatch, "ground truth does not replay to the target pose");
    }
    if (r.task == TaskType::A1 && (gt.size() != 1 || is_rotation(gt[0].kind))) {
        return reject(RejectReason::action_mismatch, "A1 needs one translation");
    }
    if (r.task == TaskType::A2 && (gt.size() != 1 || !is_rotation(gt[0].kind))) {
        return reject(RejectReason::action_mismatch, "A2 needs one rotation");
    }

    const bool grounded = is_object_grounded(r.task);
    if (grounded) {
        const bool needs_target = r.task != TaskType::D2;
        if (!r.meta.boxes.contains("source") || (needs_target && !r.meta.boxes.contains("target"))) {
            return reject(RejectReason::schema, "missing meta boxes");
        }
        for (const auto& [k, b] : r.meta.boxes) {
            if (!detail::box_valid(b)) return reject(RejectReason::invalid_box, "meta box '" + k + "' unordered or out of range");
        }
    }

    // Forward tasks quote the executed motion in the prompt.
    if (r.task == TaskType::D1 || r.task == TaskType::D2 || r.task == TaskType::D4) {
        const auto q = detail::quoted(r.prompt);
        if (!q || *q != serialize_action_text(gt, TextStyle::prose)) {
            return reject(RejectReason::action_mismatch, "prompt motion does not match ground truth");
        }
    }

    switch (r.task) {
        case TaskType::A1:
        case TaskType::A2:
        case TaskType::A3:
        case TaskType::D3: {
            const auto seq = detail::canonical_actions(r.answer);
            if (!seq) return reject(RejectReason::malformed_answer, "answer is not a canonical action list");
            const std::size_t lo = r.task == TaskType::A3 ? 2 : 1;
            const std::size_t hi = r.task == TaskType::A3 ? 3 : (r.task == TaskType::D3 ? 2 : 1);
            if (seq->size() < lo || seq->size() > hi) {
                return reject(RejectReason::malformed_answer, "wrong number of actions for the task");
            }
            if (!std::all_of(seq->begin(), seq->end(), [](const Action& a) { return a.on_grid() && a.within_caps(); })) {
                return reject(RejectReason::action_mismatch, "answer magnitude off the action grid");
            }
            if (*seq != gt) return reject(RejectReason::action_mismatch, "answer differs from ground truth");
            break;
        }
        case TaskType::A4:
        case TaskType::D2:
        case TaskType::D4: {
            const bool yes_no = r.task != TaskType::A4;
            const bool ok = yes_no ? (r.answer == "yes" || r.answer == "no") : (r.answer == "true" || r.answer == "false");
            if (!ok) return reject(RejectReason::malformed_answer, "answer is not a canonical boolean");
            if (r.task == TaskType::A4) {
                const auto q = detail::quoted(r.prompt);
                if (!q) return reject(RejectReason::schema, "A4 prompt carries no claim");
                std::vector<ParsedAction> truth;
                for (const auto& a : gt) truth.push_back(to_parsed(a));
                const bool claim_true = parse_action_sequence(preprocess(*q)) == truth;
                if (claim_true != (r.answer == "true")) {
                    return reject(RejectReason::action_mismatch, "claim truth disagrees with ground truth");
                }
            }
            if (r.task == TaskType::D4 && r.meta.labels.contains("source") && r.meta.labels.contains("target") &&
                r.answer == "yes" && r.meta.labels.at("source") != r.meta.labels.at("target")) {
                return reject(RejectReason::action_mismatch, "same-instance answer with differing labels");
            }
            break;
        }
        case TaskType::D1: {
            const auto pb = parse_bbox(r.answer);
            if (!pb || pb->format != BoxFormat::exact) return reject(RejectReason::malformed_answer, "answer is not a box");
            const auto& c = pb->coords;
            const BoxI b{static_cast<int>(c.x1), static_cast<int>(c.y1), static_cast<int>(c.x2), static_cast<int>(c.y2)};
            if (format_box(b) != r.answer) return reject(RejectReason::malformed_answer, "answer box is not canonical");
            if (!detail::box_valid(b)) return reject(RejectReason::invalid_box, "answer box unordered or out of range");
            if (b != r.meta.boxes.at("target")) return reject(RejectReason::invalid_box, "answer box differs from meta target");
            break;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Statistics.

struct CorpusStats {
    std::size_t total{0};
    std::map<std::string, std::size_t> by_task;
    std::map<std::string, std::size_t> by_direction;
    std::map<std::string, std::size_t> by_bucket;
    std::map<std::string, std::size_t> by_group;

    CorpusStats() {
        for (auto t : kAllTasks) by_task[std::string(to_string(t))] = 0;
        by_direction["inverse"] = 0;
        by_direction["forward"] = 0;
    }

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

[[nodiscard]] inline CorpusStats corpus_stats(const std::vector<TaskRecord>& recs) {
    CorpusStats s;
    for (const auto& r : recs) {
        ++s.total;
        ++s.by_task[std::string(to_string(r.task))];
        ++s.by_direction[std::string(to_string(r.direction))];
        ++s.by_bucket[r.source_bucket];
        ++s.by_group[r.meta.trajectory_group];
    }
    return s;
}

[[nodiscard]] inline json stats_json(const CorpusStats& s) {
    return {{"total", s.total},
            {"by_task", s.by_task},
            {"by_direction", s.by_direction},
            {"by_bucket", s.by_bucket},
            {"by_group", s.by_group}};
}

[[nodiscard]] inline CorpusStats stats_from_json(const json& j) {
    CorpusStats s;
    s.total = j.at("total").get<std::size_t>();
    for (auto& [k, v] : j.at("by_task").get<std::map<std::string, std::size_t>>()) s.by_task[k] = v;
    for (auto& [k, v] : j.at("by_direction").get<std::map<std::string, std::size_t>>()) s.by_direction[k] = v;
    s.by_bucket = j.at("by_bucket").get<std::map<std::string, std::size_t>>();
    s.by_group = j.at("by_group").get<std::map<std::string, std::size_t>>();
    return s;
}

/// Plain-text report. Direction rows list the tasks they aggregate.
[[nodiscard]] inline std::string stats_table(const CorpusStats& s) {
    std::ostringstream os;
    auto row = [&](std::string_view k, std::size_t v) { os << "  " << std::left << std::setw(40) << k << std::right << std::setw(8) << v << "\n"; };
    os << "task\n";
    for (auto t : kAllTasks) row(to_string(t), s.by_task.at(std::string(to_string(t))));
    os << "direction\n";
    row("inverse (A1+A2+A3+D3)", s.by_direction.at("inverse"));
    row("forward (A4+D1+D2+D4)", s.by_direction.at("forward"));
    os << "source bucket\n";
    for (const auto& [k, v] : s.by_bucket) row(k, v);
    os << "trajectory group\n";
    for (const auto& [k, v] : s.by_group) row(k, v);
    row("total", s.total);
    return os.str();
}

// ---------------------------------------------------------------------------
// Balanced subset.

inline const std::vector<std::string> kSourceBuckets = {"scannet_detect", "scannet_undetect", "mulset_detect",
                                                        "mulset_undetect"};

struct BalanceQuota {
    std::map<TaskType, int> per_task;
    std::map<std::string, int> per_bucket;
    int total{0};
    double max_group_ratio{2.0};  // target max/min trajectory-group count within a cell

    /// 125 per task, 250 per bucket, 1000 overall.
    [[nodiscard]] static BalanceQuota refinement() {
        BalanceQuota q;
        for (auto t : kAllTasks) q.per_task[t] = 125;
        for (const auto& b : kSourceBuckets) q.per_bucket[b] = 250;
        q.total = 1000;
        return q;
    }

    void validate() const {
        int st = 0;
        int sb = 0;
        for (const auto& [t, n] : per_task) st += n;
        for (const auto& [b, n] : per_bucket) sb += n;
        if (per_task.empty() || per_bucket.empty() || st != total || sb != total) {
            throw std::invalid_argument("balance quota: marginals must both sum to the total");
        }
        for (const auto& [t, n] : per_task) {
            if (n < 0) throw std::invalid_argument("balance quota: negative task quota");
        }
        for (const auto& [b, n] : per_bucket) {
            if (n < 0) throw std::invalid_argument("balance quota: negative bucket quota");
        }
    }
};

using Cell = std::pair<TaskType, std::string>;

/// Splits the two marginals into per-cell quotas as evenly as possible: each
/// cell gets the floor of its proportional share and the remaining units go,
/// task by task, to the buckets with the largest outstanding remainder.
[[nodiscard]] inline std::map<Cell, int> cell_quotas(const BalanceQuota& q) {
    q.validate();
    std::map<Cell, int> cells;
    std::map<std::string, int> col_left = q.per_bucket;
    for (const auto& [t, nt] : q.per_task) {
        for (const auto& [b, nb] : q.per_bucket) {
            const int share = q.total == 0 ? 0 : static_cast<int>(static_cast<long long>(nt) * nb / q.total);
            cells[{t, b}] = share;
            col_left[b] -= share;
        }
    }
    for (const auto& [t, nt] : q.per_task) {
        int row_left = nt;
        for (const auto& [b, nb] : q.per_bucket) row_left -= cells[{t, b}];
        while (row_left > 0) {
            auto best = std::max_element(col_left.begin(), col_left.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
            if (best->second <= 0) throw std::logic_error("cell_quotas: marginals inconsistent");
            ++cells[{t, best->first}];
            --best->second;
            --row_left;
        }
    }
    return cells;
}

class ShortageError : public std::runtime_error {
public:
    ShortageError(TaskType task, std::string bucket, std::size_t available, int required)
        : std::runtime_error("shortage in cell (" + std::string(to_string(task)) + ", " + bucket + "): " +
                             std::to_string(available) + " valid records, " + std::to_string(required) + " required"),
          task_(task), bucket_(std::move(bucket)), available_(available), required_(required) {}

    [[nodiscard]] TaskType task() const noexcept { return task_; }
    [[nodiscard]] const std::string& bucket() const noexcept { return bucket_; }
    [[nodiscard]] std::size_t available() const noexcept { return available_; }
    [[nodiscard]] int required() const noexcept { return required_; }

private:
    TaskType task_;
    std::string bucket_;
    std::size_t available_;
    int required_;
};

struct BalanceResult {
    std::vector<TaskRecord> records;
    std::size_t skipped_invalid{0};
    double max_group_ratio{1.0};  // worst max/min group count over cells
};

/// Cells are visited in (task, bucket) order. Inside a cell, records are
/// grouped by trajectory group (groups in key order, members shuffled with the
/// seed) and drawn round-robin until the cell quota is met. Invalid records
/// are ignored.
[[nodiscard]] inline BalanceResult balance_subset(const std::vector<TaskRecord>& records, const BalanceQuota& quota,
                                                  std::uint64_t seed) {
    const auto cells = cell_quotas(quota);
    BalanceResult out;
    std::map<Cell, std::vector<const TaskRecord*>> pool;
    for (const auto& r : records) {
        if (validate_record(r)) {
            ++out.skipped_invalid;
            continue;
        }
        pool[{r.task, r.source_bucket}].push_back(&r);
    }
    std::mt19937_64 rng(seed);
    for (const auto& [cell, need] : cells) {
        auto& members = pool[cell];
        if (members.size() < static_cast<std::size_t>(need)) {
            throw ShortageError(cell.first, cell.second, members.size(), need);
        }
        std::sort(members.begin(), members.end(), [](const TaskRecord* a, const TaskRecord* b) { return a->id < b->id; });
        std::map<std::string, std::vector<const TaskRecord*>> groups;
        for (const auto* r : members) groups[r->meta.trajectory_group].push_back(r);
        std::vector<std::vector<const TaskRecord*>*> order;
        for (auto& [g, v] : groups) {
            std::shuffle(v.begin(), v.end(), rng);
            order.push_back(&v);
        }
        std::map<std::string, int> taken;
        std::vector<std::size_t> cursor(order.size(), 0);
        int picked = 0;
        while (picked < need) {
            for (std::size_t gi = 0; gi < order.size() && picked < need; ++gi) {
                auto& v = *order[gi];
                if (cursor[gi] >= v.size()) continue;
                const auto* r = v[cursor[gi]++];
                out.records.push_back(*r);
                ++taken[r->meta.trajectory_group];
                ++picked;
            }
        }
        if (!taken.empty()) {
            int lo = need;
            int hi = 0;
            for (const auto& [g, n] : taken) {
                lo = std::min(lo, n);
                hi = std::max(hi, n);
            }
            out.max_group_ratio = std::max(out.max_group_ratio, static_cast<double>(hi) / lo);
        }
    }
    return out;
}

}  // namespace viewforge
