// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// viewforge: offline pipeline and scoring entry points.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 transport error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "viewforge.hpp"

namespace {

namespace vf = viewforge;
using vf::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTransport = 4;

struct StageError {
    int code;
    std::string stage;
    std::string what;
};

[[noreturn]] void fail(int code, std::string stage, std::string what) { throw StageError{code, std::move(stage), std::move(what)}; }

std::string read_text(const std::string& path, const std::string& stage) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(kExitData, stage, "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<vf::TaskRecord> load_records(const std::string& path, const std::string& stage) {
    std::istringstream is(read_text(path, stage));
    try {
        return vf::read_records(is);
    } catch (const vf::DataFileError& e) {
        fail(kExitData, stage, path + ": " + e.what());
    }
}

void write_output(const std::string& path, const std::string& content, const std::string& stage) {
    try {
        vf::write_file_atomic(path, content);
    } catch (const std::exception& e) {
        fail(kExitData, stage, e.what());
    }
}

// Flags mirror RunConfig fields; a config file, when given, overrides them.
struct ConfigFlags {
    std::string config_path;
    vf::RunConfig cfg;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "JSON run configuration (overrides flags)");
        app.add_option("--seed", cfg.seed, "master seed");
        app.add_option("--scene_count", cfg.scene_count, "number of synthetic scenes");
        app.add_option("--objects_min", cfg.objects_min, "fewest objects per scene");
        app.add_option("--objects_max", cfg.objects_max, "most objects per scene");
        app.add_option("--room_extent", cfg.room_extent, "room side in meters");
        app.add_option("--camera_height", cfg.camera_height, "camera height in meters");
        app.add_option("--hfov", cfg.hfov, "horizontal field of view in degrees");
        app.add_option("--per_task", cfg.per_task, "records generated per task");
        app.add_flag("--action_menu", cfg.action_menu, "append the allowed-action list to A3/D3 prompts");
        app.add_option("--max_attempts", cfg.max_attempts, "trajectory sampling budget");
        app.add_option("--min_frames", cfg.trajectory.min_frames, "frames synthesized per trajectory");
        app.add_option("--guidance_scale", cfg.guidance_scale, "provenance only");
        app.add_option("--camera_scale", cfg.camera_scale, "provenance only");
    }

    vf::RunConfig resolve() const {
        vf::RunConfig c = cfg;
        try {
            if (!config_path.empty()) {
                std::ifstream is(config_path);
                if (!is) throw std::invalid_argument("cannot read config " + config_path);
                json j = json::parse(is, nullptr, false);
                if (j.is_discarded()) throw std::invalid_argument("config " + config_path + " is not valid JSON");
                vf::apply_config_json(c, j);
            }
            c.validate();
        } catch (const std::invalid_argument& e) {
            fail(kExitConfig, "config", e.what());
        }
        return c;
    }
};

vf::ServeOptions g_serve_opts;
vf::TcpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"viewforge: synthetic viewpoint-change supervision, validation and reward scoring"};
    app.require_subcommand(1);

    ConfigFlags flags;
    std::string in_path, out_path, scenes_path, stats_path;

    auto* gen_scenes = app.add_subcommand("gen-scenes", "generate synthetic scenes");
    flags.attach(*gen_scenes);
    gen_scenes->add_option("--out", out_path, "scene file")->required();

    auto* gen_dataset = app.add_subcommand("gen-dataset", "scenes -> trajectories -> transitions -> validated records");
    flags.attach(*gen_dataset);
    gen_dataset->add_option("--scenes", scenes_path, "scene file (generated from the config when omitted)");
    gen_dataset->add_option("--out", out_path, "record file")->required();

    int quota_task = 125;
    int quota_bucket = 250;
    auto* balance = app.add_subcommand("balance", "quota-balanced refinement subset");
    flags.attach(*balance);
    balance->add_option("--in", in_path, "record file")->required();
    balance->add_option("--out", out_path, "subset file")->required();
    balance->add_option("--per_task_quota", quota_task, "records per task");
    balance->add_option("--per_bucket_quota", quota_bucket, "records per source bucket");

    auto* stats = app.add_subcommand("stats", "corpus statistics");
    flags.attach(*stats);
    stats->add_option("--in", in_path, "record file")->required();
    stats->add_option("--out", out_path, "stats file");

    auto* validate = app.add_subcommand("validate", "validate every record");
    flags.attach(*validate);
    validate->add_option("--in", in_path, "record file")->required();
    validate->add_option("--out", out_path, "rejection report");

    std::string task, response, reference;
    auto* score = app.add_subcommand("score", "score one response");
    score->add_option("--task", task, "task id, A1..D4")->required();
    score->add_option("--response", response, "raw model response")->required();
    score->add_option("--reference", reference, "reference answer")->required();

    std::string mode = "pipe";
    int port = 0;
    auto* serve = app.add_subcommand("serve", "streaming reward service");
    serve->add_option("--mode", mode, "pipe or tcp")->check(CLI::IsMember({"pipe", "tcp"}));
    serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--workers", g_serve_opts.workers, "scoring threads");
    serve->add_option("--max_in_flight", g_serve_opts.max_in_flight, "bounded in-flight window");
    serve->add_option("--batch", g_serve_opts.batch, "requests per worker batch");

    auto* report = app.add_subcommand("report", "render a stats file as a table");
    report->add_option("--stats", stats_path, "stats file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen_scenes) {
            const auto cfg = flags.resolve();
            const auto scenes = vf::generate_scenes(cfg);
            write_output(out_path, vf::scenes_text(vf::make_header(cfg, "gen-scenes"), scenes), "gen-scenes");
            std::cerr << "gen-scenes: " << scenes.size() << " scenes -> " << out_path << "\n";
        } else if (*gen_dataset) {
            const auto cfg = flags.resolve();
            std::vector<vf::Scene> scenes;
            if (scenes_path.empty()) {
                scenes = vf::generate_scenes(cfg);
            } else {
                std::istringstream is(read_text(scenes_path, "gen-dataset"));
                try {
                    scenes = vf::read_scenes(is);
                } catch (const std::exception& e) {
                    fail(kExitData, "gen-dataset", scenes_path + ": " + e.what());
                }
            }
            std::vector<vf::TaskRecord> recs;
            try {
                recs = vf::generate_dataset(cfg, scenes);
            } catch (const vf::GenerationExhausted& e) {
                fail(kExitData, "gen-dataset", e.what());
            }
            write_output(out_path, vf::records_text(vf::make_header(cfg, "gen-dataset"), recs), "gen-dataset");
            std::cerr << "gen-dataset: " << recs.size() << " records -> " << out_path << "\n";
        } else if (*balance) {
            const auto cfg = flags.resolve();
            vf::BalanceQuota q;
            for (auto t : vf::kAllTasks) q.per_task[t] = quota_task;
            for (const auto& b : vf::kSourceBuckets) q.per_bucket[b] = quota_bucket;
            q.total = quota_task * static_cast<int>(vf::kAllTasks.size());
            try {
                q.validate();
            } catch (const std::invalid_argument& e) {
                fail(kExitConfig, "balance", e.what());
            }
            const auto recs = load_records(in_path, "balance");
            vf::BalanceResult res;
            try {
                res = vf::balance_subset(recs, q, cfg.seed);
            } catch (const vf::ShortageError& e) {
                fail(kExitData, "balance", e.what());
            }
            write_output(out_path, vf::records_text(vf::make_header(cfg, "balance"), res.records), "balance");
            std::cerr << "balance: " << res.records.size() << " records (skipped " << res.skipped_invalid
                      << " invalid, max group ratio " << res.max_group_ratio << ") -> " << out_path << "\n";
        } else if (*stats) {
            const auto cfg = flags.resolve();
            const auto s = vf::corpus_stats(load_records(in_path, "stats"));
            if (!out_path.empty()) {
                write_output(out_path, vf::header_json(vf::make_header(cfg, "stats")).dump() + "\n" + vf::stats_json(s).dump() + "\n",
                             "stats");
            }
            std::cout << vf::stats_table(s);
        } else if (*validate) {
            const auto cfg = flags.resolve();
            std::istringstream is(read_text(in_path, "validate"));
            std::vector<vf::DataLine> lines;
            try {
                lines = vf::read_json_lines(is);
            } catch (const vf::DataFileError& e) {
                fail(kExitData, "validate", in_path + ": " + e.what());
            }
            std::map<std::string, std::size_t> counts;
            std::string rep = vf::header_json(vf::make_header(cfg, "validate")).dump() + "\n";
            std::size_t bad = 0;
            for (const auto& dl : lines) {
                std::optional<vf::Rejection> rej;
                std::string id = dl.value.is_object() && dl.value.contains("id") ? dl.value["id"].dump() : "null";
                try {
                    rej = vf::validate_record(vf::record_from_json(dl.value));
                } catch (const vf::RecordSchemaError& e) {
                    rej = vf::Rejection{vf::RejectReason::schema, e.what()};
                }
                if (rej) {
                    ++bad;
                    ++counts[std::string(vf::to_string(rej->reason))];
                    rep += json{{"line", dl.line}, {"id", json::parse(id)}, {"reason", std::string(vf::to_string(rej->reason))},
                                {"detail", rej->detail}}
                               .dump() +
                           "\n";
                }
            }
            if (!out_path.empty()) write_output(out_path, rep, "validate");
            std::cout << "validated " << lines.size() << " records, " << bad << " rejected\n";
            for (const auto& [k, v] : counts) std::cout << "  " << k << ": " << v << "\n";
            if (bad > 0) return kExitData;
        } else if (*score) {
            const auto reply = vf::handle_request(json{{"id", 0}, {"task", task}, {"response", response}, {"reference", reference}});
            std::cout << reply.dump() << "\n";
            if (reply.contains("error")) {
                return reply["error"] == "unknown_task" ? kExitConfig : kExitData;
            }
        } else if (*serve) {
            try {
                g_serve_opts.validate();
            } catch (const std::invalid_argument& e) {
                fail(kExitConfig, "serve", e.what());
            }
            std::signal(SIGPIPE, SIG_IGN);
            if (mode == "pipe") {
                const auto st = vf::serve_stream(0, 1, g_serve_opts);
                if (st.transport_error) fail(kExitTransport, "serve", "output stream closed");
            } else {
                std::unique_ptr<vf::TcpServer> server;
                try {
                    server = std::make_unique<vf::TcpServer>(g_serve_opts, static_cast<std::uint16_t>(port));
                } catch (const vf::TransportError& e) {
                    fail(kExitTransport, "serve", e.what());
                }
                g_server = server.get();
                std::signal(SIGINT, on_signal);
                std::signal(SIGTERM, on_signal);
                std::cerr << "serve: listening on 127.0.0.1:" << server->port() << std::endl;
                server->run();
                g_server = nullptr;
            }
        } else if (*report) {
            std::istringstream is(read_text(stats_path, "report"));
            try {
                auto lines = vf::read_json_lines(is);
                if (lines.size() != 1) throw std::runtime_error("expected exactly one stats line");
                std::cout << vf::stats_table(vf::stats_from_json(lines.front().value));
            } catch (const std::exception& e) {
                fail(kExitData, "report", stats_path + ": " + e.what());
            }
        }
    } catch (const StageError& e) {
        std::cerr << "viewforge: " << e.stage << ": " << e.what << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "viewforge: internal error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
