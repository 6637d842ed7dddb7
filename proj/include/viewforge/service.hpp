// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stateless streaming scorer. One JSON request per line in, one JSON reply per
// line out, over a pipe pair or a TCP connection. Replies may be reordered and
// are keyed by the echoed request id.

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <list>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewforge/reward.hpp"

namespace viewforge {

using json = nlohmann::json;

/// Error reasons carried in-band by error replies.
inline constexpr std::string_view kMalformedRequest = "malformed_request";

[[nodiscard]] inline json breakdown_json(const json& id, const RewardBreakdown& b) {
    json sub = json::object();
    if (b.fmt) sub["fmt"] = *b.fmt;
    if (b.sem) sub["sem"] = *b.sem;
    if (b.num) sub["num"] = *b.num;
    if (b.ord) sub["ord"] = *b.ord;
    if (b.geo) sub["geo"] = *b.geo;
    if (b.valid) sub["valid"] = *b.valid;
    return {{"id", id}, {"reward", b.reward}, {"subscores", std::move(sub)}, {"overlength", b.overlength}};
}

[[nodiscard]] inline json error_json(const json& id, std::string_view reason) {
    return {{"id", id}, {"error", std::string(reason)}};
}

/// Scores one decoded request. Never throws on bad input.
[[nodiscard]] inline json handle_request(const json& req) {
    const json id = req.is_object() && req.contains("id") ? req["id"] : json(nullptr);
    if (!req.is_object()) return error_json(id, kMalformedRequest);
    const auto str = [&](const char* key) -> const std::string* {
        auto it = req.find(key);
        return it != req.end() && it->is_string() ? it->get_ptr<const std::string*>() : nullptr;
    };
    const auto* task = str("task");
    const auto* response = str("response");
    const auto* reference = str("reference");
    if (!req.contains("id") || task == nullptr || response == nullptr) return error_json(id, kMalformedRequest);

    std::string ref_text;
    if (reference != nullptr) {
        ref_text = *reference;
    } else if (auto m = req.find("meta"); m != req.end() && m->is_object() && m->contains("box")) {
        // D1 callers may pass the ground-truth box as metadata instead.
        const auto& b = (*m)["box"];
        if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); })) {
            return error_json(id, "bad_reference");
        }
        ref_text = "[" + b[0].dump() + ", " + b[1].dump() + ", " + b[2].dump() + ", " + b[3].dump() + "]";
    } else {
        return error_json(id, kMalformedRequest);
    }
    try {
        return breakdown_json(id, score(std::string_view(*task), *response, ref_text));
    } catch (const ScoreError& e) {
        return error_json(id, to_string(e.code()));
    }
}

/// Decodes and scores one line; undecodable lines get a malformed_request
/// reply with a null id.
[[nodiscard]] inline std::string handle_line(std::string_view line) {
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) return error_json(nullptr, kMalformedRequest).dump();
    return handle_request(req).dump(-1, ' ', false, json::error_handler_t::replace);
}

struct ServeOptions {
    unsigned workers{4};
    std::size_t max_in_flight{4096};  // requests read but not yet answered
    std::size_t batch{64};            // requests handed to a worker at once

    void validate() const {
        if (workers == 0 || batch == 0 || max_in_flight < batch) {
            throw std::invalid_argument("serve options: need workers > 0 and max_in_flight >= batch > 0");
        }
    }
};

struct ServeStats {
    std::size_t requests{0};
    std::size_t replies{0};
    bool transport_error{false};
};

namespace detail {

inline bool write_all(int fd, std::string_view data) noexcept {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == ENOTSOCK) {
            const ssize_t m = ::write(fd, data.data(), data.size());
            if (m < 0 && errno == EINTR) continue;
            if (m <= 0) return false;
            data.remove_prefix(static_cast<std::size_t>(m));
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

}  // namespace detail

/// Reads requests from `in_fd` until end of input, scores them on a worker
/// pool and writes replies to `out_fd`. Reading pauses while `max_in_flight`
/// requests are pending. A failed write stops intake; replies already
/// computed are dropped with the connection.
inline ServeStats serve_stream(int in_fd, int out_fd, const ServeOptions& opt = {}) {
    opt.validate();
    std::mutex mu;
    std::condition_variable can_push, can_pop;
    std::deque<std::vector<std::string>> queue;
    std::size_t in_flight = 0;
    bool closed = false;
    std::atomic<bool> failed{false};
    std::mutex out_mu;
    std::atomic<std::size_t> replies{0};

    auto worker = [&] {
        std::string out;
        while (true) {
            std::vector<std::string> batch;
            {
                std::unique_lock lk(mu);
                can_pop.wait(lk, [&] { return closed || !queue.empty(); });
                if (queue.empty()) return;
                batch = std::move(queue.front());
                queue.pop_front();
            }
            out.clear();
            for (const auto& line : batch) {
                out += handle_line(line);
                out += '\n';
            }
            if (!failed.load()) {
                std::lock_guard lk(out_mu);
                if (detail::write_all(out_fd, out)) {
                    replies += batch.size();
                } else {
                    failed = true;
                }
            }
            {
                std::lock_guard lk(mu);
                in_flight -= batch.size();
            }
            can_push.notify_one();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < opt.workers; ++i) pool.emplace_back(worker);

    ServeStats stats;
    std::vector<std::string> pending;
    auto flush = [&] {
        if (pending.empty()) return;
        std::unique_lock lk(mu);
        can_push.wait(lk, [&] { return in_flight + pending.size() <= opt.max_in_flight || failed.load(); });
        in_flight += pending.size();
        queue.push_back(std::move(pending));
        pending.clear();
        lk.unlock();
        can_pop.notify_one();
    };

    std::string buf;
    char chunk[1 << 16];
    std::size_t scan_from = 0;
    while (!failed.load()) {
        const ssize_t n = ::read(in_fd, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) {
            stats.transport_error = true;
            break;
        }
        if (n == 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (std::size_t nl; (nl = buf.find('\n', scan_from)) != std::string::npos; start = scan_from = nl + 1) {
            std::string_view line(buf.data() + start, nl - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (detail::trim(line).empty()) continue;
            pending.emplace_back(line);
            ++stats.requests;
            if (pending.size() >= opt.batch) flush();
        }
        buf.erase(0, start);
        scan_from = buf.size();
        flush();
    }
    if (!failed.load() && !detail::trim(buf).empty()) {
        pending.emplace_back(buf);
        ++stats.requests;
    }
    flush();
    {
        std::lock_guard lk(mu);
        closed = true;
    }
    can_pop.notify_all();
    for (auto& t : pool) t.join();
    stats.replies = replies.load();
    stats.transport_error = stats.transport_error || failed.load();
    return stats;
}

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Listens on 127.0.0.1:`port` (0 picks a free port) and serves each accepted
/// connection with its own serve_stream.
class TcpServer {
public:
    explicit TcpServer(ServeOptions opt = {}, std::uint16_t port = 0) : opt_(opt) {
        opt_.validate();
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
        const int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 64) < 0) {
            const std::string why = std::strerror(errno);
            ::close(fd_);
            throw TransportError("bind/listen on port " + std::to_string(port) + ": " + why);
        }
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    ~TcpServer() {
        stop();
        for (auto& t : conns_) t.join();
        if (fd_ >= 0) ::close(fd_);
    }

    [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

    /// Accepts until stop(); returns the number of connections served.
    std::size_t run() {
        std::size_t served = 0;
        while (!stopping_.load()) {
            const int c = ::accept(fd_, nullptr, nullptr);
            if (c < 0) {
                if (errno == EINTR) continue;
                break;
            }
            const int one = 1;
            ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            ++served;
            conns_.emplace_back([this, c] {
                (void)serve_stream(c, c, opt_);
                ::shutdown(c, SHUT_RDWR);
                ::close(c);
            });
        }
        return served;
    }

    void stop() noexcept {
        if (!stopping_.exchange(true) && fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

private:
    ServeOptions opt_;
    int fd_{-1};
    std::uint16_t port_{0};
    std::atomic<bool> stopping_{false};
    std::list<std::thread> conns_;
};

}  // namespace viewforge
