#pragma once

#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmap/registry/net.hpp"
#include "hazmap/registry/store.hpp"

namespace hazmap::registry {

struct Ack {
    std::int64_t id = 0;
    std::string action;
};

/// Single-session synchronous client.  ALERT lines arriving while a response
/// is awaited are queued and surfaced through poll_alerts.
class RegistryClient {
public:
    RegistryClient(const std::string& host, uint16_t port, int response_timeout_ms = 15000)
        : sock_(connect_to(host, port)), timeout_ms_(response_timeout_ms) {
        if (!sock_.write_line(kProtocolHello)) throw std::runtime_error("registry: send failed");
        const auto reply = expect_line();
        if (reply != kProtocolHello)
            throw std::runtime_error("registry: handshake rejected: " + reply);
    }

    explicit RegistryClient(const Endpoint& ep, int response_timeout_ms = 15000)
        : RegistryClient(ep.host, ep.port, response_timeout_ms) {}

    bool connected() const { return sock_.valid() && !sock_.eof(); }
    void close() { sock_.close_socket(); }

    /// Sends a report and waits for its ACK.  ERR responses and lost
    /// connections throw.
    Ack report(const Report& r) {
        if (!sock_.write_line(wire::format_report(r)))
            throw std::runtime_error("registry: connection lost");
        const std::string line = expect_line();
        const auto toks = detail::split_ws(line);
        if (toks.size() == 3 && toks[0] == "ACK")
            return {wire::parse_int(toks[1], "ack id"), std::string(toks[2])};
        throw std::runtime_error("registry: " + line);
    }

    /// All records within radius of position, nearest first.
    std::vector<ObstacleRecord> query(const Vec2& position, double radius) {
        std::string line = "QUERY ";
        wire::append_g17(line, position.x());
        line += ' ';
        wire::append_g17(line, position.y());
        line += ' ';
        wire::append_g17(line, radius);
        if (!sock_.write_line(line)) throw std::runtime_error("registry: connection lost");

        const std::string head = expect_line();
        const auto toks = detail::split_ws(head);
        if (toks.size() != 2 || toks[0] != "RECORDS")
            throw std::runtime_error("registry: " + head);
        const auto n = wire::parse_int(toks[1], "record count");
        std::vector<ObstacleRecord> out;
        out.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            const std::string rec_line = expect_line();
            const auto rec_toks = detail::split_ws(rec_line);
            if (rec_toks.empty() || rec_toks[0] != "RECORD")
                throw std::runtime_error("registry: " + rec_line);
            out.push_back(wire::parse_record_fields(rec_toks, 1));
        }
        return out;
    }

    /// Queued alerts plus anything readable within the timeout.
    std::vector<ObstacleRecord> poll_alerts(int timeout_ms = 0) {
        for (;;) {
            const auto line = sock_.read_line(timeout_ms);
            if (!line) break;
            stash_async(*line);
            timeout_ms = 0;  // drain whatever is already buffered
        }
        std::vector<ObstacleRecord> out(pending_.begin(), pending_.end());
        pending_.clear();
        return out;
    }

private:
    /// Next response line, buffering any interleaved ALERTs.
    std::string expect_line() {
        for (;;) {
            const auto line = sock_.read_line(timeout_ms_);
            if (!line) {
                throw std::runtime_error(sock_.eof() ? "registry: connection lost"
                                                     : "registry: response timeout");
            }
            if (line->rfind("ALERT ", 0) == 0) {
                stash_async(*line);
                continue;
            }
            return *line;
        }
    }

    void stash_async(const std::string& line) {
        const auto toks = detail::split_ws(line);
        if (toks.empty()) return;
        if (toks[0] != "ALERT") throw std::runtime_error("registry: unexpected " + line);
        pending_.push_back(wire::parse_alert_fields(toks, 1));
    }

    LineSocket sock_;
    int timeout_ms_;
    std::deque<ObstacleRecord> pending_;
};

}  // namespace hazmap::registry
