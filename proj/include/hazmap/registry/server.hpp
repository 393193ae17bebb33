#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hazmap/registry/net.hpp"
#include "hazmap/registry/store.hpp"

namespace hazmap::registry {

/// Obstacle registry service.  One thread per session; all store mutations,
/// session-position updates, and alert pushes run under a single mutex, so
/// the event log is a total order of the mutations.
class RegistryServer {
public:
    RegistryServer(const Endpoint& endpoint, RegistryConfig config,
                   const std::string& log_path = "")
        : config_(config),
          store_(log_path.empty() ? RegistryStore() : RegistryStore(log_path, config)) {
        listen_fd_ = listen_on(endpoint.host, endpoint.port, port_);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~RegistryServer() { stop(); }

    RegistryServer(const RegistryServer&) = delete;
    RegistryServer& operator=(const RegistryServer&) = delete;

    uint16_t port() const { return port_; }

    /// Stops accepting, disconnects sessions, joins threads, flushes the log.
    void stop() {
        if (stopping_.exchange(true)) return;
        if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
        if (accept_thread_.joinable()) accept_thread_.join();
        if (listen_fd_ >= 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        std::vector<std::shared_ptr<Session>> sessions;
        {
            const std::lock_guard<std::mutex> lock(mu_);
            sessions = sessions_;
        }
        for (const auto& s : sessions) {
            s->sock.shutdown_read();
            if (s->thread.joinable()) s->thread.join();
        }
        const std::lock_guard<std::mutex> lock(mu_);
        store_.flush_log();
    }

    /// Snapshot accessors for tests and diagnostics.
    std::size_t record_count() {
        const std::lock_guard<std::mutex> lock(mu_);
        return store_.size();
    }
    std::vector<std::string> event_log() {
        const std::lock_guard<std::mutex> lock(mu_);
        return store_.event_log();
    }
    std::map<std::int64_t, ObstacleRecord> records() {
        const std::lock_guard<std::mutex> lock(mu_);
        return store_.records();
    }

private:
    struct Session {
        explicit Session(LineSocket s) : sock(std::move(s)) {}
        LineSocket sock;
        std::mutex write_mu;
        std::thread thread;
        bool has_position = false;
        Vec2 position = Vec2::Zero();
        std::atomic<bool> finished{false};
    };

    void accept_loop() {
        for (;;) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                return;  // listener closed
            }
            if (stopping_) {
                ::close(fd);
                return;
            }
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            auto session = std::make_shared<Session>(LineSocket(fd));
            const std::lock_guard<std::mutex> lock(mu_);
            sessions_.push_back(session);
            session->thread = std::thread([this, session] { session_loop(*session); });
        }
    }

    static void send_line(Session& session, const std::string& line) {
        const std::lock_guard<std::mutex> lock(session.write_mu);
        session.sock.write_line(line);
    }

    static void send_block(Session& session, const std::string& block) {
        const std::lock_guard<std::mutex> lock(session.write_mu);
        session.sock.write_raw(block);
    }

    void session_loop(Session& session) {
        const auto hello = session.sock.read_line(-1);
        if (!hello || *hello != kProtocolHello) {
            send_line(session, "ERR expected HELLO 1");
            end_session(session);
            return;
        }
        send_line(session, kProtocolHello);

        while (!stopping_) {
            const auto line = session.sock.read_line(-1);
            if (!line) break;
            if (line->empty()) continue;
            const auto toks = detail::split_ws(*line);
            if (toks.empty()) continue;
            try {
                if (toks[0] == "REPORT") {
                    handle_report(session, toks);
                } else if (toks[0] == "QUERY") {
                    handle_query(session, toks);
                } else {
                    send_line(session, "ERR unknown message kind");
                    break;  // protocol violation ends the session
                }
            } catch (const std::invalid_argument& e) {
                // Malformed payload: answer ERR, keep the session, state unchanged.
                send_line(session, std::string("ERR ") + e.what());
            }
        }
        end_session(session);
    }

    /// Marks the session dead and shuts the connection down so the peer sees
    /// EOF.  The fd stays open for stop() to close after joining.
    static void end_session(Session& session) {
        session.finished = true;
        const std::lock_guard<std::mutex> lock(session.write_mu);
        session.sock.shutdown_read();
    }

    void handle_report(Session& session, const std::vector<std::string_view>& toks) {
        const Report report = wire::parse_report_fields(toks, 1);

        std::string ack;
        std::vector<std::pair<std::shared_ptr<Session>, std::string>> pushes;
        {
            const std::lock_guard<std::mutex> lock(mu_);
            const ApplyResult res = store_.apply_report(report, config_);
            session.has_position = true;
            session.position = report.position;
            ack = "ACK " + std::to_string(res.id) + " " + apply_action_name(res.action);
            if (res.alert) {
                const std::string alert_line = wire::format_alert(*res.alert);
                for (const auto& other : sessions_) {
                    if (other.get() == &session || other->finished || !other->has_position)
                        continue;
                    if ((other->position - res.alert->position).norm() <= config_.alert_radius)
                        pushes.emplace_back(other, alert_line);
                }
                // Deliver while still holding the mutex: the soundness check
                // (recipient position within alert_radius) must hold at
                // delivery time, and positions only change under this lock.
                for (auto& [target, alert] : pushes) send_line(*target, alert);
            }
        }
        send_line(session, ack);
    }

    void handle_query(Session& session, const std::vector<std::string_view>& toks) {
        if (toks.size() != 4) throw std::invalid_argument("QUERY needs x y radius");
        Vec2 pos;
        pos.x() = wire::parse_num(toks[1], "query position");
        pos.y() = wire::parse_num(toks[2], "query position");
        const double radius = wire::parse_num(toks[3], "query radius");
        if (radius <= 0) throw std::invalid_argument("query radius must be > 0");

        std::string block;
        {
            const std::lock_guard<std::mutex> lock(mu_);
            session.has_position = true;
            session.position = pos;
            const auto records = store_.query_vicinity(pos, radius);
            block = "RECORDS " + std::to_string(records.size()) + "\n";
            for (const auto& rec : records) block += wire::format_record(rec) + "\n";
        }
        send_block(session, block);
    }

    RegistryConfig config_;
    RegistryStore store_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::thread accept_thread_;
    std::mutex mu_;  // store, sessions list, session positions
    std::vector<std::shared_ptr<Session>> sessions_;
    std::atomic<bool> stopping_{false};
};

}  // namespace hazmap::registry
