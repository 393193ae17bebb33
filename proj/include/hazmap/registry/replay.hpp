#pragma once

#include <map>
#include <string>
#include <vector>

#include "hazmap/pipeline.hpp"
#include "hazmap/registry/client.hpp"

namespace hazmap::registry {

struct ReplayFrame {
    PointCloud cloud;
    VehicleState state;
};

struct ReplayConfig {
    DetectionParams detect;
    double query_radius = 150.0;  // per-frame vicinity query
    double match_radius = 3.0;    // pairing records with own detections
    int alert_poll_ms = 20;       // per-frame alert drain budget
};

struct ReplayReport {
    int frames_processed = 0;
    int reports_sent = 0;
    std::vector<std::pair<int, Ack>> acks;  // frame, ack

    struct AlertSeen {
        int frame;
        ObstacleRecord record;
    };
    std::vector<AlertSeen> alerts;

    /// Frame at which each record id first became known through an ALERT or a
    /// QUERY response.
    std::map<std::int64_t, int> first_seen;

    /// Records known (via alert/query) strictly before this agent first
    /// detected the same obstacle itself.
    struct EarlyWarning {
        std::int64_t record_id;
        int seen_frame;
        int detect_frame;
    };
    std::vector<EarlyWarning> early_warnings;

    bool aborted = false;
    std::string abort_reason;
};

/// Drives the detection pipeline over a frame sequence while talking to the
/// registry: every extracted obstacle is reported (timestamp = frame index),
/// the vicinity is queried each frame, and incoming alerts are drained.  A
/// lost connection aborts with the partial report.
inline ReplayReport agent_replay(const std::vector<ReplayFrame>& frames, RegistryClient& client,
                                 const ReplayConfig& config, const std::string& agent_id) {
    ReplayReport rep;

    struct Detection {
        int frame;
        Vec2 position;
        ObstacleKind kind;
    };
    std::vector<Detection> detections;
    std::map<std::int64_t, ObstacleRecord> known;

    try {
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const int frame = static_cast<int>(f);
            const DetectionResult det =
                run_detection(frames[f].cloud, frames[f].state, config.detect);

            for (const Obstacle& ob : det.obstacles) {
                Report r;
                r.agent_id = agent_id;
                r.position = Vec2(ob.centroid.x(), ob.centroid.y());
                r.bbox = ob.bbox;
                r.descriptor = ob.descriptor;
                r.kind = ob.kind;
                r.timestamp = static_cast<double>(frame);
                r.observed = true;
                const Ack ack = client.report(r);
                rep.acks.emplace_back(frame, ack);
                ++rep.reports_sent;
                detections.push_back({frame, r.position, r.kind});
            }

            const Vec2 here(frames[f].state.position.x(), frames[f].state.position.y());
            for (const auto& rec : client.query(here, config.query_radius)) {
                rep.first_seen.try_emplace(rec.id, frame);
                known[rec.id] = rec;
            }
            for (const auto& rec : client.poll_alerts(config.alert_poll_ms)) {
                rep.alerts.push_back({frame, rec});
                rep.first_seen.try_emplace(rec.id, frame);
                known[rec.id] = rec;
            }
            rep.frames_processed = frame + 1;
        }
    } catch (const std::exception& e) {
        rep.aborted = true;
        rep.abort_reason = e.what();
    }

    for (const auto& [id, seen_frame] : rep.first_seen) {
        const auto it = known.find(id);
        if (it == known.end()) continue;
        int detect_frame = -1;
        for (const auto& d : detections) {
            if (d.kind != it->second.kind) continue;
            if ((d.position - it->second.position).norm() > config.match_radius) continue;
            detect_frame = d.frame;
            break;  // detections are in frame order
        }
        if (detect_frame >= 0 && seen_frame < detect_frame)
            rep.early_warnings.push_back({id, seen_frame, detect_frame});
    }
    return rep;
}

/// Frames manifest: one frame per line, "<cloud-path> <px> <py> <pz> <hx>
/// <hy> <steering>".  Cloud paths are resolved relative to the manifest.
inline std::vector<ReplayFrame> load_replay_frames(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open " + manifest_path);
    std::string base;
    if (const auto slash = manifest_path.rfind('/'); slash != std::string::npos)
        base = manifest_path.substr(0, slash + 1);

    std::vector<ReplayFrame> frames;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = hazmap::detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 7)
            hazmap::detail::parse_fail(manifest_path, line_no,
                                       "expected: cloud-path px py pz hx hy steering");
        double num[6];
        for (int i = 0; i < 6; ++i)
            if (!hazmap::detail::parse_double(toks[i + 1], num[i]))
                hazmap::detail::parse_fail(manifest_path, line_no, "bad number");
        ReplayFrame frame;
        std::string cloud_path(toks[0]);
        if (!cloud_path.empty() && cloud_path.front() != '/') cloud_path = base + cloud_path;
        frame.cloud = load_xyz(cloud_path);
        frame.cloud.frame_id = static_cast<int>(frames.size());
        frame.state.position = Vec3(num[0], num[1], num[2]);
        frame.state.heading = Vec2(num[3], num[4]).normalized();
        frame.state.steering_angle = num[5];
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw std::runtime_error(manifest_path + ": no frames");
    return frames;
}

}  // namespace hazmap::registry
