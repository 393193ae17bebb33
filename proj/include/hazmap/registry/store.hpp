#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"
#include "hazmap/segmentation.hpp"

namespace hazmap::registry {

struct ObstacleRecord {
    std::int64_t id = 0;
    Vec2 position = Vec2::Zero();  // world ground-plane coordinates
    Aabb bbox;
    Descriptor descriptor;
    ObstacleKind kind = ObstacleKind::Negative;
    double timestamp = 0.0;  // seconds since epoch
    int revision = 1;
};

struct Report {
    std::string agent_id;
    Vec2 position = Vec2::Zero();
    Aabb bbox;
    Descriptor descriptor;
    ObstacleKind kind = ObstacleKind::Negative;
    double timestamp = 0.0;
    bool observed = true;  // false: agent revisited the location, found nothing
};

struct RegistryConfig {
    double match_radius = 3.0;    // meters
    double alert_radius = 150.0;  // meters
};

enum class UpdateAction { Keep, Replace, Delete };

enum class ApplyAction { Created, Kept, Replaced, Deleted, Ignored };

inline const char* apply_action_name(ApplyAction a) {
    switch (a) {
        case ApplyAction::Created: return "created";
        case ApplyAction::Kept: return "kept";
        case ApplyAction::Replaced: return "replaced";
        case ApplyAction::Deleted: return "deleted";
        case ApplyAction::Ignored: return "ignored";
    }
    return "?";
}

// --- wire grammar -----------------------------------------------------------
//
// Newline-delimited, single-space separated, first token is the message kind.
// Doubles travel as %.17g so a parse/format round trip is exact.

namespace wire {

inline void append_g17(std::string& out, double v) {
    char buf[48];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

inline const char* kind_token(ObstacleKind k) {
    return k == ObstacleKind::Negative ? "negative" : "positive";
}

[[noreturn]] inline void bad(const std::string& what) {
    throw std::invalid_argument("wire: " + what);
}

inline ObstacleKind parse_kind(std::string_view tok) {
    if (tok == "negative") return ObstacleKind::Negative;
    if (tok == "positive") return ObstacleKind::Positive;
    bad("unknown kind token");
}

inline double parse_num(std::string_view tok, const char* what) {
    double v;
    if (!detail::parse_double(tok, v)) bad(std::string("bad number in ") + what);
    return v;
}

inline std::int64_t parse_int(std::string_view tok, const char* what) {
    const double v = parse_num(tok, what);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) bad(std::string("expected integer in ") + what);
    return i;
}

// descriptor <=> 13 tokens: dims xyz, point_count, mean_depth, 8 histogram bins
inline void append_descriptor(std::string& out, const Descriptor& d) {
    for (int i = 0; i < 3; ++i) {
        append_g17(out, d.bbox_dims[i]);
        out += ' ';
    }
    out += std::to_string(d.point_count);
    out += ' ';
    append_g17(out, d.mean_depth);
    for (const auto bin : d.saliency_histogram) {
        out += ' ';
        out += std::to_string(bin);
    }
}

inline Descriptor parse_descriptor(const std::vector<std::string_view>& toks, std::size_t at) {
    if (toks.size() < at + 13) bad("truncated descriptor");
    Descriptor d;
    for (int i = 0; i < 3; ++i) d.bbox_dims[i] = parse_num(toks[at + i], "descriptor dims");
    d.point_count = parse_int(toks[at + 3], "descriptor point_count");
    d.mean_depth = parse_num(toks[at + 4], "descriptor mean_depth");
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        d.saliency_histogram[i] = parse_int(toks[at + 5 + i], "descriptor histogram");
        if (d.saliency_histogram[i] < 0) bad("negative histogram bin");
        sum += d.saliency_histogram[i];
    }
    if (d.point_count <= 0) bad("descriptor point_count must be positive");
    if (sum != d.point_count) bad("descriptor histogram does not sum to point_count");
    return d;
}

inline void append_bbox(std::string& out, const Aabb& b) {
    for (const double v : {b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()}) {
        append_g17(out, v);
        out += ' ';
    }
    out.pop_back();
}

inline Aabb parse_bbox(const std::vector<std::string_view>& toks, std::size_t at) {
    if (toks.size() < at + 6) bad("truncated bbox");
    Aabb b;
    for (int i = 0; i < 3; ++i) b.min[i] = parse_num(toks[at + i], "bbox");
    for (int i = 0; i < 3; ++i) b.max[i] = parse_num(toks[at + 3 + i], "bbox");
    if (!(b.min.x() <= b.max.x() && b.min.y() <= b.max.y() && b.min.z() <= b.max.z()))
        bad("inverted bbox");
    if (b.footprint_area() <= 0) bad("degenerate bbox footprint");
    return b;
}

// "REPORT <agent> <x> <y> <kind> <bbox:6> <observed:0|1> <timestamp> <descriptor:13>"
inline std::string format_report(const Report& r) {
    std::string out = "REPORT ";
    out += r.agent_id;
    out += ' ';
    append_g17(out, r.position.x());
    out += ' ';
    append_g17(out, r.position.y());
    out += ' ';
    out += kind_token(r.kind);
    out += ' ';
    append_bbox(out, r.bbox);
    out += r.observed ? " 1 " : " 0 ";
    append_g17(out, r.timestamp);
    out += ' ';
    append_descriptor(out, r.descriptor);
    return out;
}

/// Parses the tokens after the REPORT keyword.
inline Report parse_report_fields(const std::vector<std::string_view>& toks, std::size_t at) {
    if (toks.size() != at + 25) bad("REPORT needs 25 fields");
    Report r;
    r.agent_id = std::string(toks[at]);
    if (r.agent_id.empty()) bad("empty agent id");
    r.position.x() = parse_num(toks[at + 1], "position");
    r.position.y() = parse_num(toks[at + 2], "position");
    r.kind = parse_kind(toks[at + 3]);
    r.bbox = parse_bbox(toks, at + 4);
    if (toks[at + 10] == "1")
        r.observed = true;
    else if (toks[at + 10] == "0")
        r.observed = false;
    else
        bad("observed flag must be 0 or 1");
    r.timestamp = parse_num(toks[at + 11], "timestamp");
    r.descriptor = parse_descriptor(toks, at + 12);
    return r;
}

// "RECORD <id> <x> <y> <kind> <bbox:6> <revision> <timestamp> <descriptor:13>"
inline std::string format_record(const ObstacleRecord& rec) {
    std::string out = "RECORD ";
    out += std::to_string(rec.id);
    out += ' ';
    append_g17(out, rec.position.x());
    out += ' ';
    append_g17(out, rec.position.y());
    out += ' ';
    out += kind_token(rec.kind);
    out += ' ';
    append_bbox(out, rec.bbox);
    out += ' ';
    out += std::to_string(rec.revision);
    out += ' ';
    append_g17(out, rec.timestamp);
    out += ' ';
    append_descriptor(out, rec.descriptor);
    return out;
}

inline ObstacleRecord parse_record_fields(const std::vector<std::string_view>& toks,
                                          std::size_t at) {
    if (toks.size() != at + 25) bad("RECORD needs 25 fields");
    ObstacleRecord rec;
    rec.id = parse_int(toks[at], "record id");
    rec.position.x() = parse_num(toks[at + 1], "position");
    rec.position.y() = parse_num(toks[at + 2], "position");
    rec.kind = parse_kind(toks[at + 3]);
    rec.bbox = parse_bbox(toks, at + 4);
    rec.revision = static_cast<int>(parse_int(toks[at + 10], "revision"));
    rec.timestamp = parse_num(toks[at + 11], "timestamp");
    rec.descriptor = parse_descriptor(toks, at + 12);
    return rec;
}

// "ALERT <id> <x> <y> <kind> <bbox:6> <revision>"
inline std::string format_alert(const ObstacleRecord& rec) {
    std::string out = "ALERT ";
    out += std::to_string(rec.id);
    out += ' ';
    append_g17(out, rec.position.x());
    out += ' ';
    append_g17(out, rec.position.y());
    out += ' ';
    out += kind_token(rec.kind);
    out += ' ';
    append_bbox(out, rec.bbox);
    out += ' ';
    out += std::to_string(rec.revision);
    return out;
}

inline ObstacleRecord parse_alert_fields(const std::vector<std::string_view>& toks,
                                         std::size_t at) {
    if (toks.size() != at + 11) bad("ALERT needs 11 fields");
    ObstacleRecord rec;
    rec.id = parse_int(toks[at], "alert id");
    rec.position.x() = parse_num(toks[at + 1], "position");
    rec.position.y() = parse_num(toks[at + 2], "position");
    rec.kind = parse_kind(toks[at + 3]);
    rec.bbox = parse_bbox(toks, at + 4);
    rec.revision = static_cast<int>(parse_int(toks[at + 10], "revision"));
    return rec;
}

}  // namespace wire

// --- state ------------------------------------------------------------------

struct ApplyResult {
    ApplyAction action = ApplyAction::Ignored;
    std::int64_t id = 0;  // 0 when ignored
    int revision = 0;
    std::optional<ObstacleRecord> alert;  // set for created/replaced
};

/// Obstacle database: id-indexed records, a uniform-grid spatial index over
/// positions, and an append-only event log that reproduces the state when
/// replayed.
class RegistryStore {
public:
    RegistryStore() = default;

    /// Opens (and creates if missing) an on-disk event log.  Existing content
    /// is replayed first, with the same config the service will run under.
    explicit RegistryStore(const std::string& log_path, const RegistryConfig& config = {}) {
        replay_config_ = config;
        std::ifstream in(log_path);
        if (in) {
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty()) replay_event_line(line);
            }
        }
        log_file_.open(log_path, std::ios::app);
        if (!log_file_) throw std::runtime_error("cannot open event log " + log_path);
    }

    std::size_t size() const { return records_.size(); }
    const std::map<std::int64_t, ObstacleRecord>& records() const { return records_; }
    const std::vector<std::string>& event_log() const { return log_; }

    const ObstacleRecord* find(std::int64_t id) const {
        const auto it = records_.find(id);
        return it == records_.end() ? nullptr : &it->second;
    }

    /// Nearest record of the same kind within match_radius; ties broken by
    /// smaller id.
    const ObstacleRecord* match_record(const Report& report, double match_radius) const {
        if (match_radius <= 0) throw std::invalid_argument("match_record: radius must be > 0");
        const ObstacleRecord* best = nullptr;
        double best_dist = match_radius;
        for_cells_in_disk(report.position, match_radius, [&](std::int64_t id) {
            const ObstacleRecord& rec = records_.at(id);
            if (rec.kind != report.kind) return;
            const double d = (rec.position - report.position).norm();
            if (d > match_radius) return;
            if (!best || d < best_dist || (d == best_dist && id < best->id)) {
                best = &rec;
                best_dist = d;
            }
        });
        return best;
    }

    static UpdateAction decide_update(const ObstacleRecord& old, const Report& report) {
        if (!report.observed) return UpdateAction::Delete;
        const double old_area = old.bbox.footprint_area();
        const double new_area = report.bbox.footprint_area();
        const double ratio = new_area / old_area;
        if (ratio > 1.15 || ratio < 1.0 / 1.15) return UpdateAction::Replace;
        const Vec3 od = old.bbox.dims();
        const Vec3 nd = report.bbox.dims();
        for (int i = 0; i < 3; ++i) {
            if (od[i] > 0) {
                if (std::abs(nd[i] - od[i]) / od[i] > 0.15) return UpdateAction::Replace;
            } else if (nd[i] > 0) {
                return UpdateAction::Replace;
            }
        }
        return UpdateAction::Keep;
    }

    ApplyResult apply_report(const Report& report, const RegistryConfig& config) {
        ApplyResult res;
        const ObstacleRecord* match = match_record(report, config.match_radius);
        if (!match) {
            if (!report.observed) {
                res.action = ApplyAction::Ignored;  // nothing to delete
                return res;
            }
            ObstacleRecord rec;
            rec.id = next_id_++;
            rec.position = report.position;
            rec.bbox = report.bbox;
            rec.descriptor = report.descriptor;
            rec.kind = report.kind;
            rec.timestamp = report.timestamp;
            rec.revision = 1;
            records_[rec.id] = rec;
            index_insert(rec.id, rec.position);
            res = {ApplyAction::Created, rec.id, rec.revision, rec};
            log_event(res, report);
            return res;
        }
        switch (decide_update(*match, report)) {
            case UpdateAction::Keep:
                res = {ApplyAction::Kept, match->id, match->revision, std::nullopt};
                return res;
            case UpdateAction::Delete: {
                res = {ApplyAction::Deleted, match->id, match->revision, std::nullopt};
                index_erase(match->id, match->position);
                records_.erase(match->id);
                log_event(res, report);
                return res;
            }
            case UpdateAction::Replace: {
                ObstacleRecord& rec = records_.at(match->id);
                index_erase(rec.id, rec.position);
                rec.position = report.position;
                rec.bbox = report.bbox;
                rec.descriptor = report.descriptor;
                rec.timestamp = report.timestamp;
                ++rec.revision;
                index_insert(rec.id, rec.position);
                res = {ApplyAction::Replaced, rec.id, rec.revision, rec};
                log_event(res, report);
                return res;
            }
        }
        throw std::logic_error("apply_report: unreachable");
    }

    /// All records within radius (inclusive), sorted by distance then id.
    std::vector<ObstacleRecord> query_vicinity(const Vec2& position, double radius) const {
        if (radius <= 0) throw std::invalid_argument("query_vicinity: radius must be > 0");
        std::vector<std::pair<double, std::int64_t>> hits;
        for_cells_in_disk(position, radius, [&](std::int64_t id) {
            const double d = (records_.at(id).position - position).norm();
            if (d <= radius) hits.emplace_back(d, id);
        });
        std::sort(hits.begin(), hits.end());
        std::vector<ObstacleRecord> out;
        out.reserve(hits.size());
        for (const auto& [d, id] : hits) out.push_back(records_.at(id));
        return out;
    }

    /// Rebuilds a store from event-log lines, verifying that each replayed
    /// report produces the action/id/revision the log recorded.
    static RegistryStore replay_log(const std::vector<std::string>& lines,
                                    const RegistryConfig& config = {}) {
        RegistryStore store;
        store.replay_config_ = config;
        for (const auto& line : lines) store.replay_event_line(line);
        return store;
    }

    void flush_log() {
        if (log_file_.is_open()) log_file_.flush();
    }

    /// True when the spatial index and the record map agree exactly.
    bool index_consistent() const {
        std::size_t indexed = 0;
        for (const auto& [cell, ids] : grid_) {
            for (const auto id : ids) {
                const auto it = records_.find(id);
                if (it == records_.end()) return false;
                if (cell_of(it->second.position) != cell) return false;
                ++indexed;
            }
        }
        return indexed == records_.size();
    }

private:
    static constexpr double kCell = 16.0;  // meters per grid cell

    using Cell = std::pair<std::int64_t, std::int64_t>;

    static Cell cell_of(const Vec2& p) {
        return {static_cast<std::int64_t>(std::floor(p.x() / kCell)),
                static_cast<std::int64_t>(std::floor(p.y() / kCell))};
    }

    void index_insert(std::int64_t id, const Vec2& pos) { grid_[cell_of(pos)].push_back(id); }

    void index_erase(std::int64_t id, const Vec2& pos) {
        const auto it = grid_.find(cell_of(pos));
        if (it == grid_.end()) throw std::logic_error("registry index out of sync");
        auto& ids = it->second;
        const auto pos_it = std::find(ids.begin(), ids.end(), id);
        if (pos_it == ids.end()) throw std::logic_error("registry index out of sync");
        ids.erase(pos_it);
        if (ids.empty()) grid_.erase(it);
    }

    template <typename Fn>
    void for_cells_in_disk(const Vec2& center, double radius, Fn&& fn) const {
        const Cell lo = cell_of(center - Vec2(radius, radius));
        const Cell hi = cell_of(center + Vec2(radius, radius));
        for (std::int64_t cx = lo.first; cx <= hi.first; ++cx)
            for (std::int64_t cy = lo.second; cy <= hi.second; ++cy) {
                const auto it = grid_.find({cx, cy});
                if (it == grid_.end()) continue;
                for (const auto id : it->second) fn(id);
            }
    }

    // "EVENT <action> <id> <revision> <report fields:25>"
    void log_event(const ApplyResult& res, const Report& report) {
        std::string line = "EVENT ";
        line += apply_action_name(res.action);
        line += ' ';
        line += std::to_string(res.id);
        line += ' ';
        line += std::to_string(res.revision);
        line += ' ';
        const std::string rep = wire::format_report(report);
        line += rep.substr(7);  // strip the "REPORT " keyword
        log_.push_back(line);
        if (log_file_.is_open()) log_file_ << line << '\n';
    }

    void replay_event_line(const std::string& line) {
        const auto toks = detail::split_ws(line);
        if (toks.size() != 29 || toks[0] != "EVENT")
            throw std::runtime_error("event log: malformed line: " + line);
        const std::string action(toks[1]);
        const auto id = wire::parse_int(toks[2], "event id");
        const auto revision = static_cast<int>(wire::parse_int(toks[3], "event revision"));
        const Report report = wire::parse_report_fields(toks, 4);
        const ApplyResult res = apply_report(report, replay_config_);
        if (apply_action_name(res.action) != action || res.id != id ||
            res.revision != revision)
            throw std::runtime_error("event log: replay diverged at: " + line);
    }

    std::map<std::int64_t, ObstacleRecord> records_;
    std::map<Cell, std::vector<std::int64_t>> grid_;
    std::vector<std::string> log_;
    std::ofstream log_file_;
    std::int64_t next_id_ = 1;
    RegistryConfig replay_config_;
};

}  // namespace hazmap::registry
