#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hazmap/kdtree.hpp"
#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"
#include "hazmap/rng.hpp"
#include "hazmap/saliency.hpp"

namespace hazmap {

enum class RegionClass : int {
    SafeRoad = 0,
    BeAwareNegative = 1,
    HazardPositive = 2,
    OffRoad = 3,
    RecognizedObstacle = 4,
};

inline const char* region_class_name(RegionClass c) {
    switch (c) {
        case RegionClass::SafeRoad: return "SafeRoad";
        case RegionClass::BeAwareNegative: return "BeAwareNegative";
        case RegionClass::HazardPositive: return "HazardPositive";
        case RegionClass::OffRoad: return "OffRoad";
        case RegionClass::RecognizedObstacle: return "RecognizedObstacle";
    }
    return "?";
}

struct VehicleState {
    Vec3 position = Vec3::Zero();
    Vec2 heading = Vec2::UnitX();   // unit vector in the ground plane
    double steering_angle = 0.0;    // radians, |angle| <= pi/2
};

/// Plane n.p + offset = 0 with unit n, n.z >= 0; signed distance is positive
/// above the road.
struct RoadPlane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;

    double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

struct RoadModel {
    RoadPlane plane;
    std::vector<Vec2> corridor;  // convex, counter-clockwise
};

enum class ObstacleKind { Negative, Positive };

struct Descriptor {
    Vec3 bbox_dims = Vec3::Zero();
    std::int64_t point_count = 0;
    double mean_depth = 0.0;               // mean signed distance below the plane
    std::array<std::int64_t, 8> saliency_histogram{};  // fused saliency in [0,1]
};

struct Obstacle {
    std::vector<uint32_t> vertex_indices;  // ascending
    Aabb bbox;
    Vec3 centroid = Vec3::Zero();
    ObstacleKind kind = ObstacleKind::Negative;
    Descriptor descriptor;
};

// --- 2-D convex geometry helpers ---------------------------------------

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone-chain convex hull, counter-clockwise, collinear points dropped.
/// Degenerate inputs give back 1 or 2 points.
inline std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
    if (pts.empty()) throw std::invalid_argument("convex_hull_2d: empty input");
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        if (a.x() != b.x()) return a.x() < b.x();
        return a.y() < b.y();
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;

    std::vector<Vec2> hull(2 * n);
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (h >= 2 && cross2(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
        hull[h++] = pts[i];
    }
    const std::size_t lower = h + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (h >= lower && cross2(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
        hull[h++] = pts[i];
    }
    hull.resize(h - 1);
    if (hull.size() < 3) return {pts.front(), pts.back()};
    return hull;
}

/// Containment for convex counter-clockwise polygons; boundary counts as
/// inside.  Also accepts degenerate 1- and 2-point "polygons".
inline bool point_in_convex_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
    if (poly.empty()) return false;
    if (poly.size() == 1) return poly[0] == p;
    if (poly.size() == 2) {
        if (cross2(poly[0], poly[1], p) != 0) return false;
        const double t = (p - poly[0]).dot(poly[1] - poly[0]);
        return t >= 0 && t <= (poly[1] - poly[0]).squaredNorm();
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        if (cross2(a, b, p) < 0) return false;
    }
    return true;
}

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

/// Distance from p to a convex polygon (0 when inside).
inline double dist_point_convex_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
    if (poly.empty()) throw std::invalid_argument("dist_point_convex_polygon: empty polygon");
    if (poly.size() == 1) return (p - poly[0]).norm();
    if (poly.size() >= 3 && point_in_convex_polygon(poly, p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i)
        best = std::min(best, dist_point_segment(p, poly[i], poly[(i + 1) % poly.size()]));
    return best;
}

// --- road plane ---------------------------------------------------------

/// Robust plane fit over the low-saliency half of the cloud: random 3-point
/// hypotheses scored by inlier count, then a least-squares refit over the
/// winning consensus set.  Candidates are the floor(m/2) vertices of lowest
/// fused saliency (ties by index), so a uniformly flat frame still fits.
inline RoadPlane fit_road_plane(const PointCloud& cloud, const std::vector<double>& fused,
                                double inlier_tol, uint64_t seed = 1234,
                                int iterations = 256) {
    if (fused.size() != cloud.size())
        throw std::invalid_argument("fit_road_plane: saliency/cloud size mismatch");
    if (inlier_tol <= 0) throw std::invalid_argument("fit_road_plane: inlier_tol must be > 0");

    std::vector<uint32_t> cand(cloud.size());
    std::iota(cand.begin(), cand.end(), uint32_t{0});
    std::sort(cand.begin(), cand.end(), [&](uint32_t a, uint32_t b) {
        if (fused[a] != fused[b]) return fused[a] < fused[b];
        return a < b;
    });
    cand.resize(std::max<std::size_t>(cloud.size() / 2, 1));
    if (cand.size() < 50)
        throw std::runtime_error("fit_road_plane: fewer than 50 low-saliency candidates");

    rng::Engine eng(seed);
    std::size_t best_count = 0;
    Vec3 best_n = Vec3::UnitZ();
    double best_off = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const uint32_t ia = cand[rng::uniform_index(eng, cand.size())];
        const uint32_t ib = cand[rng::uniform_index(eng, cand.size())];
        const uint32_t ic = cand[rng::uniform_index(eng, cand.size())];
        if (ia == ib || ib == ic || ia == ic) continue;
        const Vec3& a = cloud.vertices[ia];
        const Vec3 n_raw = (cloud.vertices[ib] - a).cross(cloud.vertices[ic] - a);
        const double len2 = n_raw.squaredNorm();
        if (len2 < 1e-24) continue;
        const Vec3 n = n_raw / std::sqrt(len2);
        const double off = -n.dot(a);
        std::size_t count = 0;
        for (uint32_t idx : cand)
            if (std::abs(n.dot(cloud.vertices[idx]) + off) <= inlier_tol) ++count;
        if (count > best_count) {
            best_count = count;
            best_n = n;
            best_off = off;
        }
    }
    if (best_count < (cand.size() * 3) / 10)
        throw std::runtime_error("fit_road_plane: no road plane (inlier ratio below 30%)");

    Vec3 mean = Vec3::Zero();
    std::size_t inliers = 0;
    for (uint32_t idx : cand)
        if (std::abs(best_n.dot(cloud.vertices[idx]) + best_off) <= inlier_tol) {
            mean += cloud.vertices[idx];
            ++inliers;
        }
    mean /= static_cast<double>(inliers);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (uint32_t idx : cand) {
        if (std::abs(best_n.dot(cloud.vertices[idx]) + best_off) > inlier_tol) continue;
        const Vec3 d = cloud.vertices[idx] - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Vec3 n = eig.eigenvectors().col(0);
    if (n.z() < 0) n = -n;
    return RoadPlane{n, -n.dot(mean)};
}

/// Quadrilateral ahead of the vehicle, axis = heading rotated by the steering
/// angle, counter-clockwise corners.
inline std::vector<Vec2> driving_corridor(const VehicleState& state, double length,
                                          double width) {
    if (length <= 0 || width <= 0)
        throw std::invalid_argument("driving_corridor: length and width must be > 0");
    const double c = std::cos(state.steering_angle);
    const double s = std::sin(state.steering_angle);
    const Vec2 dir(c * state.heading.x() - s * state.heading.y(),
                   s * state.heading.x() + c * state.heading.y());
    const Vec2 left(-dir.y(), dir.x());
    const Vec2 base(state.position.x(), state.position.y());
    const Vec2 half = left * (width / 2.0);
    return {base - half, base - half + dir * length, base + half + dir * length, base + half};
}

// --- classification -----------------------------------------------------

struct SegmentationThresholds {
    double t_s = 0.5;     // fused saliency bound for SafeRoad
    double h_neg = 0.05;  // meters below plane
    double h_pos = 0.05;  // meters above plane
    double h_flat = 0.03; // |distance| bound for SafeRoad
};

struct SegmentedCloud {
    PointCloud cloud;
    std::vector<RegionClass> classes;
    std::vector<double> fused;
    RoadPlane plane;
    std::vector<Vec2> corridor;
    SegmentationThresholds thresholds;

    std::size_t size() const { return classes.size(); }
};

/// Region class per vertex.  Rules, first match wins: outside the corridor is
/// OffRoad; below -h_neg is BeAwareNegative; above +h_pos is HazardPositive;
/// near the plane and unsalient is SafeRoad; what remains (salient or in the
/// band between h_flat and h_neg/h_pos) goes to the hazard class matching its
/// side of the plane.
inline SegmentedCloud classify_points(const PointCloud& cloud, const std::vector<double>& fused,
                                      const RoadPlane& plane, const std::vector<Vec2>& corridor,
                                      const SegmentationThresholds& thr = {}) {
    if (fused.size() != cloud.size())
        throw std::invalid_argument("classify_points: saliency/cloud size mismatch");
    if (corridor.size() < 3) throw std::invalid_argument("classify_points: degenerate corridor");

    SegmentedCloud seg;
    seg.cloud = cloud;
    seg.fused = fused;
    seg.plane = plane;
    seg.corridor = corridor;
    seg.thresholds = thr;
    seg.classes.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& v = cloud.vertices[i];
        if (!point_in_convex_polygon(corridor, Vec2(v.x(), v.y()))) {
            seg.classes[i] = RegionClass::OffRoad;
            continue;
        }
        const double d = plane.signed_distance(v);
        if (d < -thr.h_neg) {
            seg.classes[i] = RegionClass::BeAwareNegative;
        } else if (d > thr.h_pos) {
            seg.classes[i] = RegionClass::HazardPositive;
        } else if (std::abs(d) < thr.h_flat && fused[i] < thr.t_s) {
            seg.classes[i] = RegionClass::SafeRoad;
        } else {
            seg.classes[i] =
                d < 0 ? RegionClass::BeAwareNegative : RegionClass::HazardPositive;
        }
    }
    return seg;
}

// --- obstacle extraction --------------------------------------------------

inline Descriptor obstacle_descriptor(const std::vector<uint32_t>& vertex_indices,
                                      const PointCloud& cloud, const std::vector<double>& fused,
                                      const RoadPlane& plane) {
    if (vertex_indices.empty())
        throw std::invalid_argument("obstacle_descriptor: empty obstacle");
    Descriptor d;
    d.point_count = static_cast<std::int64_t>(vertex_indices.size());

    Aabb box;
    std::vector<double> depths;
    depths.reserve(vertex_indices.size());
    for (uint32_t idx : vertex_indices) {
        const Vec3& v = cloud.vertices[idx];
        box.expand(v);
        depths.push_back(-plane.signed_distance(v));
        const double s = std::clamp(fused[idx], 0.0, 1.0);
        const auto bin = std::min<std::size_t>(7, static_cast<std::size_t>(s * 8.0));
        ++d.saliency_histogram[bin];
    }
    d.bbox_dims = box.dims();
    // Summed in value order so any permutation of the same vertex set lands on
    // the same floating-point result.
    std::sort(depths.begin(), depths.end());
    double sum = 0;
    for (double x : depths) sum += x;
    d.mean_depth = sum / static_cast<double>(depths.size());
    return d;
}

namespace detail {

inline std::vector<std::vector<uint32_t>> link_clusters(const std::vector<Vec3>& pts,
                                                        double radius) {
    std::vector<std::vector<uint32_t>> clusters;
    if (pts.empty()) return clusters;
    const KdTree tree(pts);
    std::vector<char> seen(pts.size(), 0);
    for (uint32_t seed = 0; seed < pts.size(); ++seed) {
        if (seen[seed]) continue;
        std::vector<uint32_t> cluster;
        std::deque<uint32_t> queue{seed};
        seen[seed] = 1;
        while (!queue.empty()) {
            const uint32_t cur = queue.front();
            queue.pop_front();
            cluster.push_back(cur);
            for (const auto& nb : tree.radius_search(pts[cur], radius)) {
                if (seen[nb.index]) continue;
                seen[nb.index] = 1;
                queue.push_back(nb.index);
            }
        }
        std::sort(cluster.begin(), cluster.end());
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

}  // namespace detail

/// Groups hazardous vertices into obstacles: single-linkage clusters of
/// BeAwareNegative and of HazardPositive vertices (radius `cluster_radius`,
/// kept when >= `min_points`).  Each kept cluster then claims unassigned
/// corridor vertices within `claim_margin` of its 2-D convex hull and on the
/// matching side of the plane, completing obstacle footprints whose shallow
/// rims classified as road.  All member vertices are relabeled
/// RecognizedObstacle.  claim_margin < 0 selects 1.75x the cloud's mean
/// nearest-neighbor spacing; claim_margin == 0 disables claiming.
inline std::vector<Obstacle> extract_obstacles(SegmentedCloud& seg, double cluster_radius,
                                               std::size_t min_points,
                                               double claim_margin = -1.0) {
    if (cluster_radius <= 0)
        throw std::invalid_argument("extract_obstacles: cluster_radius must be > 0");
    if (min_points == 0) throw std::invalid_argument("extract_obstacles: min_points must be >= 1");

    struct Seedset {
        ObstacleKind kind;
        std::vector<uint32_t> global;  // cloud indices of this kind, ascending
    };
    Seedset sets[2] = {{ObstacleKind::Negative, {}}, {ObstacleKind::Positive, {}}};
    for (uint32_t i = 0; i < seg.size(); ++i) {
        if (seg.classes[i] == RegionClass::BeAwareNegative) sets[0].global.push_back(i);
        if (seg.classes[i] == RegionClass::HazardPositive) sets[1].global.push_back(i);
    }

    std::vector<Obstacle> obstacles;
    for (const auto& set : sets) {
        if (set.global.empty()) continue;
        std::vector<Vec3> pts;
        pts.reserve(set.global.size());
        for (uint32_t g : set.global) pts.push_back(seg.cloud.vertices[g]);
        for (auto& local : detail::link_clusters(pts, cluster_radius)) {
            if (local.size() < min_points) continue;
            Obstacle ob;
            ob.kind = set.kind;
            ob.vertex_indices.reserve(local.size());
            for (uint32_t l : local) ob.vertex_indices.push_back(set.global[l]);
            obstacles.push_back(std::move(ob));
        }
    }

    if (claim_margin < 0 && !obstacles.empty() && seg.cloud.size() >= 2)
        claim_margin = 1.75 * mean_nn_distance(seg.cloud.vertices);

    std::vector<char> taken(seg.size(), 0);
    for (const auto& ob : obstacles)
        for (uint32_t idx : ob.vertex_indices) taken[idx] = 1;

    const double h_flat = seg.thresholds.h_flat;
    for (auto& ob : obstacles) {
        if (claim_margin > 0) {
            std::vector<Vec2> flat;
            flat.reserve(ob.vertex_indices.size());
            for (uint32_t idx : ob.vertex_indices) {
                const Vec3& v = seg.cloud.vertices[idx];
                flat.emplace_back(v.x(), v.y());
            }
            const std::vector<Vec2> hull = convex_hull_2d(std::move(flat));
            std::vector<uint32_t> claimed;
            for (uint32_t i = 0; i < seg.size(); ++i) {
                if (taken[i] || seg.classes[i] == RegionClass::OffRoad) continue;
                const Vec3& v = seg.cloud.vertices[i];
                const double d = seg.plane.signed_distance(v);
                const bool side_ok =
                    ob.kind == ObstacleKind::Negative ? d < h_flat : d > -h_flat;
                if (!side_ok) continue;
                if (dist_point_convex_polygon(hull, Vec2(v.x(), v.y())) <= claim_margin)
                    claimed.push_back(i);
            }
            for (uint32_t i : claimed) {
                taken[i] = 1;
                ob.vertex_indices.push_back(i);
            }
            std::sort(ob.vertex_indices.begin(), ob.vertex_indices.end());
        }

        Vec3 centroid = Vec3::Zero();
        for (uint32_t idx : ob.vertex_indices) {
            const Vec3& v = seg.cloud.vertices[idx];
            ob.bbox.expand(v);
            centroid += v;
            seg.classes[idx] = RegionClass::RecognizedObstacle;
        }
        ob.centroid = centroid / static_cast<double>(ob.vertex_indices.size());
        ob.descriptor = obstacle_descriptor(ob.vertex_indices, seg.cloud, seg.fused, seg.plane);
    }
    return obstacles;
}

/// "x y z class_id" export.
inline void save_segmented(const SegmentedCloud& seg, const std::string& path) {
    std::string body;
    body.reserve(seg.size() * 34);
    for (std::size_t i = 0; i < seg.size(); ++i) {
        const Vec3& v = seg.cloud.vertices[i];
        detail::append_g9(body, v.x());
        body += ' ';
        detail::append_g9(body, v.y());
        body += ' ';
        detail::append_g9(body, v.z());
        body += ' ';
        body += std::to_string(static_cast<int>(seg.classes[i]));
        body += '\n';
    }
    detail::write_file(path, body);
}

/// Reads the "x y z class_id" export back; fused values, plane and corridor
/// are not stored in the file and come back empty.
inline SegmentedCloud load_segmented(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    SegmentedCloud seg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 4) detail::parse_fail(path, line_no, "expected 4 fields");
        Vec3 v;
        for (int c = 0; c < 3; ++c)
            if (!detail::parse_double(toks[c], v[c]))
                detail::parse_fail(path, line_no, "bad number '" + std::string(toks[c]) + "'");
        double cls = 0.0;
        if (!detail::parse_double(toks[3], cls) || cls != std::floor(cls) || cls < 0 || cls > 4)
            detail::parse_fail(path, line_no, "class id must be an integer in [0, 4]");
        seg.cloud.vertices.push_back(v);
        seg.classes.push_back(static_cast<RegionClass>(static_cast<int>(cls)));
    }
    if (seg.cloud.empty()) throw std::runtime_error(path + ": empty segmented cloud");
    return seg;
}

}  // namespace hazmap
