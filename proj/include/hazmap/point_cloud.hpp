#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hazmap/rng.hpp"

namespace hazmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Axis-aligned bounding box in meters.
struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    bool valid() const { return (min.array() <= max.array()).all(); }
    Vec3 dims() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }
    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    /// Ground-plane (x,y) area.
    double footprint_area() const {
        return (max.x() - min.x()) * (max.y() - min.y());
    }
    /// Smallest gap between two boxes in the ground plane, 0 if they overlap.
    double footprint_separation(const Aabb& other) const {
        const double dx = std::max({0.0, other.min.x() - max.x(), min.x() - other.max.x()});
        const double dy = std::max({0.0, other.min.y() - max.y(), min.y() - other.max.y()});
        return std::hypot(dx, dy);
    }
};

/// One LiDAR frame: m vertices in the sensor/world frame plus the sensor
/// position used to orient normals.
struct PointCloud {
    std::vector<Vec3> vertices;
    int frame_id = 0;
    Vec3 sensor_origin = Vec3::Zero();

    std::size_t size() const { return vertices.size(); }
    bool empty() const { return vertices.empty(); }

    Aabb bounds() const {
        Aabb box;
        for (const auto& v : vertices) box.expand(v);
        return box;
    }
};

/// Point cloud with per-vertex binary ground truth (1 = pothole, 0 = road).
struct LabeledCloud {
    PointCloud cloud;
    std::vector<int> labels;

    std::size_t size() const { return cloud.size(); }
};

/// Uniform random subset of round(ratio * m) vertices, seeded. Vertex order
/// of the survivors is preserved.
inline PointCloud downsample(const PointCloud& cloud, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("downsample: ratio must be in (0, 1]");
    const std::uint64_t m = cloud.size();
    std::uint64_t count = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(m)));
    if (count < 1) count = 1;
    if (count > m) count = m;

    rng::Engine eng(seed);
    const auto keep = rng::sample_indices(eng, m, count);

    PointCloud out;
    out.frame_id = cloud.frame_id;
    out.sensor_origin = cloud.sensor_origin;
    out.vertices.reserve(count);
    for (const auto i : keep) out.vertices.push_back(cloud.vertices[i]);
    return out;
}

inline LabeledCloud downsample(const LabeledCloud& labeled, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("downsample: ratio must be in (0, 1]");
    if (labeled.labels.size() != labeled.cloud.size())
        throw std::invalid_argument("downsample: label array length mismatch");
    const std::uint64_t m = labeled.size();
    std::uint64_t count = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(m)));
    if (count < 1) count = 1;
    if (count > m) count = m;

    rng::Engine eng(seed);
    const auto keep = rng::sample_indices(eng, m, count);

    LabeledCloud out;
    out.cloud.frame_id = labeled.cloud.frame_id;
    out.cloud.sensor_origin = labeled.cloud.sensor_origin;
    out.cloud.vertices.reserve(count);
    out.labels.reserve(count);
    for (const auto i : keep) {
        out.cloud.vertices.push_back(labeled.cloud.vertices[i]);
        out.labels.push_back(labeled.labels[i]);
    }
    return out;
}

}  // namespace hazmap
