#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hazmap/kdtree.hpp"
#include "hazmap/point_cloud.hpp"

namespace hazmap {

inline constexpr double kDegenerateNormalSq = 1e-24;

/// Fan faces whose two edges are within ~6 degrees of collinear carry no
/// orientation signal (their normal is dominated by curvature noise) and are
/// dropped from the average.  Stored as sin^2 of the cutoff angle.
inline constexpr double kThinTriangleSinSq = 0.01;

/// Unit normal of the triangle (v1, v2, v3).  Throws if the vertices are
/// collinear or coincident.
inline Vec3 face_normal(const Vec3& v1, const Vec3& v2, const Vec3& v3) {
    const Vec3 cross = (v2 - v1).cross(v3 - v1);
    const double n2 = cross.squaredNorm();
    if (n2 < kDegenerateNormalSq) throw std::invalid_argument("face_normal: degenerate triangle");
    return cross / std::sqrt(n2);
}

struct NormalField {
    std::vector<Vec3> normals;

    std::size_t size() const { return normals.size(); }
};

namespace detail {

/// Smallest-eigenvector normal of the local covariance, unit length.
/// Returns false when the neighborhood carries no spread at all.
inline bool covariance_normal(const Vec3& vertex, const std::vector<Vec3>& points,
                              const std::vector<uint32_t>& neighbors, Vec3& out) {
    Vec3 mean = vertex;
    for (uint32_t j : neighbors) mean += points[j];
    mean /= static_cast<double>(neighbors.size() + 1);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    {
        const Vec3 d = vertex - mean;
        cov += d * d.transpose();
    }
    for (uint32_t j : neighbors) {
        const Vec3 d = points[j] - mean;
        cov += d * d.transpose();
    }
    if (cov.squaredNorm() < kDegenerateNormalSq) return false;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    out = eig.eigenvectors().col(0);  // ascending eigenvalues
    return true;
}

}  // namespace detail

/// Per-vertex unit normals.  Each vertex is treated as the hub of a triangle
/// fan over its neighbors, ordered by angle in the local tangent plane; fan
/// face normals are aligned with the covariance normal and averaged.
/// Every result is oriented towards the sensor origin.
inline NormalField estimate_point_normals(const PointCloud& cloud, const NeighborGraph& graph) {
    if (graph.neighbors.size() != cloud.size())
        throw std::invalid_argument("estimate_point_normals: graph/cloud size mismatch");

    NormalField field;
    field.normals.resize(cloud.size());

    std::vector<uint32_t> ring;
    std::vector<double> angle;
    std::vector<std::size_t> order;

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& v = cloud.vertices[i];
        const auto& nbrs = graph.neighbors[i];
        if (nbrs.empty())
            throw std::runtime_error("estimate_point_normals: vertex without neighbors");

        Vec3 ref;
        if (!detail::covariance_normal(v, cloud.vertices, nbrs, ref))
            throw std::runtime_error("estimate_point_normals: degenerate neighborhood");

        // Tangent basis perpendicular to the covariance normal.
        Vec3 seed = std::abs(ref.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        const Vec3 u = ref.cross(seed).normalized();
        const Vec3 w = ref.cross(u);

        ring.assign(nbrs.begin(), nbrs.end());
        angle.resize(ring.size());
        for (std::size_t a = 0; a < ring.size(); ++a) {
            const Vec3 d = cloud.vertices[ring[a]] - v;
            angle[a] = std::atan2(d.dot(w), d.dot(u));
        }
        order.resize(ring.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (angle[a] != angle[b]) return angle[a] < angle[b];
            return ring[a] < ring[b];
        });

        Vec3 sum = Vec3::Zero();
        int faces = 0;
        const std::size_t k = ring.size();
        for (std::size_t a = 0; a < k; ++a) {
            const Vec3 e1 = cloud.vertices[ring[order[a]]] - v;
            const Vec3 e2 = cloud.vertices[ring[order[(a + 1) % k]]] - v;
            const Vec3 cross = e1.cross(e2);
            const double n2 = cross.squaredNorm();
            const double thin2 = kThinTriangleSinSq * e1.squaredNorm() * e2.squaredNorm();
            if (n2 <= std::max(thin2, kDegenerateNormalSq)) continue;
            Vec3 fn = cross / std::sqrt(n2);
            if (fn.dot(ref) < 0) fn = -fn;
            sum += fn;
            ++faces;
        }

        Vec3 n = ref;
        if (faces > 0) {
            const double n2 = sum.squaredNorm();
            if (n2 >= kDegenerateNormalSq) n = sum / std::sqrt(n2);
        }

        if (n.dot(cloud.sensor_origin - v) < 0) n = -n;
        field.normals[i] = n;
    }
    return field;
}

}  // namespace hazmap
