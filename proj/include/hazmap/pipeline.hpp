#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazmap/kdtree.hpp"
#include "hazmap/normals.hpp"
#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"
#include "hazmap/saliency.hpp"
#include "hazmap/segmentation.hpp"

namespace hazmap {

/// Everything the per-frame detection pipeline needs, with the library-wide
/// defaults.
struct DetectionParams {
    SaliencyConfig saliency;
    SegmentationThresholds thresholds;
    double corridor_length = 30.0;
    double corridor_width = 3.5;
    double inlier_tol = 0.02;       // road plane RANSAC
    uint64_t ransac_seed = 1234;
    int ransac_iterations = 256;
    double cluster_radius = 0.3;
    std::size_t min_points = 10;
    double claim_margin = -1.0;     // adaptive
};

struct DetectionResult {
    SaliencyMap saliency;
    SegmentedCloud segmented;
    std::vector<Obstacle> obstacles;
    RpcaResult rpca;  // populated when keep_rpca is set
};

/// Saliency, road plane, corridor classification, obstacle extraction.
inline DetectionResult run_detection(const PointCloud& cloud, const VehicleState& state,
                                     const DetectionParams& params, bool keep_rpca = false) {
    DetectionResult out;
    out.saliency = compute_saliency_map(cloud, params.saliency, keep_rpca ? &out.rpca : nullptr);
    const RoadPlane plane = fit_road_plane(cloud, out.saliency.fused, params.inlier_tol,
                                           params.ransac_seed, params.ransac_iterations);
    const std::vector<Vec2> corridor =
        driving_corridor(state, params.corridor_length, params.corridor_width);
    out.segmented = classify_points(cloud, out.saliency.fused, plane, corridor,
                                    params.thresholds);
    out.obstacles = extract_obstacles(out.segmented, params.cluster_radius, params.min_points,
                                      params.claim_margin);
    return out;
}

/// "<id> <kind> <point_count> <centroid xyz> <bbox min xyz> <bbox max xyz>
/// <mean_depth>" per obstacle; the detect command's manifest format.
inline void save_obstacle_manifest(const std::vector<Obstacle>& obstacles,
                                   const std::string& path) {
    std::string body;
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        const Obstacle& ob = obstacles[i];
        body += std::to_string(i);
        body += ob.kind == ObstacleKind::Negative ? " negative " : " positive ";
        body += std::to_string(ob.vertex_indices.size());
        for (const double v :
             {ob.centroid.x(), ob.centroid.y(), ob.centroid.z(), ob.bbox.min.x(),
              ob.bbox.min.y(), ob.bbox.min.z(), ob.bbox.max.x(), ob.bbox.max.y(),
              ob.bbox.max.z(), ob.descriptor.mean_depth}) {
            body += ' ';
            detail::append_g9(body, v);
        }
        body += '\n';
    }
    detail::write_file(path, body);
}

/// Per-vertex pothole prediction derived from extracted obstacles: vertices of
/// negative obstacles are potholes.  Pairs with synth ground-truth labels.
inline std::vector<int> negative_obstacle_labels(std::size_t vertex_count,
                                                 const std::vector<Obstacle>& obstacles) {
    std::vector<int> labels(vertex_count, 0);
    for (const auto& ob : obstacles) {
        if (ob.kind != ObstacleKind::Negative) continue;
        for (const uint32_t idx : ob.vertex_indices) labels[idx] = 1;
    }
    return labels;
}

}  // namespace hazmap
