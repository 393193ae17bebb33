#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"
#include "hazmap/rng.hpp"

namespace hazmap {

struct PotholeParams {
    double depth = 0.1;        // meters, > 0
    double semi_axis_a = 0.5;  // meters, > 0
    double semi_axis_b = 0.5;  // meters, > 0
    double power = 1.5;        // profile sharpness, >= 1
    Vec2 center = Vec2::Zero();
    double yaw = 0.0;          // radians
};

struct RoadPatchParams {
    double length = 10.0;      // x extent, meters
    double width = 10.0;       // y extent, meters
    double spacing = 0.05;     // grid step, meters
    double noise_sigma = 0.0;  // vertical Gaussian noise, meters
    uint64_t seed = 1;
};

/// Depth displacement threshold below which a vertex keeps its road label.
inline double pothole_label_threshold(double noise_sigma) {
    return std::max(0.01, 2.0 * noise_sigma);
}

/// Jittered grid centered at the origin: (nx+1) x (ny+1) points, xy jitter
/// uniform in ±0.3*spacing, z ~ N(0, sigma^2).  Labels all zero.
inline LabeledCloud generate_road_patch(const RoadPatchParams& params) {
    if (params.spacing <= 0) throw std::invalid_argument("generate_road_patch: spacing <= 0");
    if (params.noise_sigma < 0)
        throw std::invalid_argument("generate_road_patch: negative noise_sigma");
    if (params.length <= 0 || params.width <= 0)
        throw std::invalid_argument("generate_road_patch: degenerate extent");
    const auto nx = static_cast<std::int64_t>(std::floor(params.length / params.spacing + 1e-9));
    const auto ny = static_cast<std::int64_t>(std::floor(params.width / params.spacing + 1e-9));
    const std::int64_t count = (nx + 1) * (ny + 1);
    if (count < 100)
        throw std::invalid_argument("generate_road_patch: extent/spacing yields < 100 points");

    rng::Engine eng(params.seed);
    rng::Gaussian gauss(eng);
    const double j = 0.3 * params.spacing;
    const double x0 = -params.length / 2.0;
    const double y0 = -params.width / 2.0;

    LabeledCloud out;
    out.cloud.vertices.reserve(static_cast<std::size_t>(count));
    out.labels.assign(static_cast<std::size_t>(count), 0);
    for (std::int64_t iy = 0; iy <= ny; ++iy)
        for (std::int64_t ix = 0; ix <= nx; ++ix) {
            const double x = x0 + static_cast<double>(ix) * params.spacing + rng::uniform(eng, -j, j);
            const double y = y0 + static_cast<double>(iy) * params.spacing + rng::uniform(eng, -j, j);
            const double z = params.noise_sigma > 0 ? params.noise_sigma * gauss() : 0.0;
            out.cloud.vertices.emplace_back(x, y, z);
        }
    return out;
}

namespace detail {

/// Half extents of the axis-aligned box around a yawed ellipse.
inline Vec2 ellipse_half_extents(const PotholeParams& ph) {
    const double c = std::cos(ph.yaw);
    const double s = std::sin(ph.yaw);
    return {std::sqrt(ph.semi_axis_a * ph.semi_axis_a * c * c +
                      ph.semi_axis_b * ph.semi_axis_b * s * s),
            std::sqrt(ph.semi_axis_a * ph.semi_axis_a * s * s +
                      ph.semi_axis_b * ph.semi_axis_b * c * c)};
}

inline double pothole_displacement(const PotholeParams& ph, double x, double y) {
    const double c = std::cos(ph.yaw);
    const double s = std::sin(ph.yaw);
    const double dx = x - ph.center.x();
    const double dy = y - ph.center.y();
    const double xl = (c * dx + s * dy) / ph.semi_axis_a;
    const double yl = (-s * dx + c * dy) / ph.semi_axis_b;
    const double r2 = xl * xl + yl * yl;
    if (r2 >= 1.0) return 0.0;
    return ph.depth * std::pow(1.0 - r2, ph.power);
}

}  // namespace detail

/// Sinks vertices inside the elliptic footprint by depth*(1-r^2)^power and
/// labels those whose displacement exceeds the label threshold.
inline LabeledCloud carve_pothole(LabeledCloud patch, const PotholeParams& ph,
                                  double noise_sigma = 0.0,
                                  const RoadPatchParams* extent_check = nullptr) {
    if (ph.depth <= 0 || ph.semi_axis_a <= 0 || ph.semi_axis_b <= 0)
        throw std::invalid_argument("carve_pothole: depth and semi-axes must be > 0");
    if (ph.power < 1.0) throw std::invalid_argument("carve_pothole: power must be >= 1");
    if (extent_check) {
        const Vec2 he = detail::ellipse_half_extents(ph);
        if (std::abs(ph.center.x()) + he.x() > extent_check->length / 2.0 ||
            std::abs(ph.center.y()) + he.y() > extent_check->width / 2.0)
            throw std::invalid_argument("carve_pothole: footprint outside patch");
    }
    const double threshold = pothole_label_threshold(noise_sigma);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        Vec3& v = patch.cloud.vertices[i];
        const double disp = detail::pothole_displacement(ph, v.x(), v.y());
        if (disp <= 0) continue;
        v.z() -= disp;
        if (disp > threshold) patch.labels[i] = 1;
    }
    return patch;
}

struct SceneParams {
    RoadPatchParams patch;
    std::size_t n_potholes = 1;
    double depth_min = 0.05, depth_max = 0.3;
    double axis_min = 0.3, axis_max = 1.0;   // both semi-axes
    double power_min = 1.5, power_max = 1.5;
    double separation = 0.2;                 // min gap between footprint boxes
    int max_attempts = 20;
};

struct GroundTruthObstacle {
    PotholeParams params;
    std::vector<uint32_t> vertex_indices;  // ascending, displacement > threshold
    Aabb bbox;                             // over those vertices, after carving
};

struct Scene {
    LabeledCloud labeled;
    std::vector<GroundTruthObstacle> truth;
};

/// Road patch plus n non-overlapping potholes, all randomness seeded.  Each
/// pothole gets at most max_attempts placement draws; running out raises an
/// error naming the pothole index.
inline Scene generate_scene(const SceneParams& params, uint64_t seed) {
    rng::Engine eng(seed);
    RoadPatchParams patch_params = params.patch;
    patch_params.seed = eng();

    Scene scene;
    scene.labeled = generate_road_patch(patch_params);

    struct Placed {
        PotholeParams ph;
        Vec2 lo, hi;  // footprint box
    };
    std::vector<Placed> placed;
    const double half_l = params.patch.length / 2.0;
    const double half_w = params.patch.width / 2.0;
    for (std::size_t i = 0; i < params.n_potholes; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < params.max_attempts && !ok; ++attempt) {
            PotholeParams ph;
            ph.depth = rng::uniform(eng, params.depth_min, params.depth_max);
            ph.semi_axis_a = rng::uniform(eng, params.axis_min, params.axis_max);
            ph.semi_axis_b = rng::uniform(eng, params.axis_min, params.axis_max);
            ph.power = rng::uniform(eng, params.power_min, params.power_max);
            ph.yaw = rng::uniform(eng, 0.0, 3.14159265358979323846);
            const Vec2 he = detail::ellipse_half_extents(ph);
            if (he.x() >= half_l || he.y() >= half_w) continue;
            ph.center.x() = rng::uniform(eng, -half_l + he.x(), half_l - he.x());
            ph.center.y() = rng::uniform(eng, -half_w + he.y(), half_w - he.y());
            const Vec2 lo = ph.center - he;
            const Vec2 hi = ph.center + he;
            bool clash = false;
            for (const auto& other : placed) {
                const double gx =
                    std::max({lo.x() - other.hi.x(), other.lo.x() - hi.x(), 0.0});
                const double gy =
                    std::max({lo.y() - other.hi.y(), other.lo.y() - hi.y(), 0.0});
                if (std::hypot(gx, gy) < params.separation) {
                    clash = true;
                    break;
                }
            }
            if (clash) continue;
            placed.push_back({ph, lo, hi});
            ok = true;
        }
        if (!ok)
            throw std::runtime_error("generate_scene: could not place pothole " +
                                     std::to_string(i));
    }

    const double threshold = pothole_label_threshold(params.patch.noise_sigma);
    for (const auto& pl : placed) {
        GroundTruthObstacle truth;
        truth.params = pl.ph;
        for (std::size_t v = 0; v < scene.labeled.size(); ++v) {
            Vec3& vert = scene.labeled.cloud.vertices[v];
            const double disp = detail::pothole_displacement(pl.ph, vert.x(), vert.y());
            if (disp <= 0) continue;
            vert.z() -= disp;
            if (disp > threshold) {
                scene.labeled.labels[v] = 1;
                truth.vertex_indices.push_back(static_cast<uint32_t>(v));
                truth.bbox.expand(vert);
            }
        }
        scene.truth.push_back(std::move(truth));
    }
    return scene;
}

/// One line per pothole: "id d a b p cx cy yaw xmin ymin zmin xmax ymax zmax".
inline void save_scene_manifest(const Scene& scene, const std::string& path) {
    std::string body;
    for (std::size_t i = 0; i < scene.truth.size(); ++i) {
        const auto& t = scene.truth[i];
        body += std::to_string(i);
        for (double v : {t.params.depth, t.params.semi_axis_a, t.params.semi_axis_b,
                         t.params.power, t.params.center.x(), t.params.center.y(),
                         t.params.yaw, t.bbox.min.x(), t.bbox.min.y(), t.bbox.min.z(),
                         t.bbox.max.x(), t.bbox.max.y(), t.bbox.max.z()}) {
            body += ' ';
            detail::append_g9(body, v);
        }
        body += '\n';
    }
    detail::write_file(path, body);
}

}  // namespace hazmap
