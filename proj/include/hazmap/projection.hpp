#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmap/point_cloud.hpp"

namespace hazmap {

struct CameraModel {
    double fx = 500.0;
    double fy = 500.0;
    double x0 = 320.0;
    double y0 = 240.0;
    int width = 640;
    int height = 480;
    Vec3 lidar_to_camera = Vec3::Zero();

    void validate() const {
        if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal lengths must be > 0");
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("camera: image dimensions must be > 0");
        if (x0 < 0 || x0 >= width || y0 < 0 || y0 >= height)
            throw std::invalid_argument("camera: principal point outside image");
    }
};

inline Vec3 transform_to_camera(const Vec3& p, const CameraModel& camera) {
    return p - camera.lidar_to_camera;
}

inline PointCloud transform_to_camera(const PointCloud& cloud, const CameraModel& camera) {
    PointCloud out = cloud;
    for (auto& v : out.vertices) v -= camera.lidar_to_camera;
    return out;
}

struct Pixel {
    int u = 0;
    int v = 0;
};

inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

/// Pinhole projection of a camera-frame point; nullopt when behind the camera
/// or off the image.
inline std::optional<Pixel> project(const Vec3& p, const CameraModel& camera) {
    if (p.z() <= 0) return std::nullopt;
    const int u = round_half_up(camera.fx * p.x() / p.z() + camera.x0);
    const int v = round_half_up(camera.fy * p.y() / p.z() + camera.y0);
    if (u < 0 || u >= camera.width || v < 0 || v >= camera.height) return std::nullopt;
    return Pixel{u, v};
}

/// Raster of class ids with a depth per painted pixel; class -1 means empty.
struct ClassImage {
    int width = 0;
    int height = 0;
    std::vector<int> class_ids;  // row-major, -1 empty
    std::vector<double> depth;   // camera z, meaningful where class >= 0

    ClassImage() = default;
    ClassImage(int w, int h)
        : width(w),
          height(h),
          class_ids(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1),
          depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
                std::numeric_limits<double>::infinity()) {}

    std::size_t at(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(u);
    }
    bool empty_at(int u, int v) const { return class_ids[at(u, v)] < 0; }
    std::size_t painted() const {
        std::size_t n = 0;
        for (int c : class_ids) n += c >= 0;
        return n;
    }
};

/// Z-buffered splat of every vertex; nearer depth wins, first writer keeps
/// ties.
inline ClassImage render_classes(const PointCloud& cloud, const std::vector<int>& class_ids,
                                 const CameraModel& camera) {
    if (class_ids.size() != cloud.size())
        throw std::invalid_argument("render_classes: class/cloud size mismatch");
    camera.validate();
    ClassImage img(camera.width, camera.height);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 p = transform_to_camera(cloud.vertices[i], camera);
        const auto pix = project(p, camera);
        if (!pix) continue;
        const std::size_t idx = img.at(pix->u, pix->v);
        if (p.z() < img.depth[idx]) {
            img.depth[idx] = p.z();
            img.class_ids[idx] = class_ids[i];
        }
    }
    return img;
}

/// Synchronous nearest-neighbor dilation: each round, every empty pixel with a
/// painted neighbor (4- or 8-connectivity) copies the class and depth of the
/// nearest one, breaking ties by smaller depth, then smaller class id.  Reads
/// only the previous round's state; painted pixels are never overwritten.
inline ClassImage fill_gaps(const ClassImage& image, int iterations, int connectivity = 4) {
    if (iterations < 0) throw std::invalid_argument("fill_gaps: negative iterations");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("fill_gaps: connectivity must be 4 or 8");

    struct Offset {
        int du, dv;
        double dist;
    };
    std::vector<Offset> offsets = {{1, 0, 1.0}, {-1, 0, 1.0}, {0, 1, 1.0}, {0, -1, 1.0}};
    if (connectivity == 8) {
        const double d = std::sqrt(2.0);
        offsets.insert(offsets.end(),
                       {{1, 1, d}, {1, -1, d}, {-1, 1, d}, {-1, -1, d}});
    }

    ClassImage cur = image;
    for (int it = 0; it < iterations; ++it) {
        ClassImage next = cur;
        bool changed = false;
        for (int v = 0; v < cur.height; ++v) {
            for (int u = 0; u < cur.width; ++u) {
                if (!cur.empty_at(u, v)) continue;
                double best_dist = std::numeric_limits<double>::infinity();
                double best_depth = std::numeric_limits<double>::infinity();
                int best_class = -1;
                for (const auto& off : offsets) {
                    const int nu = u + off.du;
                    const int nv = v + off.dv;
                    if (nu < 0 || nu >= cur.width || nv < 0 || nv >= cur.height) continue;
                    if (cur.empty_at(nu, nv)) continue;
                    const std::size_t nidx = cur.at(nu, nv);
                    const double nd = cur.depth[nidx];
                    const int nc = cur.class_ids[nidx];
                    if (off.dist < best_dist ||
                        (off.dist == best_dist &&
                         (nd < best_depth || (nd == best_depth && nc < best_class)))) {
                        best_dist = off.dist;
                        best_depth = nd;
                        best_class = nc;
                    }
                }
                if (best_class >= 0) {
                    const std::size_t idx = cur.at(u, v);
                    next.class_ids[idx] = best_class;
                    next.depth[idx] = best_depth;
                    changed = true;
                }
            }
        }
        cur = std::move(next);
        if (!changed) break;
    }
    return cur;
}

// --- image output -----------------------------------------------------------

using Rgb = std::array<uint8_t, 3>;

struct Palette {
    Rgb background{0, 0, 0};
    std::map<int, Rgb> classes;
};

/// Mirrors the segmentation legend: SafeRoad blue, BeAwareNegative yellow,
/// HazardPositive cyan, OffRoad purple, RecognizedObstacle red.
inline Palette default_palette() {
    Palette p;
    p.classes[0] = {0, 0, 255};
    p.classes[1] = {255, 255, 0};
    p.classes[2] = {0, 255, 255};
    p.classes[3] = {128, 0, 128};
    p.classes[4] = {255, 0, 0};
    return p;
}

/// Parses "r,g,b" with each component in [0,255].
inline Rgb parse_rgb(const std::string& text) {
    int r = -1, g = -1, b = -1;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d ,%d ,%d %c", &r, &g, &b, &tail) != 3 || r < 0 ||
        r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
        throw std::invalid_argument("parse_rgb: expected 'r,g,b' in [0,255]: " + text);
    return {static_cast<uint8_t>(r), static_cast<uint8_t>(g), static_cast<uint8_t>(b)};
}

enum class PixmapMode { Ascii, Binary };  // P3 / P6

inline void write_image(const ClassImage& image, const Palette& palette, const std::string& path,
                        PixmapMode mode = PixmapMode::Ascii) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);

    const auto lookup = [&](int c) -> const Rgb& {
        if (c < 0) return palette.background;
        const auto it = palette.classes.find(c);
        if (it == palette.classes.end())
            throw std::invalid_argument("write_image: class " + std::to_string(c) +
                                        " missing from palette");
        return it->second;
    };

    std::string body;
    body += mode == PixmapMode::Ascii ? "P3\n" : "P6\n";
    body += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    if (mode == PixmapMode::Ascii) {
        for (int v = 0; v < image.height; ++v) {
            for (int u = 0; u < image.width; ++u) {
                const Rgb& rgb = lookup(image.class_ids[image.at(u, v)]);
                if (u) body += ' ';
                body += std::to_string(rgb[0]);
                body += ' ';
                body += std::to_string(rgb[1]);
                body += ' ';
                body += std::to_string(rgb[2]);
            }
            body += '\n';
        }
    } else {
        for (int v = 0; v < image.height; ++v)
            for (int u = 0; u < image.width; ++u) {
                const Rgb& rgb = lookup(image.class_ids[image.at(u, v)]);
                body.push_back(static_cast<char>(rgb[0]));
                body.push_back(static_cast<char>(rgb[1]));
                body.push_back(static_cast<char>(rgb[2]));
            }
    }
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hazmap
