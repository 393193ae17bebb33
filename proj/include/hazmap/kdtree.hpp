#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hazmap/point_cloud.hpp"

namespace hazmap {

/// Static kd-tree over a point set.  Nearest-neighbour queries are exact and
/// deterministic: candidates are ordered by (squared distance, index), so
/// equidistant points resolve to the lower index.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& points) : points_(points) {
        if (points_.empty()) throw std::invalid_argument("KdTree: empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), uint32_t{0});
        nodes_.reserve(points_.size());
        root_ = build(0, points_.size());
    }

    std::size_t size() const { return points_.size(); }

    struct Neighbor {
        uint32_t index;
        double dist_sq;
    };

    /// k nearest neighbours of `query`, nearest first.  `exclude` removes one
    /// index from consideration (pass the query's own index for graphs).
    std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                              int64_t exclude = -1) const {
        if (k == 0) return {};
        Heap heap(k);
        search(root_, query, exclude, heap);
        return heap.take_sorted();
    }

    /// All points with distance <= radius, ordered by (distance, index).
    std::vector<Neighbor> radius_search(const Vec3& query, double radius,
                                        int64_t exclude = -1) const {
        if (radius < 0) throw std::invalid_argument("radius_search: negative radius");
        std::vector<Neighbor> found;
        collect(root_, query, radius * radius, exclude, found);
        std::sort(found.begin(), found.end(), [](const Neighbor& a, const Neighbor& b) {
            if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
            return a.index < b.index;
        });
        return found;
    }

private:
    struct Node {
        uint32_t point;
        int32_t left = -1;
        int32_t right = -1;
        uint8_t axis;
    };

    // Bounded max-heap on (dist_sq, index); the worst candidate sits on top.
    class Heap {
    public:
        explicit Heap(std::size_t cap) : cap_(cap) { items_.reserve(cap); }

        bool admits(double dist_sq, uint32_t index) const {
            if (items_.size() < cap_) return true;
            const Neighbor& w = items_.front();
            if (dist_sq != w.dist_sq) return dist_sq < w.dist_sq;
            return index < w.index;
        }

        // Pruning bound: a subtree can be skipped only when every point in it
        // is strictly worse than the current worst, so the test is `<=` on the
        // caller side while the heap reports its worst distance here.
        bool full() const { return items_.size() == cap_; }
        double worst_dist_sq() const { return items_.front().dist_sq; }

        void push(double dist_sq, uint32_t index) {
            if (items_.size() == cap_) {
                std::pop_heap(items_.begin(), items_.end(), less_);
                items_.back() = {index, dist_sq};
            } else {
                items_.push_back({index, dist_sq});
            }
            std::push_heap(items_.begin(), items_.end(), less_);
        }

        std::vector<Neighbor> take_sorted() {
            std::sort(items_.begin(), items_.end(), [](const Neighbor& a, const Neighbor& b) {
                if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
                return a.index < b.index;
            });
            return std::move(items_);
        }

    private:
        static bool cmp(const Neighbor& a, const Neighbor& b) {
            if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
            return a.index < b.index;
        }
        static constexpr auto less_ = cmp;
        std::size_t cap_;
        std::vector<Neighbor> items_;
    };

    int32_t build(std::size_t lo, std::size_t hi) {
        if (lo >= hi) return -1;
        Vec3 mn = points_[order_[lo]];
        Vec3 mx = mn;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            mn = mn.cwiseMin(points_[order_[i]]);
            mx = mx.cwiseMax(points_[order_[i]]);
        }
        const Vec3 extent = mx - mn;
        uint8_t axis = 0;
        if (extent.y() > extent[axis]) axis = 1;
        if (extent.z() > extent[axis]) axis = 2;

        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(hi),
                         [&](uint32_t a, uint32_t b) {
                             const double pa = points_[a][axis];
                             const double pb = points_[b][axis];
                             if (pa != pb) return pa < pb;
                             return a < b;
                         });

        Node node;
        node.point = order_[mid];
        node.axis = axis;
        const auto id = static_cast<int32_t>(nodes_.size());
        nodes_.push_back(node);
        const int32_t left = build(lo, mid);
        const int32_t right = build(mid + 1, hi);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(int32_t id, const Vec3& query, int64_t exclude, Heap& heap) const {
        if (id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Vec3& p = points_[node.point];
        if (static_cast<int64_t>(node.point) != exclude) {
            const double d2 = (p - query).squaredNorm();
            if (heap.admits(d2, node.point)) heap.push(d2, node.point);
        }
        const double delta = query[node.axis] - p[node.axis];
        const int32_t near = delta < 0 ? node.left : node.right;
        const int32_t far = delta < 0 ? node.right : node.left;
        search(near, query, exclude, heap);
        // `<=` keeps equidistant points on the splitting plane reachable so
        // the (distance, index) tie-break stays exact.
        if (!heap.full() || delta * delta <= heap.worst_dist_sq())
            search(far, query, exclude, heap);
    }

    void collect(int32_t id, const Vec3& query, double radius_sq, int64_t exclude,
                 std::vector<Neighbor>& found) const {
        if (id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Vec3& p = points_[node.point];
        if (static_cast<int64_t>(node.point) != exclude) {
            const double d2 = (p - query).squaredNorm();
            if (d2 <= radius_sq) found.push_back({node.point, d2});
        }
        const double delta = query[node.axis] - p[node.axis];
        const int32_t near = delta < 0 ? node.left : node.right;
        const int32_t far = delta < 0 ? node.right : node.left;
        collect(near, query, radius_sq, exclude, found);
        if (delta * delta <= radius_sq) collect(far, query, radius_sq, exclude, found);
    }

    const std::vector<Vec3>& points_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

/// k nearest neighbours for every vertex, self excluded, row i sorted by
/// (distance, index).
struct NeighborGraph {
    std::size_t k = 0;
    std::vector<std::vector<uint32_t>> neighbors;
};

/// Mean distance to the nearest other point; a density proxy used to scale
/// radii when clouds are subsampled.
inline double mean_nn_distance(const std::vector<Vec3>& points) {
    if (points.size() < 2)
        throw std::invalid_argument("mean_nn_distance: need at least two points");
    const KdTree tree(points);
    double sum = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
        sum += std::sqrt(tree.knn(points[i], 1, static_cast<int64_t>(i)).front().dist_sq);
    return sum / static_cast<double>(points.size());
}

inline NeighborGraph build_neighbor_graph(const PointCloud& cloud, std::size_t k) {
    if (cloud.empty()) throw std::invalid_argument("build_neighbor_graph: empty cloud");
    if (k == 0 || k >= cloud.size())
        throw std::invalid_argument("build_neighbor_graph: need 0 < k < point count");
    const KdTree tree(cloud.vertices);
    NeighborGraph graph;
    graph.k = k;
    graph.neighbors.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto found = tree.knn(cloud.vertices[i], k, static_cast<int64_t>(i));
        auto& row = graph.neighbors[i];
        row.reserve(found.size());
        for (const auto& n : found) row.push_back(n.index);
    }
    return graph;
}

}  // namespace hazmap
