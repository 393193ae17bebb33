#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hazmap/kdtree.hpp"
#include "hazmap/normals.hpp"
#include "hazmap/point_cloud.hpp"
#include "hazmap/rpca.hpp"

namespace hazmap {

/// Stacked normal matrix: vertex j contributes rows 3j..3j+2; column 0 holds
/// its own normal, columns 1..k its neighbors' normals in graph order.
inline Eigen::MatrixXd assemble_normal_matrix(const NormalField& field,
                                              const NeighborGraph& graph) {
    const std::size_t m = field.size();
    if (graph.neighbors.size() != m)
        throw std::invalid_argument("assemble_normal_matrix: graph/field size mismatch");
    if (m == 0) throw std::invalid_argument("assemble_normal_matrix: empty field");
    const std::size_t k = graph.k;

    Eigen::MatrixXd E(3 * m, k + 1);
    for (std::size_t j = 0; j < m; ++j) {
        const auto row = static_cast<Eigen::Index>(3 * j);
        E.block<3, 1>(row, 0) = field.normals[j];
        const auto& nbrs = graph.neighbors[j];
        if (nbrs.size() != k)
            throw std::invalid_argument("assemble_normal_matrix: ragged neighbor row");
        for (std::size_t c = 0; c < k; ++c)
            E.block<3, 1>(row, static_cast<Eigen::Index>(c + 1)) = field.normals[nbrs[c]];
    }
    return E;
}

/// Per-vertex magnitude of the sparse residual's own-normal column: the norm
/// of rows 3j..3j+2 of column 0.
inline std::vector<double> geometric_saliency(const Eigen::MatrixXd& sparse) {
    if (sparse.rows() == 0 || sparse.rows() % 3 != 0 || sparse.cols() < 1)
        throw std::invalid_argument("geometric_saliency: matrix is not 3m x (k+1)");
    const auto m = static_cast<std::size_t>(sparse.rows() / 3);
    std::vector<double> s(m);
    for (std::size_t j = 0; j < m; ++j)
        s[j] = sparse.block<3, 1>(static_cast<Eigen::Index>(3 * j), 0).norm();
    return s;
}

/// Inverse spectral energy of each vertex block: with R_j the 3x3 Gram matrix
/// of the vertex's 3 x (k+1) slab and l1..l3 its eigenvalues,
/// s2_j = 1 / sqrt(l1^2 + l2^2 + l3^2).  Aligned normals concentrate the
/// spectrum into one large eigenvalue, so flat neighborhoods score low and
/// scattered ones high.
inline std::vector<double> spectral_saliency(const Eigen::MatrixXd& stacked) {
    if (stacked.rows() == 0 || stacked.rows() % 3 != 0 || stacked.cols() < 1)
        throw std::invalid_argument("spectral_saliency: matrix is not 3m x (k+1)");
    const auto m = static_cast<std::size_t>(stacked.rows() / 3);
    std::vector<double> s(m);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
    for (std::size_t j = 0; j < m; ++j) {
        const auto block = stacked.block(static_cast<Eigen::Index>(3 * j), 0, 3, stacked.cols());
        const Eigen::Matrix3d gram = block * block.transpose();
        eig.computeDirect(gram, Eigen::EigenvaluesOnly);
        const double energy = eig.eigenvalues().squaredNorm();
        if (energy <= 0)
            throw std::runtime_error("spectral_saliency: zero normal block");
        s[j] = 1.0 / std::sqrt(energy);
    }
    return s;
}

/// Affine rescale onto [0, 1]; a constant input maps to all zeros.
inline std::vector<double> normalize_minmax(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("normalize_minmax: empty input");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("normalize_minmax: non-finite value");
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double mn = *mn_it;
    const double range = *mx_it - mn;
    std::vector<double> out(values.size(), 0.0);
    if (range > 0)
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mn) / range;
    return out;
}

/// Weighted average of two equally sized saliency vectors.
inline std::vector<double> fuse_saliency(const std::vector<double>& a,
                                         const std::vector<double>& b, double w1, double w2) {
    if (a.size() != b.size()) throw std::invalid_argument("fuse_saliency: size mismatch");
    if (w1 < 0 || w2 < 0 || w1 + w2 <= 0)
        throw std::invalid_argument("fuse_saliency: weights must be nonnegative, sum positive");
    std::vector<double> out(a.size());
    const double denom = w1 + w2;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (w1 * a[i] + w2 * b[i]) / denom;
    return out;
}

struct SaliencyConfig {
    std::size_t k = 16;  // neighbors per vertex
    double w1 = 1.0;     // geometric weight
    double w2 = 1.0;     // spectral weight
    RpcaConfig rpca;
};

struct SaliencyMap {
    std::vector<double> geometric;       // raw s1
    std::vector<double> spectral;        // raw s2
    std::vector<double> geometric_norm;  // s1 rescaled onto [0, 1]
    std::vector<double> spectral_norm;   // s2 rescaled onto [0, 1]
    std::vector<double> fused;           // weighted blend of the normalized channels

    std::size_t size() const { return fused.size(); }
};

/// Full per-frame saliency: normals -> stacked matrix -> sparse residual ->
/// geometric + spectral channels -> minmax normalization -> fusion.
/// Reuses a caller-supplied neighbor graph and normal field.
inline SaliencyMap compute_saliency_map(const NormalField& field, const NeighborGraph& graph,
                                        const SaliencyConfig& config = {},
                                        RpcaResult* rpca_out = nullptr) {
    const Eigen::MatrixXd stacked = assemble_normal_matrix(field, graph);
    RpcaResult rpca = fast_pcp(stacked, config.rpca);

    SaliencyMap map;
    map.geometric = geometric_saliency(rpca.sparse);
    map.spectral = spectral_saliency(stacked);
    map.geometric_norm = normalize_minmax(map.geometric);
    map.spectral_norm = normalize_minmax(map.spectral);
    map.fused = fuse_saliency(map.geometric_norm, map.spectral_norm, config.w1, config.w2);
    if (rpca_out) *rpca_out = std::move(rpca);
    return map;
}

inline SaliencyMap compute_saliency_map(const PointCloud& cloud,
                                        const SaliencyConfig& config = {},
                                        RpcaResult* rpca_out = nullptr) {
    if (cloud.size() <= config.k)
        throw std::invalid_argument("compute_saliency_map: need more vertices than neighbors");
    const NeighborGraph graph = build_neighbor_graph(cloud, config.k);
    const NormalField field = estimate_point_normals(cloud, graph);
    return compute_saliency_map(field, graph, config, rpca_out);
}

}  // namespace hazmap
