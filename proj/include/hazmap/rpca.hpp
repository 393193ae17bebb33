#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace hazmap {

/// Elementwise soft threshold: sign(x) * max(0, |x| - tau).
inline double shrink(double x, double tau) {
    const double mag = std::abs(x) - tau;
    if (mag <= 0) return 0.0;
    return x < 0 ? -mag : mag;
}

inline Eigen::MatrixXd shrink(const Eigen::MatrixXd& X, double tau) {
    return X.unaryExpr([tau](double x) { return shrink(x, tau); });
}

struct PartialSvd {
    Eigen::MatrixXd approximation;      // best rank-k reconstruction
    Eigen::VectorXd singular_values;    // all min(rows, cols) of them, descending
};

/// Best rank-k approximation of M in the Frobenius sense.  Works on the Gram
/// matrix of the shorter side, which is much cheaper than a dense SVD when one
/// dimension is small (the stacked-normal matrices are tall and narrow).
inline PartialSvd partial_low_rank(const Eigen::MatrixXd& M, Eigen::Index k) {
    if (M.size() == 0) throw std::invalid_argument("partial_low_rank: empty matrix");
    const Eigen::Index full = std::min(M.rows(), M.cols());
    if (k < 1 || k > full) throw std::invalid_argument("partial_low_rank: rank out of range");

    const bool wide = M.rows() < M.cols();
    const Eigen::MatrixXd gram = wide ? Eigen::MatrixXd(M * M.transpose())
                                      : Eigen::MatrixXd(M.transpose() * M);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("partial_low_rank: eigendecomposition failed");

    PartialSvd out;
    out.singular_values.resize(full);
    for (Eigen::Index i = 0; i < full; ++i)  // eigenvalues come back ascending
        out.singular_values[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[full - 1 - i]));

    Eigen::MatrixXd basis(gram.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) basis.col(i) = eig.eigenvectors().col(full - 1 - i);
    out.approximation = wide ? Eigen::MatrixXd(basis * (basis.transpose() * M))
                             : Eigen::MatrixXd((M * basis) * basis.transpose());
    return out;
}

struct RpcaConfig {
    double lambda = -1.0;       // <= 0 selects 1 / sqrt(max(rows, cols))
    double epsilon = 0.01;      // rank-increase threshold on relative tail energy
    Eigen::Index initial_rank = 1;
    double tol = 1e-6;          // relative change of L between iterations
    int max_iter = 100;
    Eigen::Index max_rank = 0;  // 0 selects min(rows, cols)
};

struct RpcaResult {
    Eigen::MatrixXd low_rank;
    Eigen::MatrixXd sparse;
    Eigen::Index rank = 0;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  // ||L+S-E||_F / ||E||_F, 0 for a zero input
    std::vector<double> objective_trace;  // 0.5*||L+S-E||_F^2 + lambda*||S||_1
};

namespace detail {

/// Robust spread of the matrix entries: the 75th percentile of absolute
/// deviations from the median, scaled to track the standard deviation on
/// Gaussian data.  Ignores up to a quarter of gross outliers and, unlike the
/// median deviation, stays meaningful when most entries are identical.
inline double robust_scale(const Eigen::MatrixXd& M) {
    std::vector<double> v(M.data(), M.data() + M.size());
    const auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    const double median = *mid;
    for (double& x : v) x = std::abs(x - median);
    const auto q75 = v.begin() + (v.size() * 3) / 4;
    std::nth_element(v.begin(), q75, v.end());
    return *q75 / 1.1503;
}

}  // namespace detail

/// Decomposes E ~ L + S with L low rank and S sparse, by alternating a
/// rank-limited projection of E - S with soft thresholding of E - L.  The
/// working rank grows by one whenever the smallest retained singular value
/// still holds more than `epsilon` of the retained spectral mass.
///
/// S starts from a hard prune of entries lying a few robust standard
/// deviations out, re-estimated against a handful of rank-limited refits, so
/// gross outliers never contaminate the first factorization; every S-update
/// inside the loop proper uses the configured lambda.
inline RpcaResult fast_pcp(const Eigen::MatrixXd& E, RpcaConfig config = {}) {
    if (E.size() == 0) throw std::invalid_argument("fast_pcp: empty matrix");
    if (!E.allFinite()) throw std::invalid_argument("fast_pcp: non-finite entries");
    const Eigen::Index full = std::min(E.rows(), E.cols());
    if (config.max_rank <= 0) config.max_rank = full;
    config.max_rank = std::min(config.max_rank, full);
    if (config.initial_rank < 1 || config.initial_rank > config.max_rank)
        throw std::invalid_argument("fast_pcp: initial rank out of range");
    if (config.lambda <= 0)
        config.lambda = 1.0 / std::sqrt(static_cast<double>(std::max(E.rows(), E.cols())));
    if (config.tol <= 0) throw std::invalid_argument("fast_pcp: tol must be positive");
    if (config.max_iter < 1) throw std::invalid_argument("fast_pcp: max_iter must be >= 1");

    RpcaResult res;
    res.rank = config.initial_rank;
    const double prune = std::max(config.lambda, 3.5 * detail::robust_scale(E));
    Eigen::MatrixXd refit = Eigen::MatrixXd::Zero(E.rows(), E.cols());
    Eigen::MatrixXd prev_sparse;
    for (int round = 0; round < 8; ++round) {
        const Eigen::MatrixXd residual = E - refit;
        res.sparse = (residual.array().abs() > prune).select(residual, 0.0);
        if (round > 0 && (res.sparse - prev_sparse).norm() <
                             config.tol * std::max(1.0, prev_sparse.norm()))
            break;
        prev_sparse = res.sparse;
        refit = partial_low_rank(E - res.sparse, res.rank).approximation;
    }
    Eigen::MatrixXd prev_low_rank = Eigen::MatrixXd::Zero(E.rows(), E.cols());
    Eigen::Index next_rank = res.rank;

    for (int t = 1; t <= config.max_iter; ++t) {
        const PartialSvd svd = partial_low_rank(E - res.sparse, next_rank);
        res.low_rank = svd.approximation;
        res.rank = next_rank;  // rank the returned L was fitted with

        const double retained = svd.singular_values.head(res.rank).sum();
        if (retained > 0 && next_rank < config.max_rank &&
            svd.singular_values[res.rank - 1] / retained > config.epsilon)
            ++next_rank;

        res.sparse = shrink(E - res.low_rank, config.lambda);

        const double fit = (res.low_rank + res.sparse - E).squaredNorm();
        res.objective_trace.push_back(0.5 * fit +
                                      config.lambda * res.sparse.lpNorm<1>());

        res.iterations = t;
        const double denom = std::max(1.0, prev_low_rank.norm());
        if ((res.low_rank - prev_low_rank).norm() / denom < config.tol) {
            res.converged = true;
            break;
        }
        prev_low_rank = res.low_rank;
    }
    const double scale = E.norm();
    if (scale > 0) res.residual = (res.low_rank + res.sparse - E).norm() / scale;
    return res;
}

}  // namespace hazmap
