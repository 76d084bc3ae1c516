#include "cm2l/affinity.hpp"

#include <algorithm>
#include <vector>

namespace cm2l::affinity {

namespace {

const char* kModule = "affinity";

}  // namespace

Vector local_scales(const Matrix& points, const ScalingConfig& cfg) {
    const Index n = points.rows();
    if (cfg.k_scale < 1) throw Error(kModule, "k_scale must be >= 1");
    if (n <= cfg.k_scale) throw Error(kModule, "k_scale must be < n");
    if (cfg.eps_scale <= 0.0) throw Error(kModule, "eps_scale must be > 0");

    Vector scales(n);
    std::vector<double> d2(n);
    for (Index i = 0; i < n; ++i) {
        std::vector<double> others;
        others.reserve(n - 1);
        for (Index j = 0; j < n; ++j)
            if (j != i) others.push_back((points.row(i) - points.row(j)).squaredNorm());
        std::nth_element(others.begin(), others.begin() + (cfg.k_scale - 1), others.end());
        scales(i) = std::max(others[cfg.k_scale - 1], cfg.eps_scale);
    }
    return scales;
}

Matrix scaled_distance_matrix(const Matrix& points, const Vector& scales) {
    const Index n = points.rows();
    if (scales.size() != n) throw Error(kModule, "scales length must match point count");
    if ((scales.array() <= 0.0).any()) throw Error(kModule, "scales must be positive");

    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            double v = (points.row(i) - points.row(j)).squaredNorm() /
                       (2.0 * scales(i) * scales(j));
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

Matrix normalize_distances(const Matrix& d) {
    double max_off = 0.0;
    for (Index i = 0; i < d.rows(); ++i)
        for (Index j = 0; j < d.cols(); ++j)
            if (i != j) max_off = std::max(max_off, d(i, j));
    if (max_off == 0.0) return d;
    return d / max_off;
}

Matrix intra_affinity(const Matrix& dist_norm, const graph::NeighborhoodGraph& g) {
    if (dist_norm.rows() != g.n() || dist_norm.cols() != g.n())
        throw Error(kModule, "distance and graph dimensions do not match");
    Matrix w = (-dist_norm).array().exp() * g.weights.array();
    w.diagonal().setOnes();
    return w;
}

Matrix inter_affinity(const Matrix& w11, const Matrix& w22,
                      const data::CorrespondenceSet& links) {
    if (links.pairs.empty())
        throw Error(kModule, "empty link set: alignment impossible");
    const Index n1 = w11.rows(), n2 = w22.rows();
    Matrix s11 = w11.cwiseSqrt();
    Matrix s22 = w22.cwiseSqrt();
    Matrix w12 = Matrix::Zero(n1, n2);
    for (const auto& [a, b] : links.pairs) {
        if (a < 0 || a >= n1 || b < 0 || b >= n2)
            throw Error(kModule, "link index out of range");
        w12 = w12.cwiseMax(s11.col(a) * s22.row(b));
    }
    return w12;
}

JointDissimilarity joint_dissimilarity(const AffinityBlocks& blocks) {
    const Index n1 = blocks.w11.rows(), n2 = blocks.w22.rows();
    if (blocks.w12.rows() != n1 || blocks.w12.cols() != n2)
        throw Error(kModule, "inconsistent block dimensions");
    JointDissimilarity out;
    out.d.resize(n1 + n2, n1 + n2);
    out.d.topLeftCorner(n1, n1) = 1.0 - blocks.w11.array();
    out.d.topRightCorner(n1, n2) = 1.0 - blocks.w12.array();
    out.d.bottomLeftCorner(n2, n1) = (1.0 - blocks.w12.array()).transpose();
    out.d.bottomRightCorner(n2, n2) = 1.0 - blocks.w22.array();
    return out;
}

AffinityBlocks compute_affinity_blocks(const Matrix& x1, const Matrix& x2,
                                       const graph::NeighborhoodGraph& g1,
                                       const graph::NeighborhoodGraph& g2,
                                       const data::CorrespondenceSet& links,
                                       const ScalingConfig& cfg) {
    AffinityBlocks b;
    Matrix d11 = normalize_distances(scaled_distance_matrix(x1, local_scales(x1, cfg)));
    Matrix d22 = normalize_distances(scaled_distance_matrix(x2, local_scales(x2, cfg)));
    b.w11 = intra_affinity(d11, g1);
    b.w22 = intra_affinity(d22, g2);
    b.w12 = inter_affinity(b.w11, b.w22, links);
    return b;
}

}  // namespace cm2l::affinity
