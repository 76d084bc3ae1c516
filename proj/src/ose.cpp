#include "cm2l/ose.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <vector>

namespace cm2l::ose {

namespace {

const char* kModule = "ose";

void fix_signs(Matrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
    }
}

}  // namespace

Similarity procrustes_similarity(const Matrix& source, const Matrix& target) {
    const Index k = source.rows(), q = source.cols();
    if (target.rows() != k || target.cols() != q)
        throw Error(kModule, "source and target shapes do not match");
    if (k < q + 1) throw Error(kModule, "need at least q+1 points for a similarity fit");

    RowVector mu_s = source.colwise().mean();
    RowVector mu_t = target.colwise().mean();
    Matrix xc = source.rowwise() - mu_s;
    Matrix yc = target.rowwise() - mu_t;
    const double var = xc.squaredNorm();
    if (var == 0.0) throw Error(kModule, "zero-variance source");

    Eigen::JacobiSVD<Matrix> svd(xc.transpose() * yc,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    Similarity s;
    s.rotation = svd.matrixU() * svd.matrixV().transpose();
    s.scale = svd.singularValues().sum() / var;
    s.translation = mu_t - s.scale * mu_s * s.rotation;
    return s;
}

double similarity_residual(const Similarity& s, const Matrix& source,
                           const Matrix& target) {
    Matrix mapped = s.scale * source * s.rotation;
    mapped.rowwise() += s.translation;
    return (mapped - target).norm();
}

RowVector out_of_sample(const RowVector& x_t, const Matrix& train_x,
                        const Matrix& train_z, const OseConfig& cfg) {
    const Index n = train_x.rows(), m = train_x.cols(), q = train_z.cols();
    if (x_t.size() != m) throw Error(kModule, "query dimension mismatch");
    if (train_z.rows() != n)
        throw Error(kModule, "embedding rows do not match training features");
    if (cfg.k_ose > n) throw Error(kModule, "k_ose exceeds training size");
    if (cfg.k_ose < q + 1) throw Error(kModule, "k_ose must be at least q+1");
    if (q > m) throw Error(kModule, "target dimension exceeds ambient dimension");

    // Nearest neighbors, ties broken by lowest training index.
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<double> d2(n);
    for (Index i = 0; i < n; ++i) d2[i] = (train_x.row(i) - x_t).squaredNorm();
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return d2[a] < d2[b]; });
    const int k = cfg.k_ose;

    // Local PCA on the neighborhood plus the query itself.
    Matrix local(k + 1, m);
    for (int i = 0; i < k; ++i) local.row(i) = train_x.row(order[i]);
    local.row(k) = x_t;
    RowVector mean = local.colwise().mean();
    Matrix centered = local.rowwise() - mean;
    if (centered.squaredNorm() == 0.0) throw Error(kModule, "degenerate tangent space");

    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    Matrix v = svd.matrixV().leftCols(q);
    fix_signs(v);

    Matrix coords = centered * v;                       // (k+1) x q
    Matrix neighbor_z(k, q);
    for (int i = 0; i < k; ++i) neighbor_z.row(i) = train_z.row(order[i]);

    Similarity sim = procrustes_similarity(coords.topRows(k), neighbor_z);
    return sim.scale * coords.row(k) * sim.rotation + sim.translation;
}

}  // namespace cm2l::ose
