#include "cm2l/embedding.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cm2l::embedding {

namespace {

const char* kModule = "embedding";

/// Make the largest-magnitude entry of each column positive.
void fix_signs(Matrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
    }
}

}  // namespace

TauMatrix tau(const affinity::JointDissimilarity& d) {
    const Index n = d.size();
    Matrix s = d.d.array().square();
    Matrix h = Matrix::Identity(n, n).array() - 1.0 / static_cast<double>(n);
    Matrix t = -0.5 * h * s * h;
    TauMatrix out;
    out.values = 0.5 * (t + t.transpose());
    return out;
}

JointEmbedding embed_instance_level(const affinity::JointDissimilarity& d, Index n1,
                                    const EmbedConfig& cfg) {
    const Index n = d.size();
    if (n1 <= 0 || n1 >= n) throw Error(kModule, "n1 must be in (0, total size)");
    if (cfg.eigen_threshold <= 0.0) throw Error(kModule, "eigen_threshold must be > 0");

    Eigen::SelfAdjointEigenSolver<Matrix> es(tau(d).values);
    if (es.info() != Eigen::Success) throw Error(kModule, "eigendecomposition failed");

    // Eigen returns ascending order; walk from the largest down.
    std::vector<Index> keep;
    for (Index i = n - 1; i >= 0; --i) {
        if (es.eigenvalues()(i) <= cfg.eigen_threshold) break;
        keep.push_back(i);
        if (cfg.q_max && static_cast<int>(keep.size()) >= *cfg.q_max) break;
    }
    if (keep.empty()) throw Error(kModule, "degenerate geometry");

    const int q = static_cast<int>(keep.size());
    Matrix u(n, q);
    JointEmbedding out;
    out.q = q;
    for (int c = 0; c < q; ++c) {
        u.col(c) = es.eigenvectors().col(keep[c]);
        out.eigenvalues.push_back(es.eigenvalues()(keep[c]));
    }
    fix_signs(u);
    Matrix z = u;
    for (int c = 0; c < q; ++c) z.col(c) *= std::sqrt(out.eigenvalues[c]);
    out.z1 = z.topRows(n1);
    out.z2 = z.bottomRows(n - n1);
    return out;
}

FeatureMaps fit_feature_level(const Matrix& x1, const Matrix& x2,
                              const affinity::JointDissimilarity& d,
                              const EmbedConfig& cfg) {
    const Index n1 = x1.rows(), m1 = x1.cols();
    const Index n2 = x2.rows(), m2 = x2.cols();
    if (n1 + n2 != d.size())
        throw Error(kModule, "feature matrices do not match dissimilarity size");
    if (!x1.allFinite() || !x2.allFinite())
        throw Error(kModule, "non-finite feature entries");

    // Block-diagonal arrangement of X1^T and X2^T, (m1+m2) x (n1+n2).
    Matrix v = Matrix::Zero(m1 + m2, n1 + n2);
    v.topLeftCorner(m1, n1) = x1.transpose();
    v.bottomRightCorner(m2, n2) = x2.transpose();

    Matrix a = v * tau(d).values * v.transpose();
    a = 0.5 * (a + a.transpose());
    Matrix b = v * v.transpose() +
               cfg.ridge_mu * Matrix::Identity(m1 + m2, m1 + m2);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(a, b);
    if (ges.info() != Eigen::Success)
        throw Error(kModule, "normalization matrix numerically singular");

    std::vector<Index> keep;
    for (Index i = m1 + m2 - 1; i >= 0; --i) {
        if (ges.eigenvalues()(i) <= cfg.eigen_threshold) break;
        keep.push_back(i);
        if (cfg.q_max && static_cast<int>(keep.size()) >= *cfg.q_max) break;
    }
    if (keep.empty()) throw Error(kModule, "degenerate geometry");

    const int q = static_cast<int>(keep.size());
    Matrix gamma(m1 + m2, q);
    FeatureMaps maps;
    for (int c = 0; c < q; ++c) {
        gamma.col(c) = ges.eigenvectors().col(keep[c]);
        maps.eigenvalues.push_back(ges.eigenvalues()(keep[c]));
    }
    fix_signs(gamma);
    maps.alpha = gamma.topRows(m1);
    maps.beta = gamma.bottomRows(m2);
    return maps;
}

RowVector project_feature_level(const RowVector& x, const FeatureMaps& maps,
                                int which_modality) {
    if (which_modality != 1 && which_modality != 2)
        throw Error(kModule, "modality must be 1 or 2");
    const Matrix& map = which_modality == 1 ? maps.alpha : maps.beta;
    if (x.size() != map.rows())
        throw Error(kModule, "feature dimension mismatch: got " +
                                 std::to_string(x.size()) + ", expected " +
                                 std::to_string(map.rows()));
    return x * map;
}

}  // namespace cm2l::embedding
