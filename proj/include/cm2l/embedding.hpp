#pragma once

#include "cm2l/affinity.hpp"
#include "cm2l/types.hpp"

#include <optional>
#include <vector>

namespace cm2l::embedding {

struct EmbedConfig {
    double eigen_threshold = 1e-5;
    std::optional<int> q_max;
    double ridge_mu = 1e-6;  // feature-level only
};

/// Double-centered squared dissimilarities: -H S H / 2 with S_ij = d_ij^2.
/// Symmetric by construction (enforced exactly); rows and columns sum to 0.
struct TauMatrix {
    Matrix values;
};

struct JointEmbedding {
    Matrix z1;                       // n1 x q
    Matrix z2;                       // n2 x q
    std::vector<double> eigenvalues; // q retained, descending
    int q = 0;
};

/// Linear maps from each feature space into the shared latent space.
struct FeatureMaps {
    Matrix alpha;                    // m1 x q
    Matrix beta;                     // m2 x q
    std::vector<double> eigenvalues; // q retained, descending
};

TauMatrix tau(const affinity::JointDissimilarity& d);

/// Classical-MDS-style factorization of tau(D): keep eigenvalues above the
/// threshold (capped at q_max), Z = U diag(lambda)^{1/2} with one row per
/// instance; first n1 rows are modality 1. Eigenvector signs fixed by making
/// each vector's largest-magnitude entry positive.
JointEmbedding embed_instance_level(const affinity::JointDissimilarity& d, Index n1,
                                    const EmbedConfig& cfg);

/// Linear variant: solves the generalized symmetric eigenproblem
/// V tau(D) V^T gamma = lambda (V V^T + mu I) gamma with V the block-diagonal
/// arrangement of X1^T and X2^T; gamma splits into alpha (first m1 rows) and
/// beta.
FeatureMaps fit_feature_level(const Matrix& x1, const Matrix& x2,
                              const affinity::JointDissimilarity& d,
                              const EmbedConfig& cfg);

RowVector project_feature_level(const RowVector& x, const FeatureMaps& maps,
                                int which_modality);

}  // namespace cm2l::embedding
