#pragma once

#include "cm2l/types.hpp"

namespace cm2l::ose {

struct OseConfig {
    int k_ose = 20;  // neighborhood size, must be >= q + 1
    int q = 0;       // target dimension, from the fitted embedding
};

/// Least-squares similarity transform (row convention): target ~ scale *
/// source * rotation + translation. Reflections allowed.
struct Similarity {
    double scale = 1.0;
    Matrix rotation;        // q x q orthogonal
    RowVector translation;  // 1 x q
};

Similarity procrustes_similarity(const Matrix& source, const Matrix& target);

double similarity_residual(const Similarity& s, const Matrix& source,
                           const Matrix& target);

/// Projects an unseen point into the learnt space: local PCA on the k_ose
/// nearest training points plus the query, then a similarity transform fit on
/// the neighbors' known embedding rows.
RowVector out_of_sample(const RowVector& x_t, const Matrix& train_x,
                        const Matrix& train_z, const OseConfig& cfg);

}  // namespace cm2l::ose
