#pragma once

#include "cm2l/data_model.hpp"
#include "cm2l/graph.hpp"
#include "cm2l/types.hpp"

namespace cm2l::affinity {

struct ScalingConfig {
    int k_scale = 5;          // K-th neighbor for local scaling
    double eps_scale = 1e-12; // floor for degenerate scales
};

struct AffinityBlocks {
    Matrix w11;  // n1 x n1, symmetric, unit diagonal
    Matrix w22;  // n2 x n2
    Matrix w12;  // n1 x n2
};

/// Composite joint dissimilarity, block layout [modality-1; modality-2].
struct JointDissimilarity {
    Matrix d;  // (n1+n2)^2, symmetric, zero diagonal, entries in [0,1]

    Index size() const { return d.rows(); }
};

/// sigma_i = squared distance to the k_scale-th nearest neighbor (self
/// excluded), floored at eps_scale.
Vector local_scales(const Matrix& points, const ScalingConfig& cfg);

/// D_ij = ||x_i - x_j||^2 / (2 sigma_i sigma_j)
Matrix scaled_distance_matrix(const Matrix& points, const Vector& scales);

/// Divides by the largest off-diagonal entry; no-op on the all-zero matrix.
Matrix normalize_distances(const Matrix& d);

/// W_ij = exp(-D_ij) * graph weight for i != j, unit diagonal.
Matrix intra_affinity(const Matrix& dist_norm, const graph::NeighborhoodGraph& g);

/// W12_ij = max over links (a,b) of sqrt(w11_ia * w22_bj)
Matrix inter_affinity(const Matrix& w11, const Matrix& w22,
                      const data::CorrespondenceSet& links);

JointDissimilarity joint_dissimilarity(const AffinityBlocks& blocks);

/// Full Step-2/Step-3 chain for one modality pair.
AffinityBlocks compute_affinity_blocks(const Matrix& x1, const Matrix& x2,
                                       const graph::NeighborhoodGraph& g1,
                                       const graph::NeighborhoodGraph& g2,
                                       const data::CorrespondenceSet& links,
                                       const ScalingConfig& cfg);

}  // namespace cm2l::affinity
