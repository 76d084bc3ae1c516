#pragma once

#include "cm2l/types.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace cm2l::graph {

struct PerturbationConfig {
    int t_p = 20;           // number of perturbations
    double r_p = 0.5;       // noise ratio in [0,1]
    int k_noise = 5;        // neighbor index for the local noise scale
    std::uint64_t seed = 0;
};

/// Symmetric weighted adjacency from the perturbed-MST ensemble.
/// Weights are MST edge frequencies in [0,1]; the positive-weight graph is
/// connected because every ensemble member is a spanning tree.
struct NeighborhoodGraph {
    Matrix weights;  // n x n, symmetric, zero diagonal

    Index n() const { return weights.rows(); }
};

using Edge = std::pair<Index, Index>;

/// Exact Euclidean MST (Prim, O(n^2)). Edges returned with i < j, sorted
/// lexicographically. Ties during construction broken by lowest vertex index.
std::vector<Edge> euclidean_mst(const Matrix& points);

/// Ensemble of MSTs on Gaussian-perturbed copies of the cloud. Each point i
/// is jittered with per-coordinate std sigma_i = r_p * d(x_i, x_i^k) where
/// the k-th nearest neighbor is taken in the original cloud. Edge weight is
/// the fraction of perturbations in which the edge appeared.
NeighborhoodGraph pmst(const Matrix& points, const PerturbationConfig& cfg,
                       int threads = 1);

/// CSV `i,j,weight` for strictly positive weights, i < j.
void save_graph_csv(const NeighborhoodGraph& g, const std::filesystem::path& path);

}  // namespace cm2l::graph
