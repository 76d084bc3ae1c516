#pragma once

#include "cm2l/affinity.hpp"
#include "cm2l/data_model.hpp"
#include "cm2l/embedding.hpp"
#include "cm2l/graph.hpp"
#include "cm2l/ose.hpp"
#include "cm2l/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cm2l::retrieval {

enum class Variant { instance, feature };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);

/// Everything needed to answer queries against a trained alignment.
struct FittedModel {
    embedding::JointEmbedding embedding;
    Matrix train_x1, train_x2;
    ose::OseConfig ose_cfg;
    Variant variant = Variant::instance;
    std::optional<embedding::FeatureMaps> feature_maps;
    nlohmann::json provenance;  // seed + config snapshot
};

struct RankedResult {
    std::vector<Index> indices;     // ascending by distance
    std::vector<double> distances;  // non-decreasing
};

/// Hyperparameters for the fit pipeline (pMST -> affinities -> embedding).
struct FitParams {
    graph::PerturbationConfig pert;
    affinity::ScalingConfig scaling;
    embedding::EmbedConfig embed;
    int k_ose = 20;
};

/// Runs the full training pipeline. Both modalities use the same pMST seed so
/// identical inputs yield identical graphs. If embed.q_max is unset it
/// defaults to min(m1, m2).
FittedModel fit_model(const Matrix& x1, const Matrix& x2,
                      const data::CorrespondenceSet& links, const FitParams& params,
                      Variant variant, int threads = 1);

RowVector project_query(const RowVector& x_q, const FittedModel& model,
                        int source_modality);

/// k smallest Euclidean distances, ties broken by lowest index; k > n returns
/// all n rows.
RankedResult knn(const RowVector& z_q, const Matrix& target_z, int k);

/// Majority vote over the k neighbor labels; ties broken by the class whose
/// nearest member is closest.
std::string classify_by_retrieval(const std::vector<std::string>& neighbor_labels,
                                  const std::vector<double>& neighbor_distances);

/// Model archive: a directory with meta.json plus CSV matrices
/// (z1, z2, x1, x2 and alpha/beta for the feature-level variant).
void save_model(const FittedModel& model, const std::filesystem::path& dir);
FittedModel load_model(const std::filesystem::path& dir);

}  // namespace cm2l::retrieval
