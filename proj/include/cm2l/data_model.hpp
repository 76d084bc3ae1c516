#pragma once

#include "cm2l/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cm2l::data {

/// One modality's instances: an n x m feature matrix with optional class
/// labels and optional per-instance composition (probability) vectors.
struct ModalityDataset {
    std::string modality_id;
    Matrix features;                  // n x m
    std::vector<std::string> labels;  // empty or size n
    Matrix compositions;              // 0x0 or n x c, rows sum to 1

    Index n() const { return features.rows(); }
    Index m() const { return features.cols(); }
    bool has_labels() const { return !labels.empty(); }
    bool has_compositions() const { return compositions.size() > 0; }

    void validate() const;
};

/// Known matching instance pairs across the two modalities.
struct CorrespondenceSet {
    std::vector<std::pair<Index, Index>> pairs;

    void validate(Index n1, Index n2) const;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double correspondence_fraction = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticConfig {
    int n_per_modality = 400;
    int latent_dim = 2;
    int m1 = 10;
    int m2 = 15;
    double noise_std = 0.05;
    int n_classes = 4;
    std::uint64_t seed = 0;
};

ModalityDataset load_dataset(const std::filesystem::path& path, bool has_labels,
                             int composition_cols);
void save_dataset(const ModalityDataset& d, const std::filesystem::path& path);

CorrespondenceSet load_correspondences(const std::filesystem::path& path);
void save_correspondences(const CorrespondenceSet& c, const std::filesystem::path& path);

struct SyntheticPair {
    ModalityDataset d1;
    ModalityDataset d2;
    CorrespondenceSet correspondences;   // full (i, i) correspondence
    std::vector<double> latent_angles;   // the shared latent pre-images
};

/// Samples n points on the unit circle, pushes them through a fixed random
/// linear map followed by tanh into each ambient space, and adds Gaussian
/// noise. Instance i of modality 1 corresponds to instance i of modality 2.
SyntheticPair generate_synthetic_pair(const SyntheticConfig& cfg);

struct SplitResult {
    ModalityDataset train1, train2;
    ModalityDataset test1, test2;
    CorrespondenceSet train_links;  // indices into train1/train2
    std::vector<Index> train_index1, train_index2;  // original indices
    std::vector<Index> test_index1, test_index2;
};

/// Corresponding pairs go to train or test atomically; non-corresponding
/// instances split independently. Within train, only
/// ceil(correspondence_fraction * train pairs) pairs stay known links.
SplitResult split_train_test(const ModalityDataset& d1, const ModalityDataset& d2,
                             const CorrespondenceSet& c, const SplitSpec& spec);

}  // namespace cm2l::data
