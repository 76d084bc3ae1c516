#pragma once

#include "cm2l/data_model.hpp"
#include "cm2l/retrieval.hpp"
#include "cm2l/types.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cm2l::evaluation {

/// Metric value as a function of retrieval scope k, optionally aggregated
/// over split repetitions.
struct ScopeCurve {
    std::vector<int> ks;
    std::vector<double> values;  // mean over repeats
    int repeats = 1;
    Matrix per_repeat_values;    // repeats x |ks|
};

struct BaselineConfig {
    double cca_corr_threshold = 0.1;
    int pa_dim = 0;       // 0 = match the embedding dimension cap min(m1, m2)
    double ridge = 1e-6;  // CCA covariance ridge
};

/// A fitted retrieval method: projects queries from either modality into a
/// common space holding the training embeddings.
class Method {
public:
    virtual ~Method() = default;
    virtual RowVector project(const RowVector& x, int source_modality) const = 0;
    virtual const Matrix& train_z(int modality) const = 0;
};

class Cm2lMethod : public Method {
public:
    explicit Cm2lMethod(retrieval::FittedModel model) : model_(std::move(model)) {}
    RowVector project(const RowVector& x, int source_modality) const override;
    const Matrix& train_z(int modality) const override;
    const retrieval::FittedModel& model() const { return model_; }

private:
    retrieval::FittedModel model_;
};

class CcaMethod : public Method {
public:
    RowVector project(const RowVector& x, int source_modality) const override;
    const Matrix& train_z(int modality) const override;
    const Vector& correlations() const { return correlations_; }

    Vector correlations_;  // retained, non-increasing
    Matrix a_, b_;         // m1 x q, m2 x q canonical directions
    RowVector mu1_, mu2_;  // link means
    Matrix z1_, z2_;       // projected training features
};

class PaMethod : public Method {
public:
    RowVector project(const RowVector& x, int source_modality) const override;
    const Matrix& train_z(int modality) const override;

    Matrix dirs1_, dirs2_;  // PCA directions, m_j x pa_dim
    RowVector mu1_, mu2_;
    ose::Similarity sim_;   // maps modality-1 PCA coords onto modality-2's
    Matrix z1_, z2_;
};

/// CCA on the corresponding pairs only, ridge-regularized; keeps components
/// whose training canonical correlation exceeds the threshold.
CcaMethod fit_cca_baseline(const Matrix& x1, const Matrix& x2,
                           const data::CorrespondenceSet& links,
                           const BaselineConfig& cfg);

/// PCA each modality to pa_dim, then similarity Procrustes on the link
/// projections.
PaMethod fit_pa_baseline(const Matrix& x1, const Matrix& x2,
                         const data::CorrespondenceSet& links,
                         const BaselineConfig& cfg);

/// Top-k cross-modal retrieval accuracy per scope value. Queries come from
/// the source modality; neighbors and vote labels from the opposite
/// modality's training embedding.
ScopeCurve accuracy_scope(const Method& method, const Matrix& queries,
                          const std::vector<std::string>& query_labels,
                          const std::vector<std::string>& target_train_labels,
                          int source_modality, const std::vector<int>& ks);

/// -ln of the mean per-query RMSD between query and retrieved composition
/// vectors, clamped at 1e-12. retrieved[i] is the k x c block for query i.
double alogrmsd(const Matrix& query_compositions,
                const std::vector<Matrix>& retrieved_compositions);

ScopeCurve alogrmsd_scope(const Method& method, const Matrix& queries,
                          const Matrix& query_compositions,
                          const Matrix& target_train_compositions,
                          int source_modality, const std::vector<int>& ks);

enum class MetricKind { accuracy, alogrmsd };

struct ProtocolConfig {
    std::vector<std::string> methods;  // cm2l-i, cm2l-f, cca, pa
    data::SplitSpec split;
    int repeats = 10;
    std::vector<int> ks;
    MetricKind metric = MetricKind::accuracy;
    int direction = 12;  // 12 = modality 1 queries modality 2, 21 = reverse
    retrieval::FitParams fit;
    BaselineConfig baseline;
    int threads = 1;
};

std::unique_ptr<Method> fit_method(const std::string& name, const Matrix& x1,
                                   const Matrix& x2,
                                   const data::CorrespondenceSet& links,
                                   const ProtocolConfig& cfg);

/// Repeated split / fit / evaluate protocol; repeat r uses seed
/// derive_seed(split.seed, r). Returns one aggregated curve per method.
std::map<std::string, ScopeCurve> run_protocol(const data::ModalityDataset& d1,
                                               const data::ModalityDataset& d2,
                                               const data::CorrespondenceSet& c,
                                               const ProtocolConfig& cfg);

/// `method,direction,correspondence_fraction,k,metric,mean,std,repeat_values...`
void save_curves_csv(const std::map<std::string, ScopeCurve>& curves,
                     const ProtocolConfig& cfg, const std::filesystem::path& path);

}  // namespace cm2l::evaluation
