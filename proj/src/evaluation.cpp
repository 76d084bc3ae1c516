#include "cm2l/evaluation.hpp"

#include "cm2l/matrix_io.hpp"
#include "cm2l/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cm2l::evaluation {

namespace {

const char* kModule = "evaluation";

void fix_signs(Matrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
    }
}

/// Symmetric inverse square root with eigenvalue floor.
Matrix inv_sqrt(const Matrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector vals = es.eigenvalues().cwiseMax(std::max(floor, 1e-14));
    return es.eigenvectors() * vals.cwiseInverse().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

const char* metric_name(MetricKind m) {
    return m == MetricKind::accuracy ? "accuracy" : "alogrmsd";
}

}  // namespace

RowVector Cm2lMethod::project(const RowVector& x, int source_modality) const {
    return retrieval::project_query(x, model_, source_modality);
}

const Matrix& Cm2lMethod::train_z(int modality) const {
    return modality == 1 ? model_.embedding.z1 : model_.embedding.z2;
}

RowVector CcaMethod::project(const RowVector& x, int source_modality) const {
    if (source_modality == 1) {
        if (x.size() != a_.rows()) throw Error(kModule, "query dimension mismatch");
        return (x - mu1_) * a_;
    }
    if (x.size() != b_.rows()) throw Error(kModule, "query dimension mismatch");
    return (x - mu2_) * b_;
}

const Matrix& CcaMethod::train_z(int modality) const {
    return modality == 1 ? z1_ : z2_;
}

RowVector PaMethod::project(const RowVector& x, int source_modality) const {
    if (source_modality == 1) {
        if (x.size() != dirs1_.rows()) throw Error(kModule, "query dimension mismatch");
        return sim_.scale * ((x - mu1_) * dirs1_) * sim_.rotation + sim_.translation;
    }
    if (x.size() != dirs2_.rows()) throw Error(kModule, "query dimension mismatch");
    return (x - mu2_) * dirs2_;
}

const Matrix& PaMethod::train_z(int modality) const {
    return modality == 1 ? z1_ : z2_;
}

CcaMethod fit_cca_baseline(const Matrix& x1, const Matrix& x2,
                           const data::CorrespondenceSet& links,
                           const BaselineConfig& cfg) {
    links.validate(x1.rows(), x2.rows());
    if (cfg.cca_corr_threshold <= 0.0 || cfg.cca_corr_threshold >= 1.0)
        throw Error(kModule, "cca_corr_threshold must be in (0,1)");

    const auto nl = static_cast<Index>(links.pairs.size());
    const Index m1 = x1.cols(), m2 = x2.cols();
    Matrix p1(nl, m1), p2(nl, m2);
    for (Index i = 0; i < nl; ++i) {
        p1.row(i) = x1.row(links.pairs[i].first);
        p2.row(i) = x2.row(links.pairs[i].second);
    }
    RowVector mu1 = p1.colwise().mean();
    RowVector mu2 = p2.colwise().mean();
    Matrix c1 = p1.rowwise() - mu1;
    Matrix c2 = p2.rowwise() - mu2;
    const double denom = std::max<double>(1.0, static_cast<double>(nl - 1));

    Matrix c11 = c1.transpose() * c1 / denom + cfg.ridge * Matrix::Identity(m1, m1);
    Matrix c22 = c2.transpose() * c2 / denom + cfg.ridge * Matrix::Identity(m2, m2);
    Matrix c12 = c1.transpose() * c2 / denom;

    Matrix w1 = inv_sqrt(c11, cfg.ridge);
    Matrix w2 = inv_sqrt(c22, cfg.ridge);
    Eigen::JacobiSVD<Matrix> svd(w1 * c12 * w2,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);

    std::vector<int> keep;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        if (std::min(svd.singularValues()(i), 1.0) > cfg.cca_corr_threshold)
            keep.push_back(static_cast<int>(i));
    if (keep.empty())
        throw Error(kModule, "no CCA component above the correlation threshold");

    CcaMethod m;
    const int q = static_cast<int>(keep.size());
    m.correlations_.resize(q);
    m.a_.resize(m1, q);
    m.b_.resize(m2, q);
    for (int c = 0; c < q; ++c) {
        m.correlations_(c) = std::min(svd.singularValues()(keep[c]), 1.0);
        Vector a = w1 * svd.matrixU().col(keep[c]);
        Vector b = w2 * svd.matrixV().col(keep[c]);
        // Flip paired directions together so the correlation sign is kept.
        Index imax = 0;
        a.cwiseAbs().maxCoeff(&imax);
        if (a(imax) < 0.0) {
            a = -a;
            b = -b;
        }
        m.a_.col(c) = a;
        m.b_.col(c) = b;
    }
    m.mu1_ = mu1;
    m.mu2_ = mu2;
    m.z1_ = (x1.rowwise() - mu1) * m.a_;
    m.z2_ = (x2.rowwise() - mu2) * m.b_;
    return m;
}

PaMethod fit_pa_baseline(const Matrix& x1, const Matrix& x2,
                         const data::CorrespondenceSet& links,
                         const BaselineConfig& cfg) {
    links.validate(x1.rows(), x2.rows());
    const Index m1 = x1.cols(), m2 = x2.cols();
    int pa_dim = cfg.pa_dim > 0 ? cfg.pa_dim : static_cast<int>(std::min(m1, m2));
    if (pa_dim > std::min(m1, m2))
        throw Error(kModule, "pa_dim exceeds min(m1, m2)");
    if (static_cast<Index>(links.pairs.size()) < pa_dim + 1)
        throw Error(kModule, "insufficient links for Procrustes alignment");

    auto pca = [&](const Matrix& x, Matrix& dirs, RowVector& mu) {
        mu = x.colwise().mean();
        Matrix centered = x.rowwise() - mu;
        Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
        dirs = svd.matrixV().leftCols(pa_dim);
        fix_signs(dirs);
    };

    PaMethod m;
    pca(x1, m.dirs1_, m.mu1_);
    pca(x2, m.dirs2_, m.mu2_);

    const auto nl = static_cast<Index>(links.pairs.size());
    Matrix proj1(nl, pa_dim), proj2(nl, pa_dim);
    for (Index i = 0; i < nl; ++i) {
        proj1.row(i) = (x1.row(links.pairs[i].first) - m.mu1_) * m.dirs1_;
        proj2.row(i) = (x2.row(links.pairs[i].second) - m.mu2_) * m.dirs2_;
    }
    m.sim_ = ose::procrustes_similarity(proj1, proj2);

    Matrix pc1 = (x1.rowwise() - m.mu1_) * m.dirs1_;
    m.z1_ = m.sim_.scale * pc1 * m.sim_.rotation;
    m.z1_.rowwise() += m.sim_.translation;
    m.z2_ = (x2.rowwise() - m.mu2_) * m.dirs2_;
    return m;
}

ScopeCurve accuracy_scope(const Method& method, const Matrix& queries,
                          const std::vector<std::string>& query_labels,
                          const std::vector<std::string>& target_train_labels,
                          int source_modality, const std::vector<int>& ks) {
    if (query_labels.size() != static_cast<std::size_t>(queries.rows()))
        throw Error(kModule, "missing query labels");
    if (ks.empty()) throw Error(kModule, "empty scope list");
    for (int k : ks)
        if (k < 1) throw Error(kModule, "scope values must be positive");

    const int target = source_modality == 1 ? 2 : 1;
    const Matrix& tz = method.train_z(target);
    if (target_train_labels.size() != static_cast<std::size_t>(tz.rows()))
        throw Error(kModule, "missing target training labels");

    const int kmax = *std::max_element(ks.begin(), ks.end());
    std::vector<int> correct(ks.size(), 0);
    for (Index i = 0; i < queries.rows(); ++i) {
        RowVector z = method.project(queries.row(i), source_modality);
        retrieval::RankedResult res = retrieval::knn(z, tz, kmax);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const auto k = static_cast<std::size_t>(
                std::min<Index>(ks[ki], static_cast<Index>(res.indices.size())));
            std::vector<std::string> labels(k);
            std::vector<double> dists(k);
            for (std::size_t j = 0; j < k; ++j) {
                labels[j] = target_train_labels[res.indices[j]];
                dists[j] = res.distances[j];
            }
            if (retrieval::classify_by_retrieval(labels, dists) == query_labels[i])
                ++correct[ki];
        }
    }

    ScopeCurve curve;
    curve.ks = ks;
    curve.repeats = 1;
    curve.per_repeat_values.resize(1, static_cast<Index>(ks.size()));
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        double v = static_cast<double>(correct[ki]) / static_cast<double>(queries.rows());
        curve.values.push_back(v);
        curve.per_repeat_values(0, static_cast<Index>(ki)) = v;
    }
    return curve;
}

double alogrmsd(const Matrix& query_compositions,
                const std::vector<Matrix>& retrieved_compositions) {
    const Index nt = query_compositions.rows();
    if (nt == 0 || retrieved_compositions.size() != static_cast<std::size_t>(nt))
        throw Error(kModule, "query/retrieved composition counts differ");
    double total = 0.0;
    for (Index i = 0; i < nt; ++i) {
        const Matrix& r = retrieved_compositions[i];
        if (r.rows() < 1) throw Error(kModule, "k must be >= 1");
        if (r.cols() != query_compositions.cols())
            throw Error(kModule, "composition dimension mismatch");
        double sum_sq = 0.0;
        for (Index j = 0; j < r.rows(); ++j)
            sum_sq += (r.row(j) - query_compositions.row(i)).squaredNorm();
        total += std::sqrt(sum_sq / static_cast<double>(r.rows()));
    }
    double mean = total / static_cast<double>(nt);
    return -std::log(std::max(mean, 1e-12));
}

ScopeCurve alogrmsd_scope(const Method& method, const Matrix& queries,
                          const Matrix& query_compositions,
                          const Matrix& target_train_compositions,
                          int source_modality, const std::vector<int>& ks) {
    if (query_compositions.rows() != queries.rows())
        throw Error(kModule, "missing query compositions");
    if (ks.empty()) throw Error(kModule, "empty scope list");

    const int target = source_modality == 1 ? 2 : 1;
    const Matrix& tz = method.train_z(target);
    if (target_train_compositions.rows() != tz.rows())
        throw Error(kModule, "missing target training compositions");

    const int kmax = *std::max_element(ks.begin(), ks.end());
    std::vector<retrieval::RankedResult> results;
    results.reserve(queries.rows());
    for (Index i = 0; i < queries.rows(); ++i)
        results.push_back(
            retrieval::knn(method.project(queries.row(i), source_modality), tz, kmax));

    ScopeCurve curve;
    curve.ks = ks;
    curve.repeats = 1;
    curve.per_repeat_values.resize(1, static_cast<Index>(ks.size()));
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        std::vector<Matrix> retrieved;
        retrieved.reserve(queries.rows());
        for (Index i = 0; i < queries.rows(); ++i) {
            const auto k = static_cast<Index>(std::min<std::size_t>(
                static_cast<std::size_t>(ks[ki]), results[i].indices.size()));
            Matrix block(k, target_train_compositions.cols());
            for (Index j = 0; j < k; ++j)
                block.row(j) = target_train_compositions.row(results[i].indices[j]);
            retrieved.push_back(std::move(block));
        }
        double v = alogrmsd(query_compositions, retrieved);
        curve.values.push_back(v);
        curve.per_repeat_values(0, static_cast<Index>(ki)) = v;
    }
    return curve;
}

std::unique_ptr<Method> fit_method(const std::string& name, const Matrix& x1,
                                   const Matrix& x2,
                                   const data::CorrespondenceSet& links,
                                   const ProtocolConfig& cfg) {
    if (name == "cm2l-i")
        return std::make_unique<Cm2lMethod>(retrieval::fit_model(
            x1, x2, links, cfg.fit, retrieval::Variant::instance, cfg.threads));
    if (name == "cm2l-f")
        return std::make_unique<Cm2lMethod>(retrieval::fit_model(
            x1, x2, links, cfg.fit, retrieval::Variant::feature, cfg.threads));
    if (name == "cca")
        return std::make_unique<CcaMethod>(fit_cca_baseline(x1, x2, links, cfg.baseline));
    if (name == "pa")
        return std::make_unique<PaMethod>(fit_pa_baseline(x1, x2, links, cfg.baseline));
    throw Error(kModule, "unknown method '" + name + "'");
}

std::map<std::string, ScopeCurve> run_protocol(const data::ModalityDataset& d1,
                                               const data::ModalityDataset& d2,
                                               const data::CorrespondenceSet& c,
                                               const ProtocolConfig& cfg) {
    if (cfg.repeats < 1) throw Error(kModule, "repeats must be >= 1");
    if (cfg.methods.empty()) throw Error(kModule, "no methods requested");
    if (cfg.direction != 12 && cfg.direction != 21)
        throw Error(kModule, "direction must be 12 or 21");

    std::map<std::string, ScopeCurve> out;
    for (const auto& name : cfg.methods) {
        ScopeCurve curve;
        curve.ks = cfg.ks;
        curve.repeats = cfg.repeats;
        curve.per_repeat_values.resize(cfg.repeats, static_cast<Index>(cfg.ks.size()));
        out[name] = std::move(curve);
    }

    for (int r = 0; r < cfg.repeats; ++r) {
        data::SplitSpec split = cfg.split;
        split.seed = derive_seed(cfg.split.seed, static_cast<std::uint64_t>(r));
        retrieval::FitParams fit = cfg.fit;
        fit.pert.seed = derive_seed(split.seed, 1000);
        ProtocolConfig rcfg = cfg;
        rcfg.fit = fit;

        data::SplitResult sp = data::split_train_test(d1, d2, c, split);
        const data::ModalityDataset& src = cfg.direction == 12 ? sp.test1 : sp.test2;
        const data::ModalityDataset& tgt = cfg.direction == 12 ? sp.train2 : sp.train1;
        const int source_modality = cfg.direction == 12 ? 1 : 2;

        for (const auto& name : cfg.methods) {
            auto method = fit_method(name, sp.train1.features, sp.train2.features,
                                     sp.train_links, rcfg);
            ScopeCurve one;
            if (cfg.metric == MetricKind::accuracy) {
                if (!src.has_labels() || !tgt.has_labels())
                    throw Error(kModule, "accuracy metric requires labels");
                one = accuracy_scope(*method, src.features, src.labels, tgt.labels,
                                     source_modality, cfg.ks);
            } else {
                if (!src.has_compositions() || !tgt.has_compositions())
                    throw Error(kModule, "alogrmsd metric requires composition vectors");
                one = alogrmsd_scope(*method, src.features, src.compositions,
                                     tgt.compositions, source_modality, cfg.ks);
            }
            out[name].per_repeat_values.row(r) = one.per_repeat_values.row(0);
        }
    }

    for (auto& [name, curve] : out) {
        curve.values.resize(curve.ks.size());
        for (std::size_t ki = 0; ki < curve.ks.size(); ++ki)
            curve.values[ki] = curve.per_repeat_values.col(static_cast<Index>(ki)).mean();
    }
    return out;
}

void save_curves_csv(const std::map<std::string, ScopeCurve>& curves,
                     const ProtocolConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot open " + path.string() + " for writing");
    out << "method,direction,correspondence_fraction,k,metric,mean,std";
    int repeats = curves.empty() ? 0 : curves.begin()->second.repeats;
    for (int r = 0; r < repeats; ++r) out << ",repeat" << r;
    out << '\n';
    for (const auto& [name, curve] : curves) {
        for (std::size_t ki = 0; ki < curve.ks.size(); ++ki) {
            const auto col = curve.per_repeat_values.col(static_cast<Index>(ki));
            double mean = curve.values[ki];
            double sd = 0.0;
            if (curve.repeats > 1)
                sd = std::sqrt((col.array() - mean).square().sum() /
                               static_cast<double>(curve.repeats - 1));
            out << name << ',' << cfg.direction << ','
                << io::format_double(cfg.split.correspondence_fraction) << ','
                << curve.ks[ki] << ',' << metric_name(cfg.metric) << ','
                << io::format_double(mean) << ',' << io::format_double(sd);
            for (Index r = 0; r < col.size(); ++r)
                out << ',' << io::format_double(col(r));
            out << '\n';
        }
    }
}

}  // namespace cm2l::evaluation
