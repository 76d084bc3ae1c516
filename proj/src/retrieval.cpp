#include "cm2l/retrieval.hpp"

#include "cm2l/matrix_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

namespace cm2l::retrieval {

namespace {

const char* kModule = "retrieval";

nlohmann::json params_to_json(const FitParams& p) {
    nlohmann::json j;
    j["t_p"] = p.pert.t_p;
    j["r_p"] = p.pert.r_p;
    j["k_noise"] = p.pert.k_noise;
    j["seed"] = p.pert.seed;
    j["k_scale"] = p.scaling.k_scale;
    j["eps_scale"] = p.scaling.eps_scale;
    j["eigen_threshold"] = p.embed.eigen_threshold;
    if (p.embed.q_max) j["q_max"] = *p.embed.q_max;
    j["ridge_mu"] = p.embed.ridge_mu;
    j["k_ose"] = p.k_ose;
    return j;
}

}  // namespace

std::string variant_name(Variant v) {
    return v == Variant::instance ? "instance" : "feature";
}

Variant parse_variant(const std::string& s) {
    if (s == "instance" || s == "i") return Variant::instance;
    if (s == "feature" || s == "f") return Variant::feature;
    throw Error(kModule, "unknown variant '" + s + "'");
}

FittedModel fit_model(const Matrix& x1, const Matrix& x2,
                      const data::CorrespondenceSet& links, const FitParams& params,
                      Variant variant, int threads) {
    links.validate(x1.rows(), x2.rows());

    FitParams p = params;
    if (!p.embed.q_max)
        p.embed.q_max = static_cast<int>(std::min(x1.cols(), x2.cols()));

    // Same seed for both modalities: identical inputs give identical graphs.
    graph::NeighborhoodGraph g1 = graph::pmst(x1, p.pert, threads);
    graph::NeighborhoodGraph g2 = graph::pmst(x2, p.pert, threads);
    affinity::AffinityBlocks blocks =
        affinity::compute_affinity_blocks(x1, x2, g1, g2, links, p.scaling);
    affinity::JointDissimilarity d = affinity::joint_dissimilarity(blocks);

    FittedModel model;
    model.variant = variant;
    model.train_x1 = x1;
    model.train_x2 = x2;
    if (variant == Variant::instance) {
        model.embedding = embedding::embed_instance_level(d, x1.rows(), p.embed);
    } else {
        embedding::FeatureMaps maps = embedding::fit_feature_level(x1, x2, d, p.embed);
        model.embedding.z1 = x1 * maps.alpha;
        model.embedding.z2 = x2 * maps.beta;
        model.embedding.eigenvalues = maps.eigenvalues;
        model.embedding.q = static_cast<int>(maps.alpha.cols());
        model.feature_maps = std::move(maps);
    }
    model.ose_cfg = ose::OseConfig{p.k_ose, model.embedding.q};
    model.provenance = params_to_json(p);
    model.provenance["variant"] = variant_name(variant);
    return model;
}

RowVector project_query(const RowVector& x_q, const FittedModel& model,
                        int source_modality) {
    if (source_modality != 1 && source_modality != 2)
        throw Error(kModule, "source modality must be 1 or 2");
    if (model.variant == Variant::feature)
        return embedding::project_feature_level(x_q, *model.feature_maps, source_modality);
    const Matrix& x = source_modality == 1 ? model.train_x1 : model.train_x2;
    const Matrix& z = source_modality == 1 ? model.embedding.z1 : model.embedding.z2;
    if (x_q.size() != x.cols())
        throw Error(kModule, "query dimension mismatch: got " +
                                 std::to_string(x_q.size()) + ", expected " +
                                 std::to_string(x.cols()));
    return ose::out_of_sample(x_q, x, z, model.ose_cfg);
}

RankedResult knn(const RowVector& z_q, const Matrix& target_z, int k) {
    const Index n = target_z.rows();
    if (n == 0) throw Error(kModule, "empty retrieval target");
    if (k < 1) throw Error(kModule, "k must be >= 1");
    if (z_q.size() != target_z.cols())
        throw Error(kModule, "latent dimension mismatch");

    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<double> d(n);
    for (Index i = 0; i < n; ++i) d[i] = (target_z.row(i) - z_q).norm();
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return d[a] < d[b]; });

    RankedResult r;
    const Index take = std::min<Index>(k, n);
    for (Index i = 0; i < take; ++i) {
        r.indices.push_back(order[i]);
        r.distances.push_back(d[order[i]]);
    }
    return r;
}

std::string classify_by_retrieval(const std::vector<std::string>& neighbor_labels,
                                  const std::vector<double>& neighbor_distances) {
    if (neighbor_labels.empty())
        throw Error(kModule, "no neighbors to classify from");
    if (neighbor_labels.size() != neighbor_distances.size())
        throw Error(kModule, "label and distance lists differ in length");

    std::map<std::string, int> counts;
    std::map<std::string, double> nearest;
    for (std::size_t i = 0; i < neighbor_labels.size(); ++i) {
        const auto& l = neighbor_labels[i];
        counts[l] += 1;
        auto it = nearest.find(l);
        if (it == nearest.end() || neighbor_distances[i] < it->second)
            nearest[l] = neighbor_distances[i];
    }
    int best_count = 0;
    for (const auto& [l, c] : counts) best_count = std::max(best_count, c);
    std::string best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [l, c] : counts) {
        if (c != best_count) continue;
        if (nearest[l] < best_dist) {
            best_dist = nearest[l];
            best = l;
        }
    }
    return best;
}

void save_model(const FittedModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["format_version"] = "cm2l-v1";
    meta["variant"] = variant_name(model.variant);
    meta["n1"] = model.embedding.z1.rows();
    meta["n2"] = model.embedding.z2.rows();
    meta["q"] = model.embedding.q;
    meta["eigenvalues"] = model.embedding.eigenvalues;
    meta["k_ose"] = model.ose_cfg.k_ose;
    meta["provenance"] = model.provenance;
    std::ofstream out(dir / "meta.json");
    if (!out) throw Error(kModule, "cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
    out.close();

    io::write_matrix_csv(model.embedding.z1, dir / "z1.csv");
    io::write_matrix_csv(model.embedding.z2, dir / "z2.csv");
    io::write_matrix_csv(model.train_x1, dir / "x1.csv");
    io::write_matrix_csv(model.train_x2, dir / "x2.csv");
    if (model.feature_maps) {
        io::write_matrix_csv(model.feature_maps->alpha, dir / "alpha.csv");
        io::write_matrix_csv(model.feature_maps->beta, dir / "beta.csv");
    }
}

FittedModel load_model(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw Error(kModule, "cannot open " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "malformed meta.json: " + std::string(e.what()));
    }
    if (meta.value("format_version", "") != "cm2l-v1")
        throw Error(kModule, "unsupported model format version");

    FittedModel model;
    model.variant = parse_variant(meta.at("variant").get<std::string>());
    model.embedding.z1 = io::read_matrix_csv(dir / "z1.csv");
    model.embedding.z2 = io::read_matrix_csv(dir / "z2.csv");
    model.train_x1 = io::read_matrix_csv(dir / "x1.csv");
    model.train_x2 = io::read_matrix_csv(dir / "x2.csv");
    model.embedding.q = meta.at("q").get<int>();
    model.embedding.eigenvalues = meta.at("eigenvalues").get<std::vector<double>>();
    model.ose_cfg = ose::OseConfig{meta.at("k_ose").get<int>(), model.embedding.q};
    model.provenance = meta.value("provenance", nlohmann::json::object());
    if (model.variant == Variant::feature) {
        embedding::FeatureMaps maps;
        maps.alpha = io::read_matrix_csv(dir / "alpha.csv");
        maps.beta = io::read_matrix_csv(dir / "beta.csv");
        maps.eigenvalues = model.embedding.eigenvalues;
        model.feature_maps = std::move(maps);
    }
    if (model.embedding.z1.rows() != model.train_x1.rows() ||
        model.embedding.z2.rows() != model.train_x2.rows())
        throw Error(kModule, "embedding rows do not match training features");
    return model;
}

}  // namespace cm2l::retrieval
