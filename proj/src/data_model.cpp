#include "cm2l/data_model.hpp"

#include "cm2l/matrix_io.hpp"
#include "cm2l/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace cm2l::data {

namespace {

const char* kModule = "data_model";

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, int line_no) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw Error(kModule, "line " + std::to_string(line_no) +
                                 ": non-numeric value '" + cell + "'");
    return v;
}

}  // namespace

void ModalityDataset::validate() const {
    if (n() < 1 || m() < 1) throw Error(kModule, "dataset must be at least 1x1");
    if (!features.allFinite()) throw Error(kModule, "non-finite feature entry");
    if (has_labels() && static_cast<Index>(labels.size()) != n())
        throw Error(kModule, "label count does not match instance count");
    if (has_compositions()) {
        if (compositions.rows() != n())
            throw Error(kModule, "composition row count does not match instance count");
        for (Index i = 0; i < compositions.rows(); ++i) {
            if ((compositions.row(i).array() < 0.0).any() ||
                (compositions.row(i).array() > 1.0).any())
                throw Error(kModule, "composition entry outside [0,1] at row " +
                                         std::to_string(i));
            if (std::abs(compositions.row(i).sum() - 1.0) > 1e-9)
                throw Error(kModule,
                            "composition row " + std::to_string(i) + " does not sum to 1");
        }
    }
}

void CorrespondenceSet::validate(Index n1, Index n2) const {
    if (pairs.empty()) throw Error(kModule, "correspondence set is empty");
    if (static_cast<Index>(pairs.size()) > std::min(n1, n2))
        throw Error(kModule, "more correspondences than instances");
    std::set<Index> seen1, seen2;
    for (const auto& [a, b] : pairs) {
        if (a < 0 || a >= n1 || b < 0 || b >= n2)
            throw Error(kModule, "correspondence index out of range");
        if (!seen1.insert(a).second || !seen2.insert(b).second)
            throw Error(kModule, "index appears in more than one correspondence");
    }
}

ModalityDataset load_dataset(const std::filesystem::path& path, bool has_labels,
                             int composition_cols) {
    if (composition_cols < 0) throw Error(kModule, "composition_cols must be >= 0");
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(kModule, path.string() + " is empty");
    const int header_cols = static_cast<int>(split_line(line).size());
    const int label_cols = has_labels ? 1 : 0;
    const int m = header_cols - composition_cols - label_cols;
    if (m < 1)
        throw Error(kModule, "header has " + std::to_string(header_cols) +
                                 " columns, too few for the requested layout");

    std::vector<std::vector<double>> feats, comps;
    std::vector<std::string> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != header_cols)
            throw Error(kModule, "line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header_cols) + " columns, got " +
                                     std::to_string(cells.size()));
        std::vector<double> f(m), c(composition_cols);
        for (int j = 0; j < m; ++j) f[j] = parse_cell(cells[j], line_no);
        double sum = 0.0;
        for (int j = 0; j < composition_cols; ++j) {
            c[j] = parse_cell(cells[m + j], line_no);
            sum += c[j];
        }
        if (composition_cols > 0 && std::abs(sum - 1.0) > 1e-6)
            throw Error(kModule, "line " + std::to_string(line_no) +
                                     ": composition row sums to " + std::to_string(sum));
        feats.push_back(std::move(f));
        if (composition_cols > 0) comps.push_back(std::move(c));
        if (has_labels) labels.push_back(cells.back());
    }
    if (feats.empty()) throw Error(kModule, path.string() + " has no data rows");

    ModalityDataset d;
    d.modality_id = path.stem().string();
    d.features.resize(static_cast<Index>(feats.size()), m);
    for (Index i = 0; i < d.features.rows(); ++i)
        for (Index j = 0; j < m; ++j) d.features(i, j) = feats[i][j];
    if (composition_cols > 0) {
        d.compositions.resize(d.features.rows(), composition_cols);
        for (Index i = 0; i < d.compositions.rows(); ++i)
            for (int j = 0; j < composition_cols; ++j) d.compositions(i, j) = comps[i][j];
    }
    d.labels = std::move(labels);
    d.validate();
    return d;
}

void save_dataset(const ModalityDataset& d, const std::filesystem::path& path) {
    d.validate();
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot open " + path.string() + " for writing");
    for (Index j = 0; j < d.m(); ++j) {
        if (j) out << ',';
        out << 'f' << j;
    }
    for (Index j = 0; j < d.compositions.cols(); ++j) out << ",c" << j;
    if (d.has_labels()) out << ",label";
    out << '\n';
    for (Index i = 0; i < d.n(); ++i) {
        for (Index j = 0; j < d.m(); ++j) {
            if (j) out << ',';
            out << io::format_double(d.features(i, j));
        }
        for (Index j = 0; j < d.compositions.cols(); ++j)
            out << ',' << io::format_double(d.compositions(i, j));
        if (d.has_labels()) out << ',' << d.labels[i];
        out << '\n';
    }
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(kModule, path.string() + " is empty");
    CorrespondenceSet c;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != 2)
            throw Error(kModule, "line " + std::to_string(line_no) +
                                     ": expected 2 columns, got " +
                                     std::to_string(cells.size()));
        c.pairs.emplace_back(static_cast<Index>(parse_cell(cells[0], line_no)),
                             static_cast<Index>(parse_cell(cells[1], line_no)));
    }
    return c;
}

void save_correspondences(const CorrespondenceSet& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot open " + path.string() + " for writing");
    out << "idx1,idx2\n";
    for (const auto& [a, b] : c.pairs) out << a << ',' << b << '\n';
}

SyntheticPair generate_synthetic_pair(const SyntheticConfig& cfg) {
    if (cfg.n_classes < 2) throw Error(kModule, "n_classes must be >= 2");
    if (cfg.n_per_modality < cfg.n_classes)
        throw Error(kModule, "n_per_modality must be >= n_classes");
    if (cfg.m1 < 1 || cfg.m2 < 1) throw Error(kModule, "ambient dims must be >= 1");
    if (cfg.latent_dim < 1 || cfg.latent_dim > std::min(cfg.m1, cfg.m2))
        throw Error(kModule, "latent_dim must be in [1, min(m1, m2)]");
    if (cfg.noise_std < 0) throw Error(kModule, "noise_std must be >= 0");

    const int n = cfg.n_per_modality;
    SyntheticPair out;
    out.latent_angles.resize(n);

    auto angle_rng = make_rng(cfg.seed, 0);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    std::vector<std::string> labels(n);
    Matrix latent(n, 2);
    for (int i = 0; i < n; ++i) {
        double theta = uni(angle_rng);
        out.latent_angles[i] = theta;
        latent(i, 0) = std::cos(theta);
        latent(i, 1) = std::sin(theta);
        int sector = std::min(cfg.n_classes - 1,
                              static_cast<int>(theta / (2.0 * std::numbers::pi) * cfg.n_classes));
        labels[i] = std::to_string(sector);
    }

    auto make_modality = [&](int m, std::uint64_t map_stream,
                             std::uint64_t noise_stream) {
        auto map_rng = make_rng(cfg.seed, map_stream);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix map(m, 2);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < 2; ++j) map(i, j) = normal(map_rng);
        Matrix feats = (latent * map.transpose()).array().tanh();
        auto noise_rng = make_rng(cfg.seed, noise_stream);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (Index i = 0; i < feats.rows(); ++i)
            for (Index j = 0; j < feats.cols(); ++j)
                feats(i, j) += cfg.noise_std * noise(noise_rng);
        return feats;
    };

    out.d1.modality_id = "synthetic-1";
    out.d1.features = make_modality(cfg.m1, 1, 3);
    out.d1.labels = labels;
    out.d2.modality_id = "synthetic-2";
    out.d2.features = make_modality(cfg.m2, 2, 4);
    out.d2.labels = labels;
    for (int i = 0; i < n; ++i) out.correspondences.pairs.emplace_back(i, i);
    return out;
}

SplitResult split_train_test(const ModalityDataset& d1, const ModalityDataset& d2,
                             const CorrespondenceSet& c, const SplitSpec& spec) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw Error(kModule, "train_fraction must be in (0,1)");
    if (spec.correspondence_fraction <= 0.0 || spec.correspondence_fraction > 1.0)
        throw Error(kModule, "correspondence_fraction must be in (0,1]");
    c.validate(d1.n(), d2.n());

    std::vector<bool> paired1(d1.n(), false), paired2(d2.n(), false);
    for (const auto& [a, b] : c.pairs) {
        paired1[a] = true;
        paired2[b] = true;
    }
    std::vector<Index> unpaired1, unpaired2;
    for (Index i = 0; i < d1.n(); ++i)
        if (!paired1[i]) unpaired1.push_back(i);
    for (Index i = 0; i < d2.n(); ++i)
        if (!paired2[i]) unpaired2.push_back(i);

    auto pairs = c.pairs;
    {
        auto rng = make_rng(spec.seed, 0);
        std::shuffle(pairs.begin(), pairs.end(), rng);
    }
    {
        auto rng = make_rng(spec.seed, 1);
        std::shuffle(unpaired1.begin(), unpaired1.end(), rng);
    }
    {
        auto rng = make_rng(spec.seed, 2);
        std::shuffle(unpaired2.begin(), unpaired2.end(), rng);
    }

    const auto n_train_pairs = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(pairs.size())));
    const auto n_train_u1 = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(unpaired1.size())));
    const auto n_train_u2 = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(unpaired2.size())));

    SplitResult r;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto& idx1 = p < n_train_pairs ? r.train_index1 : r.test_index1;
        auto& idx2 = p < n_train_pairs ? r.train_index2 : r.test_index2;
        idx1.push_back(pairs[p].first);
        idx2.push_back(pairs[p].second);
    }
    const auto n_links = static_cast<std::size_t>(
        std::ceil(spec.correspondence_fraction * static_cast<double>(n_train_pairs)));
    for (std::size_t p = 0; p < std::min(n_links, n_train_pairs); ++p)
        r.train_links.pairs.emplace_back(static_cast<Index>(p), static_cast<Index>(p));
    for (std::size_t i = 0; i < unpaired1.size(); ++i)
        (i < n_train_u1 ? r.train_index1 : r.test_index1).push_back(unpaired1[i]);
    for (std::size_t i = 0; i < unpaired2.size(); ++i)
        (i < n_train_u2 ? r.train_index2 : r.test_index2).push_back(unpaired2[i]);

    if (r.train_index1.size() < 2 || r.train_index2.size() < 2)
        throw Error(kModule, "train split would have fewer than 2 instances");

    auto take = [](const ModalityDataset& d, const std::vector<Index>& idx) {
        ModalityDataset out;
        out.modality_id = d.modality_id;
        out.features.resize(static_cast<Index>(idx.size()), d.m());
        if (d.has_compositions())
            out.compositions.resize(static_cast<Index>(idx.size()), d.compositions.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.features.row(static_cast<Index>(i)) = d.features.row(idx[i]);
            if (d.has_labels()) out.labels.push_back(d.labels[idx[i]]);
            if (d.has_compositions())
                out.compositions.row(static_cast<Index>(i)) = d.compositions.row(idx[i]);
        }
        return out;
    };
    r.train1 = take(d1, r.train_index1);
    r.train2 = take(d2, r.train_index2);
    r.test1 = take(d1, r.test_index1);
    r.test2 = take(d2, r.test_index2);
    return r;
}

}  // namespace cm2l::data
