#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cm2l/data_model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace cm2l;
using namespace cm2l::data;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("load_dataset parses plain feature files") {
    auto p = tmp_file("dm_plain.csv", "f0,f1\n1,2\n3,4\n5.5,-6\n");
    auto d = load_dataset(p, false, 0);
    CHECK(d.n() == 3);
    CHECK(d.m() == 2);
    CHECK(d.features(2, 0) == doctest::Approx(5.5));
    CHECK_FALSE(d.has_labels());
    CHECK_FALSE(d.has_compositions());
}

TEST_CASE("load_dataset reports the offending line") {
    auto p = tmp_file("dm_bad.csv", "f0,f1\n1,2\n3\n");
    CHECK_THROWS_WITH_AS(load_dataset(p, false, 0),
                         doctest::Contains("line 3"), Error);

    auto q = tmp_file("dm_nonnum.csv", "f0,f1\n1,2\nx,4\n");
    CHECK_THROWS_WITH_AS(load_dataset(q, false, 0),
                         doctest::Contains("non-numeric"), Error);
}

TEST_CASE("load_dataset rejects compositions not summing to 1") {
    auto p = tmp_file("dm_comp.csv",
                      "f0,c0,c1,c2,c3,c4\n1,0.2,0.2,0.2,0.2,0.2\n2,0.2,0.2,0.2,0.1,0.1\n");
    CHECK_THROWS_WITH_AS(load_dataset(p, false, 5),
                         doctest::Contains("line 3"), Error);
}

TEST_CASE("load_dataset reads labels and compositions") {
    auto p = tmp_file("dm_full.csv", "f0,f1,c0,c1,label\n1,2,0.25,0.75,A\n3,4,0.5,0.5,B\n");
    auto d = load_dataset(p, true, 2);
    CHECK(d.labels == std::vector<std::string>{"A", "B"});
    CHECK(d.compositions(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("save/load round-trips numeric content") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 20;
    cfg.seed = 3;
    auto pair = generate_synthetic_pair(cfg);
    auto p = fs::temp_directory_path() / "dm_roundtrip.csv";
    save_dataset(pair.d1, p);
    auto back = load_dataset(p, true, 0);
    CHECK(back.n() == pair.d1.n());
    for (Index i = 0; i < back.n(); ++i)
        for (Index j = 0; j < back.m(); ++j)
            CHECK(back.features(i, j) ==
                  doctest::Approx(pair.d1.features(i, j)).epsilon(1e-12));
    CHECK(back.labels == pair.d1.labels);
}

TEST_CASE("synthetic generator is deterministic and labeled") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 400;
    cfg.n_classes = 4;
    cfg.seed = 11;
    auto a = generate_synthetic_pair(cfg);
    auto b = generate_synthetic_pair(cfg);
    CHECK(a.d1.features == b.d1.features);
    CHECK(a.d2.features == b.d2.features);
    CHECK(a.latent_angles == b.latent_angles);

    std::set<std::string> seen(a.d1.labels.begin(), a.d1.labels.end());
    CHECK(seen == std::set<std::string>{"0", "1", "2", "3"});

    // Correspondence pairs share the latent pre-image by construction.
    for (const auto& [i, j] : a.correspondences.pairs) CHECK(i == j);
    CHECK(a.d1.labels == a.d2.labels);
}

TEST_CASE("zero-noise generation depends only on the latent angles") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 8;
    cfg.m1 = 2;
    cfg.m2 = 2;
    cfg.noise_std = 0.0;
    cfg.seed = 7;
    auto a = generate_synthetic_pair(cfg);
    cfg.noise_std = 0.0;
    auto b = generate_synthetic_pair(cfg);
    CHECK(a.d1.features == b.d1.features);
    CHECK((a.d1.features.array().abs() <= 1.0).all());  // tanh range
}

TEST_CASE("synthetic config validation") {
    SyntheticConfig cfg;
    cfg.n_classes = 1;
    CHECK_THROWS_AS(generate_synthetic_pair(cfg), Error);
    cfg = SyntheticConfig{};
    cfg.n_per_modality = 2;
    cfg.n_classes = 4;
    CHECK_THROWS_AS(generate_synthetic_pair(cfg), Error);
}

TEST_CASE("split honors exact fractions") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 10;
    cfg.seed = 5;
    auto pair = generate_synthetic_pair(cfg);

    SplitSpec spec{0.8, 1.0, 42};
    auto r = split_train_test(pair.d1, pair.d2, pair.correspondences, spec);
    CHECK(r.train1.n() == 8);
    CHECK(r.train2.n() == 8);
    CHECK(r.test1.n() == 2);
    CHECK(r.train_links.pairs.size() == 8);

    spec.correspondence_fraction = 0.5;
    auto h = split_train_test(pair.d1, pair.d2, pair.correspondences, spec);
    CHECK(h.train1.n() == 8);
    CHECK(h.train_links.pairs.size() == 4);

    auto again = split_train_test(pair.d1, pair.d2, pair.correspondences, spec);
    CHECK(h.train_index1 == again.train_index1);
    CHECK(h.test_index2 == again.test_index2);
}

TEST_CASE("splits partition each modality") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 37;
    cfg.seed = 9;
    auto pair = generate_synthetic_pair(cfg);
    // Drop some correspondences so both paired and unpaired instances exist.
    pair.correspondences.pairs.resize(20);

    SplitSpec spec{0.8, 0.7, 123};
    auto r = split_train_test(pair.d1, pair.d2, pair.correspondences, spec);
    std::set<Index> all1(r.train_index1.begin(), r.train_index1.end());
    all1.insert(r.test_index1.begin(), r.test_index1.end());
    CHECK(all1.size() == 37);
    CHECK(r.train_index1.size() + r.test_index1.size() == 37);

    // Retained links reference valid train rows and point at true pairs.
    for (const auto& [a, b] : r.train_links.pairs) {
        CHECK(a < static_cast<Index>(r.train_index1.size()));
        Index orig1 = r.train_index1[a];
        Index orig2 = r.train_index2[b];
        bool found = false;
        for (const auto& [p, q] : pair.correspondences.pairs)
            if (p == orig1 && q == orig2) found = true;
        CHECK(found);
    }
}

TEST_CASE("split refuses starved train sides") {
    SyntheticConfig cfg;
    cfg.n_per_modality = 2;
    cfg.n_classes = 2;
    auto pair = generate_synthetic_pair(cfg);
    SplitSpec spec{0.5, 1.0, 0};
    CHECK_THROWS_AS(split_train_test(pair.d1, pair.d2, pair.correspondences, spec), Error);
}

TEST_CASE("correspondence validation") {
    CorrespondenceSet c;
    CHECK_THROWS_AS(c.validate(3, 3), Error);
    c.pairs = {{0, 1}, {0, 2}};
    CHECK_THROWS_AS(c.validate(3, 3), Error);
    c.pairs = {{0, 5}};
    CHECK_THROWS_AS(c.validate(3, 3), Error);
    c.pairs = {{0, 1}, {2, 0}};
    CHECK_NOTHROW(c.validate(3, 3));
}
