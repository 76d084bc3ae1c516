#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cm2l/retrieval.hpp"
#include "cm2l/rng.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <random>

using namespace cm2l;
using namespace cm2l::retrieval;
namespace fs = std::filesystem;

namespace {

Matrix random_matrix(Index n, Index m, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix p(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) p(i, j) = normal(rng);
    return p;
}

data::CorrespondenceSet full_links(Index n) {
    data::CorrespondenceSet c;
    for (Index i = 0; i < n; ++i) c.pairs.emplace_back(i, i);
    return c;
}

FitParams small_params(std::uint64_t seed) {
    FitParams p;
    p.pert = {5, 0.5, 2, seed};
    p.scaling = {2, 1e-12};
    p.k_ose = 10;
    return p;
}

}  // namespace

TEST_CASE("knn basics and tie rule") {
    Matrix z(4, 2);
    z << 0, 0, 1, 0, 2, 0, 0.5, 0;

    RowVector q(2);
    q << 2, 0;
    auto r = knn(q, z, 1);
    CHECK(r.indices == std::vector<Index>{2});
    CHECK(r.distances[0] == 0.0);

    q << 0, 0;
    auto r2 = knn(q, z, 2);
    CHECK(r2.indices == std::vector<Index>{0, 3});

    Matrix ties(2, 1);
    ties << 1, -1;
    RowVector origin = RowVector::Zero(1);
    CHECK(knn(origin, ties, 2).indices == std::vector<Index>{0, 1});

    CHECK(knn(origin, ties, 10).indices.size() == 2);  // k > n returns all
    CHECK_THROWS_AS(knn(origin, Matrix(0, 1), 1), Error);
    CHECK_THROWS_AS(knn(origin, ties, 0), Error);
}

TEST_CASE("knn equals a full sort truncated at k") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Matrix z = random_matrix(30, 3, 500 + seed);
        RowVector q = random_matrix(1, 3, 600 + seed).row(0);
        auto r = knn(q, z, 7);
        auto oracle = oracles::sorted_distances(q, z);
        for (int i = 0; i < 7; ++i) {
            CHECK(r.indices[i] == oracle[i].second);
            CHECK(r.distances[i] == oracle[i].first);
        }
    }
}

TEST_CASE("classification vote") {
    CHECK(classify_by_retrieval({"A", "A", "B"}, {0.1, 0.2, 0.05}) == "A");
    CHECK(classify_by_retrieval({"A", "B"}, {0.1, 0.2}) == "A");
    CHECK(classify_by_retrieval({"B", "A"}, {0.1, 0.2}) == "B");
    CHECK(classify_by_retrieval({"C"}, {1.0}) == "C");
}

TEST_CASE("identical modalities collapse the cross-modal diagonal") {
    Matrix x = random_matrix(40, 5, 77);
    auto params = small_params(13);
    graph::NeighborhoodGraph g = graph::pmst(x, params.pert);
    auto blocks = affinity::compute_affinity_blocks(x, x, g, g, full_links(40),
                                                    params.scaling);
    auto d = affinity::joint_dissimilarity(blocks);
    for (Index i = 0; i < 40; ++i) CHECK(d.d(i, 40 + i) == 0.0);

    auto model = fit_model(x, x, full_links(40), params, Variant::instance);
    for (Index i = 0; i < 40; ++i) {
        auto r = knn(model.embedding.z1.row(i), model.embedding.z2, 1);
        CHECK(r.indices[0] == i);
        CHECK(r.distances[0] < 1e-8);
    }
}

TEST_CASE("direction machinery is symmetric under swapping") {
    Matrix x1 = random_matrix(30, 4, 81);
    Matrix x2 = random_matrix(30, 4, 82);
    auto params = small_params(3);
    auto fwd = fit_model(x1, x2, full_links(30), params, Variant::instance);
    auto swp = fit_model(x2, x1, full_links(30), params, Variant::instance);

    // Same joint geometry up to block order: retrieval answers mirror.
    for (Index i = 0; i < 5; ++i) {
        auto a = knn(fwd.embedding.z1.row(i), fwd.embedding.z2, 3);
        auto b = knn(swp.embedding.z2.row(i), swp.embedding.z1, 3);
        CHECK(a.indices == b.indices);
        for (std::size_t j = 0; j < a.distances.size(); ++j)
            CHECK(a.distances[j] == doctest::Approx(b.distances[j]).epsilon(1e-9));
    }
}

TEST_CASE("feature-level queries project linearly") {
    Matrix x1 = random_matrix(25, 4, 91);
    Matrix x2 = random_matrix(25, 3, 92);
    auto model = fit_model(x1, x2, full_links(25), small_params(7), Variant::feature);
    REQUIRE(model.feature_maps.has_value());
    CHECK(project_query(RowVector::Zero(4), model, 1).isZero(0.0));
    CHECK_THROWS_AS(project_query(RowVector::Zero(5), model, 1), Error);
    CHECK_THROWS_AS(project_query(RowVector::Zero(4), model, 3), Error);
}

TEST_CASE("model archive round-trips") {
    Matrix x1 = random_matrix(25, 4, 101);
    Matrix x2 = random_matrix(25, 3, 102);

    for (auto variant : {Variant::instance, Variant::feature}) {
        auto model = fit_model(x1, x2, full_links(25), small_params(5), variant);
        fs::path dir = fs::temp_directory_path() /
                       ("cm2l_model_" + variant_name(variant));
        fs::remove_all(dir);
        save_model(model, dir);
        auto back = load_model(dir);

        CHECK(back.variant == model.variant);
        CHECK(back.embedding.q == model.embedding.q);
        CHECK((back.embedding.z1 - model.embedding.z1).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((back.train_x2 - model.train_x2).cwiseAbs().maxCoeff() < 1e-15);

        RowVector q = x1.row(3);
        RowVector a = project_query(q, model, 1);
        RowVector b = project_query(q, back, 1);
        CHECK((a - b).norm() < 1e-9);
    }
}

TEST_CASE("fit is deterministic") {
    Matrix x1 = random_matrix(20, 3, 111);
    Matrix x2 = random_matrix(20, 3, 112);
    auto a = fit_model(x1, x2, full_links(20), small_params(9), Variant::instance);
    auto b = fit_model(x1, x2, full_links(20), small_params(9), Variant::instance);
    CHECK(a.embedding.z1 == b.embedding.z1);
    CHECK(a.embedding.z2 == b.embedding.z2);
}
