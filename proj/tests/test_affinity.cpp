#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cm2l/affinity.hpp"
#include "cm2l/graph.hpp"
#include "cm2l/rng.hpp"

#include <cmath>
#include <random>

using namespace cm2l;
using namespace cm2l::affinity;

namespace {

Matrix random_points(Index n, Index m, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Matrix p(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) p(i, j) = uni(rng);
    return p;
}

}  // namespace

TEST_CASE("local scales are squared k-th neighbor distances") {
    Matrix p(3, 1);
    p << 0, 1, 3;
    Vector s1 = local_scales(p, ScalingConfig{1, 1e-12});
    CHECK(s1(0) == doctest::Approx(1));
    CHECK(s1(1) == doctest::Approx(1));
    CHECK(s1(2) == doctest::Approx(4));

    Vector s2 = local_scales(p, ScalingConfig{2, 1e-12});
    CHECK(s2(0) == doctest::Approx(9));
    CHECK(s2(1) == doctest::Approx(4));
    CHECK(s2(2) == doctest::Approx(9));
}

TEST_CASE("duplicate points hit the scale floor") {
    Matrix p(3, 2);
    p << 1, 1, 1, 1, 5, 5;
    Vector s = local_scales(p, ScalingConfig{1, 1e-12});
    CHECK(s(0) == 1e-12);
    CHECK(s(1) == 1e-12);
}

TEST_CASE("local_scales requires k_scale < n") {
    Matrix p = random_points(4, 2, 1);
    CHECK_THROWS_AS(local_scales(p, ScalingConfig{4, 1e-12}), Error);
}

TEST_CASE("scaled distance follows the formula") {
    Matrix p(2, 1);
    p << 0, 2;
    Vector s(2);
    s << 1, 1;
    Matrix d = scaled_distance_matrix(p, s);
    CHECK(d(0, 1) == doctest::Approx(2.0));
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 0) == d(0, 1));
}

TEST_CASE("scaled distances transform as 1/c^2 under input scaling") {
    Matrix p = random_points(10, 3, 5);
    const double c = 3.7;
    ScalingConfig cfg{2, 1e-12};
    Matrix d = scaled_distance_matrix(p, local_scales(p, cfg));
    Matrix dc = scaled_distance_matrix(c * p, local_scales(c * p, cfg));
    CHECK((dc - d / (c * c)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalize_distances maps the max off-diagonal to 1") {
    Matrix d(3, 3);
    d << 0, 5, 2, 5, 0, 1, 2, 1, 0;
    Matrix n = normalize_distances(d);
    CHECK(n(0, 1) == doctest::Approx(1.0));
    CHECK(n(0, 2) == doctest::Approx(0.4));
    CHECK(normalize_distances(n) == n);  // idempotent

    Matrix z = Matrix::Zero(3, 3);
    CHECK(normalize_distances(z) == z);
}

TEST_CASE("intra affinity masks by the graph and keeps a unit diagonal") {
    graph::NeighborhoodGraph g;
    g.weights.resize(2, 2);
    g.weights << 0, 0.5, 0.5, 0;
    Matrix d(2, 2);
    d << 0, std::log(2.0), std::log(2.0), 0;
    Matrix w = intra_affinity(d, g);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(0, 1) == doctest::Approx(0.25));

    g.weights << 0, 0, 0, 0;
    CHECK(intra_affinity(d, g)(0, 1) == 0.0);

    g.weights << 0, 1, 1, 0;
    Matrix zero_dist = Matrix::Zero(2, 2);
    CHECK(intra_affinity(zero_dist, g)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("inter affinity is the max over links") {
    Matrix w11 = Matrix::Identity(2, 2);
    Matrix w22 = Matrix::Identity(2, 2);
    w11(0, 1) = w11(1, 0) = 0.5;
    w22(0, 1) = w22(1, 0) = 0.32;

    data::CorrespondenceSet single;
    single.pairs = {{1, 0}};
    // W12[0][1] = sqrt(w11[0][1] * w22[0][1]) = sqrt(0.16)
    Matrix w12 = inter_affinity(w11, w22, single);
    CHECK(w12(0, 1) == doctest::Approx(0.4));
    // Link endpoint paired with b, queried at j=b: unit diagonals force 1.
    CHECK(w12(1, 0) == doctest::Approx(1.0));

    data::CorrespondenceSet both;
    both.pairs = {{0, 0}, {1, 0}};
    Matrix w12b = inter_affinity(w11, w22, both);
    CHECK(w12b(0, 1) >= w12(0, 1));  // superset never decreases
    CHECK(w12b(0, 0) == doctest::Approx(1.0));

    data::CorrespondenceSet empty;
    CHECK_THROWS_AS(inter_affinity(w11, w22, empty), Error);
}

TEST_CASE("joint dissimilarity complements the affinity blocks") {
    AffinityBlocks b;
    b.w11 = Matrix::Identity(2, 2);
    b.w22 = Matrix::Identity(2, 2);
    b.w12.resize(2, 2);
    b.w12 << 0.6, 0, 0, 0.3;
    auto d = joint_dissimilarity(b);
    CHECK(d.d.diagonal().isZero(0.0));
    CHECK(d.d(0, 2) == doctest::Approx(0.4));
    CHECK(d.d(2, 0) == doctest::Approx(0.4));
    CHECK(d.d(0, 3) == doctest::Approx(1.0));  // zero affinity
    CHECK(d.d == d.d.transpose());
}

TEST_CASE("the full chain yields a symmetric [0,1] dissimilarity") {
    Matrix x1 = random_points(15, 3, 101);
    Matrix x2 = random_points(12, 4, 102);
    graph::PerturbationConfig pc{5, 0.5, 2, 9};
    auto g1 = graph::pmst(x1, pc);
    auto g2 = graph::pmst(x2, pc);
    data::CorrespondenceSet links;
    links.pairs = {{0, 0}, {3, 2}, {7, 5}};
    auto blocks = compute_affinity_blocks(x1, x2, g1, g2, links, ScalingConfig{2, 1e-12});
    auto d = joint_dissimilarity(blocks);

    CHECK(d.d == d.d.transpose());
    CHECK(d.d.diagonal().isZero(0.0));
    CHECK(d.d.minCoeff() >= 0.0);
    CHECK(d.d.maxCoeff() <= 1.0);

    // Mask consistency: positive intra affinity off the diagonal needs an edge.
    for (Index i = 0; i < 15; ++i)
        for (Index j = 0; j < 15; ++j)
            if (i != j && blocks.w11(i, j) > 0) CHECK(g1.weights(i, j) > 0);
}

TEST_CASE("w11 is invariant to a global feature rescaling") {
    Matrix x1 = random_points(18, 3, 55);
    Matrix x2 = random_points(18, 3, 56);
    graph::PerturbationConfig pc{1, 0.0, 2, 1};  // noise off to isolate geometry
    data::CorrespondenceSet links;
    links.pairs = {{0, 0}, {5, 5}};
    ScalingConfig sc{3, 1e-12};

    auto b = compute_affinity_blocks(x1, x2, graph::pmst(x1, pc), graph::pmst(x2, pc),
                                     links, sc);
    const double c = 7.3;
    Matrix x1c = c * x1;
    auto bc = compute_affinity_blocks(x1c, x2, graph::pmst(x1c, pc), graph::pmst(x2, pc),
                                      links, sc);
    CHECK((b.w11 - bc.w11).cwiseAbs().maxCoeff() < 1e-9);
}
