#include "cm2l/graph.hpp"

#include "cm2l/matrix_io.hpp"
#include "cm2l/rng.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <thread>
#include <vector>

namespace cm2l::graph {

namespace {

const char* kModule = "graph";

}  // namespace

std::vector<Edge> euclidean_mst(const Matrix& points) {
    const Index n = points.rows();
    if (n < 2) throw Error(kModule, "need at least 2 points for an MST");
    if (!points.allFinite()) throw Error(kModule, "non-finite point coordinates");

    // Prim on squared distances (same tree); ties resolved by lowest index.
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<Index> parent(n, -1);
    in_tree[0] = true;
    for (Index v = 1; v < n; ++v) {
        best[v] = (points.row(v) - points.row(0)).squaredNorm();
        parent[v] = 0;
    }

    std::vector<Edge> edges;
    edges.reserve(n - 1);
    for (Index step = 1; step < n; ++step) {
        Index pick = -1;
        for (Index v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            if (pick < 0 || best[v] < best[pick]) pick = v;
        }
        in_tree[pick] = true;
        edges.emplace_back(std::min(pick, parent[pick]), std::max(pick, parent[pick]));
        for (Index v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            double d2 = (points.row(v) - points.row(pick)).squaredNorm();
            if (d2 < best[v] || (d2 == best[v] && pick < parent[v])) {
                best[v] = d2;
                parent[v] = pick;
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

NeighborhoodGraph pmst(const Matrix& points, const PerturbationConfig& cfg, int threads) {
    const Index n = points.rows();
    if (n < 2) throw Error(kModule, "need at least 2 points");
    if (cfg.t_p < 1) throw Error(kModule, "t_p must be >= 1");
    if (cfg.r_p < 0.0 || cfg.r_p > 1.0) throw Error(kModule, "r_p must be in [0,1]");
    if (cfg.k_noise < 1 || cfg.k_noise >= n)
        throw Error(kModule, "k_noise must be in [1, n)");

    // Per-point noise scale from the original cloud, fixed across perturbations.
    Vector sigma(n);
    std::vector<double> dists(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j)
            dists[j] = (points.row(i) - points.row(j)).norm();
        std::vector<double> others;
        others.reserve(n - 1);
        for (Index j = 0; j < n; ++j)
            if (j != i) others.push_back(dists[j]);
        std::nth_element(others.begin(), others.begin() + (cfg.k_noise - 1), others.end());
        sigma(i) = cfg.r_p * others[cfg.k_noise - 1];
    }

    std::vector<std::vector<Edge>> per_p(cfg.t_p);
    auto worker = [&](int p_begin, int p_end) {
        for (int p = p_begin; p < p_end; ++p) {
            auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(p));
            std::normal_distribution<double> normal(0.0, 1.0);
            Matrix perturbed = points;
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < points.cols(); ++j)
                    perturbed(i, j) += sigma(i) * normal(rng);
            per_p[p] = euclidean_mst(perturbed);
        }
    };

    const int nthreads = std::max(1, std::min(threads, cfg.t_p));
    if (nthreads == 1) {
        worker(0, cfg.t_p);
    } else {
        std::vector<std::thread> pool;
        int chunk = (cfg.t_p + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            int b = t * chunk, e = std::min(cfg.t_p, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }

    NeighborhoodGraph g;
    g.weights = Matrix::Zero(n, n);
    for (int p = 0; p < cfg.t_p; ++p)
        for (const auto& [i, j] : per_p[p]) {
            g.weights(i, j) += 1.0;
            g.weights(j, i) += 1.0;
        }
    g.weights /= static_cast<double>(cfg.t_p);
    return g;
}

void save_graph_csv(const NeighborhoodGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot open " + path.string() + " for writing");
    out << "i,j,weight\n";
    for (Index i = 0; i < g.n(); ++i)
        for (Index j = i + 1; j < g.n(); ++j)
            if (g.weights(i, j) > 0.0)
                out << i << ',' << j << ',' << io::format_double(g.weights(i, j)) << '\n';
}

}  // namespace cm2l::graph
