#include "cm2l/data_model.hpp"
#include "cm2l/evaluation.hpp"
#include "cm2l/matrix_io.hpp"
#include "cm2l/retrieval.hpp"
#include "cm2l/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// All tunable parameters of the pipeline, with the recommended defaults.
struct RunConfig {
    int t_p = 20;
    double r_p = 0.5;
    int k_noise = 5;
    int k_scale = 5;
    double eps_scale = 1e-12;
    double eigen_threshold = 1e-5;
    int q_max = 0;  // 0 = min(m1, m2)
    double ridge_mu = 1e-6;
    int k_ose = 20;
    double cca_corr_threshold = 0.1;
    int pa_dim = 0;
    double train_fraction = 0.8;
    double correspondence_fraction = 1.0;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = machine parallelism

    void set(const std::string& key, const std::string& value) {
        auto as_int = [&] { return std::stoi(value); };
        auto as_double = [&] { return std::stod(value); };
        if (key == "t_p") t_p = as_int();
        else if (key == "r_p") r_p = as_double();
        else if (key == "k_noise") k_noise = as_int();
        else if (key == "k_scale") k_scale = as_int();
        else if (key == "eps_scale") eps_scale = as_double();
        else if (key == "eigen_threshold") eigen_threshold = as_double();
        else if (key == "q_max") q_max = as_int();
        else if (key == "ridge_mu") ridge_mu = as_double();
        else if (key == "k_ose") k_ose = as_int();
        else if (key == "cca_corr_threshold") cca_corr_threshold = as_double();
        else if (key == "pa_dim") pa_dim = as_int();
        else if (key == "train_fraction") train_fraction = as_double();
        else if (key == "correspondence_fraction") correspondence_fraction = as_double();
        else if (key == "seed") seed = std::stoull(value);
        else if (key == "threads") threads = as_int();
        else throw cm2l::Error("cli", "unknown config key '" + key + "'");
    }

    void load_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw cm2l::Error("cli", "cannot open config file " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') {
            json j = json::parse(text);
            for (auto& [key, value] : j.items())
                set(key, value.is_string() ? value.get<std::string>() : value.dump());
        } else {
            std::istringstream lines(text);
            std::string line;
            while (std::getline(lines, line)) {
                if (line.empty() || line[0] == '#') continue;
                auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw cm2l::Error("cli", "config line is not key=value: " + line);
                set(line.substr(0, eq), line.substr(eq + 1));
            }
        }
    }

    json to_json() const {
        return json{{"t_p", t_p},
                    {"r_p", r_p},
                    {"k_noise", k_noise},
                    {"k_scale", k_scale},
                    {"eps_scale", eps_scale},
                    {"eigen_threshold", eigen_threshold},
                    {"q_max", q_max},
                    {"ridge_mu", ridge_mu},
                    {"k_ose", k_ose},
                    {"cca_corr_threshold", cca_corr_threshold},
                    {"pa_dim", pa_dim},
                    {"train_fraction", train_fraction},
                    {"correspondence_fraction", correspondence_fraction},
                    {"seed", seed},
                    {"threads", threads}};
    }

    cm2l::retrieval::FitParams fit_params() const {
        cm2l::retrieval::FitParams p;
        p.pert = {t_p, r_p, k_noise, seed};
        p.scaling = {k_scale, eps_scale};
        p.embed.eigen_threshold = eigen_threshold;
        if (q_max > 0) p.embed.q_max = q_max;
        p.embed.ridge_mu = ridge_mu;
        p.k_ose = k_ose;
        return p;
    }

    int effective_threads() const {
        if (threads > 0) return threads;
        return std::max(1u, std::thread::hardware_concurrency());
    }
};

void write_resolved_config(const RunConfig& cfg, const json& extra, const fs::path& dir) {
    fs::create_directories(dir);
    json j = cfg.to_json();
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(dir / "config_resolved.json");
    if (!out)
        throw cm2l::Error("cli", "cannot write " + (dir / "config_resolved.json").string());
    out << j.dump(2) << '\n';
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    if (out.empty()) throw cm2l::Error("cli", "empty integer list");
    return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-modal manifold alignment and retrieval"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    app.add_option("--config", config_path, "key=value or JSON config file")
        ->each([&](const std::string& p) { cfg.load_file(p); });

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "master RNG seed");
        sub->add_option("--threads", cfg.threads, "worker cap (0 = machine parallelism)");
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset pair");
    cm2l::data::SyntheticConfig scfg;
    std::string synth_out;
    synth->add_option("--n", scfg.n_per_modality, "instances per modality");
    synth->add_option("--m1", scfg.m1, "modality-1 feature dimension");
    synth->add_option("--m2", scfg.m2, "modality-2 feature dimension");
    synth->add_option("--noise", scfg.noise_std, "Gaussian noise std");
    synth->add_option("--classes", scfg.n_classes, "number of classes");
    synth->add_option("--latent-dim", scfg.latent_dim, "latent dimension");
    synth->add_option("--out", synth_out, "output directory")->required();
    add_common(synth);

    // fit
    auto* fit = app.add_subcommand("fit", "fit an alignment model");
    std::string fit_x1, fit_x2, fit_corr, fit_variant = "i", fit_out;
    bool fit_has_labels = false;
    int fit_comp_cols = 0;
    fit->add_option("--x1", fit_x1, "modality-1 dataset CSV")->required();
    fit->add_option("--x2", fit_x2, "modality-2 dataset CSV")->required();
    fit->add_option("--corr", fit_corr, "correspondence CSV")->required();
    fit->add_option("--variant", fit_variant, "i (instance) or f (feature)")
        ->check(CLI::IsMember({"i", "f"}));
    fit->add_flag("--has-labels", fit_has_labels, "datasets carry a label column");
    fit->add_option("--comp-cols", fit_comp_cols, "composition column count");
    fit->add_option("--out", fit_out, "model archive directory")->required();
    add_common(fit);

    // query
    auto* query = app.add_subcommand("query", "cross-modal nearest-neighbor query");
    std::string q_model, q_input, q_out = ".";
    int q_source = 1, q_k = 5;
    query->add_option("--model", q_model, "model archive directory")->required();
    query->add_option("--input", q_input, "query feature CSV (rows = queries)")->required();
    query->add_option("--source", q_source, "query modality")->check(CLI::IsMember({1, 2}));
    query->add_option("--k", q_k, "neighbors to fetch")->check(CLI::PositiveNumber);
    query->add_option("--out", q_out, "directory for config_resolved.json");
    add_common(query);

    // eval
    auto* eval = app.add_subcommand("eval", "run the split/fit/evaluate protocol");
    std::string e_x1, e_x2, e_corr, e_methods = "cm2l-i,cm2l-f,cca,pa";
    std::string e_ks = "1,5,10", e_metric = "accuracy", e_out;
    int e_repeats = 10, e_direction = 12, e_comp_cols = 0;
    bool e_has_labels = false;
    eval->add_option("--x1", e_x1, "modality-1 dataset CSV")->required();
    eval->add_option("--x2", e_x2, "modality-2 dataset CSV")->required();
    eval->add_option("--corr", e_corr, "correspondence CSV")->required();
    eval->add_option("--methods", e_methods, "comma list: cm2l-i,cm2l-f,cca,pa");
    eval->add_option("--repeats", e_repeats, "split repetitions")->check(CLI::PositiveNumber);
    eval->add_option("--ks", e_ks, "comma list of scope values");
    eval->add_option("--corr-frac", cfg.correspondence_fraction,
                     "fraction of train pairs kept as links");
    eval->add_option("--train-frac", cfg.train_fraction, "train split fraction");
    eval->add_option("--metric", e_metric, "accuracy or alogrmsd")
        ->check(CLI::IsMember({"accuracy", "alogrmsd"}));
    eval->add_option("--direction", e_direction, "12 or 21")
        ->check(CLI::IsMember({12, 21}));
    eval->add_flag("--has-labels", e_has_labels, "datasets carry a label column");
    eval->add_option("--comp-cols", e_comp_cols, "composition column count");
    eval->add_option("--out", e_out, "output directory")->required();
    add_common(eval);

    try {
        app.parse(argc, argv);

        if (synth->parsed()) {
            scfg.seed = cfg.seed;
            auto pair = cm2l::data::generate_synthetic_pair(scfg);
            fs::create_directories(synth_out);
            cm2l::data::save_dataset(pair.d1, fs::path(synth_out) / "x1.csv");
            cm2l::data::save_dataset(pair.d2, fs::path(synth_out) / "x2.csv");
            cm2l::data::save_correspondences(pair.correspondences,
                                             fs::path(synth_out) / "corr.csv");
            write_resolved_config(cfg,
                                  json{{"command", "synth"},
                                       {"n", scfg.n_per_modality},
                                       {"m1", scfg.m1},
                                       {"m2", scfg.m2},
                                       {"noise", scfg.noise_std},
                                       {"classes", scfg.n_classes}},
                                  synth_out);
            std::cout << "wrote x1.csv, x2.csv, corr.csv to " << synth_out << '\n';
        } else if (fit->parsed()) {
            auto d1 = cm2l::data::load_dataset(fit_x1, fit_has_labels, fit_comp_cols);
            auto d2 = cm2l::data::load_dataset(fit_x2, fit_has_labels, fit_comp_cols);
            auto links = cm2l::data::load_correspondences(fit_corr);
            auto model = cm2l::retrieval::fit_model(
                d1.features, d2.features, links, cfg.fit_params(),
                cm2l::retrieval::parse_variant(fit_variant), cfg.effective_threads());
            cm2l::retrieval::save_model(model, fit_out);
            write_resolved_config(cfg, json{{"command", "fit"}, {"variant", fit_variant}},
                                  fit_out);
            std::cout << "q = " << model.embedding.q << "\neigenvalues =";
            for (double v : model.embedding.eigenvalues) std::cout << ' ' << v;
            std::cout << '\n';
        } else if (query->parsed()) {
            auto model = cm2l::retrieval::load_model(q_model);
            cm2l::Matrix queries = cm2l::io::read_matrix_csv(q_input);
            const cm2l::Matrix& tz =
                q_source == 1 ? model.embedding.z2 : model.embedding.z1;
            std::cout << "query_index,rank,target_index,distance\n";
            for (cm2l::Index i = 0; i < queries.rows(); ++i) {
                auto z = cm2l::retrieval::project_query(queries.row(i), model, q_source);
                auto res = cm2l::retrieval::knn(z, tz, q_k);
                for (std::size_t r = 0; r < res.indices.size(); ++r)
                    std::cout << i << ',' << r << ',' << res.indices[r] << ','
                              << cm2l::io::format_double(res.distances[r]) << '\n';
            }
            write_resolved_config(
                cfg, json{{"command", "query"}, {"source", q_source}, {"k", q_k}}, q_out);
        } else if (eval->parsed()) {
            auto d1 = cm2l::data::load_dataset(e_x1, e_has_labels, e_comp_cols);
            auto d2 = cm2l::data::load_dataset(e_x2, e_has_labels, e_comp_cols);
            auto links = cm2l::data::load_correspondences(e_corr);

            cm2l::evaluation::ProtocolConfig pcfg;
            pcfg.methods = parse_str_list(e_methods);
            pcfg.split = {cfg.train_fraction, cfg.correspondence_fraction, cfg.seed};
            pcfg.repeats = e_repeats;
            pcfg.ks = parse_int_list(e_ks);
            pcfg.metric = e_metric == "accuracy"
                              ? cm2l::evaluation::MetricKind::accuracy
                              : cm2l::evaluation::MetricKind::alogrmsd;
            pcfg.direction = e_direction;
            pcfg.fit = cfg.fit_params();
            pcfg.baseline = {cfg.cca_corr_threshold, cfg.pa_dim, 1e-6};
            pcfg.threads = cfg.effective_threads();

            auto curves = cm2l::evaluation::run_protocol(d1, d2, links, pcfg);
            fs::create_directories(e_out);
            cm2l::evaluation::save_curves_csv(curves, pcfg,
                                              fs::path(e_out) / "curves.csv");

            json summary;
            summary["methods"] = pcfg.methods;
            summary["repeats"] = pcfg.repeats;
            summary["ks"] = pcfg.ks;
            summary["metric"] = e_metric;
            summary["direction"] = pcfg.direction;
            summary["alogrmsd_clamp"] = 1e-12;
            summary["seed"] = cfg.seed;
            json repeat_seeds = json::array();
            for (int r = 0; r < pcfg.repeats; ++r)
                repeat_seeds.push_back(
                    cm2l::derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
            summary["repeat_seeds"] = repeat_seeds;
            summary["config"] = cfg.to_json();
            std::ofstream sum(fs::path(e_out) / "summary.json");
            sum << summary.dump(2) << '\n';

            write_resolved_config(cfg, json{{"command", "eval"}}, e_out);
            std::cout << "wrote curves.csv, summary.json to " << e_out << '\n';
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: cli: " << e.what() << '\n';
        return 2;
    } catch (const cm2l::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: cli: " << e.what() << '\n';
        return 1;
    }
}
