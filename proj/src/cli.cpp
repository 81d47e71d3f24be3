#include "taxodng/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "taxodng/evalmetrics.hpp"
#include "taxodng/inference.hpp"
#include "taxodng/kernels.hpp"
#include "taxodng/model_io.hpp"
#include "taxodng/preprocess.hpp"
#include "taxodng/synthlab.hpp"
#include "taxodng/taxonomy.hpp"

namespace taxodng::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw error("config not found: " + path);
    json j;
    in >> j;
    if (!j.is_object()) throw error("config must be a JSON object: " + path);
    return j;
}

// Flags win over config; config wins over defaults.
template <class T>
void merge(const CLI::App& cmd, const std::string& flag, const json& cfg, const char* key, T& out) {
    if (cmd.count(flag) > 0) return;
    if (auto it = cfg.find(key); it != cfg.end()) out = it->get<T>();
}

DensityMode density_from(const std::string& name) {
    if (name == "paper_tanh") return DensityMode::paper_tanh;
    if (name == "log_cosh") return DensityMode::log_cosh;
    if (name == "sub_gaussian") return DensityMode::sub_gaussian;
    throw error("unknown density '" + name + "'");
}

TrainConfig train_config_from(const json& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.rng_seed = seed;
    if (cfg.contains("alpha")) tc.alpha = cfg.at("alpha").get<double>();
    if (cfg.contains("decay")) tc.decay = cfg.at("decay").get<double>();
    if (cfg.contains("max_iters")) tc.max_iters = cfg.at("max_iters").get<std::size_t>();
    if (cfg.contains("tol")) tc.tol = cfg.at("tol").get<double>();
    if (cfg.contains("density")) tc.density = density_from(cfg.at("density").get<std::string>());
    if (cfg.contains("prune_threshold")) tc.prune_threshold = cfg.at("prune_threshold").get<double>();
    if (cfg.contains("enforce_acyclic")) tc.enforce_acyclic = cfg.at("enforce_acyclic").get<bool>();
    if (cfg.contains("natural_gradient")) tc.natural_gradient = cfg.at("natural_gradient").get<bool>();
    return tc;
}

InferConfig infer_config_from(const json& cfg) {
    InferConfig ic;
    if (cfg.contains("lambda_scale")) ic.lambda_scale = cfg.at("lambda_scale").get<double>();
    if (cfg.contains("lambda_floor")) ic.lambda_floor = cfg.at("lambda_floor").get<double>();
    if (cfg.contains("infer_max_iters")) ic.max_iters = cfg.at("infer_max_iters").get<std::size_t>();
    if (cfg.contains("infer_tol")) ic.tol = cfg.at("infer_tol").get<double>();
    if (cfg.contains("prune_threshold")) ic.prune_threshold = cfg.at("prune_threshold").get<double>();
    if (cfg.contains("refit_iters")) ic.refit_iters = cfg.at("refit_iters").get<std::size_t>();
    if (cfg.contains("merge_k")) ic.merge_k = cfg.at("merge_k").get<std::size_t>();
    return ic;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw error(message);
}

std::pair<std::string, std::string> split_taxonomy_arg(const std::string& arg) {
    const auto comma = arg.find(',');
    require(comma != std::string::npos && comma + 1 < arg.size(),
            "--taxonomy expects <nodes.tsv>,<edges.tsv>");
    return {arg.substr(0, comma), arg.substr(comma + 1)};
}

int cmd_train(const std::string& taxonomy_arg, const std::string& embeddings_path,
              const std::string& out_dir, const json& cfg, std::uint64_t seed) {
    require(!taxonomy_arg.empty(), "train: --taxonomy is required");
    require(!embeddings_path.empty(), "train: --embeddings is required");
    require(!out_dir.empty(), "train: --out is required");
    auto [nodes_path, edges_path] = split_taxonomy_arg(taxonomy_arg);
    require(fs::exists(nodes_path), "taxonomy nodes not found: " + nodes_path);
    require(fs::exists(edges_path), "taxonomy edges not found: " + edges_path);
    require(fs::exists(embeddings_path), "embeddings not found: " + embeddings_path);

    Taxonomy t = load_taxonomy(nodes_path, edges_path);
    EmbeddingMatrix emb = load_embeddings(embeddings_path, t);
    ModelState m = train(emb, train_config_from(cfg, seed));

    fs::create_directories(out_dir);
    save_model(m, t.external_ids, out_dir);
    save_taxonomy(t, out_dir + "/nodes.tsv", out_dir + "/edges.tsv");
    std::ofstream log(out_dir + "/training_log.csv");
    require(static_cast<bool>(log), "cannot write " + out_dir + "/training_log.csv");
    log.precision(17);
    log << "iteration,loss\n";
    for (std::size_t i = 0; i < m.loss_log.size(); ++i) log << i << "," << m.loss_log[i] << "\n";
    return 0;
}

int cmd_expand(const std::string& model_dir, const std::string& queries_path,
               const std::string& out_dir, const std::string& mode, std::size_t rounds,
               std::size_t top_m, const json& cfg) {
    require(!model_dir.empty(), "expand: --model is required");
    require(!queries_path.empty(), "expand: --queries is required");
    require(!out_dir.empty(), "expand: --out is required");
    require(fs::exists(model_dir), "model dir not found: " + model_dir);
    require(fs::exists(queries_path), "queries not found: " + queries_path);
    (void)rounds;  // single-block expand; recombination needs per-block models

    StoredModel stored = load_model(model_dir);
    Taxonomy t = load_taxonomy(model_dir + "/nodes.tsv", model_dir + "/edges.tsv");
    auto [qmat, qids] = load_vectors(queries_path);

    InferConfig ic = infer_config_from(cfg);
    require(mode == "frozen" || mode == "refit", "expand: --mode must be frozen or refit");
    ic.mode = mode == "refit" ? InferMode::refit : InferMode::frozen;

    std::vector<std::size_t> order(qids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return qids[a] < qids[b]; });

    fs::create_directories(out_dir);
    std::ofstream pred(out_dir + "/predictions.jsonl");
    require(static_cast<bool>(pred), "cannot write " + out_dir + "/predictions.jsonl");

    Taxonomy expanded = t;
    for (std::size_t idx : order) {
        QueryVector q;
        q.id = qids[idx];
        q.values.assign(qmat.row(idx), qmat.row(idx) + qmat.cols);
        InheritanceVector iv = infer_query(stored.state, q, ic);
        RankedAnchors ranked = rank_anchors(iv);

        json line;
        line["query"] = q.id;
        json ranking = json::array();
        for (const auto& [id, factor] : ranked.ranking)
            ranking.push_back(json::array({stored.external_ids.at(id), factor}));
        line["ranking"] = std::move(ranking);
        pred << line.dump() << "\n";

        if (!iv.no_anchor) expanded = attach(expanded, q.id, ranked, top_m);
    }
    save_taxonomy(expanded, out_dir + "/expanded_nodes.tsv", out_dir + "/expanded_edges.tsv");
    return 0;
}

int cmd_eval(const std::string& predictions_path, const std::string& judgments_path,
             const std::string& out_dir, double scale, const std::vector<std::size_t>& ks) {
    require(!predictions_path.empty(), "eval: --predictions is required");
    require(!judgments_path.empty(), "eval: --judgments is required");
    require(!out_dir.empty(), "eval: --out is required");
    require(fs::exists(predictions_path), "predictions not found: " + predictions_path);
    require(fs::exists(judgments_path), "judgments not found: " + judgments_path);

    // Each prediction line carries external ids; indices are assigned per line
    // in ranking order, and judgments are mapped through them.
    struct Prediction {
        RankedAnchors ranking;
        std::unordered_map<std::string, NodeId> index_of;
    };
    std::unordered_map<std::string, Prediction> predictions;
    std::ifstream pin(predictions_path);
    std::string linebuf;
    while (std::getline(pin, linebuf)) {
        if (linebuf.empty()) continue;
        json line = json::parse(linebuf);
        Prediction p;
        p.ranking.query_id = line.at("query").get<std::string>();
        for (const auto& entry : line.at("ranking")) {
            const auto ext = entry.at(0).get<std::string>();
            const double factor = entry.at(1).get<double>();
            const NodeId id = p.ranking.ranking.size();
            require(p.index_of.emplace(ext, id).second,
                    "duplicate node '" + ext + "' in ranking for query '" + p.ranking.query_id + "'");
            p.ranking.ranking.emplace_back(id, factor);
        }
        const std::string qid = p.ranking.query_id;
        require(predictions.emplace(qid, std::move(p)).second,
                "duplicate prediction for query '" + qid + "'");
    }

    std::vector<QueryJudgment> judgments;
    std::ifstream jin(judgments_path);
    while (std::getline(jin, linebuf)) {
        if (linebuf.empty()) continue;
        json line = json::parse(linebuf);
        QueryJudgment j;
        j.query_id = line.at("query").get<std::string>();
        auto pit = predictions.find(j.query_id);
        require(pit != predictions.end(), "no prediction for query '" + j.query_id + "'");
        for (const auto& gt : line.at("ground_truth")) {
            const auto ext = gt.get<std::string>();
            auto iit = pit->second.index_of.find(ext);
            require(iit != pit->second.index_of.end(),
                    "ground-truth node '" + ext + "' missing from ranking for query '" + j.query_id + "'");
            j.ground_truth.push_back(iit->second);
        }
        j.ranking = pit->second.ranking;
        judgments.push_back(std::move(j));
    }
    std::sort(judgments.begin(), judgments.end(),
              [](const QueryJudgment& a, const QueryJudgment& b) { return a.query_id < b.query_id; });

    MetricReport r = report(judgments, ks, scale);
    fs::create_directories(out_dir);
    save_report_json(r, out_dir + "/report.json");
    save_report_csv(r, out_dir + "/report.csv");
    return 0;
}

int cmd_synth(const std::string& experiment, const std::string& dist, std::size_t seeds,
              std::size_t samples, const std::string& out_dir, const json& cfg) {
    require(experiment == "recovery" || experiment == "deviation",
            "synth: experiment must be 'recovery' or 'deviation'\n"
            "usage: taxo-dng synth <recovery|deviation> --dist <uniform|gaussian> "
            "--seeds <n> --samples <d> --out <dir>");
    require(dist == "uniform" || dist == "gaussian", "synth: --dist must be uniform or gaussian");
    require(seeds > 0, "synth: --seeds must be positive");
    require(!out_dir.empty(), "synth: --out is required");
    const SupplementaryDist sd =
        dist == "uniform" ? SupplementaryDist::uniform : SupplementaryDist::gaussian;

    TrainConfig tc = train_config_from(cfg, 0);
    if (!cfg.contains("density")) tc.density = DensityMode::sub_gaussian;

    fs::create_directories(out_dir);
    json summary;
    summary["experiment"] = experiment;
    summary["distribution"] = dist;
    summary["seeds"] = seeds;
    summary["samples"] = samples;

    if (experiment == "recovery") {
        std::ofstream csv(out_dir + "/recovery.csv");
        require(static_cast<bool>(csv), "cannot write " + out_dir + "/recovery.csv");
        csv.precision(17);
        csv << "seed,distribution,edge,truth,estimate,abs_error\n";
        double error_sum = 0.0;
        std::size_t error_count = 0, success = 0;
        json per_seed = json::array();
        for (std::size_t s = 0; s < seeds; ++s) {
            SemSpec spec = four_chain_spec(sd, samples, s);
            tc.rng_seed = s;
            RecoveryResult res = recovery_experiment(spec, tc);
            bool ok = res.nonedge_max == 0.0;
            double seed_max = 0.0;
            for (std::size_t e = 0; e < spec.edges.size(); ++e) {
                const SemEdge& edge = spec.edges[e];
                csv << s << "," << dist << ",v" << edge.parent + 1 << "->v" << edge.child + 1 << ","
                    << edge.factor << "," << res.s_hat(edge.child, edge.parent) << ","
                    << res.edge_errors[e] << "\n";
                error_sum += res.edge_errors[e];
                ++error_count;
                seed_max = std::max(seed_max, res.edge_errors[e]);
                ok = ok && res.edge_errors[e] <= 0.15;
            }
            if (ok) ++success;
            per_seed.push_back({{"seed", s},
                                {"max_edge_error", seed_max},
                                {"nonedge_max", res.nonedge_max},
                                {"recovered", ok}});
        }
        summary["mean_edge_error"] = error_sum / static_cast<double>(error_count);
        summary["recovered_seeds"] = success;
        summary["per_seed"] = std::move(per_seed);
    } else {
        std::ofstream csv(out_dir + "/deviation.csv");
        require(static_cast<bool>(csv), "cannot write " + out_dir + "/deviation.csv");
        csv.precision(17);
        csv << "seed,distribution,node,forward,backward,ratio\n";
        double ratio_sum = 0.0;
        json per_seed = json::array();
        for (std::size_t s = 0; s < seeds; ++s) {
            SemSpec spec = four_chain_spec(sd, samples, s);
            tc.rng_seed = s;
            DeviationResult res = deviation_experiment(spec, tc);
            for (std::size_t i = 0; i < res.forward.size(); ++i)
                csv << s << "," << dist << ",v" << i + 1 << "," << res.forward[i] << ","
                    << res.backward[i] << "," << res.ratios[i] << "\n";
            ratio_sum += res.mean_ratio;
            per_seed.push_back({{"seed", s}, {"mean_ratio", res.mean_ratio}});
        }
        summary["mean_ratio"] = ratio_sum / static_cast<double>(seeds);
        summary["per_seed"] = std::move(per_seed);
    }

    std::ofstream sj(out_dir + "/summary.json");
    require(static_cast<bool>(sj), "cannot write " + out_dir + "/summary.json");
    sj << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    kernels::apply_thread_cap();

    CLI::App app{"taxonomy expansion via non-Gaussian inheritance learning"};
    app.require_subcommand(1);

    std::string config_path, taxonomy_arg, embeddings_path, model_dir, queries_path;
    std::string predictions_path, judgments_path, out_dir;
    std::string mode = "frozen", dist = "uniform", experiment;
    std::uint64_t seed = 0;
    std::size_t rounds = 3, top_m = 1, seeds = 20, samples = 5000;
    double scale = 10.0;
    std::vector<std::size_t> ks = {1, 5, 10};

    CLI::App* train_cmd = app.add_subcommand("train", "learn a transition model from a taxonomy");
    train_cmd->add_option("--taxonomy", taxonomy_arg, "<nodes.tsv>,<edges.tsv>");
    train_cmd->add_option("--embeddings", embeddings_path, "embedding vectors (text format)");
    train_cmd->add_option("--out", out_dir, "output model directory");
    train_cmd->add_option("--config", config_path, "JSON config file");
    train_cmd->add_option("--seed", seed, "top-level rng seed");

    CLI::App* expand_cmd = app.add_subcommand("expand", "rank anchors for query vectors");
    expand_cmd->add_option("--model", model_dir, "trained model directory");
    expand_cmd->add_option("--queries", queries_path, "query vectors (text format)");
    expand_cmd->add_option("--out", out_dir, "output directory");
    expand_cmd->add_option("--mode", mode, "frozen|refit");
    expand_cmd->add_option("--rounds", rounds, "recombination rounds");
    expand_cmd->add_option("--top-m", top_m, "parent edges per attached query");
    expand_cmd->add_option("--config", config_path, "JSON config file");

    CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against judgments");
    eval_cmd->add_option("--predictions", predictions_path, "predictions JSONL");
    eval_cmd->add_option("--judgments", judgments_path, "judgments JSONL");
    eval_cmd->add_option("--out", out_dir, "output directory");
    eval_cmd->add_option("--scale", scale, "MRR scale factor");
    eval_cmd->add_option("--ks", ks, "precision/recall cutoffs")->delimiter(',');
    eval_cmd->add_option("--config", config_path, "JSON config file");

    CLI::App* synth_cmd = app.add_subcommand("synth", "synthetic validation experiments");
    synth_cmd->add_option("experiment", experiment, "recovery|deviation");
    synth_cmd->add_option("--dist", dist, "uniform|gaussian");
    synth_cmd->add_option("--seeds", seeds, "number of seeded repetitions");
    synth_cmd->add_option("--samples", samples, "sample count d");
    synth_cmd->add_option("--out", out_dir, "output directory");
    synth_cmd->add_option("--config", config_path, "JSON config file");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("taxo-dng");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const json cfg = load_config(config_path);
        if (train_cmd->parsed()) {
            merge(*train_cmd, "--taxonomy", cfg, "taxonomy", taxonomy_arg);
            merge(*train_cmd, "--embeddings", cfg, "embeddings", embeddings_path);
            merge(*train_cmd, "--out", cfg, "out", out_dir);
            merge(*train_cmd, "--seed", cfg, "seed", seed);
            return cmd_train(taxonomy_arg, embeddings_path, out_dir, cfg, seed);
        }
        if (expand_cmd->parsed()) {
            merge(*expand_cmd, "--model", cfg, "model", model_dir);
            merge(*expand_cmd, "--queries", cfg, "queries", queries_path);
            merge(*expand_cmd, "--out", cfg, "out", out_dir);
            merge(*expand_cmd, "--mode", cfg, "mode", mode);
            merge(*expand_cmd, "--rounds", cfg, "rounds", rounds);
            merge(*expand_cmd, "--top-m", cfg, "top_m", top_m);
            return cmd_expand(model_dir, queries_path, out_dir, mode, rounds, top_m, cfg);
        }
        if (eval_cmd->parsed()) {
            merge(*eval_cmd, "--predictions", cfg, "predictions", predictions_path);
            merge(*eval_cmd, "--judgments", cfg, "judgments", judgments_path);
            merge(*eval_cmd, "--out", cfg, "out", out_dir);
            merge(*eval_cmd, "--scale", cfg, "scale", scale);
            merge(*eval_cmd, "--ks", cfg, "ks", ks);
            return cmd_eval(predictions_path, judgments_path, out_dir, scale, ks);
        }
        if (synth_cmd->parsed()) {
            merge(*synth_cmd, "--dist", cfg, "dist", dist);
            merge(*synth_cmd, "--seeds", cfg, "seeds", seeds);
            merge(*synth_cmd, "--samples", cfg, "samples", samples);
            merge(*synth_cmd, "--out", cfg, "out", out_dir);
            return cmd_synth(experiment, dist, seeds, samples, out_dir, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "taxo-dng: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace taxodng::cli
