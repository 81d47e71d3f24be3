// Generates the bundled end-to-end dataset: a 200-node random tree whose
// node vectors follow the inheritance equation, 20 held-out queries drawn
// from known parents, relevance judgments, and a training config.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "taxodng/preprocess.hpp"
#include "taxodng/rng.hpp"
#include "taxodng/synthlab.hpp"

using namespace taxodng;

namespace {

std::string node_name(std::size_t i) { return "n" + std::to_string(i); }

std::string query_name(std::size_t k) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "q%02zu", k);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "data/e2e";
    std::filesystem::create_directories(out);

    constexpr std::size_t kNodes = 200;
    constexpr std::size_t kDim = 1000;
    constexpr std::size_t kQueries = 20;
    constexpr std::uint64_t kSeed = 2026;

    SemSpec spec;
    spec.node_count = kNodes;
    spec.d = kDim;
    spec.dist = SupplementaryDist::uniform;
    spec.rng_seed = kSeed;
    Rng topo(derive_seed(kSeed, "tree"));
    for (std::size_t child = 1; child < kNodes; ++child)
        spec.edges.push_back({topo.below(child), child, topo.uniform(0.5, 1.5)});
    const SemSample sample = gen_sem(spec);

    std::vector<std::string> ids(kNodes);
    for (std::size_t i = 0; i < kNodes; ++i) ids[i] = node_name(i);
    {
        std::ofstream nodes(out + "/nodes.tsv");
        for (const std::string& id : ids) nodes << id << "\t" << id << "\n";
        std::ofstream edges(out + "/edges.tsv");
        for (const SemEdge& e : spec.edges)
            edges << node_name(e.parent) << "\t" << node_name(e.child) << "\n";
    }
    save_embeddings(sample.x, ids, out + "/vectors.txt");

    Rng qr(derive_seed(kSeed, "query"));
    const double hw = std::sqrt(3.0);
    Matrix queries(kQueries, kDim);
    std::vector<std::string> qids(kQueries);
    std::vector<std::size_t> parents(kQueries);
    for (std::size_t k = 0; k < kQueries; ++k) {
        qids[k] = query_name(k);
        parents[k] = qr.below(kNodes);
        const double factor = qr.uniform(0.5, 1.5);
        for (std::size_t j = 0; j < kDim; ++j)
            queries(k, j) = factor * sample.x(parents[k], j) + qr.uniform(-hw, hw);
    }
    save_embeddings(queries, qids, out + "/queries.txt");

    {
        std::ofstream judgments(out + "/judgments.jsonl");
        for (std::size_t k = 0; k < kQueries; ++k)
            judgments << "{\"query\":\"" << qids[k] << "\",\"ground_truth\":[\""
                      << node_name(parents[k]) << "\"]}\n";
        std::ofstream config(out + "/train_config.json");
        config << "{\"density\": \"sub_gaussian\", \"max_iters\": 300}\n";
    }

    std::printf("wrote %zu nodes, %zu queries to %s\n", kNodes, kQueries, out.c_str());
    return 0;
}
