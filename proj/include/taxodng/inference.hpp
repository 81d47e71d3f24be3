#pragma once
#include <string>
#include <utility>
#include <vector>

#include "taxodng/learner.hpp"
#include "taxodng/taxonomy.hpp"

// Query-time estimation: fit a sparse inheritance vector for an unseen node
// against a trained model, rank candidate anchors, recombine candidates
// across sub-taxonomy blocks, and attach the query to the taxonomy.

namespace taxodng {

struct QueryVector {
    std::string id;
    std::vector<double> values;  // length d
};

struct InheritanceVector {
    std::string query_id;
    std::vector<double> factors;  // candidate order; entries below tau are exactly 0
    bool converged = true;
    bool no_anchor = false;  // every factor pruned to zero
};

struct RankedAnchors {
    std::string query_id;
    std::vector<std::pair<NodeId, double>> ranking;  // descending factor, ties by ascending id
};

enum class InferMode { frozen, refit };

struct InferConfig {
    InferMode mode = InferMode::frozen;
    double lambda_scale = 0.01;  // L1 weight = lambda_scale * max(max|s|, lambda_floor)
    double lambda_floor = 1e-3;
    std::size_t max_iters = 2000;
    double tol = 1e-8;  // on max|delta s| per proximal step
    double prune_threshold = 0.1;
    std::size_t refit_iters = 500;  // refit mode only
    std::size_t merge_k = 2;        // recombine fan-in per round
};

// Frozen mode fits the query against per-node standardized candidate rows with
// a proximal-gradient loop (robust tanh score), then reports factors in raw
// embedding coordinates. Refit mode appends the query as one more row,
// warm-starts from the trained transition matrix, and reads off its extracted
// inheritance row.
InheritanceVector infer_query(const ModelState& m, const QueryVector& q, const InferConfig& cfg);

RankedAnchors rank_anchors(const InheritanceVector& s);

struct BlockModel {
    const ModelState* model = nullptr;
    std::vector<NodeId> members;  // global node ids aligned with the model's rows
};

// Round 0 scores the query in every block; each later round merges the
// merge_k best blocks (by best factor) and refits on the merged candidate
// set. Final
// ranking covers every candidate ever scored, each with its latest factor;
// rounds = 0 returns the single best block's ranking.
RankedAnchors recombine(const std::vector<BlockModel>& blocks, const QueryVector& q,
                        std::size_t rounds = 3, const InferConfig& cfg = {});

// New node with edges anchor -> query for the top_m nonzero-factor anchors;
// existing nodes and edges are untouched.
Taxonomy attach(const Taxonomy& t, const std::string& query_id, const RankedAnchors& anchors,
                std::size_t top_m);

}  // namespace taxodng
