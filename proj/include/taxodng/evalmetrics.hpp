#pragma once
#include <string>
#include <utility>
#include <vector>

#include "taxodng/inference.hpp"

// Rank-based evaluation over predicted anchor rankings: Precision@k,
// Recall@k, Mean Rank, and (scaled) MRR with per-query averaging across
// multiple ground-truth anchors.

namespace taxodng {

struct QueryJudgment {
    std::string query_id;
    std::vector<NodeId> ground_truth;  // at least one anchor
    RankedAnchors ranking;             // covers all candidates exactly once
};

struct MetricReport {
    std::vector<std::size_t> ks;
    std::vector<double> precision;  // aligned with ks, averaged over queries
    std::vector<double> recall;
    double mean_rank_value = 0.0;
    double mrr_value = 0.0;
    double scaled_mrr = 0.0;
    double scale = 10.0;
    std::size_t query_count = 0;
};

// (ground-truth anchors among top-k) / k
double precision_at_k(const QueryJudgment& j, std::size_t k);

// (ground-truth anchors among top-k) / |ground truth|
double recall_at_k(const QueryJudgment& j, std::size_t k);

// Ranks of a query's anchors are averaged first, then averaged over queries.
double mean_rank(const std::vector<QueryJudgment>& js);

// Per query, mean reciprocal rank over its anchors; averaged over queries.
// Returns (mrr, scale * mrr).
std::pair<double, double> mrr(const std::vector<QueryJudgment>& js, double scale);

MetricReport report(const std::vector<QueryJudgment>& js, const std::vector<std::size_t>& ks,
                    double scale = 10.0);

void save_report_json(const MetricReport& r, const std::string& path);
void save_report_csv(const MetricReport& r, const std::string& path);

}  // namespace taxodng
