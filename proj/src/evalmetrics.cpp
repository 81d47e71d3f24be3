#include "taxodng/evalmetrics.hpp"

#include <fstream>
#include <unordered_map>

#include "json.hpp"

namespace taxodng {

namespace {

// 1-based rank of every ground-truth anchor in the ranking.
std::vector<std::size_t> gt_ranks(const QueryJudgment& j) {
    if (j.ground_truth.empty()) throw error("metrics: query '" + j.query_id + "' has no ground truth");
    std::unordered_map<NodeId, std::size_t> rank;
    rank.reserve(j.ranking.ranking.size());
    for (std::size_t i = 0; i < j.ranking.ranking.size(); ++i) {
        if (!rank.emplace(j.ranking.ranking[i].first, i + 1).second)
            throw error("metrics: duplicate node in ranking for query '" + j.query_id + "'");
    }
    std::vector<std::size_t> out;
    out.reserve(j.ground_truth.size());
    for (NodeId id : j.ground_truth) {
        auto it = rank.find(id);
        if (it == rank.end())
            throw error("metrics: ground-truth anchor missing from ranking for query '" + j.query_id + "'");
        out.push_back(it->second);
    }
    return out;
}

std::size_t hits_at_k(const QueryJudgment& j, std::size_t k) {
    if (k == 0) throw error("metrics: k must be at least 1");
    if (k > j.ranking.ranking.size()) throw error("metrics: k exceeds ranking length");
    std::size_t hits = 0;
    for (std::size_t r : gt_ranks(j))
        if (r <= k) ++hits;
    return hits;
}

}  // namespace

double precision_at_k(const QueryJudgment& j, std::size_t k) {
    return static_cast<double>(hits_at_k(j, k)) / static_cast<double>(k);
}

double recall_at_k(const QueryJudgment& j, std::size_t k) {
    return static_cast<double>(hits_at_k(j, k)) / static_cast<double>(j.ground_truth.size());
}

double mean_rank(const std::vector<QueryJudgment>& js) {
    if (js.empty()) throw error("metrics: empty judgment list");
    double outer = 0.0;
    for (const QueryJudgment& j : js) {
        double inner = 0.0;
        const auto ranks = gt_ranks(j);
        for (std::size_t r : ranks) inner += static_cast<double>(r);
        outer += inner / static_cast<double>(ranks.size());
    }
    return outer / static_cast<double>(js.size());
}

std::pair<double, double> mrr(const std::vector<QueryJudgment>& js, double scale) {
    if (js.empty()) throw error("metrics: empty judgment list");
    if (!(scale > 0.0)) throw error("metrics: scale must be positive");
    double outer = 0.0;
    for (const QueryJudgment& j : js) {
        double inner = 0.0;
        const auto ranks = gt_ranks(j);
        for (std::size_t r : ranks) inner += 1.0 / static_cast<double>(r);
        outer += inner / static_cast<double>(ranks.size());
    }
    const double value = outer / static_cast<double>(js.size());
    return {value, scale * value};
}

MetricReport report(const std::vector<QueryJudgment>& js, const std::vector<std::size_t>& ks,
                    double scale) {
    if (js.empty()) throw error("metrics: empty judgment list");
    MetricReport r;
    r.ks = ks;
    r.scale = scale;
    r.query_count = js.size();
    for (std::size_t k : ks) {
        double p = 0.0, rec = 0.0;
        for (const QueryJudgment& j : js) {
            p += precision_at_k(j, k);
            rec += recall_at_k(j, k);
        }
        r.precision.push_back(p / static_cast<double>(js.size()));
        r.recall.push_back(rec / static_cast<double>(js.size()));
    }
    r.mean_rank_value = mean_rank(js);
    std::tie(r.mrr_value, r.scaled_mrr) = mrr(js, scale);
    return r;
}

void save_report_json(const MetricReport& r, const std::string& path) {
    nlohmann::json j;
    j["query_count"] = r.query_count;
    j["scale"] = r.scale;
    j["mean_rank"] = r.mean_rank_value;
    j["mrr"] = r.mrr_value;
    j["scaled_mrr"] = r.scaled_mrr;
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
        const std::string k = std::to_string(r.ks[i]);
        j["precision_at_k"][k] = r.precision[i];
        j["recall_at_k"][k] = r.recall[i];
    }
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void save_report_csv(const MetricReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path);
    out.precision(17);
    out << "metric,value\n";
    for (std::size_t i = 0; i < r.ks.size(); ++i)
        out << "precision@" << r.ks[i] << "," << r.precision[i] << "\n";
    for (std::size_t i = 0; i < r.ks.size(); ++i)
        out << "recall@" << r.ks[i] << "," << r.recall[i] << "\n";
    out << "mean_rank," << r.mean_rank_value << "\n";
    out << "mrr," << r.mrr_value << "\n";
    out << "scaled_mrr," << r.scaled_mrr << "\n";
    out << "query_count," << r.query_count << "\n";
}

}  // namespace taxodng
