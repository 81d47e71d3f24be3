#include "taxodng/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "taxodng/kernels.hpp"

namespace taxodng {

namespace {

struct FrozenFit {
    std::vector<double> factors;  // raw-coordinate factors per candidate row
    bool converged = true;
};

// Candidates arrive as centered rows; both sides are standardized so the L1
// geometry treats every node equally, and factors are mapped back through the
// standard deviations afterwards.
FrozenFit frozen_fit(const Matrix& centered_rows, const std::vector<double>& query,
                     const InferConfig& cfg) {
    const std::size_t k = centered_rows.rows;
    const std::size_t d = centered_rows.cols;
    if (query.size() != d) throw error("infer_query: query dimension mismatch");
    for (double v : query)
        if (!std::isfinite(v)) throw error("infer_query: non-finite query value");

    std::vector<double> sd(k);
    Matrix xs = centered_rows;
    for (std::size_t i = 0; i < k; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) ss += xs(i, j) * xs(i, j);
        sd[i] = std::sqrt(ss / static_cast<double>(d));
        if (!(sd[i] > 0.0)) throw error("infer_query: candidate row has zero variance");
        for (std::size_t j = 0; j < d; ++j) xs(i, j) /= sd[i];
    }

    double qmean = 0.0;
    for (double v : query) qmean += v;
    qmean /= static_cast<double>(d);
    double qss = 0.0;
    for (double v : query) qss += (v - qmean) * (v - qmean);
    const double qsd = std::sqrt(qss / static_cast<double>(d));
    if (!(qsd > 0.0)) throw error("infer_query: query has zero variance");
    std::vector<double> qs(d);
    for (std::size_t j = 0; j < d; ++j) qs[j] = (query[j] - qmean) / qsd;

    // Step size from the gram row sums: |tanh'| <= 1 bounds the curvature by
    // (1/d) Xs Xs^T.
    Matrix gram = kernels::matmul_bt(xs, xs);
    double max_row_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < k; ++j) rs += std::abs(gram(i, j));
        max_row_sum = std::max(max_row_sum, rs / static_cast<double>(d));
    }
    const double eta = 1.0 / std::max(max_row_sum, 1e-12);

    std::vector<double> s(k, 0.0), grad(k), residual(d);
    bool converged = false;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        for (std::size_t j = 0; j < d; ++j) residual[j] = qs[j];
        for (std::size_t i = 0; i < k; ++i) {
            if (s[i] == 0.0) continue;
            const double* row = xs.row(i);
            for (std::size_t j = 0; j < d; ++j) residual[j] -= s[i] * row[j];
        }
        for (std::size_t j = 0; j < d; ++j) residual[j] = std::tanh(residual[j]);
        for (std::size_t i = 0; i < k; ++i) {
            const double* row = xs.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += residual[j] * row[j];
            grad[i] = acc / static_cast<double>(d);
        }

        double smax = 0.0;
        for (double v : s) smax = std::max(smax, std::abs(v));
        const double lambda = cfg.lambda_scale * std::max(smax, cfg.lambda_floor);
        const double shrink = eta * lambda;

        double max_delta = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double next = s[i] + eta * grad[i];
            if (next > shrink)
                next -= shrink;
            else if (next < -shrink)
                next += shrink;
            else
                next = 0.0;
            max_delta = std::max(max_delta, std::abs(next - s[i]));
            s[i] = next;
        }
        if (max_delta < cfg.tol) {
            converged = true;
            break;
        }
    }

    FrozenFit fit;
    fit.converged = converged;
    fit.factors.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        double raw = s[i] * qsd / sd[i];
        fit.factors[i] = std::abs(raw) < cfg.prune_threshold ? 0.0 : raw;
    }
    return fit;
}

InheritanceVector refit_query(const ModelState& m, const QueryVector& q, const InferConfig& cfg) {
    const std::size_t n = m.centered.rows;
    const std::size_t d = m.centered.cols;
    if (q.values.size() != d) throw error("infer_query: query dimension mismatch");

    EmbeddingMatrix emb;
    emb.data = Matrix(n + 1, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = m.centered.row(i);
        double* dst = emb.data.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] + m.preprocess.means[i];
    }
    std::copy(q.values.begin(), q.values.end(), emb.data.row(n));
    emb.order.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) emb.order[i] = i;

    TrainConfig tc = m.config;
    tc.max_iters = cfg.refit_iters;
    tc.edge_mask = Matrix();
    tc.w_init = Matrix::identity(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) tc.w_init(i, j) = m.transition.w(i, j);

    ModelState refit = train(emb, tc);
    Matrix s_hat = extract_inheritance(refit).s;

    InheritanceVector out;
    out.query_id = q.id;
    out.factors.resize(n);
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
        double v = s_hat(n, j);
        out.factors[j] = std::abs(v) < cfg.prune_threshold ? 0.0 : v;
        any = any || out.factors[j] != 0.0;
    }
    out.no_anchor = !any;
    return out;
}

std::vector<std::pair<NodeId, double>> rank_pairs(std::vector<std::pair<NodeId, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        const bool az = a.second == 0.0, bz = b.second == 0.0;
        if (az != bz) return bz;  // nonzero factors first
        if (!az && a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return entries;
}

struct CandidateBlock {
    std::vector<NodeId> ids;
    Matrix rows;  // centered
    std::vector<double> factors;
    double best = 0.0;
};

void score_block(CandidateBlock& blk, const std::vector<double>& query, const InferConfig& cfg) {
    FrozenFit fit = frozen_fit(blk.rows, query, cfg);
    blk.factors = std::move(fit.factors);
    blk.best = 0.0;
    for (double f : blk.factors) blk.best = std::max(blk.best, f);
}

}  // namespace

InheritanceVector infer_query(const ModelState& m, const QueryVector& q, const InferConfig& cfg) {
    if (cfg.mode == InferMode::refit) return refit_query(m, q, cfg);
    FrozenFit fit = frozen_fit(m.centered, q.values, cfg);
    InheritanceVector out;
    out.query_id = q.id;
    out.factors = std::move(fit.factors);
    out.converged = fit.converged;
    out.no_anchor = std::all_of(out.factors.begin(), out.factors.end(),
                                [](double v) { return v == 0.0; });
    return out;
}

RankedAnchors rank_anchors(const InheritanceVector& s) {
    std::vector<std::pair<NodeId, double>> entries(s.factors.size());
    for (std::size_t i = 0; i < s.factors.size(); ++i) entries[i] = {i, s.factors[i]};
    return {s.query_id, rank_pairs(std::move(entries))};
}

RankedAnchors recombine(const std::vector<BlockModel>& blocks, const QueryVector& q,
                        std::size_t rounds, const InferConfig& cfg) {
    if (blocks.empty()) throw error("recombine: empty sub-taxonomy list");

    std::vector<CandidateBlock> pool;
    pool.reserve(blocks.size());
    for (const BlockModel& b : blocks) {
        if (b.model == nullptr) throw error("recombine: missing block model");
        if (b.members.size() != b.model->centered.rows)
            throw error("recombine: member list does not match model rows");
        CandidateBlock blk;
        blk.ids = b.members;
        blk.rows = b.model->centered;
        score_block(blk, q.values, cfg);
        pool.push_back(std::move(blk));
    }

    std::unordered_map<NodeId, double> latest;
    for (const CandidateBlock& blk : pool)
        for (std::size_t i = 0; i < blk.ids.size(); ++i) latest[blk.ids[i]] = blk.factors[i];

    if (rounds == 0) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (pool[i].best > pool[best].best) best = i;
        std::vector<std::pair<NodeId, double>> entries(pool[best].ids.size());
        for (std::size_t i = 0; i < entries.size(); ++i)
            entries[i] = {pool[best].ids[i], pool[best].factors[i]};
        return {q.id, rank_pairs(std::move(entries))};
    }

    const std::size_t fan_in = std::max<std::size_t>(cfg.merge_k, 2);
    for (std::size_t r = 0; r < rounds && pool.size() >= 2; ++r) {
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pool[a].best > pool[b].best; });
        order.resize(std::min(fan_in, pool.size()));

        CandidateBlock merged;
        std::unordered_map<NodeId, std::size_t> seen;
        const std::size_t d = pool[order[0]].rows.cols;
        std::size_t count = 0;
        for (std::size_t idx : order)
            for (NodeId id : pool[idx].ids)
                if (seen.emplace(id, count).second) ++count;
        merged.ids.resize(count);
        merged.rows = Matrix(count, d);
        std::vector<bool> filled(count, false);
        for (std::size_t idx : order)
            for (std::size_t i = 0; i < pool[idx].ids.size(); ++i) {
                const std::size_t slot = seen.at(pool[idx].ids[i]);
                if (filled[slot]) continue;
                filled[slot] = true;
                merged.ids[slot] = pool[idx].ids[i];
                std::copy(pool[idx].rows.row(i), pool[idx].rows.row(i) + d, merged.rows.row(slot));
            }
        score_block(merged, q.values, cfg);
        for (std::size_t i = 0; i < merged.ids.size(); ++i) latest[merged.ids[i]] = merged.factors[i];

        std::sort(order.begin(), order.end(), std::greater<>());
        for (std::size_t idx : order) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
        pool.push_back(std::move(merged));
    }

    std::vector<std::pair<NodeId, double>> entries(latest.begin(), latest.end());
    return {q.id, rank_pairs(std::move(entries))};
}

Taxonomy attach(const Taxonomy& t, const std::string& query_id, const RankedAnchors& anchors,
                std::size_t top_m) {
    if (anchors.ranking.empty()) throw error("attach: empty anchor ranking");
    std::vector<NodeId> chosen;
    for (const auto& [id, factor] : anchors.ranking) {
        if (chosen.size() == top_m) break;
        if (factor == 0.0) break;  // ranking puts all nonzero factors first
        if (id >= t.node_count()) throw error("attach: anchor id out of range");
        chosen.push_back(id);
    }
    if (chosen.empty()) throw error("attach: no anchor with nonzero factor");
    if (t.has_node(query_id)) throw error("attach: node '" + query_id + "' already exists");

    std::vector<std::string> external_ids = t.external_ids;
    std::vector<std::string> names = t.names;
    std::vector<std::pair<NodeId, NodeId>> edges = t.edges;
    const NodeId q_id = t.node_count();
    external_ids.push_back(query_id);
    names.push_back(query_id);
    for (NodeId anchor : chosen) edges.emplace_back(anchor, q_id);
    return make_taxonomy(std::move(external_ids), std::move(names), std::move(edges));
}

}  // namespace taxodng
