#include "taxodng/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taxodng/rng.hpp"

namespace taxodng {

std::vector<NodeId> Taxonomy::roots() const {
    std::vector<char> has_parent(node_count(), 0);
    for (const auto& [p, c] : edges) has_parent[c] = 1;
    std::vector<NodeId> out;
    for (NodeId i = 0; i < node_count(); ++i)
        if (!has_parent[i]) out.push_back(i);
    return out;
}

std::vector<NodeId> Taxonomy::leaves() const {
    std::vector<char> has_child(node_count(), 0);
    for (const auto& [p, c] : edges) has_child[p] = 1;
    std::vector<NodeId> out;
    for (NodeId i = 0; i < node_count(); ++i)
        if (!has_child[i]) out.push_back(i);
    return out;
}

std::vector<std::vector<NodeId>> Taxonomy::children() const {
    std::vector<std::vector<NodeId>> adj(node_count());
    for (const auto& [p, c] : edges) adj[p].push_back(c);
    return adj;
}

std::vector<std::vector<NodeId>> Taxonomy::parents() const {
    std::vector<std::vector<NodeId>> adj(node_count());
    for (const auto& [p, c] : edges) adj[c].push_back(p);
    return adj;
}

namespace {

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

// Finds one directed cycle for the error message; empty if acyclic.
std::vector<NodeId> find_cycle(const Taxonomy& t) {
    const auto adj = t.children();
    std::vector<int> color(t.node_count(), 0);
    std::vector<NodeId> stack;
    std::vector<NodeId> cycle;
    auto dfs = [&](auto&& self, NodeId v) -> bool {
        color[v] = 1;
        stack.push_back(v);
        for (NodeId w : adj[v]) {
            if (color[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                cycle.assign(it, stack.end());
                cycle.push_back(w);
                return true;
            }
            if (color[w] == 0 && self(self, w)) return true;
        }
        color[v] = 2;
        stack.pop_back();
        return false;
    };
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (color[v] == 0 && dfs(dfs, v)) return cycle;
    return {};
}

void validate_structure(const Taxonomy& t) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& [p, c] : t.edges) {
        if (p >= t.node_count() || c >= t.node_count()) throw error("dangling edge endpoint");
        if (p == c) throw error("self-loop on node " + t.external_ids[p]);
        if (!seen.insert({p, c}).second)
            throw error("duplicate edge " + t.external_ids[p] + " -> " + t.external_ids[c]);
    }
    validate_dag(t);
}

void insert_pseudo_root(Taxonomy& t) {
    const auto r = t.roots();
    if (r.size() <= 1) return;
    const NodeId pseudo = t.node_count();
    t.names.push_back("__root__");
    t.external_ids.push_back("__root__");
    if (!t.id_of.emplace("__root__", pseudo).second) throw error("node id __root__ already in use");
    for (NodeId old_root : r) t.edges.emplace_back(pseudo, old_root);
}

}  // namespace

Taxonomy make_taxonomy(std::vector<std::string> external_ids, std::vector<std::string> names,
                       std::vector<std::pair<NodeId, NodeId>> edges) {
    if (external_ids.size() != names.size()) throw error("make_taxonomy: id/name count mismatch");
    Taxonomy t;
    t.external_ids = std::move(external_ids);
    t.names = std::move(names);
    t.edges = std::move(edges);
    for (NodeId i = 0; i < t.node_count(); ++i)
        if (!t.id_of.emplace(t.external_ids[i], i).second)
            throw error("duplicate node id " + t.external_ids[i]);
    validate_structure(t);
    insert_pseudo_root(t);
    return t;
}

Taxonomy load_taxonomy(const std::string& nodes_path, const std::string& edges_path) {
    std::ifstream nf(nodes_path);
    if (!nf) throw error("cannot open nodes file " + nodes_path);
    std::vector<std::string> ids, names;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(nf, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw error(nodes_path + ":" + std::to_string(lineno) + ": malformed node line");
        ids.push_back(line.substr(0, tab));
        names.push_back(line.substr(tab + 1));
    }

    std::unordered_map<std::string, NodeId> id_of;
    for (NodeId i = 0; i < ids.size(); ++i)
        if (!id_of.emplace(ids[i], i).second) throw error("duplicate node id " + ids[i]);

    std::ifstream ef(edges_path);
    if (!ef) throw error("cannot open edges file " + edges_path);
    std::vector<std::pair<NodeId, NodeId>> edges;
    lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw error(edges_path + ":" + std::to_string(lineno) + ": malformed edge line");
        const std::string pid = line.substr(0, tab);
        const std::string cid = line.substr(tab + 1);
        const auto pi = id_of.find(pid);
        const auto ci = id_of.find(cid);
        if (pi == id_of.end()) throw error("dangling edge endpoint " + pid);
        if (ci == id_of.end()) throw error("dangling edge endpoint " + cid);
        edges.emplace_back(pi->second, ci->second);
    }
    return make_taxonomy(std::move(ids), std::move(names), std::move(edges));
}

void save_taxonomy(const Taxonomy& t, const std::string& nodes_path, const std::string& edges_path) {
    std::ofstream nf(nodes_path);
    if (!nf) throw error("cannot write nodes file " + nodes_path);
    for (NodeId i = 0; i < t.node_count(); ++i) nf << t.external_ids[i] << '\t' << t.names[i] << '\n';
    std::ofstream ef(edges_path);
    if (!ef) throw error("cannot write edges file " + edges_path);
    for (const auto& [p, c] : t.edges) ef << t.external_ids[p] << '\t' << t.external_ids[c] << '\n';
}

std::vector<NodeId> validate_dag(const Taxonomy& t) {
    const std::size_t n = t.node_count();
    std::vector<std::size_t> indeg(n, 0);
    const auto adj = t.children();
    for (const auto& [p, c] : t.edges) ++indeg[c];
    std::vector<NodeId> order;
    order.reserve(n);
    std::vector<NodeId> frontier;
    for (NodeId i = 0; i < n; ++i)
        if (indeg[i] == 0) frontier.push_back(i);
    while (!frontier.empty()) {
        // smallest id first keeps the order deterministic
        const auto it = std::min_element(frontier.begin(), frontier.end());
        const NodeId v = *it;
        frontier.erase(it);
        order.push_back(v);
        for (NodeId w : adj[v])
            if (--indeg[w] == 0) frontier.push_back(w);
    }
    if (order.size() != n) {
        const auto cyc = find_cycle(t);
        std::ostringstream msg;
        msg << "cycle detected:";
        for (NodeId v : cyc) msg << ' ' << t.external_ids[v];
        throw error(msg.str());
    }
    return order;
}

namespace {

// Nodes on any source->leaf path: descendants(source) intersected with ancestors(leaf).
std::vector<char> reachable(const std::vector<std::vector<NodeId>>& adj, NodeId from) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<NodeId> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        for (NodeId w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    return seen;
}

}  // namespace

std::vector<SubTaxonomy> split_subtaxonomies(const Taxonomy& t, std::size_t max_size) {
    if (max_size < 2) throw error("split_subtaxonomies: max_size must be at least 2");
    if (t.node_count() == 0) return {};
    if (t.node_count() == 1) return {SubTaxonomy{0, {0}, {0}}};
    const auto down = t.children();
    const auto up = t.parents();
    std::vector<SubTaxonomy> out;
    for (NodeId root : t.roots()) {
        const auto desc = reachable(down, root);
        std::set<NodeId> group_members;
        std::vector<NodeId> group_leaves;
        auto flush = [&]() {
            if (group_leaves.empty()) return;
            SubTaxonomy sub;
            sub.source = root;
            sub.destinations = group_leaves;
            sub.members.assign(group_members.begin(), group_members.end());
            out.push_back(std::move(sub));
            group_members.clear();
            group_leaves.clear();
        };
        for (NodeId leaf : t.leaves()) {
            if (!desc[leaf]) continue;
            const auto anc = reachable(up, leaf);
            std::vector<NodeId> closure;
            for (NodeId v = 0; v < t.node_count(); ++v)
                if (desc[v] && anc[v]) closure.push_back(v);
            std::set<NodeId> merged = group_members;
            merged.insert(closure.begin(), closure.end());
            if (!group_leaves.empty() && merged.size() > max_size) flush();
            group_members.insert(closure.begin(), closure.end());
            group_leaves.push_back(leaf);
        }
        flush();
    }
    return out;
}

DatasetSplit make_split(const Taxonomy& t, std::size_t query_count, std::uint64_t rng_seed) {
    std::vector<char> is_root(t.node_count(), 0);
    for (NodeId r : t.roots()) is_root[r] = 1;
    std::vector<NodeId> candidates;
    for (NodeId i = 0; i < t.node_count(); ++i)
        if (!is_root[i]) candidates.push_back(i);
    if (query_count >= t.node_count() || query_count > candidates.size())
        throw error("make_split: query_count too large");

    Rng rng(derive_seed(rng_seed, "split"));
    for (std::size_t i = 0; i < query_count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }
    DatasetSplit split;
    split.rng_seed = rng_seed;
    split.query_ids.assign(candidates.begin(), candidates.begin() + static_cast<long>(query_count));
    std::sort(split.query_ids.begin(), split.query_ids.end());
    std::vector<char> is_query(t.node_count(), 0);
    for (NodeId q : split.query_ids) is_query[q] = 1;
    for (NodeId i = 0; i < t.node_count(); ++i)
        if (!is_query[i]) split.seed_ids.push_back(i);
    return split;
}

Taxonomy reduce_to_seed(const Taxonomy& t, const DatasetSplit& split) {
    std::vector<char> removed(t.node_count(), 0);
    for (NodeId q : split.query_ids) removed[q] = 1;

    std::set<std::pair<NodeId, NodeId>> work(t.edges.begin(), t.edges.end());
    for (NodeId v : validate_dag(t)) {
        if (!removed[v]) continue;
        std::vector<NodeId> ps, cs;
        for (const auto& [p, c] : work) {
            if (c == v) ps.push_back(p);
            if (p == v) cs.push_back(c);
        }
        for (NodeId p : ps) work.erase({p, v});
        for (NodeId c : cs) work.erase({v, c});
        for (NodeId p : ps)
            for (NodeId c : cs)
                if (p != c) work.insert({p, c});
    }

    std::vector<NodeId> dense_of(t.node_count(), 0);
    std::vector<std::string> ids, names;
    for (NodeId i = 0; i < t.node_count(); ++i) {
        if (removed[i]) continue;
        dense_of[i] = ids.size();
        ids.push_back(t.external_ids[i]);
        names.push_back(t.names[i]);
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& [p, c] : work) edges.emplace_back(dense_of[p], dense_of[c]);
    std::sort(edges.begin(), edges.end());
    return make_taxonomy(std::move(ids), std::move(names), std::move(edges));
}

DatasetSplit load_split(const std::string& path, const Taxonomy& t) {
    std::ifstream f(path);
    if (!f) throw error("cannot open split file " + path);
    nlohmann::json j;
    f >> j;
    DatasetSplit split;
    split.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    auto to_ids = [&](const nlohmann::json& arr) {
        std::vector<NodeId> out;
        for (const auto& e : arr) {
            const std::string ext = e.is_string() ? e.get<std::string>() : nlohmann::to_string(e);
            const auto it = t.id_of.find(ext);
            if (it == t.id_of.end()) throw error("split references unknown node " + ext);
            out.push_back(it->second);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    split.seed_ids = to_ids(j.at("seed"));
    split.query_ids = to_ids(j.at("query"));
    if (split.seed_ids.size() + split.query_ids.size() != t.node_count())
        throw error("split does not cover the taxonomy");
    return split;
}

void save_split(const DatasetSplit& split, const Taxonomy& t, const std::string& path) {
    nlohmann::json j;
    j["rng_seed"] = split.rng_seed;
    auto to_ext = [&](const std::vector<NodeId>& ids) {
        std::vector<std::string> out;
        for (NodeId i : ids) out.push_back(t.external_ids[i]);
        return out;
    };
    j["seed"] = to_ext(split.seed_ids);
    j["query"] = to_ext(split.query_ids);
    std::ofstream f(path);
    if (!f) throw error("cannot write split file " + path);
    f << j.dump(2) << '\n';
}

}  // namespace taxodng
