#pragma once
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taxodng/matrix.hpp"

// Seed taxonomies as DAGs: loading and validation, sub-taxonomy splits for
// blockwise training, and seed/query test splits.

namespace taxodng {

using NodeId = std::size_t;  // dense in [0, N); matrix row i corresponds to node i

struct Taxonomy {
    std::vector<std::string> names;                    // dense id -> surface name
    std::vector<std::string> external_ids;             // dense id -> on-disk id
    std::unordered_map<std::string, NodeId> id_of;     // on-disk id -> dense id
    std::vector<std::pair<NodeId, NodeId>> edges;      // (parent, child), unique

    std::size_t node_count() const { return names.size(); }
    std::vector<NodeId> roots() const;                 // in-degree-0 nodes
    std::vector<NodeId> leaves() const;                // out-degree-0 nodes
    std::vector<std::vector<NodeId>> children() const;
    std::vector<std::vector<NodeId>> parents() const;
    bool has_node(const std::string& external_id) const { return id_of.count(external_id) > 0; }
};

struct SubTaxonomy {
    NodeId source = 0;
    std::vector<NodeId> destinations;
    std::vector<NodeId> members;  // closed under all source->destination paths, ascending
};

struct DatasetSplit {
    std::vector<NodeId> seed_ids;   // ascending
    std::vector<NodeId> query_ids;  // ascending
    std::uint64_t rng_seed = 0;
};

// Files: nodes TSV `<node_id>\t<surface_name>`, edges TSV `<parent_id>\t<child_id>`.
// Inserts a pseudo-root named "__root__" when the file describes several roots.
Taxonomy load_taxonomy(const std::string& nodes_path, const std::string& edges_path);

// Construct directly from parts (validates the same invariants as loading).
Taxonomy make_taxonomy(std::vector<std::string> external_ids, std::vector<std::string> names,
                       std::vector<std::pair<NodeId, NodeId>> edges);

void save_taxonomy(const Taxonomy& t, const std::string& nodes_path, const std::string& edges_path);

// Topological order, parents before children. Throws naming one cycle.
std::vector<NodeId> validate_dag(const Taxonomy& t);

// One sub-taxonomy per (root, destination group): group members are all nodes
// on paths from the root to the grouped leaves; leaves are packed greedily in
// dense order while the member closure stays within max_size.
std::vector<SubTaxonomy> split_subtaxonomies(const Taxonomy& t, std::size_t max_size);

// Seeded query hold-out; query nodes are never roots.
DatasetSplit make_split(const Taxonomy& t, std::size_t query_count, std::uint64_t rng_seed);

// Seed taxonomy after removing query nodes: each removed node is replaced by
// parent->child edges, processed in topological order, so surviving
// descendants reattach to their nearest surviving ancestors.
Taxonomy reduce_to_seed(const Taxonomy& t, const DatasetSplit& split);

DatasetSplit load_split(const std::string& path, const Taxonomy& t);
void save_split(const DatasetSplit& split, const Taxonomy& t, const std::string& path);

}  // namespace taxodng
