#pragma once
#include <string>
#include <vector>

#include "taxodng/learner.hpp"

// Model directory layout: manifest.json (shapes, node order, config, loss log)
// plus little-endian float64 row-major blobs W.bin, Z.bin, means.bin, Xc.bin.

namespace taxodng {

struct StoredModel {
    ModelState state;
    std::vector<std::string> external_ids;  // aligned with matrix rows
};

void save_model(const ModelState& m, const std::vector<std::string>& external_ids,
                const std::string& dir);

StoredModel load_model(const std::string& dir);

}  // namespace taxodng
