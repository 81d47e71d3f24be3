#pragma once
#include <string>
#include <vector>

#include "taxodng/matrix.hpp"
#include "taxodng/taxonomy.hpp"

// Embedding loading plus the centering/whitening the likelihood assumes:
// rows are node variables, the d embedding coordinates are the samples.

namespace taxodng {

struct EmbeddingMatrix {
    Matrix data;                // N x d, row i = node i
    std::vector<NodeId> order;  // dense node ids aligned with rows
    std::size_t dim() const { return data.cols; }
};

struct PreprocessTransform {
    std::vector<double> means;  // per-node mean over the d sample axis
    Matrix whitener;            // Z = C^(-1/2), symmetric
    Matrix inverse_whitener;    // C^(1/2)
};

inline constexpr double kEigenvalueFloor = 1e-8;

// Text format: header `<count> <dim>`, then `<node_id> <f1> ... <fd>` per node.
// Rows come back ordered by dense NodeId; every taxonomy node must be present.
EmbeddingMatrix load_embeddings(const std::string& path, const Taxonomy& t);

// Loads vectors for ids not bound to a taxonomy (query files); returns ids in file order.
std::pair<Matrix, std::vector<std::string>> load_vectors(const std::string& path);

void save_embeddings(const Matrix& x, const std::vector<std::string>& external_ids,
                     const std::string& path);

// Centering plus symmetric (ZCA) whitening: Xw = Z (X - means) with
// (1/d) Xw Xw^T = I. Requires d >= N and min covariance eigenvalue > floor.
std::pair<PreprocessTransform, Matrix> fit_whiten(const EmbeddingMatrix& x,
                                                  double eigenvalue_floor = kEigenvalueFloor);

// m * Z: composes a whitened-domain matrix into one acting on centered data.
Matrix apply_inverse(const PreprocessTransform& tr, const Matrix& m);

}  // namespace taxodng
