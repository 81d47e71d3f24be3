#include "taxodng/preprocess.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "taxodng/kernels.hpp"
#include "taxodng/linalg.hpp"

namespace taxodng {

namespace {

std::pair<Matrix, std::vector<std::string>> parse_vector_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw error("cannot open embeddings file " + path);
    std::string line;
    if (!std::getline(f, line)) throw error(path + ": missing header");
    std::istringstream header(line);
    std::size_t count = 0, dim = 0;
    if (!(header >> count >> dim) || dim < 2) throw error(path + ": malformed header");
    Matrix data(count, dim);
    std::vector<std::string> ids(count);
    for (std::size_t r = 0; r < count; ++r) {
        if (!std::getline(f, line)) throw error(path + ": fewer rows than header declares");
        std::istringstream row(line);
        if (!(row >> ids[r])) throw error(path + ": malformed row " + std::to_string(r + 2));
        double* out = data.row(r);
        for (std::size_t j = 0; j < dim; ++j) {
            if (!(row >> out[j]))
                throw error(path + ": dimension mismatch on row " + std::to_string(r + 2));
            if (!std::isfinite(out[j]))
                throw error(path + ": non-finite value for node " + ids[r]);
        }
        double extra;
        if (row >> extra) throw error(path + ": dimension mismatch on row " + std::to_string(r + 2));
    }
    return {std::move(data), std::move(ids)};
}

}  // namespace

std::pair<Matrix, std::vector<std::string>> load_vectors(const std::string& path) {
    return parse_vector_file(path);
}

EmbeddingMatrix load_embeddings(const std::string& path, const Taxonomy& t) {
    auto [data, ids] = parse_vector_file(path);
    EmbeddingMatrix em;
    em.data = Matrix(t.node_count(), data.cols);
    em.order.resize(t.node_count());
    std::vector<char> filled(t.node_count(), 0);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const auto it = t.id_of.find(ids[r]);
        if (it == t.id_of.end()) continue;  // extra vectors are allowed
        const NodeId i = it->second;
        if (filled[i]) throw error("duplicate vector for node " + ids[r]);
        filled[i] = 1;
        for (std::size_t j = 0; j < data.cols; ++j) em.data(i, j) = data(r, j);
    }
    for (NodeId i = 0; i < t.node_count(); ++i) {
        if (!filled[i]) throw error("missing vector for node " + t.external_ids[i]);
        em.order[i] = i;
    }
    return em;
}

void save_embeddings(const Matrix& x, const std::vector<std::string>& external_ids,
                     const std::string& path) {
    if (x.rows != external_ids.size()) throw error("save_embeddings: id count mismatch");
    std::ofstream f(path);
    if (!f) throw error("cannot write embeddings file " + path);
    f.precision(17);
    f << x.rows << ' ' << x.cols << '\n';
    for (std::size_t i = 0; i < x.rows; ++i) {
        f << external_ids[i];
        const double* row = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) f << ' ' << row[j];
        f << '\n';
    }
}

std::pair<PreprocessTransform, Matrix> fit_whiten(const EmbeddingMatrix& x, double eigenvalue_floor) {
    const std::size_t n = x.data.rows;
    const std::size_t d = x.data.cols;
    if (d < n) throw error("fit_whiten: need d >= N, got N=" + std::to_string(n) +
                           " d=" + std::to_string(d));
    PreprocessTransform tr;
    tr.means.resize(n);
    Matrix xc = x.data;
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        const double* row = x.data.row(i);
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        tr.means[i] = mean;
        double* out = xc.row(i);
        for (std::size_t j = 0; j < d; ++j) out[j] -= mean;
    }

    Matrix cov = kernels::matmul_bt(xc, xc);
    for (double& v : cov.a) v /= static_cast<double>(d);

    const auto eig = linalg::eigh(cov);
    if (eig.values.front() <= eigenvalue_floor)
        throw error("fit_whiten: rank-deficient covariance, eigenvalue " +
                    std::to_string(eig.values.front()));

    // Z = Q diag(1/sqrt(w)) Q^T, inverse = Q diag(sqrt(w)) Q^T
    Matrix scaled(n, n), scaled_inv(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            scaled(i, j) = eig.vectors(i, j) / std::sqrt(eig.values[j]);
            scaled_inv(i, j) = eig.vectors(i, j) * std::sqrt(eig.values[j]);
        }
    }
    tr.whitener = kernels::matmul_bt(scaled, eig.vectors);
    tr.inverse_whitener = kernels::matmul_bt(scaled_inv, eig.vectors);

    Matrix xw = kernels::matmul(tr.whitener, xc);
    return {std::move(tr), std::move(xw)};
}

Matrix apply_inverse(const PreprocessTransform& tr, const Matrix& m) {
    return kernels::matmul(m, tr.whitener);
}

}  // namespace taxodng
