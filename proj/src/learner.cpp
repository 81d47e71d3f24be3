#include "taxodng/learner.hpp"

#include <algorithm>
#include <cmath>

#include "taxodng/kernels.hpp"
#include "taxodng/linalg.hpp"
#include "taxodng/rng.hpp"

namespace taxodng {

Matrix log_density(const Matrix& u, DensityMode mode) {
    switch (mode) {
        case DensityMode::paper_tanh:
            return kernels::map(u, [](double v) { return std::log(std::tanh(std::max(v, kTanhClamp))); });
        case DensityMode::log_cosh:
            return kernels::map(u, [](double v) { return -std::log(std::cosh(v)) - kLnPi; });
        case DensityMode::sub_gaussian:
            return kernels::map(u, [](double v) {
                return std::log(std::cosh(v)) - 0.5 * v * v - kSubGaussNorm;
            });
    }
    throw error("unknown density mode");
}

namespace {

// Score d(log-density)/du for each mode.
Matrix score(const Matrix& u, DensityMode mode) {
    switch (mode) {
        case DensityMode::paper_tanh:
            return kernels::map(u, [](double v) {
                double s = std::sinh(2.0 * v);
                if (std::abs(s) < kSinhFloor) s = std::copysign(kSinhFloor, s == 0.0 ? 1.0 : s);
                return 2.0 / s;
            });
        case DensityMode::log_cosh:
            return kernels::map(u, [](double v) { return -std::tanh(v); });
        case DensityMode::sub_gaussian:
            return kernels::map(u, [](double v) { return std::tanh(v) - v; });
    }
    throw error("unknown density mode");
}

void project_mask(Matrix& grad, const Matrix& mask) {
    if (mask.rows == 0) return;
    if (!grad.same_shape(mask)) throw error("edge mask shape mismatch");
    for (std::size_t i = 0; i < grad.rows; ++i)
        for (std::size_t j = 0; j < grad.cols; ++j)
            if (i != j && mask(i, j) == 0.0) grad(i, j) = 0.0;
}

}  // namespace

double loss(const TransitionMatrix& w, const Matrix& xw) {
    const double detw = linalg::det(w.w);
    if (std::abs(detw) <= kDetFloor) throw error("loss: singular transition matrix");
    const Matrix u = kernels::matmul(w.w, xw);
    const Matrix ld = log_density(u, w.density);
    const double invd = 1.0 / static_cast<double>(xw.cols);
    double acc = 0.0;
    for (double v : ld.a) acc += v;
    return -acc * invd - std::log(std::abs(detw));
}

Matrix gradient(const TransitionMatrix& w, const Matrix& xw) {
    const auto f = linalg::lu_factor(w.w);
    if (f.singular || std::abs(linalg::det(f)) <= kDetFloor)
        throw error("gradient: singular transition matrix");
    const Matrix u = kernels::matmul(w.w, xw);
    const Matrix g = score(u, w.density);
    Matrix grad = kernels::matmul_bt(g, xw);
    const double invd = 1.0 / static_cast<double>(xw.cols);
    for (double& v : grad.a) v *= invd;
    const Matrix winv_t = kernels::transpose(linalg::inverse(f));
    for (std::size_t i = 0; i < grad.a.size(); ++i) grad.a[i] += winv_t.a[i];
    return grad;
}

TransitionMatrix step(const TransitionMatrix& w, const Matrix& grad, double alpha) {
    if (!w.w.same_shape(grad)) throw error("step: gradient shape mismatch");
    double a = alpha;
    for (int attempt = 0; attempt <= 20; ++attempt) {
        Matrix next = w.w;
        for (std::size_t i = 0; i < next.a.size(); ++i) next.a[i] += a * grad.a[i];
        if (std::abs(linalg::det(next)) > kDetFloor) return {std::move(next), w.density};
        a *= 0.5;
    }
    throw error("step: could not keep |det W| above floor after 20 halvings");
}

ModelState train(const EmbeddingMatrix& x, const TrainConfig& cfg, const TrainCallback& callback) {
    if (x.data.rows > 2000) throw error("train: dense block capped at N <= 2000");
    ModelState m;
    m.config = cfg;
    m.node_order = x.order;
    auto [tr, xw] = fit_whiten(x);
    m.preprocess = std::move(tr);

    const std::size_t n = x.data.rows;
    Matrix xc = x.data;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = xc.row(i);
        for (std::size_t j = 0; j < xc.cols; ++j) row[j] -= m.preprocess.means[i];
    }
    m.centered = std::move(xc);

    Matrix w;
    if (cfg.w_init.rows != 0) {
        if (cfg.w_init.rows != n || cfg.w_init.cols != n) throw error("train: w_init shape mismatch");
        w = cfg.w_init;
    } else {
        Rng rng(derive_seed(cfg.rng_seed, "init"));
        w = Matrix::identity(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) w(i, j) += 0.01 * rng.uniform(-1.0, 1.0);
    }
    if (cfg.edge_mask.rows != 0)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && cfg.edge_mask(i, j) == 0.0) w(i, j) = 0.0;

    TransitionMatrix current{std::move(w), cfg.density};
    const double invd = 1.0 / static_cast<double>(xw.cols);
    double alpha = cfg.alpha;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const double l = loss(current, xw);
        m.loss_log.push_back(l);
        if (callback) callback(it, current.w, l);

        Matrix grad;
        if (cfg.natural_gradient) {
            // dW = (I + (1/d) G U^T) W
            const Matrix u = kernels::matmul(current.w, xw);
            const Matrix g = score(u, cfg.density);
            Matrix gu = kernels::matmul_bt(g, u);
            for (double& v : gu.a) v *= invd;
            for (std::size_t i = 0; i < gu.rows; ++i) gu(i, i) += 1.0;
            grad = kernels::matmul(gu, current.w);
        } else {
            grad = gradient(current, xw);
        }
        project_mask(grad, cfg.edge_mask);

        TransitionMatrix next = step(current, grad, alpha);
        const double dw = kernels::frobenius_diff(next.w, current.w);
        current = std::move(next);
        alpha *= cfg.decay;
        if (dw < cfg.tol) break;
    }
    const double final_loss = loss(current, xw);
    m.loss_log.push_back(final_loss);
    if (callback) callback(m.loss_log.size() - 1, current.w, final_loss);

    m.supplementary = kernels::matmul(current.w, xw);
    m.whitened = std::move(xw);
    m.transition = std::move(current);
    return m;
}

Matrix resolve_permutation_scale(const Matrix& a) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw error("resolve_permutation_scale: matrix not square");
    for (std::size_t j = 0; j < n; ++j) {
        bool feasible = false;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(a(i, j)) >= kDetFloor) {
                feasible = true;
                break;
            }
        if (!feasible)
            throw error("assignment infeasible: column " + std::to_string(j) + " near zero");
    }
    Matrix cost(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double mag = std::abs(a(i, j));
            cost(i, j) = mag >= kDetFloor ? 1.0 / mag : 1e18;
        }
    const auto row_to_col = linalg::assign_min_cost(cost);
    std::vector<std::size_t> row_of_col(n);
    for (std::size_t r = 0; r < n; ++r) row_of_col[static_cast<std::size_t>(row_to_col[r])] = r;

    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = row_of_col[i];
        const double diag = a(src, i);
        for (std::size_t j = 0; j < n; ++j) out(i, j) = a(src, j) / diag;
    }
    return out;
}

namespace {

// Cycle over edges j -> i for s(i, j) != 0; empty if acyclic.
std::vector<std::pair<std::size_t, std::size_t>> find_cycle_edges(const Matrix& s) {
    const std::size_t n = s.rows;
    std::vector<int> color(n, 0);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> cycle;
    auto dfs = [&](auto&& self, std::size_t v) -> bool {
        color[v] = 1;
        stack.push_back(v);
        for (std::size_t w = 0; w < n; ++w) {
            if (s(w, v) == 0.0) continue;
            if (color[w] == 1) {
                const auto it = std::find(stack.begin(), stack.end(), w);
                for (auto p = it; p + 1 != stack.end(); ++p) cycle.emplace_back(*p, *(p + 1));
                cycle.emplace_back(stack.back(), w);
                return true;
            }
            if (color[w] == 0 && self(self, w)) return true;
        }
        color[v] = 2;
        stack.pop_back();
        return false;
    };
    for (std::size_t v = 0; v < n; ++v)
        if (color[v] == 0 && dfs(dfs, v)) return cycle;
    return {};
}

}  // namespace

InheritanceMatrix extract_inheritance(const ModelState& m) {
    const Matrix a = apply_inverse(m.preprocess, m.transition.w);
    const Matrix wn = resolve_permutation_scale(a);
    const std::size_t n = wn.rows;
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = (i == j) ? 0.0 : -wn(i, j);
    const double tau = m.config.prune_threshold;
    for (double& v : s.a)
        if (std::abs(v) < tau) v = 0.0;
    if (m.config.enforce_acyclic) {
        for (;;) {
            const auto cycle = find_cycle_edges(s);
            if (cycle.empty()) break;
            auto weakest = cycle.front();
            for (const auto& [from, to] : cycle)
                if (std::abs(s(to, from)) < std::abs(s(weakest.second, weakest.first)))
                    weakest = {from, to};
            s(weakest.second, weakest.first) = 0.0;
        }
    }
    return {std::move(s), tau};
}

}  // namespace taxodng
