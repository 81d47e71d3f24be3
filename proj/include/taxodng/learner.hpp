#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "taxodng/matrix.hpp"
#include "taxodng/preprocess.hpp"

// Supplementary-feature density, log-likelihood loss, gradient ascent on the
// transition matrix W, and extraction of the inheritance matrix S = I - W'
// from the learned unmixing.

namespace taxodng {

enum class DensityMode {
    paper_tanh,    // ln tanh(u), clamped below eps_u; score 2/sinh(2u)
    log_cosh,      // ln p = -ln cosh(u) - ln pi; score -tanh(u)
    sub_gaussian,  // ln p = ln cosh(u) - u^2/2 - C; score tanh(u) - u
};

inline constexpr double kDetFloor = 1e-12;   // |det W| guard
inline constexpr double kSinhFloor = 1e-6;   // paper_tanh score guard
inline constexpr double kTanhClamp = 1e-6;   // paper_tanh log-density clamp
inline constexpr double kLnPi = 1.1447298858494001741;
inline constexpr double kSubGaussNorm = 1.4189385332046727418;  // 0.5 + 0.5 ln(2 pi)

struct TrainConfig {
    double alpha = 0.05;
    double decay = 0.9999;
    std::size_t max_iters = 5000;
    double tol = 1e-6;  // on ||dW||_F
    std::uint64_t rng_seed = 0;
    DensityMode density = DensityMode::log_cosh;
    double prune_threshold = 0.1;
    bool enforce_acyclic = true;
    bool natural_gradient = false;  // opt-in accelerator
    Matrix edge_mask;  // optional off-diagonal support constraint; empty = unconstrained
    Matrix w_init;     // optional warm start; empty = identity plus small noise
};

struct TransitionMatrix {
    Matrix w;
    DensityMode density = DensityMode::log_cosh;
};

struct InheritanceMatrix {
    Matrix s;  // zero diagonal; |entries| < prune_threshold are exactly 0
    double prune_threshold = 0.1;
};

struct ModelState {
    TransitionMatrix transition;
    PreprocessTransform preprocess;
    std::vector<NodeId> node_order;
    std::vector<double> loss_log;  // one entry per iteration plus the final state
    Matrix supplementary;          // U = W Xw
    Matrix whitened;               // Xw
    Matrix centered;               // Xc
    TrainConfig config;
};

Matrix log_density(const Matrix& u, DensityMode mode);

// -sum_i mean_d(log_density(w_i Xw)) - ln|det W|
double loss(const TransitionMatrix& w, const Matrix& xw);

// Ascent direction d(-loss)/dW = (1/d) G Xw^T + (W^-1)^T.
Matrix gradient(const TransitionMatrix& w, const Matrix& xw);

// W' = W + alpha * grad, halving alpha while |det W'| <= kDetFloor (up to 20 times).
TransitionMatrix step(const TransitionMatrix& w, const Matrix& grad, double alpha);

using TrainCallback = std::function<void(std::size_t iteration, const Matrix& w, double loss)>;

ModelState train(const EmbeddingMatrix& x, const TrainConfig& cfg,
                 const TrainCallback& callback = nullptr);

// Permutation by min sum 1/|diag| assignment over A = W Z, row-normalized to
// unit diagonal, S = I - W', pruned at tau, smallest-magnitude cycle edges
// removed while cyclic (when enabled).
InheritanceMatrix extract_inheritance(const ModelState& m);

// The permutation/scale resolution step alone, exposed for testing.
Matrix resolve_permutation_scale(const Matrix& total_unmixing);

}  // namespace taxodng
