#include "taxodng/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "taxodng/kernels.hpp"
#include "taxodng/linalg.hpp"
#include "taxodng/rng.hpp"

namespace taxodng {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> row_stddevs(const Matrix& centered) {
    std::vector<double> sd(centered.rows);
    for (std::size_t i = 0; i < centered.rows; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < centered.cols; ++j) ss += centered(i, j) * centered(i, j);
        sd[i] = std::sqrt(ss / static_cast<double>(centered.cols));
        if (!(sd[i] > 0.0)) throw error("deviation_experiment: node " + std::to_string(i) + " has zero variance");
    }
    return sd;
}

Matrix center_rows(const Matrix& x) {
    Matrix c(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mean += x(i, j);
        mean /= static_cast<double>(x.cols);
        for (std::size_t j = 0; j < x.cols; ++j) c(i, j) = x(i, j) - mean;
    }
    return c;
}

// RMS residual per row of (xs - factors * xs), factors in standardized coords.
std::vector<double> standardized_residuals(const Matrix& factors, const Matrix& xs) {
    Matrix fitted = kernels::matmul(factors, xs);
    std::vector<double> out(xs.rows);
    for (std::size_t i = 0; i < xs.rows; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < xs.cols; ++j) {
            double r = xs(i, j) - fitted(i, j);
            ss += r * r;
        }
        out[i] = std::sqrt(ss / static_cast<double>(xs.cols));
    }
    return out;
}

struct Histogram1d {
    std::vector<double> p;
    double bin_width = 0.0;
};

Histogram1d histogram(const double* v, std::size_t n, std::size_t bins) {
    double lo = v[0], hi = v[0];
    for (std::size_t j = 1; j < n; ++j) {
        lo = std::min(lo, v[j]);
        hi = std::max(hi, v[j]);
    }
    if (!(hi > lo)) throw error("mutual_info_proxy: constant row has degenerate histogram");
    Histogram1d h;
    h.p.assign(bins, 0.0);
    h.bin_width = (hi - lo) / static_cast<double>(bins);
    double inv = static_cast<double>(bins) / (hi - lo);
    for (std::size_t j = 0; j < n; ++j) {
        auto b = static_cast<std::size_t>((v[j] - lo) * inv);
        if (b >= bins) b = bins - 1;
        h.p[b] += 1.0;
    }
    for (double& pv : h.p) pv /= static_cast<double>(n);
    return h;
}

// Differential entropy estimate: discrete entropy of the binned pmf plus ln(bin width).
double binned_entropy(const double* v, std::size_t n, std::size_t bins) {
    Histogram1d h = histogram(v, n, bins);
    return shannon_entropy_discrete(h.p) + std::log(h.bin_width);
}

double pairwise_mi(const double* a, const double* b, std::size_t n, std::size_t bins) {
    double alo = a[0], ahi = a[0], blo = b[0], bhi = b[0];
    for (std::size_t j = 1; j < n; ++j) {
        alo = std::min(alo, a[j]);
        ahi = std::max(ahi, a[j]);
        blo = std::min(blo, b[j]);
        bhi = std::max(bhi, b[j]);
    }
    if (!(ahi > alo) || !(bhi > blo)) throw error("mutual_info_proxy: constant row has degenerate histogram");
    double ainv = static_cast<double>(bins) / (ahi - alo);
    double binv = static_cast<double>(bins) / (bhi - blo);
    std::vector<double> joint(bins * bins, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        auto ba = static_cast<std::size_t>((a[j] - alo) * ainv);
        auto bb = static_cast<std::size_t>((b[j] - blo) * binv);
        if (ba >= bins) ba = bins - 1;
        if (bb >= bins) bb = bins - 1;
        joint[ba * bins + bb] += 1.0;
    }
    std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
    for (std::size_t r = 0; r < bins; ++r)
        for (std::size_t c = 0; c < bins; ++c) {
            joint[r * bins + c] /= static_cast<double>(n);
            pa[r] += joint[r * bins + c];
            pb[c] += joint[r * bins + c];
        }
    double mi = 0.0;
    for (std::size_t r = 0; r < bins; ++r)
        for (std::size_t c = 0; c < bins; ++c) {
            double pj = joint[r * bins + c];
            if (pj > 0.0) mi += pj * std::log(pj / (pa[r] * pb[c]));
        }
    return mi;
}

// 16 bins keeps the plug-in bias of each pairwise term near (K-1)^2 / (2d);
// 64x64 joint cells would swamp the independence baseline at d = 10000.
constexpr std::size_t kPairBins = 16;
constexpr std::size_t kMarginalBins = 64;

double pairwise_mi_sum(const Matrix& rows) {
    double total = 0.0;
    for (std::size_t i = 0; i < rows.rows; ++i)
        for (std::size_t j = i + 1; j < rows.rows; ++j)
            total += pairwise_mi(rows.row(i), rows.row(j), rows.cols, kPairBins);
    return total;
}

}  // namespace

SemSpec four_chain_spec(SupplementaryDist dist, std::size_t d, std::uint64_t rng_seed) {
    SemSpec spec;
    spec.node_count = 4;
    spec.edges = {{0, 1, 1.5}, {1, 3, 0.5}, {3, 2, 1.0}};
    spec.dist = dist;
    spec.d = d;
    spec.rng_seed = rng_seed;
    return spec;
}

SemSample gen_sem(const SemSpec& spec) {
    if (spec.node_count == 0) throw error("gen_sem: node_count must be positive");
    if (spec.d == 0) throw error("gen_sem: d must be positive");
    std::size_t n = spec.node_count;

    SemSample out;
    out.s_true = Matrix(n, n);
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = "v" + std::to_string(i + 1);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const SemEdge& e : spec.edges) {
        if (e.parent >= n || e.child >= n) throw error("gen_sem: edge endpoint out of range");
        if (out.s_true(e.child, e.parent) != 0.0) throw error("gen_sem: duplicate edge");
        out.s_true(e.child, e.parent) = e.factor;
        edges.emplace_back(e.parent, e.child);
    }
    out.taxonomy = make_taxonomy(names, names, edges);  // validates acyclicity

    out.u = Matrix(n, spec.d);
    Rng rng(derive_seed(spec.rng_seed, "sem"));
    const double half_width = std::sqrt(3.0);  // unit-variance uniform
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < spec.d; ++j)
            out.u(i, j) = spec.dist == SupplementaryDist::uniform ? rng.uniform(-half_width, half_width)
                                                                  : rng.normal();

    Matrix w = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) -= out.s_true(i, j);
    out.x = kernels::matmul(linalg::inverse(w), out.u);
    return out;
}

RecoveryResult recovery_experiment(const SemSpec& spec, const TrainConfig& cfg) {
    SemSample sample = gen_sem(spec);
    EmbeddingMatrix emb;
    emb.data = sample.x;
    emb.order.resize(spec.node_count);
    for (std::size_t i = 0; i < spec.node_count; ++i) emb.order[i] = i;

    ModelState model = train(emb, cfg);
    InheritanceMatrix inh = extract_inheritance(model);

    RecoveryResult res;
    res.s_hat = inh.s;
    for (const SemEdge& e : spec.edges)
        res.edge_errors.push_back(std::abs(res.s_hat(e.child, e.parent) - e.factor));
    for (std::size_t i = 0; i < spec.node_count; ++i)
        for (std::size_t j = 0; j < spec.node_count; ++j) {
            if (i == j || sample.s_true(i, j) != 0.0) continue;
            res.nonedge_max = std::max(res.nonedge_max, std::abs(res.s_hat(i, j)));
        }
    return res;
}

DeviationResult deviation_experiment(const SemSpec& spec, const TrainConfig& cfg) {
    SemSample sample = gen_sem(spec);
    EmbeddingMatrix emb;
    emb.data = sample.x;
    emb.order.resize(spec.node_count);
    for (std::size_t i = 0; i < spec.node_count; ++i) emb.order[i] = i;

    ModelState model = train(emb, cfg);
    Matrix s_hat = extract_inheritance(model).s;

    Matrix centered = center_rows(sample.x);
    std::vector<double> sd = row_stddevs(centered);
    Matrix xs = centered;
    for (std::size_t i = 0; i < xs.rows; ++i)
        for (std::size_t j = 0; j < xs.cols; ++j) xs(i, j) /= sd[i];

    std::size_t n = spec.node_count;
    // Factors transported into standardized coordinates: s_ij * sd_j / sd_i.
    Matrix fwd(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) fwd(i, j) = s_hat(i, j) * sd[j] / sd[i];

    // Reversed model: each fitted edge factor applied in the opposite direction,
    // restricted to the reversals of the true edges.
    Matrix bwd(n, n);
    for (const SemEdge& e : spec.edges)
        bwd(e.parent, e.child) = s_hat(e.child, e.parent) * sd[e.child] / sd[e.parent];

    DeviationResult res;
    res.forward = standardized_residuals(fwd, xs);
    res.backward = standardized_residuals(bwd, xs);
    res.ratios.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(res.forward[i] > 0.0))
            throw error("deviation_experiment: zero forward residual at node " + std::to_string(i));
        res.ratios[i] = (res.backward[i] - res.forward[i]) / res.forward[i];
        res.mean_ratio += res.ratios[i];
    }
    res.mean_ratio /= static_cast<double>(n);
    return res;
}

double shannon_entropy_discrete(const std::vector<double>& pmf) {
    if (pmf.empty()) throw error("shannon_entropy_discrete: empty pmf");
    double sum = 0.0, h = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw error("shannon_entropy_discrete: negative probability");
        sum += p;
        if (p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw error("shannon_entropy_discrete: pmf does not sum to 1");
    return h;
}

double gaussian_log_cosh_reference() {
    // Simpson's rule on [-12, 12]; the integrand decays like exp(-t^2/2).
    static const double value = [] {
        const std::size_t intervals = 200000;
        const double lo = -12.0, hi = 12.0;
        const double h = (hi - lo) / static_cast<double>(intervals);
        auto f = [](double t) {
            return std::log(std::cosh(t)) * std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi);
        };
        double acc = f(lo) + f(hi);
        for (std::size_t k = 1; k < intervals; ++k)
            acc += f(lo + h * static_cast<double>(k)) * (k % 2 == 1 ? 4.0 : 2.0);
        return acc * h / 3.0;
    }();
    return value;
}

double negentropy_proxy(const std::vector<double>& samples) {
    if (samples.size() < 2) throw error("negentropy_proxy: need at least two samples");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size());
    if (!(var > 0.0)) throw error("negentropy_proxy: zero-variance samples");
    double sd = std::sqrt(var);
    double acc = 0.0;
    for (double v : samples) acc += std::log(std::cosh((v - mean) / sd));
    acc /= static_cast<double>(samples.size());
    double delta = acc - gaussian_log_cosh_reference();
    return delta * delta;
}

double mutual_info_proxy(const Matrix& rows) {
    if (rows.rows == 0 || rows.cols == 0) throw error("mutual_info_proxy: empty matrix");
    if (rows.rows == 1) return 0.0;
    return pairwise_mi_sum(rows);
}

double mutual_info_proxy(const Matrix& rows, const Matrix& mixing, const Matrix& base) {
    if (rows.rows == 0 || rows.cols == 0) throw error("mutual_info_proxy: empty matrix");
    if (mixing.rows != rows.rows || mixing.cols != base.rows || base.cols != rows.cols)
        throw error("mutual_info_proxy: relation shapes do not match");
    double det = linalg::det(mixing);
    if (std::abs(det) < 1e-12) throw error("mutual_info_proxy: singular relation matrix");

    double marginal_sum = 0.0;
    for (std::size_t i = 0; i < rows.rows; ++i)
        marginal_sum += binned_entropy(rows.row(i), rows.cols, kMarginalBins);

    // H(joint of rows) = H(joint of base) + ln|det mixing|, with the base joint
    // expanded as marginals minus pairwise interactions.
    double base_marginals = 0.0;
    for (std::size_t i = 0; i < base.rows; ++i)
        base_marginals += binned_entropy(base.row(i), base.cols, kMarginalBins);
    double joint = base_marginals - pairwise_mi_sum(base) + std::log(std::abs(det));
    return marginal_sum - joint;
}

std::pair<double, double> entropy_transform_check(const Matrix& b, std::size_t sample_count) {
    (void)sample_count;
    if (b.rows != b.cols || b.rows == 0) throw error("entropy_transform_check: b must be square and nonempty");
    double det = linalg::det(b);
    if (std::abs(det) < 1e-12) throw error("entropy_transform_check: singular transform");
    // Standard Gaussian source: H(bx) - H(x) = 0.5 ln det(b b^T).
    Matrix gram = kernels::matmul_bt(b, b);
    double lhs = 0.5 * std::log(linalg::det(gram));
    double rhs = std::log(std::abs(det));
    return {lhs, rhs};
}

}  // namespace taxodng
