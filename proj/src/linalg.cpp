#include "taxodng/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace taxodng::linalg {

Lu lu_factor(Matrix A) {
    if (A.rows != A.cols) throw error("lu_factor: matrix not square");
    const std::size_t n = A.rows;
    Lu f;
    f.piv.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.piv[i] = static_cast<int>(i);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(A(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0) {
            f.singular = true;
            f.lu = std::move(A);
            return f;
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
            std::swap(f.piv[k], f.piv[p]);
            f.sign = -f.sign;
        }
        const double pivot = A(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            A(i, k) /= pivot;
            const double lik = A(i, k);
            if (lik == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= lik * A(k, j);
        }
    }
    f.lu = std::move(A);
    return f;
}

double det(const Lu& f) {
    if (f.singular) return 0.0;
    double d = static_cast<double>(f.sign);
    for (std::size_t i = 0; i < f.lu.rows; ++i) d *= f.lu(i, i);
    return d;
}

Matrix inverse(const Lu& f) {
    if (f.singular) throw error("inverse: singular matrix");
    const std::size_t n = f.lu.rows;
    Matrix inv(n, n);
    std::vector<double> col(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < n; ++i) col[i] = (static_cast<std::size_t>(f.piv[i]) == c) ? 1.0 : 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            double acc = col[i];
            for (std::size_t j = 0; j < i; ++j) acc -= f.lu(i, j) * col[j];
            col[i] = acc;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = col[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= f.lu(ii, j) * col[j];
            col[ii] = acc / f.lu(ii, ii);
        }
        for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
    }
    return inv;
}

double det(const Matrix& A) { return det(lu_factor(A)); }

Matrix inverse(const Matrix& A) { return inverse(lu_factor(A)); }

SymEig eigh(const Matrix& A, int max_sweeps, double tol) {
    if (A.rows != A.cols) throw error("eigh: matrix not square");
    const std::size_t n = A.rows;
    Matrix M = A;
    Matrix V = Matrix::identity(n);
    double norm = 0.0;
    for (double v : M.a) norm += v * v;
    norm = std::sqrt(norm);
    const double stop = tol * std::max(norm, 1.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += M(p, q) * M(p, q);
        if (std::sqrt(2.0 * off) < stop) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = M(p, q);
                if (std::abs(apq) == 0.0) continue;
                const double app = M(p, p);
                const double aqq = M(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = M(k, p);
                    const double mkq = M(k, q);
                    M(k, p) = c * mkp - s * mkq;
                    M(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = M(p, k);
                    const double mqk = M(q, k);
                    M(p, k) = c * mpk - s * mqk;
                    M(q, k) = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p);
                    const double vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    SymEig out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = M(i, i);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return out.values[a] < out.values[b]; });
    SymEig sorted;
    sorted.values.resize(n);
    sorted.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted.values[j] = out.values[order[j]];
        for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = V(i, order[j]);
    }
    return sorted;
}

std::vector<int> assign_min_cost(const Matrix& cost) {
    if (cost.rows != cost.cols) throw error("assign_min_cost: matrix not square");
    const int n = static_cast<int>(cost.rows);
    const double inf = std::numeric_limits<double>::infinity();
    // Shortest augmenting path with potentials, 1-based helpers.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if (j1 < 0 || !std::isfinite(delta)) throw error("assign_min_cost: infeasible assignment");
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace taxodng::linalg
