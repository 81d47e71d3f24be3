#include "taxodng/kernels.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taxodng::kernels {

int configured_threads() {
    const char* env = std::getenv("TAXO_DNG_THREADS");
    if (!env) return 0;
    int n = std::atoi(env);
    return n > 0 ? n : 0;
}

void apply_thread_cap() {
#ifdef _OPENMP
    int n = configured_threads();
    if (n > 0) omp_set_num_threads(n);
#endif
}

static void check_mul(const Matrix& A, const Matrix& B, std::size_t a_inner, std::size_t b_inner) {
    if (a_inner != b_inner)
        throw error("matmul shape mismatch: " + std::to_string(A.rows) + "x" + std::to_string(A.cols) +
                    " vs " + std::to_string(B.rows) + "x" + std::to_string(B.cols));
}

namespace serial {

Matrix matmul(const Matrix& A, const Matrix& B) {
    check_mul(A, B, A.cols, B.rows);
    Matrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            const double* bk = B.row(k);
            for (std::size_t j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return C;
}

Matrix matmul_bt(const Matrix& A, const Matrix& B) {
    check_mul(A, B, A.cols, B.cols);
    Matrix C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) acc += ai[k] * bj[k];
            ci[j] = acc;
        }
    }
    return C;
}

Matrix transpose(const Matrix& A) {
    Matrix T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

}  // namespace serial

Matrix matmul(const Matrix& A, const Matrix& B) {
    check_mul(A, B, A.cols, B.rows);
    Matrix C(A.rows, B.cols);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            const double* bk = B.row(k);
            for (std::size_t j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return C;
}

Matrix matmul_bt(const Matrix& A, const Matrix& B) {
    check_mul(A, B, A.cols, B.cols);
    Matrix C(A.rows, B.rows);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) acc += ai[k] * bj[k];
            ci[j] = acc;
        }
    }
    return C;
}

Matrix transpose(const Matrix& A) {
    Matrix T(A.cols, A.rows);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

std::vector<double> vec_matT(const std::vector<double>& v, const Matrix& B) {
    if (v.size() != B.cols) throw error("vec_matT length mismatch");
    std::vector<double> y(B.rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < B.rows; ++i) {
        const double* bi = B.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < B.cols; ++j) acc += v[j] * bi[j];
        y[i] = acc;
    }
    return y;
}

std::vector<double> vecmat(const std::vector<double>& v, const Matrix& B) {
    if (v.size() != B.rows) throw error("vecmat length mismatch");
    std::vector<double> y(B.cols, 0.0);
    for (std::size_t i = 0; i < B.rows; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* bi = B.row(i);
        for (std::size_t j = 0; j < B.cols; ++j) y[j] += vi * bi[j];
    }
    return y;
}

double frobenius_diff(const Matrix& A, const Matrix& B) {
    if (!A.same_shape(B)) throw error("frobenius_diff shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < A.a.size(); ++i) {
        const double d = A.a[i] - B.a[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double max_abs_diff(const Matrix& A, const Matrix& B) {
    if (!A.same_shape(B)) throw error("max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < A.a.size(); ++i) m = std::max(m, std::abs(A.a[i] - B.a[i]));
    return m;
}

}  // namespace taxodng::kernels
