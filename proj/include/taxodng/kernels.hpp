#pragma once
#include "taxodng/matrix.hpp"

// Matrix kernels in two variants: the default OpenMP path parallelizes over
// output rows while keeping each row's accumulation order identical to the
// serial reference, so both paths produce bitwise-equal results and the
// serial namespace stays usable as a test oracle.

namespace taxodng::kernels {

// Thread cap from TAXO_DNG_THREADS (0 = library default).
int configured_threads();
void apply_thread_cap();

namespace serial {
Matrix matmul(const Matrix& A, const Matrix& B);     // A(r,k) * B(k,c)
Matrix matmul_bt(const Matrix& A, const Matrix& B);  // A(r,k) * B(c,k)^T
Matrix transpose(const Matrix& A);
}  // namespace serial

Matrix matmul(const Matrix& A, const Matrix& B);
Matrix matmul_bt(const Matrix& A, const Matrix& B);
Matrix transpose(const Matrix& A);

// y[i] = sum_j v[j] * B(i,j); v has B.cols entries, result has B.rows.
std::vector<double> vec_matT(const std::vector<double>& v, const Matrix& B);
// y[j] = sum_i v[i] * B(i,j); v has B.rows entries, result has B.cols.
std::vector<double> vecmat(const std::vector<double>& v, const Matrix& B);

double frobenius_diff(const Matrix& A, const Matrix& B);
double max_abs_diff(const Matrix& A, const Matrix& B);

template <class F>
Matrix map(const Matrix& A, F f) {
    Matrix out(A.rows, A.cols);
    const std::size_t n = A.a.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out.a[i] = f(A.a[i]);
    return out;
}

}  // namespace taxodng::kernels
