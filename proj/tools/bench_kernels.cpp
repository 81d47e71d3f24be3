// Times the serial reference kernels against the OpenMP variants and checks
// that both produce identical results.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "taxodng/kernels.hpp"
#include "taxodng/rng.hpp"

using namespace taxodng;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.a) v = rng.uniform(-1.0, 1.0);
    return m;
}

double best_of(int reps, const std::function<Matrix()>& fn, Matrix& out) {
    double best = 1e300;
    for (int rep = 0; rep < reps; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        out = fn();
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (ms < best) best = ms;
    }
    return best;
}

void benchmark(const std::string& name, const std::function<Matrix()>& serial,
               const std::function<Matrix()>& parallel, int reps) {
    Matrix a, b;
    const double serial_ms = best_of(reps, serial, a);
    const double parallel_ms = best_of(reps, parallel, b);
    std::printf("%-28s %10.2f ms %10.2f ms %7.2fx  max diff %.1e\n", name.c_str(), serial_ms,
                parallel_ms, serial_ms / parallel_ms, kernels::max_abs_diff(a, b));
}

}  // namespace

int main() {
    kernels::apply_thread_cap();
    std::printf("kernel benchmark, %d thread(s) requested via TAXO_DNG_THREADS (0 = default)\n",
                kernels::configured_threads());
    std::printf("%-28s %13s %13s %8s\n", "case", "serial", "parallel", "speedup");

    Rng rng(7);
    const Matrix sq_a = random_matrix(300, 300, rng);
    const Matrix sq_b = random_matrix(300, 300, rng);
    const Matrix w = random_matrix(8, 8, rng);
    const Matrix xw = random_matrix(8, 50000, rng);
    const Matrix tall = random_matrix(2000, 1000, rng);

    benchmark(
        "matmul 300x300 * 300x300", [&] { return kernels::serial::matmul(sq_a, sq_b); },
        [&] { return kernels::matmul(sq_a, sq_b); }, 5);
    benchmark(
        "matmul 8x8 * 8x50000", [&] { return kernels::serial::matmul(w, xw); },
        [&] { return kernels::matmul(w, xw); }, 5);
    benchmark(
        "matmul_bt 8x50000 gram", [&] { return kernels::serial::matmul_bt(xw, xw); },
        [&] { return kernels::matmul_bt(xw, xw); }, 5);
    benchmark(
        "transpose 2000x1000", [&] { return kernels::serial::transpose(tall); },
        [&] { return kernels::transpose(tall); }, 5);
    return 0;
}
