#pragma once
#include "taxodng/matrix.hpp"

namespace taxodng::linalg {

struct Lu {
    Matrix lu;             // packed L (unit diagonal) and U factors
    std::vector<int> piv;  // row permutation
    int sign = 1;
    bool singular = false;
};

Lu lu_factor(Matrix A);
double det(const Lu& f);
Matrix inverse(const Lu& f);  // throws on singular factorization

double det(const Matrix& A);
Matrix inverse(const Matrix& A);

// Symmetric eigendecomposition by cyclic Jacobi rotations: A = V diag(values) V^T.
// Eigenvalues ascending; vectors stored as columns of V.
struct SymEig {
    std::vector<double> values;
    Matrix vectors;
};
SymEig eigh(const Matrix& A, int max_sweeps = 100, double tol = 1e-14);

// Minimum-cost row-to-column assignment (O(n^3) shortest augmenting path).
// Returns col index assigned to each row.
std::vector<int> assign_min_cost(const Matrix& cost);

}  // namespace taxodng::linalg
