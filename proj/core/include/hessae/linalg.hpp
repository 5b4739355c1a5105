#pragma once

#include "hessae/types.hpp"

namespace hessae {

struct PowerIterationResult {
    double eigenvalue = 0.0;
    Vector eigenvector;
    int iterations = 0;
    bool converged = false;
};

/// Dominant eigenvalue of a symmetric positive semidefinite matrix.
/// Deterministic start vector; stops when the Rayleigh quotient is stable
/// to `tol` (relative) or after max_iters.
PowerIterationResult power_iteration(const Matrix& a, double tol = 1e-10, int max_iters = 1000);

/// Sample variance (1/(N-1)) of each column. Zero for single-row input.
Vector column_variances(const Matrix& x);

/// Squared Euclidean distances between rows of a and rows of b (|a| x |b|).
Matrix pairwise_squared_distances(const Matrix& a, const Matrix& b);

/// Solves inv(b + eps*I) * a * w = lambda * w and returns the k
/// eigenvectors of smallest real eigenvalue (ascending), unit-normalized,
/// first nonzero entry made positive. Eigenpairs with imaginary parts
/// above 1e-8 are discarded; asking for more pairs than remain is an error.
Matrix smallest_real_eigenvectors(const Matrix& a, const Matrix& b, double eps, int k,
                                  Vector* eigenvalues = nullptr);

}  // namespace hessae
