#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "shampoo4/matrix.hpp"

namespace shampoo4 {

struct EigResult {
    std::vector<double> eigenvalues;  // nonincreasing
    Matrix eigenvectors;              // columns, positive-first-nonzero sign convention
};

// Orthonormal factor of a full-column-rank A (Householder QR, R diagonal
// forced nonnegative so the result is deterministic).
Matrix qr_orthonormal(const Matrix &a);

// Full symmetric eigendecomposition; the accuracy oracle for everything else.
EigResult exact_symeig(const Matrix &a);

// Subspace iteration P <- QR(A P), warm-started at p0; eigenvalues are the
// Rayleigh diagonal diag(P^T A P), clamped at 0 and sorted nonincreasing.
EigResult randomized_eig(const Matrix &a, const Matrix &p0, int iters);

// V <- 1.5 V - 0.5 V V^T V, t times.
Matrix bjorck_orthonormalize(Matrix v, int t);

double power_iteration_max_eig(const Matrix &a, int iters, uint64_t seed);

// X ~ (A + ridge I)^(-1/p) by a coupled Newton-type iteration with spectral
// rescaling each step; no eigendecomposition involved.
Matrix schur_newton_inv_root(const Matrix &a, int p, double ridge, int iters);

// V Diag(lambda^s) V^T; lambda must be positive when s < 0.
Matrix matrix_power_from_eig(const Matrix &v, const std::vector<double> &lambda, double s);

}  // namespace shampoo4
