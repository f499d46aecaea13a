#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shampoo4 {

// Dense row-major matrix of doubles. Small enough at desk scale that we
// keep a single concrete type instead of an expression-template library.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c)
            throw std::invalid_argument("Matrix: data size does not match shape");
    }

    double &operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return data.size(); }

    static Matrix identity(int n);
    static Matrix diagonal(const std::vector<double> &d);
};

Matrix operator+(const Matrix &a, const Matrix &b);
Matrix operator-(const Matrix &a, const Matrix &b);
Matrix operator*(double s, const Matrix &a);

// C = op(A) * op(B) through BLAS dgemm.
Matrix matmul(const Matrix &a, const Matrix &b, bool transpose_a = false,
              bool transpose_b = false);

Matrix transpose(const Matrix &a);

double frobenius_norm(const Matrix &a);
double inner_product(const Matrix &a, const Matrix &b);  // <A,B> = tr(A^T B)
double max_abs(const Matrix &a);

// max_ij |A - A^T|; used by symmetry preconditions.
double asymmetry(const Matrix &a);
void require_symmetric(const Matrix &a, const char *who);
Matrix symmetrize(const Matrix &a);

bool all_finite(const Matrix &a);

}  // namespace shampoo4
