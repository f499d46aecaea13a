#include "shampoo4/matrix.hpp"

#include <cblas.h>
#include <cmath>

namespace shampoo4 {

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const std::vector<double> &d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m.data[i * d.size() + i] = d[i];
    return m;
}

static void check_same_shape(const Matrix &a, const Matrix &b, const char *who) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

Matrix operator+(const Matrix &a, const Matrix &b) {
    check_same_shape(a, b, "operator+");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix &a, const Matrix &b) {
    check_same_shape(a, b, "operator-");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix operator*(double s, const Matrix &a) {
    Matrix c = a;
    for (double &v : c.data) v *= s;
    return c;
}

Matrix matmul(const Matrix &a, const Matrix &b, bool transpose_a, bool transpose_b) {
    const int m = transpose_a ? a.cols : a.rows;
    const int k = transpose_a ? a.rows : a.cols;
    const int kb = transpose_b ? b.cols : b.rows;
    const int n = transpose_b ? b.rows : b.cols;
    if (k != kb) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix c(m, n);
    if (m == 0 || n == 0 || k == 0) return c;
    cblas_dgemm(CblasRowMajor, transpose_a ? CblasTrans : CblasNoTrans,
                transpose_b ? CblasTrans : CblasNoTrans, m, n, k, 1.0, a.data.data(),
                a.cols, b.data.data(), b.cols, 0.0, c.data.data(), n);
    return c;
}

Matrix transpose(const Matrix &a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const Matrix &a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double inner_product(const Matrix &a, const Matrix &b) {
    check_same_shape(a, b, "inner_product");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double max_abs(const Matrix &a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double asymmetry(const Matrix &a) {
    if (a.rows != a.cols) throw std::invalid_argument("asymmetry: matrix not square");
    double m = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = i + 1; j < a.cols; ++j) m = std::max(m, std::fabs(a(i, j) - a(j, i)));
    return m;
}

void require_symmetric(const Matrix &a, const char *who) {
    if (a.rows != a.cols) throw std::invalid_argument(std::string(who) + ": matrix not square");
    if (asymmetry(a) > 1e-8 * std::max(max_abs(a), 1e-300))
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

Matrix symmetrize(const Matrix &a) {
    Matrix s(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

bool all_finite(const Matrix &a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace shampoo4
