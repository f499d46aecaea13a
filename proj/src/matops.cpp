#include "shampoo4/matops.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace shampoo4 {

Matrix qr_orthonormal(const Matrix &a) {
    if (a.rows < a.cols) throw std::invalid_argument("qr_orthonormal: rows < cols");
    Matrix q = a;
    std::vector<double> tau(a.cols);
    if (LAPACKE_dgeqrf(LAPACK_ROW_MAJOR, a.rows, a.cols, q.data.data(), a.cols,
                       tau.data()) != 0)
        throw std::runtime_error("qr_orthonormal: dgeqrf failed");

    const double fnorm = frobenius_norm(a);
    std::vector<bool> flip(a.cols, false);
    for (int j = 0; j < a.cols; ++j) {
        const double rjj = q(j, j);
        if (std::fabs(rjj) < 1e-12 * std::max(fnorm, 1.0))
            throw std::runtime_error("qr_orthonormal: rank-deficient input");
        flip[j] = rjj < 0.0;
    }
    if (LAPACKE_dorgqr(LAPACK_ROW_MAJOR, a.rows, a.cols, a.cols, q.data.data(), a.cols,
                       tau.data()) != 0)
        throw std::runtime_error("qr_orthonormal: dorgqr failed");
    for (int j = 0; j < a.cols; ++j)
        if (flip[j])
            for (int i = 0; i < a.rows; ++i) q(i, j) = -q(i, j);
    return q;
}

// First element of each column that is not numerically zero is made positive.
static void apply_sign_convention(Matrix &u) {
    for (int j = 0; j < u.cols; ++j) {
        double cmax = 0.0;
        for (int i = 0; i < u.rows; ++i) cmax = std::max(cmax, std::fabs(u(i, j)));
        for (int i = 0; i < u.rows; ++i) {
            if (std::fabs(u(i, j)) > 1e-12 * cmax) {
                if (u(i, j) < 0.0)
                    for (int k = 0; k < u.rows; ++k) u(k, j) = -u(k, j);
                break;
            }
        }
    }
}

EigResult exact_symeig(const Matrix &a) {
    require_symmetric(a, "exact_symeig");
    const int n = a.rows;
    Matrix work = a;
    std::vector<double> w(n);
    if (LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', n, work.data.data(), n, w.data()) != 0)
        throw std::runtime_error("exact_symeig: eigensolver failed to converge");
    // dsyevd is ascending; flip to nonincreasing.
    EigResult r;
    r.eigenvalues.resize(n);
    r.eigenvectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        r.eigenvalues[j] = w[n - 1 - j];
        for (int i = 0; i < n; ++i) r.eigenvectors(i, j) = work(i, n - 1 - j);
    }
    apply_sign_convention(r.eigenvectors);
    return r;
}

static void sort_nonincreasing(EigResult &r) {
    const int n = static_cast<int>(r.eigenvalues.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return r.eigenvalues[i] > r.eigenvalues[j];
    });
    std::vector<double> lam(n);
    Matrix v(r.eigenvectors.rows, n);
    for (int j = 0; j < n; ++j) {
        lam[j] = r.eigenvalues[order[j]];
        for (int i = 0; i < v.rows; ++i) v(i, j) = r.eigenvectors(i, order[j]);
    }
    r.eigenvalues = std::move(lam);
    r.eigenvectors = std::move(v);
}

EigResult randomized_eig(const Matrix &a, const Matrix &p0, int iters) {
    require_symmetric(a, "randomized_eig");
    Matrix p = p0;
    if (iters < 1) p = qr_orthonormal(p);
    for (int t = 0; t < iters; ++t) p = qr_orthonormal(matmul(a, p));
    // Rayleigh-Ritz on the iterated basis
    const Matrix b = symmetrize(matmul(p, matmul(a, p), true, false));
    const EigResult small = exact_symeig(b);
    EigResult r;
    r.eigenvalues = small.eigenvalues;
    for (double &l : r.eigenvalues) l = std::max(l, 0.0);  // PSD input; clip roundoff
    r.eigenvectors = matmul(p, small.eigenvectors);
    apply_sign_convention(r.eigenvectors);
    return r;
}

Matrix bjorck_orthonormalize(Matrix v, int t) {
    for (int k = 0; k < t; ++k) {
        const Matrix gram = matmul(v, v, true, false);
        const Matrix vg = matmul(v, gram);
        for (size_t i = 0; i < v.data.size(); ++i)
            v.data[i] = 1.5 * v.data[i] - 0.5 * vg.data[i];
    }
    return v;
}

double power_iteration_max_eig(const Matrix &a, int iters, uint64_t seed) {
    require_symmetric(a, "power_iteration_max_eig");
    const int n = a.rows;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Matrix v(n, 1);
    for (int i = 0; i < n; ++i) v(i, 0) = gauss(rng);
    double norm = frobenius_norm(v);
    if (norm == 0.0) v(0, 0) = norm = 1.0;
    for (double &x : v.data) x /= norm;
    for (int t = 0; t < iters; ++t) {
        v = matmul(a, v);
        norm = frobenius_norm(v);
        if (norm == 0.0) return 0.0;  // zero matrix
        for (double &x : v.data) x /= norm;
    }
    const Matrix av = matmul(a, v);
    return inner_product(v, av);
}

// One step of the iteration multiplies every eigenvalue m of M by
// T(m)^p with T(m) = 1 + e/p + c2 e^2 + c3 e^3, e = 1 - m. The cubic term
// and the per-step rescaling of M to unit spectral radius are what let the
// small end of the spectrum reach 1 within ~10 steps at condition 1e6.
Matrix schur_newton_inv_root(const Matrix &a, int p, double ridge, int iters) {
    require_symmetric(a, "schur_newton_inv_root");
    if (p < 1) throw std::invalid_argument("schur_newton_inv_root: p must be >= 1");
    if (ridge < 0.0) throw std::invalid_argument("schur_newton_inv_root: ridge must be >= 0");
    const int n = a.rows;
    const double inv_p = 1.0 / p;
    const double c2 = (p + 1.0) / (2.0 * p * p);
    const double c3 = (p + 1.0) * (2.0 * p + 1.0) / (6.0 * p * p * p);

    Matrix m = a;
    for (int i = 0; i < n; ++i) m(i, i) += ridge;
    Matrix x = Matrix::identity(n);
    const Matrix eye = Matrix::identity(n);

    double prev_resid = std::numeric_limits<double>::infinity();
    for (int k = 0; k < iters; ++k) {
        const double lmax = power_iteration_max_eig(m, 25, 0x5eed0000u + k);
        if (lmax <= 0.0) throw std::runtime_error("schur_newton_inv_root: zero matrix");
        const double mu = 1.0 / lmax;
        for (double &v : m.data) v *= mu;
        const double xscale = std::pow(mu, inv_p);
        for (double &v : x.data) v *= xscale;

        const Matrix e = eye - m;
        const Matrix e2 = matmul(e, e);
        const Matrix e3 = matmul(e2, e);
        Matrix t = eye;
        for (size_t i = 0; i < t.data.size(); ++i)
            t.data[i] += inv_p * e.data[i] + c2 * e2.data[i] + c3 * e3.data[i];

        x = matmul(x, t);
        Matrix tp = t;
        for (int q = 1; q < p; ++q) tp = matmul(tp, t);
        m = symmetrize(matmul(tp, m));

        const double resid = frobenius_norm(m - eye) / std::sqrt(static_cast<double>(n));
        if (!std::isfinite(resid) || (resid > 2.0 * prev_resid && resid > 5.0))
            throw std::runtime_error("schur_newton_inv_root: iteration diverged");
        prev_resid = std::max(resid, 1e-300);
    }
    return symmetrize(x);
}

Matrix matrix_power_from_eig(const Matrix &v, const std::vector<double> &lambda, double s) {
    if (v.cols != static_cast<int>(lambda.size()))
        throw std::invalid_argument("matrix_power_from_eig: dimension mismatch");
    std::vector<double> powed(lambda.size());
    for (size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] <= 0.0 && s < 0.0)
            throw std::domain_error("matrix_power_from_eig: nonpositive eigenvalue with negative exponent");
        if (lambda[i] < 0.0 && s != std::floor(s))
            throw std::domain_error("matrix_power_from_eig: negative eigenvalue with fractional exponent");
        powed[i] = std::pow(lambda[i], s);
    }
    Matrix vl = v;
    for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) vl(i, j) *= powed[j];
    return matmul(vl, v, false, true);
}

}  // namespace shampoo4
