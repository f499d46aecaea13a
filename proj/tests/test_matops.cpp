#include <cmath>
#include <random>

#include "doctest.h"
#include "shampoo4/matops.hpp"

using namespace shampoo4;

namespace {

Matrix random_matrix(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Matrix m(n, n);
    for (double &v : m.data) v = gauss(rng);
    return m;
}

// SPD matrix with a prescribed spectrum, via a random orthogonal basis
Matrix spd_with_spectrum(const std::vector<double> &lambda, unsigned seed) {
    const int n = static_cast<int>(lambda.size());
    const Matrix q = qr_orthonormal(random_matrix(n, seed));
    Matrix d = Matrix::diagonal(lambda);
    return matmul(matmul(q, d), q, false, true);
}

double orthogonality_error(const Matrix &v) {
    const Matrix g = matmul(v, v, true, false);
    return frobenius_norm(g - Matrix::identity(v.cols));
}

}  // namespace

TEST_CASE("qr of the identity is the identity") {
    const Matrix q = qr_orthonormal(Matrix::identity(8));
    CHECK(frobenius_norm(q - Matrix::identity(8)) < 1e-14);
}

TEST_CASE("qr of a signed permutation spans the same columns orthonormally") {
    Matrix p(3, 3);
    p(0, 1) = 1.0;
    p(1, 2) = -2.0;
    p(2, 0) = 3.0;
    const Matrix q = qr_orthonormal(p);
    CHECK(orthogonality_error(q) < 1e-14);
    // each column of q must be parallel to the corresponding column of p
    for (int j = 0; j < 3; ++j) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int i = 0; i < 3; ++i) {
            dot += p(i, j) * q(i, j);
            na += p(i, j) * p(i, j);
            nb += q(i, j) * q(i, j);
        }
        CHECK(std::fabs(std::fabs(dot) / std::sqrt(na * nb) - 1.0) < 1e-14);
    }
}

TEST_CASE("qr of a random 64x64 matrix is orthonormal to 1e-10") {
    const Matrix q = qr_orthonormal(random_matrix(64, 42));
    CHECK(orthogonality_error(q) < 1e-10);
}

TEST_CASE("qr rejects a rank-deficient input") {
    Matrix m(4, 4);  // all zeros
    CHECK_THROWS_AS(qr_orthonormal(m), std::runtime_error);
}

TEST_CASE("exact symeig of [[2,1],[1,2]]") {
    Matrix a(2, 2);
    a(0, 0) = 2;
    a(0, 1) = 1;
    a(1, 0) = 1;
    a(1, 1) = 2;
    const EigResult e = exact_symeig(a);
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(e.eigenvectors(0, 0) == doctest::Approx(s));
    CHECK(e.eigenvectors(1, 0) == doctest::Approx(s));
    // sign convention puts the first significant entry of each column positive
    CHECK(e.eigenvectors(0, 1) == doctest::Approx(s));
    CHECK(e.eigenvectors(1, 1) == doctest::Approx(-s));
}

TEST_CASE("exact symeig reconstructs a random SPD matrix") {
    std::vector<double> lambda(32);
    for (size_t i = 0; i < lambda.size(); ++i) lambda[i] = 1.0 + double(i);
    const Matrix a = spd_with_spectrum(lambda, 5);
    const EigResult e = exact_symeig(a);
    CHECK(std::is_sorted(e.eigenvalues.rbegin(), e.eigenvalues.rend()));
    const Matrix back = matmul(matmul(e.eigenvectors, Matrix::diagonal(e.eigenvalues)),
                               e.eigenvectors, false, true);
    CHECK(frobenius_norm(back - a) < 1e-10 * frobenius_norm(a));
}

TEST_CASE("exact symeig rejects an asymmetric matrix") {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS(exact_symeig(a), std::invalid_argument);
}

TEST_CASE("one bjorck sweep on 0.9*I gives the closed-form 0.98550") {
    Matrix v = 0.9 * Matrix::identity(5);
    const Matrix r = bjorck_orthonormalize(v, 1);
    // 1.5*0.9 - 0.5*0.9^3 = 0.98550 on the diagonal
    for (int i = 0; i < 5; ++i) CHECK(r(i, i) == doctest::Approx(0.98550).epsilon(1e-12));
}

TEST_CASE("bjorck sweeps converge to orthonormality") {
    Matrix q = qr_orthonormal(random_matrix(32, 9));
    // perturb away from orthogonality
    for (double &v : q.data) v *= 1.05;
    const double before = orthogonality_error(q);
    const Matrix r1 = bjorck_orthonormalize(q, 1);
    const Matrix r4 = bjorck_orthonormalize(q, 4);
    CHECK(orthogonality_error(r1) < 0.1 * before);
    CHECK(orthogonality_error(r4) < 1e-12);
}

TEST_CASE("power iteration finds the top eigenvalue of a diagonal matrix") {
    const double est = power_iteration_max_eig(Matrix::diagonal({3.0, 1.0, 0.5}), 30, 1);
    CHECK(est == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(power_iteration_max_eig(Matrix(4, 4), 10, 1) == 0.0);
}

TEST_CASE("power iteration underestimates at worst slightly on a hard spectrum") {
    const Matrix a = spd_with_spectrum({1.0, 0.999, 0.5, 0.1}, 21);
    const double est = power_iteration_max_eig(a, 25, 3);
    CHECK(est <= 1.0 + 1e-12);
    CHECK(est > 0.9);
}

TEST_CASE("schur-newton inverse 4th root of 16*I is 0.5*I") {
    const Matrix x = schur_newton_inv_root(16.0 * Matrix::identity(6), 4, 0.0, 15);
    CHECK(frobenius_norm(x - 0.5 * Matrix::identity(6)) < 1e-10);
}

TEST_CASE("schur-newton matches the eigendecomposition oracle at condition 1e6") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> logu(-6.0, 0.0);
    std::vector<double> lambda(64);
    lambda[0] = 1.0;
    lambda[1] = 1e-6;
    for (size_t i = 2; i < lambda.size(); ++i) lambda[i] = std::pow(10.0, logu(rng));
    const Matrix a = spd_with_spectrum(lambda, 77);
    const Matrix x = schur_newton_inv_root(a, 4, 0.0, 10);
    const EigResult e = exact_symeig(a);
    const Matrix oracle = matrix_power_from_eig(e.eigenvectors, e.eigenvalues, -0.25);
    CHECK(frobenius_norm(x - oracle) / frobenius_norm(oracle) < 1e-4);
}

TEST_CASE("schur-newton two-point spectrum, small eigenvalue recovery") {
    std::vector<double> lambda(64, 1.0);
    lambda[63] = 1e-6;
    const Matrix a = spd_with_spectrum(lambda, 101);
    const Matrix x = schur_newton_inv_root(a, 4, 0.0, 10);
    const EigResult e = exact_symeig(a);
    const Matrix oracle = matrix_power_from_eig(e.eigenvectors, e.eigenvalues, -0.25);
    CHECK(frobenius_norm(x - oracle) / frobenius_norm(oracle) < 1e-4);
}

TEST_CASE("schur-newton ridge shifts the matrix before inversion") {
    const Matrix a = Matrix::diagonal({4.0, 1.0});
    const Matrix x = schur_newton_inv_root(a, 2, 1.0, 20);
    // (A + I)^(-1/2) = diag(1/sqrt(5), 1/sqrt(2))
    CHECK(x(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-10));
    CHECK(x(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("randomized eig tracks the dominant eigenpairs") {
    std::vector<double> lambda(48);
    for (size_t i = 0; i < lambda.size(); ++i) lambda[i] = std::pow(0.7, double(i));
    const Matrix a = spd_with_spectrum(lambda, 55);
    const EigResult exact = exact_symeig(a);
    // warm start from the exact basis slightly perturbed
    Matrix p0 = exact.eigenvectors;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1e-3);
    for (double &v : p0.data) v += gauss(rng);
    const EigResult approx = randomized_eig(a, p0, 2);
    for (int i = 0; i < 8; ++i)
        CHECK(approx.eigenvalues[i] == doctest::Approx(exact.eigenvalues[i]).epsilon(1e-6));
    const Matrix back = matmul(
        matmul(approx.eigenvectors, Matrix::diagonal(approx.eigenvalues)), approx.eigenvectors,
        false, true);
    CHECK(frobenius_norm(back - a) / frobenius_norm(a) < 1e-3);
    const EigResult tighter = randomized_eig(a, p0, 8);
    const Matrix back8 = matmul(
        matmul(tighter.eigenvectors, Matrix::diagonal(tighter.eigenvalues)), tighter.eigenvectors,
        false, true);
    CHECK(frobenius_norm(back8 - a) / frobenius_norm(a) <
          frobenius_norm(back - a) / frobenius_norm(a));
}

TEST_CASE("matrix power from an eigendecomposition") {
    const EigResult e = exact_symeig(Matrix::diagonal({16.0, 4.0}));
    const Matrix r = matrix_power_from_eig(e.eigenvectors, e.eigenvalues, -0.25);
    CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(matrix_power_from_eig(e.eigenvectors, {1.0, -1.0}, 0.5), std::domain_error);
    CHECK_THROWS_AS(matrix_power_from_eig(e.eigenvectors, {1.0, 0.0}, -1.0), std::domain_error);
}
