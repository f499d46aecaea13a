#include "shampoo4/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "shampoo4/matops.hpp"

namespace shampoo4 {

namespace {
constexpr double kPi = 3.14159265358979323846;

Matrix random_orthogonal(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Matrix g(n, n);
    for (double &v : g.data) v = gauss(rng);
    return qr_orthonormal(g);
}

}  // namespace

ErrorReport nre_ae(const Matrix &f_of_a, const Matrix &f_of_ga, const std::string &f_label,
                   const std::string &g_label) {
    const double na = frobenius_norm(f_of_a);
    if (na == 0.0) throw std::invalid_argument("nre_ae: reference matrix is zero");
    const double nb = frobenius_norm(f_of_ga);
    ErrorReport r;
    r.f_label = f_label;
    r.g_label = g_label;
    r.nre = frobenius_norm(f_of_a - f_of_ga) / na;
    if (nb == 0.0) {
        r.ae_degrees = 90.0;
        return r;
    }
    const double cosv = std::clamp(inner_product(f_of_a, f_of_ga) / (na * nb), -1.0, 1.0);
    r.ae_degrees = std::acos(cosv) * 180.0 / kPi;
    return r;
}

Matrix make_synthetic_pd(int m, int n, double c, double lambda, uint64_t seed) {
    if (c < 1.0) throw std::invalid_argument("make_synthetic_pd: c must be >= 1");
    if (lambda <= 0.0) throw std::invalid_argument("make_synthetic_pd: lambda must be > 0");
    const int dim = m + n;
    const Matrix u = random_orthogonal(dim, seed);
    std::vector<double> d(dim, lambda);
    for (int i = 0; i < m; ++i) d[i] = c * lambda;
    return symmetrize(matmul(matmul(u, Matrix::diagonal(d)), u, false, true));
}

std::vector<double> contract_spectrum(const std::vector<double> &lambda, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("contract_spectrum: tau must be > 0");
    const double lmin = *std::min_element(lambda.begin(), lambda.end());
    std::vector<double> out(lambda.size());
    for (size_t i = 0; i < lambda.size(); ++i) out[i] = tau * (lambda[i] - lmin) + lmin;
    return out;
}

Matrix make_orthogonal_perturbation(const Matrix &u, double alpha, uint64_t seed) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("make_orthogonal_perturbation: alpha outside [0, 1]");
    const int n = u.cols;
    const double theta = 2.0 * std::asin(alpha / 2.0);
    std::mt19937_64 rng(seed);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_int_distribution<int> coin(0, 1);
    // q = identity rotated on disjoint column pairs; u' = u q
    Matrix q = Matrix::identity(n);
    for (int p = 0; p + 1 < n; p += 2) {
        const int i = perm[p], j = perm[p + 1];
        const double sgn = coin(rng) ? 1.0 : -1.0;
        const double ct = std::cos(theta), st = sgn * std::sin(theta);
        q(i, i) = ct;
        q(j, j) = ct;
        q(i, j) = -st;
        q(j, i) = st;
    }
    return matmul(u, q) - u;
}

Lemma1Result verify_lemma1(const Matrix &u, const Matrix &du,
                           const std::vector<double> &lambda, double s, double alpha,
                           double beta) {
    Lemma1Result r;
    const Matrix up = u + du;
    const int n = u.cols;
    auto orth_err = [](const Matrix &v) {
        return frobenius_norm(matmul(v, v, true, false) - Matrix::identity(v.cols));
    };
    if (orth_err(u) > 1e-8) {
        r.failed_hypothesis = "U not orthogonal";
        return r;
    }
    if (orth_err(up) > 1e-8) {
        r.failed_hypothesis = "U + dU not orthogonal";
        return r;
    }
    for (int j = 0; j < n; ++j) {
        double dn = 0.0, dot = 0.0;
        for (int i = 0; i < u.rows; ++i) {
            dn += du(i, j) * du(i, j);
            dot += u(i, j) * up(i, j);
        }
        if (std::sqrt(dn) > alpha + 1e-12) {
            r.failed_hypothesis = "column perturbation norm exceeds alpha";
            return r;
        }
        if (dot < 1.0 - beta - 1e-12) {
            r.failed_hypothesis = "column inner product below 1 - beta";
            return r;
        }
    }
    r.hypotheses_ok = true;
    const Matrix b = matrix_power_from_eig(u, lambda, s);
    const Matrix bp = matrix_power_from_eig(up, lambda, s);
    const ErrorReport e = nre_ae(b, bp, "A^s", "perturb_U");
    r.nre = e.nre;
    r.cosine = std::cos(e.ae_degrees * kPi / 180.0);
    r.bound1_holds = r.nre <= 2.0 * alpha + 1e-12;
    r.bound2_holds = r.cosine >= (1.0 - beta) * (1.0 - beta) - 1e-12;
    return r;
}

Lemma2Forms lemma2_closed_forms(double c, double l, double k, double t, double s) {
    Lemma2Forms f;
    const double cs = std::pow(c, s), c2s = std::pow(c, 2.0 * s);
    const double ks = std::pow(k, s);
    const double ts = std::pow(t, s), t2s = std::pow(t, 2.0 * s);
    f.h1 = std::sqrt(l) * std::fabs(ks - 1.0) / std::sqrt(c2s + l);
    f.h2 = (l * ts + cs) / std::sqrt((1.0 + l * t2s) * (l + c2s));
    const double kts = std::pow(t * c, s);  // part (3) uses k = tc
    f.part3_nre = std::fabs(kts - 1.0) / std::sqrt(kts + 1.0);
    f.part3_cos = 2.0 / std::sqrt(2.0 + kts + 1.0 / kts);
    return f;
}

double verify_lemma2_numeric(double c, double l, double k, double t, double s, int m,
                             uint64_t seed) {
    const double n_real = l * m;
    const int n = static_cast<int>(std::lround(n_real));
    if (n < 1 || std::fabs(n_real - n) > 1e-9)
        throw std::invalid_argument("verify_lemma2_numeric: l*m is not a positive integer");
    const int dim = m + n;
    const Matrix u = random_orthogonal(dim, seed);
    const double lambda = 1.0;
    std::vector<double> base(dim, lambda);
    for (int i = 0; i < m; ++i) base[i] = c * lambda;

    auto powered = [&](const std::vector<double> &d) {
        const Matrix a = symmetrize(matmul(matmul(u, Matrix::diagonal(d)), u, false, true));
        const EigResult e = exact_symeig(a);
        return matrix_power_from_eig(e.eigenvectors, e.eigenvalues, s);
    };
    const Matrix b = powered(base);
    const Lemma2Forms f = lemma2_closed_forms(c, l, k, t, s);

    // part (1): small block scaled by k, closed form h1 for the NRE
    std::vector<double> d1 = base;
    for (int i = m; i < dim; ++i) d1[i] = k * lambda;
    const ErrorReport e1 = nre_ae(b, powered(d1));
    double worst = std::fabs(e1.nre - f.h1);

    // part (2): small block scaled by tc, closed form h2 for the cosine
    std::vector<double> d2 = base;
    for (int i = m; i < dim; ++i) d2[i] = t * c * lambda;
    const ErrorReport e2 = nre_ae(b, powered(d2));
    worst = std::max(worst, std::fabs(std::cos(e2.ae_degrees * kPi / 180.0) - f.h2));
    return worst;
}

Prop1Result verify_proposition1(double c, double s, int m, uint64_t seed) {
    if (c < 1000.0) throw std::invalid_argument("verify_proposition1: c must be >= 1000");
    if (s > -0.25) throw std::invalid_argument("verify_proposition1: s must be <= -0.25");
    const double t = 0.02;
    Prop1Result r;
    const double l0 = std::pow(c / t, s);
    r.n = std::max(1, static_cast<int>(std::lround(l0 * m)));
    r.adjusted_l = static_cast<double>(r.n) / m;
    const int dim = m + r.n;
    const double lambda = 1.0;
    const Matrix u = random_orthogonal(dim, seed);
    const Matrix du = make_orthogonal_perturbation(u, 0.1, seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<double> base(dim, lambda);
    for (int i = 0; i < m; ++i) base[i] = c * lambda;
    std::vector<double> perturbed = base;
    for (int i = m; i < dim; ++i) perturbed[i] = t * c * lambda;

    const Matrix b = matrix_power_from_eig(u, base, s);
    const Matrix b1 = matrix_power_from_eig(u + du, base, s);
    const Matrix b2 = matrix_power_from_eig(u, perturbed, s);

    const ErrorReport e1 = nre_ae(b, b1);
    const ErrorReport e2 = nre_ae(b, b2);
    r.nre_b1 = e1.nre;
    r.nre_b2 = e2.nre;
    r.cos_b1 = std::cos(e1.ae_degrees * kPi / 180.0);
    r.cos_b2 = std::cos(e2.ae_degrees * kPi / 180.0);
    r.ineq1 = (2.0 * r.nre_b1 <= 0.4 + 1e-12) && (0.4 <= r.nre_b2 + 1e-12);
    r.ineq2 = (6.0 * (1.0 - r.cos_b1) <= 0.06 + 1e-12) && (0.06 <= 1.0 - r.cos_b2 + 1e-12);
    return r;
}

Matrix fig3_sweep(const CompressedEigenFactor &state, const QuantConfig &cfg,
                  const std::vector<double> &s_list, const std::vector<int> &t2_list) {
    for (double s : s_list)
        if (s == 0.0) throw std::invalid_argument("fig3_sweep: s = 0 is undefined");
    for (double l : state.lambda)
        if (l <= 0.0) throw std::invalid_argument("fig3_sweep: eigenvalues must be positive");
    const Matrix v0 = decompress_eigenvectors(state, cfg);
    const int dim = state.dim;
    Matrix grid(static_cast<int>(s_list.size()), static_cast<int>(t2_list.size()));
    for (size_t col = 0; col < t2_list.size(); ++col) {
        const Matrix v = bjorck_orthonormalize(v0, t2_list[col]);
        const Matrix va = matmul(matmul(v, Matrix::diagonal(state.lambda)), v, false, true);
        for (size_t row = 0; row < s_list.size(); ++row) {
            const double s = s_list[row];
            const Matrix vs = matrix_power_from_eig(v, state.lambda, s);
            const Matrix p = matmul(matrix_power_abs(symmetrize(vs), -1.0 / s), va);
            double acc = 0.0;
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    acc += std::fabs(p(i, j) - (i == j ? 1.0 : 0.0));
            grid(static_cast<int>(row), static_cast<int>(col)) = acc / (double(dim) * dim);
        }
    }
    return grid;
}

const char *scheme_name(Scheme s) {
    switch (s) {
        case Scheme::QuantizeA: return "quantize_A";
        case Scheme::QuantizeU: return "quantize_U";
        case Scheme::QuantizeURectified: return "quantize_U_rectified";
        case Scheme::QuantizeB: return "quantize_B";
        case Scheme::Pairs: return "pairs";
    }
    return "?";
}

Matrix matrix_power_abs(const Matrix &a, double s) {
    const EigResult e = exact_symeig(symmetrize(a));
    double peak = 0.0;
    for (double l : e.eigenvalues) peak = std::max(peak, std::fabs(l));
    if (peak == 0.0) throw std::domain_error("matrix_power_abs: zero matrix");
    std::vector<double> d(e.eigenvalues.size());
    for (size_t i = 0; i < d.size(); ++i)
        d[i] = std::max(std::fabs(e.eigenvalues[i]), 1e-12 * peak);  // SVD-style power
    return matrix_power_from_eig(e.eigenvectors, d, s);
}

ErrorReport table1_experiment(const Matrix &a, Scheme scheme, const QuantConfig &cfg,
                              const Table1Options &opt) {
    require_symmetric(a, "table1_experiment");
    const EigResult e = exact_symeig(a);
    for (double l : e.eigenvalues)
        if (l <= 0.0) throw std::domain_error("table1_experiment: input must be PD");
    const Matrix b_exact = matrix_power_from_eig(e.eigenvectors, e.eigenvalues, opt.s);

    Matrix b_approx;
    switch (scheme) {
        case Scheme::QuantizeA:
            b_approx = matrix_power_abs(symmetrize(quantize_matrix_columns(a, cfg)), opt.s);
            break;
        case Scheme::QuantizeU:
        case Scheme::QuantizeURectified: {
            Matrix v = quantize_matrix_columns(e.eigenvectors, cfg);
            if (scheme == Scheme::QuantizeURectified)
                v = bjorck_orthonormalize(v, opt.rect_sweeps);
            b_approx = matmul(
                matmul(v, Matrix::diagonal([&] {
                    std::vector<double> d(e.eigenvalues.size());
                    for (size_t i = 0; i < d.size(); ++i) d[i] = std::pow(e.eigenvalues[i], opt.s);
                    return d;
                }())),
                v, false, true);
            break;
        }
        case Scheme::QuantizeB:
            b_approx = symmetrize(quantize_matrix_columns(b_exact, cfg));
            break;
        case Scheme::Pairs: {
            const Matrix v = quantize_matrix_columns(e.eigenvectors, cfg);
            std::vector<double> d(e.eigenvalues.size());
            for (size_t i = 0; i < d.size(); ++i) d[i] = std::pow(e.eigenvalues[i], opt.s);
            const Matrix b1 = matmul(matmul(v, Matrix::diagonal(d)), v, false, true);
            b_approx = symmetrize(quantize_matrix_columns(b1, cfg));
            break;
        }
    }

    Matrix lhs = b_exact, rhs = b_approx;
    if (opt.exclude_diagonal) {
        for (int i = 0; i < lhs.rows; ++i) {
            lhs(i, i) = 0.0;
            rhs(i, i) = 0.0;
        }
    }
    ErrorReport r = nre_ae(lhs, rhs, opt.exclude_diagonal ? "A^s minus diag" : "A^s",
                           scheme_name(scheme));
    return r;
}

}  // namespace shampoo4
