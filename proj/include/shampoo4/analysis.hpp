#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shampoo4/matrix.hpp"
#include "shampoo4/precond.hpp"
#include "shampoo4/quantcore.hpp"

namespace shampoo4 {

struct ErrorReport {
    double nre = 0.0;
    double ae_degrees = 0.0;
    std::string f_label, g_label;
};

// normwise relative error and angle error of f(g(A)) against f(A)
ErrorReport nre_ae(const Matrix &f_of_a, const Matrix &f_of_ga,
                   const std::string &f_label = "", const std::string &g_label = "");

// order m+n PD matrix with two distinct eigenvalues c*lambda (m) and lambda (n)
Matrix make_synthetic_pd(int m, int n, double c, double lambda, uint64_t seed);

// affine contraction of a spectrum toward its minimum
std::vector<double> contract_spectrum(const std::vector<double> &lambda, double tau);

// orthogonality-preserving perturbation dU with per-column norm alpha exactly,
// built from disjoint Givens rotations; cos(u_i, u_i + du_i) = 1 - alpha^2/2
Matrix make_orthogonal_perturbation(const Matrix &u, double alpha, uint64_t seed);

struct Lemma1Result {
    bool hypotheses_ok = false;
    std::string failed_hypothesis;
    bool bound1_holds = false, bound2_holds = false;
    double nre = 0.0, cosine = 0.0;
};

Lemma1Result verify_lemma1(const Matrix &u, const Matrix &du,
                           const std::vector<double> &lambda, double s, double alpha,
                           double beta);

struct Lemma2Forms {
    double h1 = 0.0, h2 = 0.0;
    double part3_nre = 0.0, part3_cos = 0.0;
};

Lemma2Forms lemma2_closed_forms(double c, double l, double k, double t, double s);

// max |closed form - direct eigendecomposition| over parts (1) and (2)
double verify_lemma2_numeric(double c, double l, double k, double t, double s, int m,
                             uint64_t seed);

struct Prop1Result {
    bool ineq1 = false, ineq2 = false;
    double nre_b1 = 0.0, nre_b2 = 0.0;
    double cos_b1 = 0.0, cos_b2 = 0.0;
    double adjusted_l = 0.0;
    int n = 0;
};

Prop1Result verify_proposition1(double c, double s, int m, uint64_t seed);

// grid of elementwise mean errors of (V Lam^s V^T)^(-1/s) (V Lam V^T) vs I,
// rows indexed by s_list, columns by t2_list
Matrix fig3_sweep(const CompressedEigenFactor &state, const QuantConfig &cfg,
                  const std::vector<double> &s_list, const std::vector<int> &t2_list);

enum class Scheme { QuantizeA, QuantizeU, QuantizeURectified, QuantizeB, Pairs };

const char *scheme_name(Scheme s);

struct Table1Options {
    double s = -0.25;
    bool exclude_diagonal = false;
    int rect_sweeps = 4;
};

ErrorReport table1_experiment(const Matrix &a, Scheme scheme, const QuantConfig &cfg,
                              const Table1Options &opt);

// A^s through |eigenvalues| (the SVD-based power), tolerant of the small
// negative eigenvalues a quantized PD matrix can acquire
Matrix matrix_power_abs(const Matrix &a, double s);

}  // namespace shampoo4
