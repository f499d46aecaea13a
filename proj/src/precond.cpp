#include "shampoo4/precond.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shampoo4/matops.hpp"

namespace shampoo4 {

int QuantConfig::bits() const {
    switch (precision) {
        case Precision::Bits4: return 4;
        case Precision::Bits3: return 3;
        case Precision::Bits8: return 8;
        default: throw std::logic_error("bits() requested for a non-quantized precision");
    }
}

bool QuantConfig::bypasses(int dim) const {
    if (precision == Precision::Bits32 || precision == Precision::Lossless) return true;
    return static_cast<size_t>(dim) * static_cast<size_t>(dim) < bypass_threshold;
}

const char *precision_name(Precision p) {
    switch (p) {
        case Precision::Bits32: return "32";
        case Precision::Bits4: return "4";
        case Precision::Bits3: return "3";
        case Precision::Bits8: return "8";
        case Precision::Lossless: return "lossless";
    }
    return "?";
}

Precision precision_from_name(const std::string &name) {
    if (name == "32") return Precision::Bits32;
    if (name == "4") return Precision::Bits4;
    if (name == "3") return Precision::Bits3;
    if (name == "8") return Precision::Bits8;
    if (name == "lossless") return Precision::Lossless;
    throw std::invalid_argument("unknown precision: " + name);
}

namespace {

std::vector<double> flatten_column_major(const Matrix &m) {
    std::vector<double> v(static_cast<size_t>(m.rows) * m.cols);
    size_t k = 0;
    for (int j = 0; j < m.cols; ++j)
        for (int i = 0; i < m.rows; ++i) v[k++] = m(i, j);
    return v;
}

Matrix unflatten_column_major(const std::vector<double> &v, int rows, int cols) {
    Matrix m(rows, cols);
    size_t k = 0;
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = v[k++];
    return m;
}

QuantizedBlockVector quantize_columns(const Matrix &m, const QuantConfig &cfg) {
    const Codebook cb = build_codebook(cfg.mapping, cfg.bits());
    return quantize(flatten_column_major(m), cb, cfg.block_size,
                    static_cast<size_t>(m.rows));
}

Matrix dequantize_columns(const QuantizedBlockVector &q, int rows, int cols,
                          const QuantConfig &cfg) {
    const Codebook cb = build_codebook(cfg.mapping, cfg.bits());
    return unflatten_column_major(dequantize(q, cb), rows, cols);
}

}  // namespace

Matrix quantize_matrix_columns(const Matrix &u, const QuantConfig &cfg) {
    if (cfg.precision == Precision::Bits32 || cfg.precision == Precision::Lossless) return u;
    return dequantize_columns(quantize_columns(u, cfg), u.rows, u.cols, cfg);
}

CompressedEigenFactor init_eigenfactor(int dim, double eps, const QuantConfig &cfg) {
    if (dim < 1) throw std::invalid_argument("init_eigenfactor: dim must be >= 1");
    if (eps <= 0.0) throw std::invalid_argument("init_eigenfactor: eps must be > 0");
    CompressedEigenFactor s;
    s.dim = dim;
    s.lambda.assign(dim, eps);
    s.bypassed = cfg.bypasses(dim);
    if (s.bypassed) {
        s.u_dense = Matrix::identity(dim);
    } else {
        // same float32 storage policy as the update path
        for (double &l : s.lambda) l = static_cast<double>(static_cast<float>(l));
        s.u_quant = quantize_columns(Matrix::identity(dim), cfg);
    }
    return s;
}

Matrix decompress_eigenvectors(const CompressedEigenFactor &state, const QuantConfig &cfg) {
    if (state.bypassed) return state.u_dense;
    return dequantize_columns(state.u_quant, state.dim, state.dim, cfg);
}

CompressedEigenFactor pu(const CompressedEigenFactor &state, const Matrix &m, double beta,
                         int t1, int svd_iters, const QuantConfig &cfg) {
    if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("pu: beta must be in (0, 1]");
    require_symmetric(m, "pu");

    Matrix v = decompress_eigenvectors(state, cfg);
    v = bjorck_orthonormalize(v, t1);

    Matrix a = matmul(matmul(v, Matrix::diagonal(state.lambda)), v, false, true);
    a = symmetrize(beta * a + (1.0 - beta) * m);

    EigResult eig = cfg.exact_eig ? exact_symeig(a) : randomized_eig(a, v, svd_iters);
    for (double &l : eig.eigenvalues) l = std::max(l, 0.0);

    CompressedEigenFactor out;
    out.dim = state.dim;
    out.lambda = std::move(eig.eigenvalues);
    out.bypassed = cfg.bypasses(state.dim);
    if (out.bypassed) {
        out.u_dense = std::move(eig.eigenvectors);
    } else {
        // quantized records store eigenvalues as float32 in checkpoints
        for (double &l : out.lambda) l = static_cast<double>(static_cast<float>(l));
        out.u_quant = quantize_columns(eig.eigenvectors, cfg);
    }
    return out;
}

CompressedInverseRoot piru(const CompressedEigenFactor &state, double eps, int t2, int p,
                           const QuantConfig &cfg) {
    if (eps <= 0.0) throw std::invalid_argument("piru: eps must be > 0");
    if (t2 < 0) throw std::invalid_argument("piru: t2 must be >= 0");
    if (p < 1) throw std::invalid_argument("piru: p must be >= 1");
    const double lmax = *std::max_element(state.lambda.begin(), state.lambda.end());
    if (lmax <= 0.0) throw std::domain_error("piru: all eigenvalues are zero");

    Matrix v = decompress_eigenvectors(state, cfg);
    v = bjorck_orthonormalize(v, t2);

    std::vector<double> ridged(state.lambda.size());
    for (size_t i = 0; i < ridged.size(); ++i) ridged[i] = state.lambda[i] + lmax * eps;
    const Matrix ahat = symmetrize(matrix_power_from_eig(v, ridged, -1.0 / p));

    CompressedInverseRoot out;
    out.dim = state.dim;
    out.bypassed = cfg.bypasses(state.dim);
    if (out.bypassed) {
        out.dense = ahat;
        return out;
    }
    out.diag.resize(state.dim);
    Matrix off = ahat;
    for (int i = 0; i < state.dim; ++i) {
        out.diag[i] = static_cast<double>(static_cast<float>(ahat(i, i)));
        off(i, i) = 0.0;
    }
    out.offdiag_quant = quantize_columns(off, cfg);
    return out;
}

Matrix decompress_inverse_root(const CompressedInverseRoot &c, const QuantConfig &cfg) {
    if (c.bypassed) return symmetrize(c.dense);
    Matrix m = dequantize_columns(c.offdiag_quant, c.dim, c.dim, cfg);
    for (int i = 0; i < c.dim; ++i) m(i, i) = c.diag[i];
    return symmetrize(m);
}

}  // namespace shampoo4
