#pragma once

#include <vector>

#include "shampoo4/matrix.hpp"
#include "shampoo4/quantcore.hpp"

namespace shampoo4 {

enum class Precision { Bits32, Bits4, Bits3, Bits8, Lossless };

struct QuantConfig {
    Precision precision = Precision::Bits4;
    Mapping mapping = Mapping::Linear2;
    int block_size = 64;
    size_t bypass_threshold = 4096;  // dim*dim below this is kept dense
    bool exact_eig = false;          // use the exact eigensolver inside pu

    int bits() const;
    // true when this matrix is stored dense instead of quantized
    bool bypasses(int dim) const;
};

const char *precision_name(Precision p);
Precision precision_from_name(const std::string &name);

// preconditioner stored as eigenvalues plus a quantized eigenvector matrix
struct CompressedEigenFactor {
    int dim = 0;
    std::vector<double> lambda;      // nonincreasing, >= 0
    QuantizedBlockVector u_quant;    // column-major, blocks never straddle columns
    Matrix u_dense;                  // used instead of u_quant when bypassed
    bool bypassed = false;
};

// inverse p-th root stored as exact diagonal plus quantized off-diagonal
struct CompressedInverseRoot {
    int dim = 0;
    std::vector<double> diag;
    QuantizedBlockVector offdiag_quant;
    Matrix dense;                    // whole matrix when bypassed
    bool bypassed = false;
};

CompressedEigenFactor init_eigenfactor(int dim, double eps, const QuantConfig &cfg);

Matrix decompress_eigenvectors(const CompressedEigenFactor &state, const QuantConfig &cfg);

// one preconditioner update: decompress, rectify t1 sweeps, blend with M,
// re-diagonalize (warm-started), re-quantize
CompressedEigenFactor pu(const CompressedEigenFactor &state, const Matrix &m, double beta,
                         int t1, int svd_iters, const QuantConfig &cfg);

// inverse root update: decompress, rectify t2 sweeps, take the ridged
// inverse p-th root through the eigendecomposition, split diag/off-diagonal
CompressedInverseRoot piru(const CompressedEigenFactor &state, double eps, int t2, int p,
                           const QuantConfig &cfg);

Matrix decompress_inverse_root(const CompressedInverseRoot &c, const QuantConfig &cfg);

// helpers shared with the analysis module
Matrix quantize_matrix_columns(const Matrix &u, const QuantConfig &cfg);

}  // namespace shampoo4
