#pragma once

#include <functional>
#include <vector>

#include "shampoo4/matrix.hpp"
#include "shampoo4/precond.hpp"

namespace shampoo4 {

enum class FoKind { SGDM, AdamW, Adagrad };
enum class Variant { Shampoo, CASPR };

const char *fo_name(FoKind k);
FoKind fo_from_name(const std::string &name);
const char *variant_name(Variant v);
Variant variant_from_name(const std::string &name);

struct FirstOrderState {
    FoKind kind = FoKind::SGDM;
    double lr = 0.1;
    double momentum = 0.9;    // SGDM
    double beta1 = 0.9;       // AdamW
    double beta2 = 0.999;
    double eps = 1e-8;        // 1e-10 for Adagrad
    double weight_decay = 0.0;
    int step = 0;
    Matrix m1, m2;            // momentum / first moment, second moment
};

void fo_init(FirstOrderState &fo, int rows, int cols);
// one first-order update of w in place
void fo_step(FirstOrderState &fo, Matrix &w, const Matrix &g);

struct ShampooHyper {
    double beta = 0.95;
    double eps = 1e-6;
    int t1 = 1;
    int t2 = 4;
    int svd_iters = 1;
    int interval1 = 100;      // preconditioner update interval
    int interval2 = 500;      // inverse root update interval
    int root_iters = 14;      // coupled iteration count for the 32-bit path
    Variant variant = Variant::Shampoo;
    QuantConfig quant;
};

struct ShampooBlockState {
    Matrix w;
    ShampooHyper hyper;
    FirstOrderState fo;
    int step = 0;
    // compressed path
    CompressedEigenFactor left, right;
    CompressedInverseRoot left_root, right_root;
    // 32-bit path
    Matrix l32, r32, lhat32, rhat32;
};

ShampooBlockState make_shampoo_state(const Matrix &w0, const ShampooHyper &hyper,
                                     const FirstOrderState &fo);

Matrix graft(const Matrix &g_hat, const Matrix &g);
Matrix caspr_precondition(const Matrix &lhat, const Matrix &rhat, const Matrix &g);

// accumulated wall-clock seconds per update phase
struct PhaseTimers {
    double pu = 0.0;       // preconditioner (or accumulator) refresh
    double piru = 0.0;     // inverse root refresh
    double precond = 0.0;  // gradient preconditioning + grafting
    double fo = 0.0;       // first-order parameter update
};

void shampoo32_step(ShampooBlockState &state, const Matrix &g, PhaseTimers *timers = nullptr);
void shampoo4_step(ShampooBlockState &state, const Matrix &g, PhaseTimers *timers = nullptr);

struct PerturbedState {
    Matrix w, l, r;
    double rho = 0.0, mu = 0.0;
    double eta = 0.1, epsilon = 1e-6;
    int step = 0;
};

// one step of the perturbed analysis loop; perturb maps symmetric PSD to
// symmetric (identity or a quantization roundtrip)
void perturbed_shampoo_step(PerturbedState &state, const Matrix &g,
                            const std::function<Matrix(const Matrix &)> &perturb);

struct BlockShape {
    int row0, col0, rows, cols;
};

std::vector<BlockShape> block_partition(int rows, int cols, int max_order);

}  // namespace shampoo4
