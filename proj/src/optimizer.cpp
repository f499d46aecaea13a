#include "shampoo4/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "shampoo4/matops.hpp"

namespace shampoo4 {

namespace {

// adds the elapsed scope time to *slot when a timer struct is supplied
class ScopedPhase {
  public:
    explicit ScopedPhase(double *slot)
        : slot_(slot), start_(std::chrono::steady_clock::now()) {}
    ~ScopedPhase() {
        if (!slot_) return;
        const auto end = std::chrono::steady_clock::now();
        *slot_ += std::chrono::duration<double>(end - start_).count();
    }

  private:
    double *slot_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

const char *fo_name(FoKind k) {
    switch (k) {
        case FoKind::SGDM: return "sgdm";
        case FoKind::AdamW: return "adamw";
        case FoKind::Adagrad: return "adagrad";
    }
    return "?";
}

FoKind fo_from_name(const std::string &name) {
    if (name == "sgdm") return FoKind::SGDM;
    if (name == "adamw") return FoKind::AdamW;
    if (name == "adagrad") return FoKind::Adagrad;
    throw std::invalid_argument("unknown first-order optimizer: " + name);
}

const char *variant_name(Variant v) {
    return v == Variant::Shampoo ? "shampoo" : "caspr";
}

Variant variant_from_name(const std::string &name) {
    if (name == "shampoo") return Variant::Shampoo;
    if (name == "caspr") return Variant::CASPR;
    throw std::invalid_argument("unknown variant: " + name);
}

void fo_init(FirstOrderState &fo, int rows, int cols) {
    fo.step = 0;
    fo.m1 = Matrix(rows, cols);
    fo.m2 = Matrix(rows, cols);
    if (fo.kind == FoKind::Adagrad && fo.eps == 1e-8) fo.eps = 1e-10;
}

void fo_step(FirstOrderState &fo, Matrix &w, const Matrix &g) {
    if (w.rows != g.rows || w.cols != g.cols)
        throw std::invalid_argument("fo_step: shape mismatch");
    ++fo.step;
    switch (fo.kind) {
        case FoKind::SGDM:
            // coupled weight decay
            for (size_t i = 0; i < w.data.size(); ++i) {
                const double gi = g.data[i] + fo.weight_decay * w.data[i];
                fo.m1.data[i] = fo.momentum * fo.m1.data[i] + gi;
                w.data[i] -= fo.lr * fo.m1.data[i];
            }
            break;
        case FoKind::AdamW: {
            const double c1 = 1.0 - std::pow(fo.beta1, fo.step);
            const double c2 = 1.0 - std::pow(fo.beta2, fo.step);
            for (size_t i = 0; i < w.data.size(); ++i) {
                w.data[i] -= fo.lr * fo.weight_decay * w.data[i];  // decoupled
                const double gi = g.data[i];
                fo.m1.data[i] = fo.beta1 * fo.m1.data[i] + (1.0 - fo.beta1) * gi;
                fo.m2.data[i] = fo.beta2 * fo.m2.data[i] + (1.0 - fo.beta2) * gi * gi;
                w.data[i] -= fo.lr * (fo.m1.data[i] / c1) /
                             (std::sqrt(fo.m2.data[i] / c2) + fo.eps);
            }
            break;
        }
        case FoKind::Adagrad:
            for (size_t i = 0; i < w.data.size(); ++i) {
                const double gi = g.data[i] + fo.weight_decay * w.data[i];
                fo.m2.data[i] += gi * gi;
                w.data[i] -= fo.lr * gi / (std::sqrt(fo.m2.data[i]) + fo.eps);
            }
            break;
    }
}

Matrix graft(const Matrix &g_hat, const Matrix &g) {
    const double ng = frobenius_norm(g);
    const double nh = frobenius_norm(g_hat);
    if (nh == 0.0) {
        if (ng == 0.0) return Matrix(g.rows, g.cols);
        throw std::invalid_argument("graft: zero preconditioned gradient for nonzero gradient");
    }
    return (ng / nh) * g_hat;
}

Matrix caspr_precondition(const Matrix &lhat, const Matrix &rhat, const Matrix &g) {
    const Matrix j = matmul(lhat, g) + matmul(g, rhat);
    return matmul(lhat, j) + matmul(j, rhat);
}

namespace {

CompressedInverseRoot identity_root(int dim) {
    CompressedInverseRoot r;
    r.dim = dim;
    r.bypassed = true;
    r.dense = Matrix::identity(dim);
    return r;
}

Matrix precondition(const ShampooBlockState &state, const Matrix &lhat, const Matrix &rhat,
                    const Matrix &g) {
    if (state.hyper.variant == Variant::CASPR) return caspr_precondition(lhat, rhat, g);
    return matmul(matmul(lhat, g), rhat);
}

}  // namespace

ShampooBlockState make_shampoo_state(const Matrix &w0, const ShampooHyper &hyper,
                                     const FirstOrderState &fo) {
    ShampooBlockState s;
    s.w = w0;
    s.hyper = hyper;
    s.fo = fo;
    fo_init(s.fo, w0.rows, w0.cols);
    if (hyper.quant.precision == Precision::Bits32) {
        s.l32 = hyper.eps * Matrix::identity(w0.rows);
        s.r32 = hyper.eps * Matrix::identity(w0.cols);
        s.lhat32 = Matrix::identity(w0.rows);
        s.rhat32 = Matrix::identity(w0.cols);
    } else {
        s.left = init_eigenfactor(w0.rows, hyper.eps, hyper.quant);
        s.right = init_eigenfactor(w0.cols, hyper.eps, hyper.quant);
        s.left_root = identity_root(w0.rows);
        s.right_root = identity_root(w0.cols);
    }
    return s;
}

void shampoo32_step(ShampooBlockState &state, const Matrix &g, PhaseTimers *timers) {
    if (state.hyper.quant.precision != Precision::Bits32)
        throw std::logic_error("shampoo32_step: state is not 32-bit");
    if (!all_finite(g)) throw std::invalid_argument("shampoo32_step: non-finite gradient");
    ++state.step;
    const ShampooHyper &h = state.hyper;
    if (state.step % h.interval1 == 0) {
        ScopedPhase t(timers ? &timers->pu : nullptr);
        state.l32 = symmetrize(h.beta * state.l32 + (1.0 - h.beta) * matmul(g, g, false, true));
        state.r32 = symmetrize(h.beta * state.r32 + (1.0 - h.beta) * matmul(g, g, true, false));
    }
    if (state.step % h.interval2 == 0) {
        ScopedPhase t(timers ? &timers->piru : nullptr);
        const double lm = power_iteration_max_eig(state.l32, 25, 0xa001);
        const double rm = power_iteration_max_eig(state.r32, 25, 0xa002);
        state.lhat32 = schur_newton_inv_root(state.l32, 4, lm * h.eps, h.root_iters);
        state.rhat32 = schur_newton_inv_root(state.r32, 4, rm * h.eps, h.root_iters);
    }
    Matrix g_tilde;
    {
        ScopedPhase t(timers ? &timers->precond : nullptr);
        g_tilde = graft(precondition(state, state.lhat32, state.rhat32, g), g);
    }
    ScopedPhase t(timers ? &timers->fo : nullptr);
    fo_step(state.fo, state.w, g_tilde);
}

void shampoo4_step(ShampooBlockState &state, const Matrix &g, PhaseTimers *timers) {
    if (state.hyper.quant.precision == Precision::Bits32)
        throw std::logic_error("shampoo4_step: state is 32-bit");
    if (!all_finite(g)) throw std::invalid_argument("shampoo4_step: non-finite gradient");
    ++state.step;
    const ShampooHyper &h = state.hyper;
    if (state.step % h.interval1 == 0) {
        ScopedPhase t(timers ? &timers->pu : nullptr);
        state.left = pu(state.left, symmetrize(matmul(g, g, false, true)), h.beta, h.t1,
                        h.svd_iters, h.quant);
        state.right = pu(state.right, symmetrize(matmul(g, g, true, false)), h.beta, h.t1,
                         h.svd_iters, h.quant);
    }
    if (state.step % h.interval2 == 0) {
        ScopedPhase t(timers ? &timers->piru : nullptr);
        state.left_root = piru(state.left, h.eps, h.t2, 4, h.quant);
        state.right_root = piru(state.right, h.eps, h.t2, 4, h.quant);
    }
    Matrix g_tilde;
    {
        ScopedPhase t(timers ? &timers->precond : nullptr);
        const Matrix lhat = decompress_inverse_root(state.left_root, h.quant);
        const Matrix rhat = decompress_inverse_root(state.right_root, h.quant);
        g_tilde = graft(precondition(state, lhat, rhat, g), g);
    }
    ScopedPhase t(timers ? &timers->fo : nullptr);
    fo_step(state.fo, state.w, g_tilde);
}

void perturbed_shampoo_step(PerturbedState &state, const Matrix &g,
                            const std::function<Matrix(const Matrix &)> &perturb) {
    ++state.step;
    const Matrix j = symmetrize(state.l + matmul(g, g, false, true));
    const Matrix k = symmetrize(state.r + matmul(g, g, true, false));
    const Matrix lp = perturb(j);
    const Matrix kp = perturb(k);
    const double tol_l = 1e-8 * std::max(1.0, max_abs(lp));
    const double tol_r = 1e-8 * std::max(1.0, max_abs(kp));
    if (asymmetry(lp) > tol_l || asymmetry(kp) > tol_r)
        throw std::invalid_argument("perturbed_shampoo_step: perturbation broke symmetry");
    state.rho += std::fabs(power_iteration_max_eig(symmetrize(j - lp), 10, 0xb001));
    state.mu += std::fabs(power_iteration_max_eig(symmetrize(k - kp), 10, 0xb002));
    state.l = symmetrize(lp);
    state.r = symmetrize(kp);

    const EigResult el = exact_symeig(
        symmetrize(state.l + (state.epsilon + state.rho) * Matrix::identity(state.l.rows)));
    const EigResult er = exact_symeig(
        symmetrize(state.r + (state.epsilon + state.mu) * Matrix::identity(state.r.rows)));
    const Matrix lroot = matrix_power_from_eig(el.eigenvectors, el.eigenvalues, -0.25);
    const Matrix rroot = matrix_power_from_eig(er.eigenvectors, er.eigenvalues, -0.25);
    state.w = state.w - state.eta * matmul(matmul(lroot, g), rroot);
}

std::vector<BlockShape> block_partition(int rows, int cols, int max_order) {
    if (max_order < 1) throw std::invalid_argument("block_partition: max_order must be >= 1");
    std::vector<BlockShape> out;
    for (int r = 0; r < rows; r += max_order)
        for (int c = 0; c < cols; c += max_order)
            out.push_back({r, c, std::min(max_order, rows - r), std::min(max_order, cols - c)});
    return out;
}

}  // namespace shampoo4
