#include "shampoo4/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "shampoo4/matops.hpp"

namespace shampoo4 {

ShampooHyper RunConfig::hyper() const {
    ShampooHyper h;
    h.beta = beta;
    h.eps = eps;
    h.t1 = t1;
    h.t2 = t2;
    h.svd_iters = svd_iters;
    h.interval1 = interval1;
    h.interval2 = interval2;
    h.root_iters = root_iters;
    h.variant = variant;
    h.quant.precision = precision;
    h.quant.mapping = mapping;
    h.quant.block_size = block_size;
    h.quant.bypass_threshold = bypass_threshold;
    h.quant.exact_eig = exact_eig;
    return h;
}

FirstOrderState RunConfig::first_order() const {
    FirstOrderState f;
    f.kind = fo;
    f.lr = lr;
    f.momentum = momentum;
    f.weight_decay = weight_decay;
    return f;
}

namespace {

Matrix extract_tile(const Matrix &m, const BlockShape &b) {
    Matrix t(b.rows, b.cols);
    for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) t(i, j) = m(b.row0 + i, b.col0 + j);
    return t;
}

void place_tile(Matrix &m, const BlockShape &b, const Matrix &t) {
    for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) m(b.row0 + i, b.col0 + j) = t(i, j);
}

// for each parameter matrix, the tile list used for per-block states
std::vector<std::vector<BlockShape>> tile_layout(const TrainProblem &p, int max_order) {
    std::vector<std::vector<BlockShape>> layout;
    for (const Matrix &w : p.params0)
        layout.push_back(block_partition(w.rows, w.cols, max_order));
    return layout;
}

std::vector<Matrix> assemble_params(const TrainProblem &p,
                                    const std::vector<std::vector<BlockShape>> &layout,
                                    const std::vector<ShampooBlockState> &blocks) {
    std::vector<Matrix> params;
    size_t idx = 0;
    for (size_t k = 0; k < p.params0.size(); ++k) {
        Matrix w(p.params0[k].rows, p.params0[k].cols);
        for (const BlockShape &b : layout[k]) place_tile(w, b, blocks.at(idx++).w);
        params.push_back(std::move(w));
    }
    return params;
}

double trace_quarter_root(const Matrix &a) {
    const EigResult e = exact_symeig(a);
    double tr = 0.0;
    for (double l : e.eigenvalues) tr += std::pow(std::max(l, 0.0), 0.25);
    return tr;
}

}  // namespace

std::vector<ShampooBlockState> make_run_states(const TrainProblem &p, const RunConfig &cfg) {
    const ShampooHyper h = cfg.hyper();
    const FirstOrderState f = cfg.first_order();
    std::vector<ShampooBlockState> blocks;
    for (const Matrix &w : p.params0)
        for (const BlockShape &b : block_partition(w.rows, w.cols, cfg.max_order))
            blocks.push_back(make_shampoo_state(extract_tile(w, b), h, f));
    return blocks;
}

RunResult run_steps(const TrainProblem &p, const RunConfig &cfg,
                    std::vector<ShampooBlockState> &blocks, int first_step, int steps) {
    if (steps < 0) throw std::invalid_argument("run_steps: steps must be >= 0");
    const auto layout = tile_layout(p, cfg.max_order);
    RunResult res;
    for (int s = first_step; s < first_step + steps; ++s) {
        const std::vector<Matrix> params = assemble_params(p, layout, blocks);
        const double loss = p.loss(params, s);
        if (!std::isfinite(loss))
            throw std::runtime_error("run diverged: non-finite loss at step " +
                                     std::to_string(s));
        res.losses.push_back(loss);
        const std::vector<Matrix> grads = p.grad(params, s);
        size_t idx = 0;
        for (size_t k = 0; k < grads.size(); ++k) {
            for (const BlockShape &b : layout[k]) {
                const Matrix gt = extract_tile(grads[k], b);
                ShampooBlockState &st = blocks.at(idx++);
                if (!cfg.use_shampoo) {
                    const auto t0 = std::chrono::steady_clock::now();
                    fo_step(st.fo, st.w, gt);
                    res.timers.fo +=
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
                } else if (cfg.precision == Precision::Bits32) {
                    shampoo32_step(st, gt, &res.timers);
                } else {
                    shampoo4_step(st, gt, &res.timers);
                }
            }
        }
        ++res.steps_done;
    }
    res.params = assemble_params(p, layout, blocks);
    return res;
}

RunResult run_training(const TrainProblem &p, const RunConfig &cfg) {
    std::vector<ShampooBlockState> blocks = make_run_states(p, cfg);
    return run_steps(p, cfg, blocks, 0, cfg.steps);
}

void write_loss_csv(const std::string &path, const std::vector<double> &losses) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "step,loss\n" << std::setprecision(17);
    for (size_t i = 0; i < losses.size(); ++i) os << i << "," << losses[i] << "\n";
    if (!os) throw std::runtime_error("write failed for " + path);
}

RegretResult regret_check(int horizon, int rows, int cols,
                          const std::function<Matrix(const Matrix &)> &perturb,
                          uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("regret_check: horizon must be >= 1");
    const std::vector<Matrix> targets = online_convex_targets(rows, cols, horizon, seed);
    Matrix wstar(rows, cols);  // minimizer of the summed quadratics
    for (const Matrix &c : targets) wstar = wstar + c;
    wstar = (1.0 / horizon) * wstar;
    const int rank = std::min(rows, cols);

    RegretResult out;
    double eta = 1.0;
    for (int round = 0; round < 8; ++round) {
        PerturbedState st;
        st.w = Matrix(rows, cols);
        st.l = Matrix(rows, rows);
        st.r = Matrix(cols, cols);
        st.eta = eta;

        double played = 0.0, best = 0.0, dmax = 0.0;
        Matrix lsum(rows, rows), rsum(cols, cols);
        for (int t = 0; t < horizon; ++t) {
            const Matrix g = st.w - targets[t];
            played += 0.5 * inner_product(g, g);
            const Matrix db = wstar - targets[t];
            best += 0.5 * inner_product(db, db);
            const Matrix dw = st.w - wstar;
            dmax = std::max(dmax, frobenius_norm(dw));
            lsum = lsum + matmul(g, g, false, true);
            rsum = rsum + matmul(g, g, true, false);
            perturbed_shampoo_step(st, g, perturb);
        }

        out.regret = played - best;
        out.d = dmax;
        out.rho = st.rho;
        out.mu = st.mu;
        out.eta = eta;
        const double c = std::pow(2.0, 0.25);
        const Matrix ltil =
            symmetrize(lsum + st.epsilon * Matrix::identity(rows));
        const Matrix rtil =
            symmetrize(rsum + st.epsilon * Matrix::identity(cols));
        out.bound = std::sqrt(2.0 * rank) * dmax *
                    (c * rows * std::pow(st.rho, 0.25) + trace_quarter_root(ltil)) *
                    (c * cols * std::pow(st.mu, 0.25) + trace_quarter_root(rtil));
        out.rank = rank;

        // eta = D / sqrt(2r) is self-referential through D; iterate to a fixed point
        const double next = dmax / std::sqrt(2.0 * rank);
        if (next <= 0.0 || std::fabs(next - eta) <= 1e-6 * eta) break;
        eta = next;
    }
    return out;
}

std::function<Matrix(const Matrix &)> make_roundtrip_perturbation(const QuantConfig &cfg) {
    return [cfg](const Matrix &m) { return symmetrize(quantize_matrix_columns(m, cfg)); };
}

}  // namespace shampoo4
