#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shampoo4/optimizer.hpp"
#include "shampoo4/problems.hpp"

namespace shampoo4 {

struct RunConfig {
    bool use_shampoo = true;  // false runs the first-order method alone
    Precision precision = Precision::Bits4;
    Mapping mapping = Mapping::Linear2;
    int block_size = 64;
    size_t bypass_threshold = 4096;
    bool exact_eig = false;
    FoKind fo = FoKind::SGDM;
    Variant variant = Variant::Shampoo;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double beta = 0.95;
    double eps = 1e-6;
    int t1 = 1, t2 = 4, svd_iters = 1;
    int interval1 = 100, interval2 = 500, root_iters = 14;
    int steps = 100;
    int max_order = 1200;
    uint64_t seed = 0;

    ShampooHyper hyper() const;
    FirstOrderState first_order() const;
};

struct RunResult {
    std::vector<double> losses;   // one entry per step, evaluated before the update
    std::vector<Matrix> params;   // final parameters
    PhaseTimers timers;
    int steps_done = 0;
};

// fresh per-tile states from the problem's initial parameters
std::vector<ShampooBlockState> make_run_states(const TrainProblem &p, const RunConfig &cfg);

// advance the given states from first_step (0-based) for `steps` steps,
// appending per-step losses; throws std::runtime_error on a non-finite loss
// with the step index in the message
RunResult run_steps(const TrainProblem &p, const RunConfig &cfg,
                    std::vector<ShampooBlockState> &blocks, int first_step, int steps);

// full deterministic run from scratch
RunResult run_training(const TrainProblem &p, const RunConfig &cfg);

void write_loss_csv(const std::string &path, const std::vector<double> &losses);

struct RegretResult {
    double regret = 0.0;
    double bound = 0.0;   // Frobenius-geometry online bound with eta = D / sqrt(2r)
    double eta = 0.0;
    double d = 0.0;       // max_t ||W_t - W*||_F over the final run
    double rho = 0.0, mu = 0.0;
    int rank = 0;
};

// runs the perturbed update loop on the online quadratic sequence and
// evaluates the bound with the measured diameter and drift terms
RegretResult regret_check(int horizon, int rows, int cols,
                          const std::function<Matrix(const Matrix &)> &perturb, uint64_t seed);

// symmetrized block-quantization roundtrip, usable as a regret perturbation
std::function<Matrix(const Matrix &)> make_roundtrip_perturbation(const QuantConfig &cfg);

}  // namespace shampoo4
