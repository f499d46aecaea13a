#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shampoo4/matrix.hpp"

namespace shampoo4 {

enum class ProblemKind { Quadratic, Logistic, TinyMLP, OnlineConvexSeq };

const char *problem_name(ProblemKind k);
ProblemKind problem_from_name(const std::string &name);

// a training problem with one or more parameter matrices and exact gradients;
// `step` selects the minibatch (or the online loss index) deterministically
struct TrainProblem {
    ProblemKind kind = ProblemKind::Quadratic;
    uint64_t seed = 0;
    std::vector<Matrix> params0;
    std::function<double(const std::vector<Matrix> &, int step)> loss;
    std::function<std::vector<Matrix>(const std::vector<Matrix> &, int step)> grad;
};

// f(W) = 0.5 tr((W - W*)^T Hl (W - W*) Hr) with fixed SPD Hl, Hr
TrainProblem make_quadratic(int rows, int cols, uint64_t seed);

// softmax regression on synthetic clustered data, one dim x classes weight
TrainProblem make_logistic(int dim, int classes, int samples, int batch, uint64_t seed);

// two-layer tanh network, parameters W1 (in x hidden) and W2 (hidden x classes)
TrainProblem make_tiny_mlp(int in_dim, int hidden, int classes, int samples, int batch,
                           uint64_t seed);

// online sequence f_t(W) = 0.5 ||W - C_t||_F^2 with bounded random targets
TrainProblem make_online_convex(int rows, int cols, int horizon, uint64_t seed);

// targets of the online sequence, for closed-form minimizers
std::vector<Matrix> online_convex_targets(int rows, int cols, int horizon, uint64_t seed);

// worst relative central-difference error over random probe coordinates,
// evaluated at the initial parameters on minibatch 0
double gradient_check(const TrainProblem &p, int probes, uint64_t seed);

}  // namespace shampoo4
