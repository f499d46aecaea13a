#include "shampoo4/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "shampoo4/matops.hpp"

namespace shampoo4 {

const char *problem_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::Quadratic: return "quadratic";
        case ProblemKind::Logistic: return "logistic";
        case ProblemKind::TinyMLP: return "mlp";
        case ProblemKind::OnlineConvexSeq: return "online";
    }
    return "?";
}

ProblemKind problem_from_name(const std::string &name) {
    if (name == "quadratic") return ProblemKind::Quadratic;
    if (name == "logistic") return ProblemKind::Logistic;
    if (name == "mlp") return ProblemKind::TinyMLP;
    if (name == "online") return ProblemKind::OnlineConvexSeq;
    throw std::invalid_argument("unknown problem: " + name);
}

namespace {

Matrix gaussian(int rows, int cols, std::mt19937_64 &rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(rows, cols);
    for (double &v : m.data) v = nd(rng);
    return m;
}

// SPD with eigenvalues log-uniform over [1/sqrt(cond), sqrt(cond)]
Matrix random_spd(int n, double cond, std::mt19937_64 &rng) {
    const Matrix q = qr_orthonormal(gaussian(n, n, rng));
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<double> lam(n);
    for (double &l : lam) l = std::exp((ud(rng) - 0.5) * std::log(cond));
    return symmetrize(matmul(matmul(q, Matrix::diagonal(lam)), q, false, true));
}

struct SyntheticData {
    Matrix x;                // samples x dim
    std::vector<int> y;     // labels in [0, classes)
    int batch = 0;
};

// clustered gaussian features with labels from a hidden linear model
SyntheticData make_classification_data(int dim, int classes, int samples, int batch,
                                       std::mt19937_64 &rng) {
    SyntheticData d;
    d.batch = std::min(batch, samples);
    d.x = gaussian(samples, dim, rng);
    const Matrix means = gaussian(classes, dim, rng, 1.5 / std::sqrt(double(dim)));
    const Matrix w_true = gaussian(dim, classes, rng, 1.0 / std::sqrt(double(dim)));
    std::uniform_int_distribution<int> cd(0, classes - 1);
    d.y.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const int c = cd(rng);
        for (int j = 0; j < dim; ++j) d.x(i, j) += means(c, j);
        double best = -1e300;
        int arg = 0;
        for (int k = 0; k < classes; ++k) {
            double z = 0.0;
            for (int j = 0; j < dim; ++j) z += d.x(i, j) * w_true(j, k);
            if (z > best) { best = z; arg = k; }
        }
        d.y[i] = arg;
    }
    return d;
}

// rows [first, first + count) of the epoch-wrapped minibatch for this step
int batch_start(const SyntheticData &d, int step) {
    const int per_epoch = int(d.y.size()) / d.batch;
    return (step % std::max(per_epoch, 1)) * d.batch;
}

// row-wise softmax of logits, in place; returns mean cross entropy vs labels
double softmax_ce(Matrix &logits, const std::vector<int> &labels, int first) {
    double loss = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
        double peak = logits(i, 0);
        for (int k = 1; k < logits.cols; ++k) peak = std::max(peak, logits(i, k));
        double z = 0.0;
        for (int k = 0; k < logits.cols; ++k) z += std::exp(logits(i, k) - peak);
        const int y = labels[size_t(first) + size_t(i)];
        loss += peak + std::log(z) - logits(i, y);
        for (int k = 0; k < logits.cols; ++k)
            logits(i, k) = std::exp(logits(i, k) - peak) / z;
        logits(i, y) -= 1.0;  // now holds softmax - onehot
    }
    return loss / logits.rows;
}

Matrix batch_rows(const Matrix &x, int first, int count) {
    Matrix b(count, x.cols);
    std::copy(x.data.begin() + size_t(first) * x.cols,
              x.data.begin() + size_t(first + count) * x.cols, b.data.begin());
    return b;
}

}  // namespace

TrainProblem make_quadratic(int rows, int cols, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x71ad0001ULL);
    auto hl = std::make_shared<Matrix>(random_spd(rows, 100.0, rng));
    auto hr = std::make_shared<Matrix>(random_spd(cols, 100.0, rng));
    auto wstar = std::make_shared<Matrix>(gaussian(rows, cols, rng));

    TrainProblem p;
    p.kind = ProblemKind::Quadratic;
    p.seed = seed;
    p.params0 = {gaussian(rows, cols, rng)};
    p.loss = [hl, hr, wstar](const std::vector<Matrix> &w, int) {
        const Matrix d = w.at(0) - *wstar;
        return 0.5 * inner_product(d, matmul(matmul(*hl, d), *hr));
    };
    p.grad = [hl, hr, wstar](const std::vector<Matrix> &w, int) {
        const Matrix d = w.at(0) - *wstar;
        return std::vector<Matrix>{matmul(matmul(*hl, d), *hr)};
    };
    return p;
}

TrainProblem make_logistic(int dim, int classes, int samples, int batch, uint64_t seed) {
    if (samples < batch || batch < 1)
        throw std::invalid_argument("make_logistic: need 1 <= batch <= samples");
    std::mt19937_64 rng(seed ^ 0x10515001ULL);
    auto d = std::make_shared<SyntheticData>(
        make_classification_data(dim, classes, samples, batch, rng));

    TrainProblem p;
    p.kind = ProblemKind::Logistic;
    p.seed = seed;
    p.params0 = {Matrix(dim, classes)};
    p.loss = [d](const std::vector<Matrix> &w, int step) {
        const int first = batch_start(*d, step);
        Matrix logits = matmul(batch_rows(d->x, first, d->batch), w.at(0));
        return softmax_ce(logits, d->y, first);
    };
    p.grad = [d](const std::vector<Matrix> &w, int step) {
        const int first = batch_start(*d, step);
        const Matrix xb = batch_rows(d->x, first, d->batch);
        Matrix logits = matmul(xb, w.at(0));
        softmax_ce(logits, d->y, first);
        return std::vector<Matrix>{(1.0 / d->batch) * matmul(xb, logits, true, false)};
    };
    return p;
}

TrainProblem make_tiny_mlp(int in_dim, int hidden, int classes, int samples, int batch,
                           uint64_t seed) {
    if (samples < batch || batch < 1)
        throw std::invalid_argument("make_tiny_mlp: need 1 <= batch <= samples");
    std::mt19937_64 rng(seed ^ 0x31b90001ULL);
    auto d = std::make_shared<SyntheticData>(
        make_classification_data(in_dim, classes, samples, batch, rng));

    TrainProblem p;
    p.kind = ProblemKind::TinyMLP;
    p.seed = seed;
    p.params0 = {gaussian(in_dim, hidden, rng, 1.0 / std::sqrt(double(in_dim))),
                 gaussian(hidden, classes, rng, 1.0 / std::sqrt(double(hidden)))};

    auto forward = [d](const std::vector<Matrix> &w, int step, Matrix *xb_out, Matrix *h_out,
                       Matrix *delta_out) {
        const int first = batch_start(*d, step);
        const Matrix xb = batch_rows(d->x, first, d->batch);
        Matrix h = matmul(xb, w.at(0));
        for (double &v : h.data) v = std::tanh(v);
        Matrix logits = matmul(h, w.at(1));
        const double loss = softmax_ce(logits, d->y, first);
        if (xb_out) *xb_out = xb;
        if (h_out) *h_out = h;
        if (delta_out) *delta_out = logits;
        return loss;
    };
    p.loss = [forward](const std::vector<Matrix> &w, int step) {
        return forward(w, step, nullptr, nullptr, nullptr);
    };
    p.grad = [d, forward](const std::vector<Matrix> &w, int step) {
        Matrix xb, h, delta;
        forward(w, step, &xb, &h, &delta);
        const double inv_b = 1.0 / d->batch;
        const Matrix g2 = inv_b * matmul(h, delta, true, false);
        Matrix back = matmul(delta, w.at(1), false, true);
        for (size_t i = 0; i < back.data.size(); ++i)
            back.data[i] *= 1.0 - h.data[i] * h.data[i];
        const Matrix g1 = inv_b * matmul(xb, back, true, false);
        return std::vector<Matrix>{g1, g2};
    };
    return p;
}

std::vector<Matrix> online_convex_targets(int rows, int cols, int horizon, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x0c0e0001ULL);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    std::vector<Matrix> c(horizon, Matrix(rows, cols));
    for (Matrix &m : c)
        for (double &v : m.data) v = ud(rng);
    return c;
}

TrainProblem make_online_convex(int rows, int cols, int horizon, uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("make_online_convex: horizon must be >= 1");
    auto c = std::make_shared<std::vector<Matrix>>(
        online_convex_targets(rows, cols, horizon, seed));

    TrainProblem p;
    p.kind = ProblemKind::OnlineConvexSeq;
    p.seed = seed;
    p.params0 = {Matrix(rows, cols)};
    p.loss = [c](const std::vector<Matrix> &w, int step) {
        const Matrix d = w.at(0) - c->at(size_t(step) % c->size());
        return 0.5 * inner_product(d, d);
    };
    p.grad = [c](const std::vector<Matrix> &w, int step) {
        return std::vector<Matrix>{w.at(0) - c->at(size_t(step) % c->size())};
    };
    return p;
}

double gradient_check(const TrainProblem &p, int probes, uint64_t seed) {
    if (probes < 1) throw std::invalid_argument("gradient_check: probes must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Matrix> w = p.params0;
    const std::vector<Matrix> g = p.grad(w, 0);
    double gpeak = 0.0;
    for (const Matrix &m : g) gpeak = std::max(gpeak, max_abs(m));
    if (gpeak == 0.0) throw std::domain_error("gradient_check: zero gradient at start");

    std::uniform_int_distribution<size_t> bd(0, w.size() - 1);
    double worst = 0.0;
    for (int t = 0; t < probes; ++t) {
        const size_t b = bd(rng);
        std::uniform_int_distribution<size_t> id(0, w[b].data.size() - 1);
        const size_t i = id(rng);
        const double h = 1e-5 * std::max(1.0, std::fabs(w[b].data[i]));
        const double keep = w[b].data[i];
        w[b].data[i] = keep + h;
        const double fp = p.loss(w, 0);
        w[b].data[i] = keep - h;
        const double fm = p.loss(w, 0);
        w[b].data[i] = keep;
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, std::fabs(fd - g[b].data[i]) / gpeak);
    }
    return worst;
}

}  // namespace shampoo4
