#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shampoo4/analysis.hpp"
#include "shampoo4/matops.hpp"
#include "shampoo4/memreport.hpp"
#include "shampoo4/problems.hpp"
#include "shampoo4/runner.hpp"

namespace py = pybind11;
using namespace shampoo4;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast> &a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Matrix m(int(a.shape(0)), int(a.shape(1)));
    std::copy(a.data(), a.data() + m.size(), m.data.begin());
    return m;
}

py::array_t<double> to_array(const Matrix &m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

QuantConfig make_config(int bits, const std::string &mapping, int block_size) {
    QuantConfig cfg;
    cfg.precision = precision_from_name(std::to_string(bits));
    cfg.mapping = mapping_from_name(mapping);
    cfg.block_size = block_size;
    cfg.bypass_threshold = 0;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_shampoo4, m) {
    m.doc() = "block-quantized second-order optimizer core";

    m.def(
        "codebook",
        [](const std::string &mapping, int bits) {
            return build_codebook(mapping_from_name(mapping), bits).values;
        },
        py::arg("mapping"), py::arg("bits"),
        "normalized code values of a mapping at the given width");

    m.def(
        "quantize_roundtrip",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a, int bits,
           const std::string &mapping, int block_size) {
            return to_array(quantize_matrix_columns(to_matrix(a), make_config(bits, mapping, block_size)));
        },
        py::arg("a"), py::arg("bits") = 4, py::arg("mapping") = "linear2",
        py::arg("block_size") = 64, "block-wise quantize and dequantize a matrix");

    m.def(
        "inverse_root",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a, int p,
           double ridge, int iters) {
            return to_array(schur_newton_inv_root(to_matrix(a), p, ridge, iters));
        },
        py::arg("a"), py::arg("p") = 4, py::arg("ridge") = 0.0, py::arg("iters") = 14,
        "(a + ridge*I)^(-1/p) by the coupled Newton iteration");

    m.def(
        "symeig",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a) {
            const EigResult e = exact_symeig(to_matrix(a));
            return py::make_tuple(e.eigenvalues, to_array(e.eigenvectors));
        },
        py::arg("a"), "eigenvalues (nonincreasing) and eigenvectors of a symmetric matrix");

    m.def(
        "orthonormalize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &v, int sweeps) {
            return to_array(bjorck_orthonormalize(to_matrix(v), sweeps));
        },
        py::arg("v"), py::arg("sweeps") = 4, "Bjorck rectification sweeps");

    m.def(
        "quant_error",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a, int bits,
           const std::string &mapping, int block_size, const std::string &scheme) {
            const QuantConfig cfg = make_config(bits, mapping, block_size);
            Scheme s;
            if (scheme == "quantize_A") s = Scheme::QuantizeA;
            else if (scheme == "quantize_U") s = Scheme::QuantizeU;
            else if (scheme == "quantize_U_rectified") s = Scheme::QuantizeURectified;
            else if (scheme == "quantize_B") s = Scheme::QuantizeB;
            else if (scheme == "pairs") s = Scheme::Pairs;
            else throw std::invalid_argument("unknown scheme: " + scheme);
            const ErrorReport r = table1_experiment(to_matrix(a), s, cfg, Table1Options{});
            return py::make_tuple(r.nre, r.ae_degrees);
        },
        py::arg("a"), py::arg("bits") = 4, py::arg("mapping") = "linear2",
        py::arg("block_size") = 64, py::arg("scheme") = "quantize_U_rectified",
        "normwise relative error and angle error of a quantization scheme");

    m.def(
        "memory_report",
        [](int rows, int cols, int bits, int block_size) {
            const MemoryReport r = memory_report(rows, cols, bits, block_size);
            py::dict d;
            d["quantized_bytes"] = r.quantized_bytes;
            d["fp32_bytes"] = r.fp32_bytes;
            d["payload_bits_per_element"] = r.payload_bits_per_element;
            d["ratio"] = r.ratio;
            return d;
        },
        py::arg("rows"), py::arg("cols"), py::arg("bits") = 4, py::arg("block_size") = 64,
        "analytic state-byte accounting for one preconditioner pair");

    m.def(
        "train_quadratic",
        [](int rows, int cols, int steps, int bits, double lr, uint64_t seed) {
            RunConfig cfg;
            cfg.precision = precision_from_name(std::to_string(bits));
            cfg.bypass_threshold = 0;
            cfg.lr = lr;
            cfg.steps = steps;
            cfg.seed = seed;
            cfg.interval1 = 5;
            cfg.interval2 = 10;
            return run_training(make_quadratic(rows, cols, seed), cfg).losses;
        },
        py::arg("rows") = 32, py::arg("cols") = 16, py::arg("steps") = 100,
        py::arg("bits") = 4, py::arg("lr") = 0.002, py::arg("seed") = 0,
        "per-step losses of a preconditioned run on a random quadratic");

    m.def(
        "regret_check",
        [](int horizon, int rows, int cols, int bits, uint64_t seed) {
            const RegretResult r = regret_check(
                horizon, rows, cols,
                make_roundtrip_perturbation(make_config(bits, "linear2", 64)), seed);
            py::dict d;
            d["regret"] = r.regret;
            d["bound"] = r.bound;
            d["rho"] = r.rho;
            d["mu"] = r.mu;
            d["eta"] = r.eta;
            return d;
        },
        py::arg("horizon") = 200, py::arg("rows") = 8, py::arg("cols") = 8,
        py::arg("bits") = 4, py::arg("seed") = 0,
        "cumulative regret of the perturbed update versus the online bound");
}
