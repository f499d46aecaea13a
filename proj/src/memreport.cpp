#include "shampoo4/memreport.hpp"

#include <sstream>
#include <stdexcept>

namespace shampoo4 {

namespace {

uint64_t sq(int n) { return uint64_t(n) * uint64_t(n); }

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

}  // namespace

MemoryReport memory_report(int rows, int cols, int bits, int block_size) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("memory_report: bad dims");
    if (bits != 3 && bits != 4 && bits != 8)
        throw std::invalid_argument("memory_report: bits must be 3, 4, or 8");
    if (block_size < 1) throw std::invalid_argument("memory_report: bad block size");

    MemoryReport r;
    r.rows = rows;
    r.cols = cols;
    r.bits = bits;
    r.block_size = block_size;

    const uint64_t elems = sq(rows) + sq(cols);  // one n x n matrix per side
    // eigenvalues and inverse-root diagonals, float32 each
    r.lambda_bytes = 4 * (uint64_t(rows) + uint64_t(cols));
    r.diag_bytes = 4 * (uint64_t(rows) + uint64_t(cols));
    // eigenvector matrix and off-diagonal inverse root are both quantized,
    // 3-bit codes are stored one per byte on disk but counted at their
    // information size here, matching the element-rate invariant
    r.code_bytes = 2 * ceil_div(elems * uint64_t(bits), 8);
    r.maxima_bytes = 2 * 4 * ceil_div(elems, uint64_t(block_size));
    r.quantized_bytes =
        r.lambda_bytes + r.diag_bytes + r.code_bytes + r.maxima_bytes;
    // 32-bit configuration: dense eigenvectors/accumulator plus dense inverse
    // root plus the same eigenvalue/diagonal vectors
    r.fp32_bytes = 2 * 4 * elems + r.lambda_bytes + r.diag_bytes;

    r.payload_bits_per_element = double(bits) + 32.0 / double(block_size);
    r.ratio = 32.0 / r.payload_bits_per_element;
    return r;
}

std::string memory_report_text(const MemoryReport &r) {
    std::ostringstream os;
    os << "# analytic optimizer-state bytes; not comparable to measured device\n"
       << "# totals, which include allocator fragments and activations\n"
       << "rows," << r.rows << "\n"
       << "cols," << r.cols << "\n"
       << "bits," << r.bits << "\n"
       << "block_size," << r.block_size << "\n"
       << "lambda_bytes," << r.lambda_bytes << "\n"
       << "code_bytes," << r.code_bytes << "\n"
       << "maxima_bytes," << r.maxima_bytes << "\n"
       << "diag_bytes," << r.diag_bytes << "\n"
       << "quantized_bytes," << r.quantized_bytes << "\n"
       << "fp32_bytes," << r.fp32_bytes << "\n"
       << "payload_bits_per_element," << r.payload_bits_per_element << "\n"
       << "ratio," << r.ratio << "\n";
    return os.str();
}

}  // namespace shampoo4
