#pragma once

#include <cstdint>
#include <string>

namespace shampoo4 {

// analytic state-byte accounting for one Kronecker pair (left rows x rows,
// right cols x cols: eigenfactor plus inverse root each side)
struct MemoryReport {
    int rows = 0, cols = 0, bits = 0, block_size = 0;
    uint64_t lambda_bytes = 0;
    uint64_t code_bytes = 0;
    uint64_t maxima_bytes = 0;
    uint64_t diag_bytes = 0;
    uint64_t quantized_bytes = 0;  // total of the quantized configuration
    uint64_t fp32_bytes = 0;       // the same states held as dense float32
    double payload_bits_per_element = 0.0;  // bits + 32 / block_size, exactly
    double ratio = 0.0;                     // 32 / payload_bits_per_element
};

MemoryReport memory_report(int rows, int cols, int bits, int block_size);
std::string memory_report_text(const MemoryReport &r);

}  // namespace shampoo4
