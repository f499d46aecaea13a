#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shampoo4 {

enum class Mapping { DT, Linear2, Linear };

// Fixed b-bit code table mapping codes {0,...,2^b-1} to values in [-1,1].
// Immutable after construction.
struct Codebook {
    int bits = 0;
    Mapping mapping = Mapping::Linear2;
    std::vector<double> values;     // strictly increasing, 2^bits entries
    std::vector<double> midpoints;  // values.size()-1 decision boundaries
    int zero_code = 0;              // code whose value is closest to 0

    // Largest gap between adjacent code values; bounds the roundtrip error
    // of a normalized element.
    double max_gap() const;
};

// mapping in {DT, Linear2, Linear}, bits in {3, 4, 8}.
Codebook build_codebook(Mapping mapping, int bits);

// Nearest code for x (ties toward the smaller code).
int encode_value(const Codebook &cb, double x);

// Block-wise quantized vector: packed codes plus one absmax per block.
// When segment_len > 0, blocks restart at every segment boundary (used to
// keep eigenvector columns in separate blocks).
struct QuantizedBlockVector {
    std::vector<uint8_t> codes;  // 4-bit: two codes/byte (low nibble first); else one/byte
    std::vector<double> maxima;
    size_t length = 0;
    int block_size = 0;
    size_t segment_len = 0;  // 0 = single contiguous segment
    int bits = 0;
    Mapping mapping = Mapping::Linear2;

    int code_at(size_t i) const;
    void set_code(size_t i, int code);
    size_t block_of(size_t i) const;
    size_t num_blocks() const;
    size_t packed_code_bytes() const { return codes.size(); }
};

QuantizedBlockVector quantize(std::span<const double> x, const Codebook &cb,
                              int block_size, size_t segment_len = 0);

std::vector<double> dequantize(const QuantizedBlockVector &q, const Codebook &cb);

const char *mapping_name(Mapping m);
Mapping mapping_from_name(const std::string &name);

}  // namespace shampoo4
