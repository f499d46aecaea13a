#include "shampoo4/quantcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shampoo4 {

double Codebook::max_gap() const {
    double g = 0.0;
    for (size_t j = 1; j < values.size(); ++j) g = std::max(g, values[j] - values[j - 1]);
    return g;
}

static std::vector<double> linear2_values(int bits) {
    const int n = 1 << bits;
    const int zero_at = (1 << (bits - 1)) - 1;
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) {
        const double u = -1.0 + 2.0 * j / (n - 1);
        if (j < zero_at)
            v[j] = -u * u;
        else if (j == zero_at)
            v[j] = 0.0;
        else
            v[j] = u * u;
    }
    return v;
}

// Dynamic tree values: sign bit, E leading zeros picking the decade 10^-E,
// then F = bits-2-E fraction bits indexing midpoints of a linear grid on
// [0.1, 1.0], plus the specials {0, 1}.
static std::vector<double> dt_values(int bits) {
    std::vector<double> v = {0.0, 1.0};
    double decade = 1.0;
    for (int e = 0; e <= bits - 2; ++e, decade *= 0.1) {
        const int f = bits - 2 - e;
        const int levels = 1 << f;
        for (int k = 0; k < levels; ++k) {
            const double q = (0.9 * (k + 0.5) / levels + 0.1) * decade;
            v.push_back(q);
            v.push_back(-q);
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

static std::vector<double> linear_values(int bits) {
    const int n = 1 << bits;
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = -1.0 + 2.0 * j / (n - 1);
    return v;
}

Codebook build_codebook(Mapping mapping, int bits) {
    if (bits != 3 && bits != 4 && bits != 8)
        throw std::invalid_argument("build_codebook: bits must be 3, 4, or 8");
    Codebook cb;
    cb.bits = bits;
    cb.mapping = mapping;
    switch (mapping) {
        case Mapping::Linear2: cb.values = linear2_values(bits); break;
        case Mapping::DT: cb.values = dt_values(bits); break;
        case Mapping::Linear: cb.values = linear_values(bits); break;
        default: throw std::invalid_argument("build_codebook: unknown mapping");
    }
    if (cb.values.size() != static_cast<size_t>(1) << bits)
        throw std::logic_error("build_codebook: wrong table size");
    for (size_t j = 1; j < cb.values.size(); ++j)
        if (cb.values[j] <= cb.values[j - 1])
            throw std::logic_error("build_codebook: table not strictly increasing");
    cb.midpoints.resize(cb.values.size() - 1);
    for (size_t j = 0; j + 1 < cb.values.size(); ++j)
        cb.midpoints[j] = 0.5 * (cb.values[j] + cb.values[j + 1]);
    cb.zero_code = encode_value(cb, 0.0);
    return cb;
}

int encode_value(const Codebook &cb, double x) {
    // First midpoint >= x selects the lower code; exact midpoints tie
    // toward the smaller code.
    auto it = std::lower_bound(cb.midpoints.begin(), cb.midpoints.end(), x);
    return static_cast<int>(it - cb.midpoints.begin());
}

int QuantizedBlockVector::code_at(size_t i) const {
    if (bits == 4) {
        const uint8_t byte = codes[i / 2];
        return (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
    }
    return codes[i];
}

void QuantizedBlockVector::set_code(size_t i, int code) {
    if (bits == 4) {
        uint8_t &byte = codes[i / 2];
        if (i % 2 == 0)
            byte = static_cast<uint8_t>((byte & 0xF0) | (code & 0x0F));
        else
            byte = static_cast<uint8_t>((byte & 0x0F) | ((code & 0x0F) << 4));
    } else {
        codes[i] = static_cast<uint8_t>(code);
    }
}

size_t QuantizedBlockVector::block_of(size_t i) const {
    const size_t seg = segment_len == 0 ? length : segment_len;
    const size_t blocks_per_seg = (seg + block_size - 1) / block_size;
    return (i / seg) * blocks_per_seg + (i % seg) / block_size;
}

size_t QuantizedBlockVector::num_blocks() const {
    if (length == 0) return 0;
    const size_t seg = segment_len == 0 ? length : segment_len;
    const size_t blocks_per_seg = (seg + block_size - 1) / block_size;
    const size_t full_segs = length / seg;
    const size_t tail = length % seg;
    return full_segs * blocks_per_seg + (tail + block_size - 1) / block_size;
}

QuantizedBlockVector quantize(std::span<const double> x, const Codebook &cb,
                              int block_size, size_t segment_len) {
    if (block_size < 1) throw std::invalid_argument("quantize: block_size must be >= 1");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite input");

    QuantizedBlockVector q;
    q.length = x.size();
    q.block_size = block_size;
    q.segment_len = segment_len;
    q.bits = cb.bits;
    q.mapping = cb.mapping;
    q.codes.assign(cb.bits == 4 ? (x.size() + 1) / 2 : x.size(), 0);
    q.maxima.assign(q.num_blocks(), 0.0);

    for (size_t i = 0; i < x.size(); ++i) {
        const size_t b = q.block_of(i);
        q.maxima[b] = std::max(q.maxima[b], std::fabs(x[i]));
    }
    // scales are serialized as float32; keep the live state float32-representable
    // so a checkpoint round trip cannot change the trajectory
    for (double &m : q.maxima) m = static_cast<double>(static_cast<float>(m));
    for (size_t i = 0; i < x.size(); ++i) {
        const double m = q.maxima[q.block_of(i)];
        const int code = (m == 0.0) ? cb.zero_code : encode_value(cb, x[i] / m);
        q.set_code(i, code);
    }
    return q;
}

std::vector<double> dequantize(const QuantizedBlockVector &q, const Codebook &cb) {
    if (q.bits != cb.bits || q.mapping != cb.mapping)
        throw std::invalid_argument("dequantize: codebook does not match quantized data");
    std::vector<double> x(q.length);
    for (size_t i = 0; i < q.length; ++i)
        x[i] = cb.values[q.code_at(i)] * q.maxima[q.block_of(i)];
    return x;
}

const char *mapping_name(Mapping m) {
    switch (m) {
        case Mapping::DT: return "dt";
        case Mapping::Linear2: return "linear2";
        case Mapping::Linear: return "linear";
    }
    return "?";
}

Mapping mapping_from_name(const std::string &name) {
    if (name == "dt") return Mapping::DT;
    if (name == "linear2") return Mapping::Linear2;
    if (name == "linear") return Mapping::Linear;
    throw std::invalid_argument("unknown mapping: " + name);
}

}  // namespace shampoo4
