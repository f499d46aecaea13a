#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "shampoo4/quantcore.hpp"

using namespace shampoo4;

namespace {

std::vector<double> sorted_abs_with_specials(std::vector<double> mags) {
    std::vector<double> v = {0.0, 1.0};
    for (double m : mags) {
        v.push_back(m);
        v.push_back(-m);
    }
    std::sort(v.begin(), v.end());
    return v;
}

void check_table(const Codebook &cb, const std::vector<double> &expected) {
    REQUIRE(cb.values.size() == expected.size());
    for (size_t j = 0; j < expected.size(); ++j)
        CHECK(cb.values[j] == doctest::Approx(expected[j]).epsilon(5e-5));
}

}  // namespace

TEST_CASE("linear2 4-bit table matches the published values") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    check_table(cb, {-1.0000, -0.7511, -0.5378, -0.3600, -0.2178, -0.1111, -0.0400, 0.0000,
                     0.0044, 0.0400, 0.1111, 0.2178, 0.3600, 0.5378, 0.7511, 1.0000});
    CHECK(cb.values[7] == 0.0);  // exact zero at 2^(b-1)-1
    // exact rational check: value at j is +-(-1 + 2j/15)^2
    for (int j = 0; j < 16; ++j) {
        if (j == 7) continue;
        const double u = -1.0 + 2.0 * j / 15.0;
        CHECK(cb.values[j] == (j < 7 ? -u * u : u * u));
    }
}

TEST_CASE("linear2 3-bit table matches the published values") {
    check_table(build_codebook(Mapping::Linear2, 3),
                {-1.0000, -0.5102, -0.1837, 0.0000, 0.0204, 0.1837, 0.5102, 1.0000});
}

TEST_CASE("dt 4-bit table matches the published values") {
    check_table(build_codebook(Mapping::DT, 4),
                sorted_abs_with_specials(
                    {0.8875, 0.6625, 0.4375, 0.2125, 0.0775, 0.0325, 0.0055}));
}

TEST_CASE("dt 3-bit table matches the published values") {
    check_table(build_codebook(Mapping::DT, 3), sorted_abs_with_specials({0.775, 0.325, 0.055}));
}

TEST_CASE("codebooks are strictly increasing and span [-1,1]") {
    for (Mapping m : {Mapping::DT, Mapping::Linear2, Mapping::Linear}) {
        for (int bits : {3, 4, 8}) {
            const Codebook cb = build_codebook(m, bits);
            CHECK(cb.values.size() == size_t(1) << bits);
            CHECK(cb.values.front() >= -1.0);
            CHECK(cb.values.back() <= 1.0);
            CHECK(std::is_sorted(cb.values.begin(), cb.values.end()));
        }
    }
    CHECK_THROWS_AS(build_codebook(Mapping::DT, 5), std::invalid_argument);
}

TEST_CASE("codebook-valued vectors roundtrip bit-exactly") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    std::vector<double> x = cb.values;  // already a full block worth of exact values
    const auto q = quantize(x, cb, static_cast<int>(x.size()));
    const auto back = dequantize(q, cb);
    for (size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
}

TEST_CASE("all-zero input quantizes to zero maxima and dequantizes to zero") {
    const Codebook cb = build_codebook(Mapping::DT, 4);
    std::vector<double> x(130, 0.0);
    const auto q = quantize(x, cb, 64);
    REQUIRE(q.maxima.size() == 3);
    for (double m : q.maxima) CHECK(m == 0.0);
    for (double v : dequantize(q, cb)) CHECK(v == 0.0);
}

TEST_CASE("roundtrip error bounded by the codebook gap times the block max") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    const double gap = cb.max_gap();
    CHECK(gap == doctest::Approx(0.2489).epsilon(1e-3));  // 1 - 0.7511
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> x(256);
    for (double &v : x) v = unif(rng);
    const auto q = quantize(x, cb, 64);
    const auto back = dequantize(q, cb);
    for (size_t i = 0; i < x.size(); ++i) {
        const double scale = q.maxima[q.block_of(i)];
        CHECK(std::fabs(x[i] - back[i]) <= 0.5 * gap * scale + 1e-15);
    }
}

TEST_CASE("quantization with a symmetric codebook is idempotent") {
    // dt is excluded on purpose: its table has +1 but no -1, so a block whose
    // absmax entry is negative shrinks under repeated quantization
    for (Mapping m : {Mapping::Linear2, Mapping::Linear}) {
        const Codebook cb = build_codebook(m, 4);
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss;
        std::vector<double> x(200);
        for (double &v : x) v = gauss(rng);
        const auto q1 = quantize(x, cb, 64);
        const auto q2 = quantize(dequantize(q1, cb), cb, 64);
        CHECK(q1.codes == q2.codes);
        CHECK(q1.maxima == q2.maxima);
    }
}

TEST_CASE("positive scaling preserves codes and scales maxima") {
    const Codebook cb = build_codebook(Mapping::DT, 4);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss;
    std::vector<double> x(100), y(100);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = gauss(rng);
        y[i] = 4.0 * x[i];
    }
    const auto qx = quantize(x, cb, 32);
    const auto qy = quantize(y, cb, 32);
    CHECK(qx.codes == qy.codes);
    for (size_t b = 0; b < qx.maxima.size(); ++b)
        CHECK(qy.maxima[b] == doctest::Approx(4.0 * qx.maxima[b]).epsilon(1e-15));
}

TEST_CASE("encoding is monotone in the input") {
    for (Mapping m : {Mapping::DT, Mapping::Linear2, Mapping::Linear}) {
        const Codebook cb = build_codebook(m, 4);
        int prev = 0;
        for (int k = 0; k <= 2000; ++k) {
            const double v = -1.0 + 2.0 * k / 2000.0;
            const int code = encode_value(cb, v);
            if (k > 0) CHECK(code >= prev);
            prev = code;
        }
    }
}

TEST_CASE("argmin ties break toward the smaller code") {
    const Codebook cb = build_codebook(Mapping::Linear, 3);
    const double mid = 0.5 * (cb.values[2] + cb.values[3]);
    CHECK(encode_value(cb, mid) == 2);
}

TEST_CASE("segmented blocks never straddle a segment boundary") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    std::vector<double> x(3 * 10);
    for (size_t i = 0; i < x.size(); ++i) x[i] = (i < 10) ? 0.001 : 100.0;
    // segment_len 10, block 4 -> blocks of sizes 4,4,2 per segment
    const auto q = quantize(x, cb, 4, 10);
    CHECK(q.num_blocks() == 9);
    // scales are kept float32-exact for serialization
    CHECK(q.maxima[0] == static_cast<double>(static_cast<float>(0.001)));
    CHECK(q.maxima[2] == static_cast<double>(static_cast<float>(0.001)));
    CHECK(q.maxima[3] == 100.0);
}

TEST_CASE("single dequantized element is value times block max") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    std::vector<double> x = {0.0044 * 2.0};
    const auto q = quantize(x, cb, 64);
    CHECK(q.maxima[0] == doctest::Approx(0.0088));
    // force the documented example: maximum 2.0, code j=8 (value (1/15)^2)
    QuantizedBlockVector q2 = q;
    q2.maxima[0] = 2.0;
    q2.set_code(0, 8);
    CHECK(dequantize(q2, cb)[0] == doctest::Approx(2.0 / 225.0));
}

TEST_CASE("non-finite input is rejected") {
    const Codebook cb = build_codebook(Mapping::Linear2, 4);
    std::vector<double> x = {1.0, std::nan("")};
    CHECK_THROWS_AS(quantize(x, cb, 2), std::invalid_argument);
    std::vector<double> y = {1.0, INFINITY};
    CHECK_THROWS_AS(quantize(y, cb, 2), std::invalid_argument);
}

TEST_CASE("dequantize rejects a mismatched codebook") {
    const Codebook cb4 = build_codebook(Mapping::Linear2, 4);
    const Codebook cb3 = build_codebook(Mapping::Linear2, 3);
    std::vector<double> x(8, 0.5);
    const auto q = quantize(x, cb4, 8);
    CHECK_THROWS_AS(dequantize(q, cb3), std::invalid_argument);
}
