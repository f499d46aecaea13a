#include "shampoo4/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace shampoo4 {

namespace {

constexpr char kMagic[4] = {'Q', '4', 'S', 'H'};
constexpr uint32_t kVersion = 1;

// this format is little-endian on disk; the build targets little-endian hosts
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

class Writer {
  public:
    explicit Writer(std::ostream &os) : os_(os) {}

    void raw(const void *p, size_t n) { os_.write(static_cast<const char *>(p), n); }
    void u8(uint8_t v) { raw(&v, 1); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void i32(int32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }

    void vec_f64(const std::vector<double> &v) {
        u64(v.size());
        raw(v.data(), v.size() * 8);
    }
    void vec_f32(const std::vector<double> &v) {
        u64(v.size());
        for (double x : v) f32(static_cast<float>(x));
    }
    void bytes(const std::vector<uint8_t> &v) {
        u64(v.size());
        raw(v.data(), v.size());
    }
    void matrix(const Matrix &m) {
        i32(m.rows);
        i32(m.cols);
        raw(m.data.data(), m.data.size() * 8);
    }

  private:
    std::ostream &os_;
};

class Reader {
  public:
    explicit Reader(std::istream &is) : is_(is) {}

    void raw(void *p, size_t n) {
        is_.read(static_cast<char *>(p), n);
        if (!is_) throw std::runtime_error("checkpoint: truncated file");
    }
    uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
    uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
    uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
    int32_t i32() { int32_t v; raw(&v, 4); return v; }
    float f32() { float v; raw(&v, 4); return v; }
    double f64() { double v; raw(&v, 8); return v; }

    std::vector<double> vec_f64() {
        std::vector<double> v(u64());
        raw(v.data(), v.size() * 8);
        return v;
    }
    std::vector<double> vec_f32() {
        std::vector<double> v(u64());
        for (double &x : v) x = static_cast<double>(f32());
        return v;
    }
    std::vector<uint8_t> bytes() {
        std::vector<uint8_t> v(u64());
        raw(v.data(), v.size());
        return v;
    }
    Matrix matrix() {
        const int r = i32();
        const int c = i32();
        Matrix m(r, c);
        raw(m.data.data(), m.data.size() * 8);
        return m;
    }

  private:
    std::istream &is_;
};

void write_quant(Writer &w, const QuantizedBlockVector &q) {
    w.u64(q.length);
    w.i32(q.block_size);
    w.u64(q.segment_len);
    w.i32(q.bits);
    w.u8(static_cast<uint8_t>(q.mapping));
    w.bytes(q.codes);
    w.vec_f32(q.maxima);
}

QuantizedBlockVector read_quant(Reader &r) {
    QuantizedBlockVector q;
    q.length = r.u64();
    q.block_size = r.i32();
    q.segment_len = r.u64();
    q.bits = r.i32();
    q.mapping = static_cast<Mapping>(r.u8());
    q.codes = r.bytes();
    q.maxima = r.vec_f32();
    return q;
}

void write_eigenfactor(Writer &w, const CompressedEigenFactor &s) {
    w.i32(s.dim);
    w.u8(s.bypassed ? 1 : 0);
    if (s.bypassed) {
        w.vec_f64(s.lambda);
        w.matrix(s.u_dense);
    } else {
        w.vec_f32(s.lambda);
        write_quant(w, s.u_quant);
    }
}

CompressedEigenFactor read_eigenfactor(Reader &r) {
    CompressedEigenFactor s;
    s.dim = r.i32();
    s.bypassed = r.u8() != 0;
    if (s.bypassed) {
        s.lambda = r.vec_f64();
        s.u_dense = r.matrix();
    } else {
        s.lambda = r.vec_f32();
        s.u_quant = read_quant(r);
    }
    return s;
}

void write_inverse_root(Writer &w, const CompressedInverseRoot &s) {
    w.i32(s.dim);
    w.u8(s.bypassed ? 1 : 0);
    if (s.bypassed) {
        w.matrix(s.dense);
    } else {
        w.vec_f32(s.diag);
        write_quant(w, s.offdiag_quant);
    }
}

CompressedInverseRoot read_inverse_root(Reader &r) {
    CompressedInverseRoot s;
    s.dim = r.i32();
    s.bypassed = r.u8() != 0;
    if (s.bypassed) {
        s.dense = r.matrix();
    } else {
        s.diag = r.vec_f32();
        s.offdiag_quant = read_quant(r);
    }
    return s;
}

void write_block(Writer &w, const ShampooBlockState &b) {
    const ShampooHyper &h = b.hyper;
    w.f64(h.beta);
    w.f64(h.eps);
    w.i32(h.t1);
    w.i32(h.t2);
    w.i32(h.svd_iters);
    w.i32(h.interval1);
    w.i32(h.interval2);
    w.i32(h.root_iters);
    w.u8(static_cast<uint8_t>(h.variant));
    w.u8(static_cast<uint8_t>(h.quant.precision));
    w.u8(static_cast<uint8_t>(h.quant.mapping));
    w.i32(h.quant.block_size);
    w.u64(h.quant.bypass_threshold);
    w.u8(h.quant.exact_eig ? 1 : 0);

    const FirstOrderState &fo = b.fo;
    w.u8(static_cast<uint8_t>(fo.kind));
    w.f64(fo.lr);
    w.f64(fo.momentum);
    w.f64(fo.beta1);
    w.f64(fo.beta2);
    w.f64(fo.eps);
    w.f64(fo.weight_decay);
    w.i32(fo.step);
    w.matrix(fo.m1);
    w.matrix(fo.m2);

    w.i32(b.step);
    w.matrix(b.w);
    write_eigenfactor(w, b.left);
    write_eigenfactor(w, b.right);
    write_inverse_root(w, b.left_root);
    write_inverse_root(w, b.right_root);
    w.matrix(b.l32);
    w.matrix(b.r32);
    w.matrix(b.lhat32);
    w.matrix(b.rhat32);
}

ShampooBlockState read_block(Reader &r) {
    ShampooBlockState b;
    ShampooHyper &h = b.hyper;
    h.beta = r.f64();
    h.eps = r.f64();
    h.t1 = r.i32();
    h.t2 = r.i32();
    h.svd_iters = r.i32();
    h.interval1 = r.i32();
    h.interval2 = r.i32();
    h.root_iters = r.i32();
    h.variant = static_cast<Variant>(r.u8());
    h.quant.precision = static_cast<Precision>(r.u8());
    h.quant.mapping = static_cast<Mapping>(r.u8());
    h.quant.block_size = r.i32();
    h.quant.bypass_threshold = r.u64();
    h.quant.exact_eig = r.u8() != 0;

    FirstOrderState &fo = b.fo;
    fo.kind = static_cast<FoKind>(r.u8());
    fo.lr = r.f64();
    fo.momentum = r.f64();
    fo.beta1 = r.f64();
    fo.beta2 = r.f64();
    fo.eps = r.f64();
    fo.weight_decay = r.f64();
    fo.step = r.i32();
    fo.m1 = r.matrix();
    fo.m2 = r.matrix();

    b.step = r.i32();
    b.w = r.matrix();
    b.left = read_eigenfactor(r);
    b.right = read_eigenfactor(r);
    b.left_root = read_inverse_root(r);
    b.right_root = read_inverse_root(r);
    b.l32 = r.matrix();
    b.r32 = r.matrix();
    b.lhat32 = r.matrix();
    b.rhat32 = r.matrix();
    return b;
}

}  // namespace

void save_checkpoint(const std::string &path, const Checkpoint &c) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    Writer w(os);
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u64(c.seed);
    w.u32(c.step);
    w.u32(static_cast<uint32_t>(c.blocks.size()));
    for (const ShampooBlockState &b : c.blocks) write_block(w, b);
    os.flush();
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    Reader r(is);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    Checkpoint c;
    c.version = r.u32();
    if (c.version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version in " + path);
    c.seed = r.u64();
    c.step = r.u32();
    c.blocks.resize(r.u32());
    for (ShampooBlockState &b : c.blocks) b = read_block(r);
    return c;
}

}  // namespace shampoo4
