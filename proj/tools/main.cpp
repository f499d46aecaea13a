#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shampoo4/analysis.hpp"
#include "shampoo4/checkpoint.hpp"
#include "shampoo4/matops.hpp"
#include "shampoo4/memreport.hpp"
#include "shampoo4/problems.hpp"
#include "shampoo4/runner.hpp"

using namespace shampoo4;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

Matrix random_orthogonal(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix g(n, n);
    for (double &v : g.data) v = nd(rng);
    return qr_orthonormal(g);
}

uint64_t default_seed() {
    if (const char *env = std::getenv("QUANTPREC_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

// options shared by the experiment subcommands
struct CommonOpts {
    std::string bits = "4";  // 3, 4, 8, 32, lossless
    std::string mapping = "linear2";
    int block_size = 64;
    int t1 = 1, t2 = 4;
    int interval1 = 100, interval2 = 500;
    double beta = 0.95, eps = 1e-6;
    std::string variant = "shampoo";
    std::string fo = "sgdm";
    uint64_t seed = default_seed();
    int steps = 100;
    std::string out;
};

void add_common(CLI::App *cmd, CommonOpts &o) {
    cmd->fallthrough();
    cmd->add_option("--bits", o.bits, "state precision: 3, 4, 8, 32, or lossless");
    cmd->add_option("--mapping", o.mapping, "codebook mapping: dt, linear2, or linear");
    cmd->add_option("--block-size", o.block_size, "quantization block size");
    cmd->add_option("--t1", o.t1, "rectification sweeps before the eigen update");
    cmd->add_option("--t2", o.t2, "rectification sweeps before the inverse root");
    cmd->add_option("--T1", o.interval1, "steps between preconditioner updates");
    cmd->add_option("--T2", o.interval2, "steps between inverse root updates");
    cmd->add_option("--beta", o.beta, "preconditioner EMA coefficient");
    cmd->add_option("--eps", o.eps, "damping coefficient");
    cmd->add_option("--variant", o.variant, "shampoo or caspr");
    cmd->add_option("--fo", o.fo, "first-order method: sgdm, adamw, or adagrad");
    cmd->add_option("--seed", o.seed, "random seed (default from QUANTPREC_SEED)");
    cmd->add_option("--steps", o.steps, "training steps");
    cmd->add_option("--out", o.out, "output path");
}

RunConfig to_run_config(const CommonOpts &o) {
    RunConfig cfg;
    cfg.precision = precision_from_name(o.bits);
    cfg.mapping = mapping_from_name(o.mapping);
    cfg.block_size = o.block_size;
    cfg.t1 = o.t1;
    cfg.t2 = o.t2;
    cfg.interval1 = o.interval1;
    cfg.interval2 = o.interval2;
    cfg.beta = o.beta;
    cfg.eps = o.eps;
    cfg.variant = variant_from_name(o.variant);
    cfg.fo = fo_from_name(o.fo);
    cfg.seed = o.seed;
    cfg.steps = o.steps;
    return cfg;
}

std::ostream &open_out(const std::string &path, std::ofstream &file) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open " + path + " for writing");
    return file;
}

int cmd_quant_bench(const CommonOpts &o, int order, double cond, int seeds) {
    QuantConfig cfg;
    cfg.precision = precision_from_name(o.bits);
    cfg.mapping = mapping_from_name(o.mapping);
    cfg.block_size = o.block_size;
    cfg.bypass_threshold = 0;
    const int half = order / 2;

    std::ofstream file;
    std::ostream &os = open_out(o.out, file);
    os << "scheme,bits,or,nre,ae_deg\n";
    for (const Scheme scheme : {Scheme::QuantizeA, Scheme::QuantizeU,
                                Scheme::QuantizeURectified, Scheme::QuantizeB, Scheme::Pairs}) {
        for (int s = 0; s < seeds; ++s) {
            const Matrix a = make_synthetic_pd(half, order - half, cond, 1e-3, o.seed + s);
            const ErrorReport r = table1_experiment(a, scheme, cfg, Table1Options{});
            os << scheme_name(scheme) << "," << cfg.bits() << "," << order << "," << r.nre
               << "," << r.ae_degrees << "\n";
        }
    }
    return kExitOk;
}

TrainProblem build_problem(const std::string &name, int rows, int cols, int samples,
                           int batch, uint64_t seed) {
    switch (problem_from_name(name)) {
        case ProblemKind::Quadratic: return make_quadratic(rows, cols, seed);
        case ProblemKind::Logistic: return make_logistic(rows, cols, samples, batch, seed);
        case ProblemKind::TinyMLP:
            return make_tiny_mlp(rows, std::max(cols * 2, 8), cols, samples, batch, seed);
        case ProblemKind::OnlineConvexSeq: return make_online_convex(rows, cols, 200, seed);
    }
    throw std::invalid_argument("unknown problem: " + name);
}

int cmd_train(const CommonOpts &o, const std::string &problem, int rows, int cols,
              int samples, int batch, double lr, bool fo_only) {
    const RunConfig base = to_run_config(o);
    RunConfig cfg = base;
    cfg.lr = lr;
    cfg.use_shampoo = !fo_only;
    const TrainProblem p = build_problem(problem, rows, cols, samples, batch, o.seed);

    std::vector<ShampooBlockState> blocks = make_run_states(p, cfg);
    const RunResult res = run_steps(p, cfg, blocks, 0, cfg.steps);

    const std::string out = o.out.empty() ? "losses.csv" : o.out;
    write_loss_csv(out, res.losses);
    Checkpoint ck;
    ck.seed = cfg.seed;
    ck.step = static_cast<uint32_t>(res.steps_done);
    ck.blocks = std::move(blocks);
    save_checkpoint(out + ".ckpt", ck);

    std::cout << "problem=" << problem << " steps=" << res.steps_done
              << " final_loss=" << res.losses.back() << "\n"
              << "wall_seconds pu=" << res.timers.pu << " piru=" << res.timers.piru
              << " precond=" << res.timers.precond << " fo=" << res.timers.fo << "\n"
              << "loss_csv=" << out << " checkpoint=" << out << ".ckpt\n";
    return kExitOk;
}

int cmd_verify(const std::string &suite, uint64_t seed) {
    int failures = 0;
    auto report = [&failures](const std::string &line, bool ok) {
        std::cout << (ok ? "pass " : "FAIL ") << line << "\n";
        if (!ok) ++failures;
    };

    if (suite == "lemma1" || suite == "all") {
        const double alpha = 0.1, beta = alpha * alpha / 2.0, s = -0.25;
        int ok_count = 0;
        for (int i = 0; i < 100; ++i) {
            const Matrix u = random_orthogonal(32, seed + i);
            const Matrix du = make_orthogonal_perturbation(u, alpha, seed + 1000 + i);
            std::vector<double> lam(32);
            for (int j = 0; j < 32; ++j) lam[j] = std::pow(10.0, -3.0 * j / 31.0);
            const Lemma1Result r = verify_lemma1(u, du, lam, s, alpha, beta);
            if (r.hypotheses_ok && r.bound1_holds && r.bound2_holds) ++ok_count;
        }
        report("lemma1: 100 instances, " + std::to_string(ok_count) + " within both bounds",
               ok_count == 100);
    }
    if (suite == "lemma2" || suite == "all") {
        const int m = 20;
        const double t = 2.0;
        for (double c : {10.0, 100.0, 1000.0, 3162.0, 10000.0})
            for (double l : {0.05, 0.1, 0.2, 0.25, 0.5})
                for (double s : {-0.25, -0.5, -1.0, -2.0, -4.0}) {
                    const double gap = verify_lemma2_numeric(c, l, t * c, t, s, m, seed);
                    std::ostringstream line;
                    line << "lemma2: c=" << c << " l=" << l << " s=" << s
                         << " closed-form gap=" << gap;
                    report(line.str(), gap <= 1e-10);
                }
    }
    if (suite == "prop1" || suite == "all") {
        for (int i = 0; i < 10; ++i) {
            const Prop1Result r = verify_proposition1(1000.0, -0.25, 60, seed + i);
            std::ostringstream line;
            line << "prop1: seed=" << seed + i << " n=" << r.n << " l=" << r.adjusted_l;
            report(line.str(), r.ineq1 && r.ineq2);
        }
        const Lemma2Forms f = lemma2_closed_forms(1000.0, 1.0, 20.0, 0.02, -0.25);
        report("prop1: part (3) f1 >= 0.4 and f2 <= 0.94", f.part3_nre >= 0.4 &&
                                                               f.part3_cos <= 0.94);
    }
    if (suite == "regret" || suite == "all") {
        const RegretResult ident =
            regret_check(50, 8, 8, [](const Matrix &m) { return m; }, seed);
        report("regret: identity perturbation, rho=0", ident.rho == 0.0 &&
                                                           ident.regret <= ident.bound);
        QuantConfig q;
        q.precision = Precision::Bits4;
        q.bypass_threshold = 0;
        const RegretResult r = regret_check(200, 8, 8, make_roundtrip_perturbation(q), seed);
        std::ostringstream line;
        line << "regret: 4-bit roundtrip, regret=" << r.regret << " bound=" << r.bound;
        report(line.str(), r.regret <= r.bound);
    }
    std::cout << (failures == 0 ? "all checks passed" : "failures: ") << (failures == 0 ? "" : std::to_string(failures))
              << "\n";
    return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_mem_report(int m, int n, int bits, int block_size, const std::string &out) {
    const MemoryReport r = memory_report(m, n, bits, block_size);
    std::ofstream file;
    open_out(out, file) << memory_report_text(r);
    return kExitOk;
}

int cmd_roundtrip(const std::string &file, uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "shampoo4_roundtrip.ckpt";
    std::string source = file;
    if (source.empty()) {
        // no input: exercise the format on a freshly trained quantized state
        const TrainProblem p = make_quadratic(64, 32, seed);
        RunConfig cfg;
        cfg.bypass_threshold = 0;
        cfg.lr = 0.002;
        cfg.interval1 = 2;
        cfg.interval2 = 4;
        cfg.steps = 8;
        std::vector<ShampooBlockState> blocks = make_run_states(p, cfg);
        run_steps(p, cfg, blocks, 0, cfg.steps);
        Checkpoint ck;
        ck.seed = seed;
        ck.step = cfg.steps;
        ck.blocks = std::move(blocks);
        source = (fs::temp_directory_path() / "shampoo4_roundtrip_src.ckpt").string();
        save_checkpoint(source, ck);
    }
    const Checkpoint loaded = load_checkpoint(source);
    save_checkpoint(tmp.string(), loaded);

    std::ifstream a(source, std::ios::binary), b(tmp.string(), std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    const bool ok = !sa.str().empty() && sa.str() == sb.str();
    std::cout << "checkpoint " << source << ": " << loaded.blocks.size() << " block(s), step "
              << loaded.step << ", roundtrip " << (ok ? "byte-identical" : "MISMATCH") << "\n";
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"block-quantized second-order optimizer toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value config file, keys in [subcommand] sections");
    app.allow_config_extras(false);

    CommonOpts bench_o;
    int bench_order = 512, bench_seeds = 10;
    double bench_cond = 1e4;
    CLI::App *bench = app.add_subcommand("quant-bench", "quantization error sweeps to CSV");
    add_common(bench, bench_o);
    bench->add_option("--order", bench_order, "matrix order");
    bench->add_option("--cond", bench_cond, "condition number of the synthetic matrix");
    bench->add_option("--seeds", bench_seeds, "number of seeded repetitions");

    CommonOpts train_o;
    std::string train_problem = "logistic";
    int train_rows = 256, train_cols = 10, train_samples = 10000, train_batch = 256;
    double train_lr = 0.1;
    bool train_fo_only = false;
    CLI::App *train = app.add_subcommand("train", "run a training problem, emit loss CSV");
    add_common(train, train_o);
    train->add_option("--problem", train_problem, "quadratic, logistic, mlp, or online");
    train->add_option("--rows", train_rows, "parameter rows (feature dim)");
    train->add_option("--cols", train_cols, "parameter cols (classes)");
    train->add_option("--samples", train_samples, "synthetic dataset size");
    train->add_option("--batch", train_batch, "minibatch size");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_flag("--fo-only", train_fo_only, "first-order method alone, no preconditioner");

    std::string verify_suite = "all";
    uint64_t verify_seed = default_seed();
    CLI::App *verify = app.add_subcommand("verify", "bound and oracle suites");
    verify->fallthrough();
    verify->add_option("--suite", verify_suite, "lemma1, lemma2, prop1, regret, or all");
    verify->add_option("--seed", verify_seed, "random seed");

    int mem_m = 1200, mem_n = 768, mem_bits = 4, mem_block = 64;
    std::string mem_out;
    CLI::App *mem = app.add_subcommand("mem-report", "analytic state-byte accounting");
    mem->fallthrough();
    mem->add_option("--m", mem_m, "left factor order");
    mem->add_option("--n", mem_n, "right factor order");
    mem->add_option("--bits", mem_bits, "code width");
    mem->add_option("--block-size", mem_block, "quantization block size");
    mem->add_option("--out", mem_out, "output path");

    std::string rt_file;
    uint64_t rt_seed = default_seed();
    CLI::App *rt = app.add_subcommand("roundtrip", "checkpoint integrity check");
    rt->fallthrough();
    rt->add_option("--file", rt_file, "checkpoint to verify (default: self-test)");
    rt->add_option("--seed", rt_seed, "seed for the self-test checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (bench->parsed()) return cmd_quant_bench(bench_o, bench_order, bench_cond, bench_seeds);
        if (train->parsed())
            return cmd_train(train_o, train_problem, train_rows, train_cols, train_samples,
                             train_batch, train_lr, train_fo_only);
        if (verify->parsed()) return cmd_verify(verify_suite, verify_seed);
        if (mem->parsed()) return cmd_mem_report(mem_m, mem_n, mem_bits, mem_block, mem_out);
        if (rt->parsed()) return cmd_roundtrip(rt_file, rt_seed);
    } catch (const std::invalid_argument &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
