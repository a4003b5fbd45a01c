// rtucker: generate tensors, run Tucker / CP decompositions, write CSV metrics.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include "rtucker/rtucker.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace rtucker;

namespace {

struct numerical_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    // data
    std::string generator = "low-rank";
    std::vector<Index> dims{100, 100, 100};
    std::vector<Index> gen_rank;
    double gamma = 1000.0;
    double sparsity = 0.05;
    std::optional<double> snr_db;
    std::string input;
    // algorithm
    std::vector<std::string> algos{"r-sthosvd"};
    std::vector<Index> rank;
    Index cp_rank = 0;
    std::string tucker_algo = "r-sthosvd";
    std::uint64_t seed = 0;
    std::optional<Index> oversampling;
    std::optional<Index> power;
    std::vector<Index> pet_k, pet_s;
    std::string dist = "uniform";
    bool replacement = false;
    std::vector<Index> mode_order;  // 1-based on the command line
    Index trials = 10;
    std::string output;
    std::string metrics;
};

void add_data_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--generator", o.generator, "low-rank | function | hilbert | sparse-cp")
        ->check(CLI::IsMember({"low-rank", "function", "hilbert", "sparse-cp"}));
    cmd->add_option("--dims", o.dims, "tensor dimensions I1,...,IN")->delimiter(',');
    cmd->add_option("--gen-rank", o.gen_rank, "multilinear rank of the low-rank generator (default: --rank)")
        ->delimiter(',');
    cmd->add_option("--gamma", o.gamma, "leading-term weight of the sparse generator");
    cmd->add_option("--sparsity", o.sparsity, "nonzero probability of sparse component vectors");
    cmd->add_option("--snr-db", o.snr_db, "add Gaussian noise at this SNR (dB)");
}

void add_algo_options(CLI::App* cmd, Options& o, bool many) {
    auto* a = cmd->add_option("--algo", o.algos,
                              "thosvd, sthosvd, hooi, rp-hosvd, rp-hooi, r-sthosvd, r-pet, r-st, r-hoid, r-lshooi" +
                                  std::string(many ? " (comma separated)" : ", cp-accel"));
    if (many) a->delimiter(',');
    else a->expected(1);
    cmd->add_option("--rank", o.rank, "target multilinear rank R1,...,RN")->delimiter(',')->required();
    cmd->add_option("--seed", o.seed, "base random seed");
    cmd->add_option("--oversampling", o.oversampling, "oversampling p (default 0 on noiseless low-rank data, else 10)");
    cmd->add_option("--power", o.power, "power iterations q (default 0 on noiseless low-rank data, else 2)");
    cmd->add_option("--pet-k", o.pet_k, "R-PET range sketch sizes K_n (default 2 R_n)")->delimiter(',');
    cmd->add_option("--pet-s", o.pet_s, "R-PET core sketch sizes S_n (default 2 K_n + 1)")->delimiter(',');
    cmd->add_option("--dist", o.dist, "fiber sampling distribution")->check(CLI::IsMember({"uniform", "length-squared"}));
    cmd->add_flag("--replacement", o.replacement, "sample fibers with replacement");
    cmd->add_option("--mode-order", o.mode_order, "STHOSVD mode order, 1-based (default ascending)")->delimiter(',');
}

bool noiseless_low_rank(const Options& o) { return o.input.empty() && o.generator == "low-rank" && !o.snr_db; }

TuckerConfig make_config(const Options& o) {
    TuckerConfig c;
    c.rank = MultilinearRank(o.rank);
    const bool exact = noiseless_low_rank(o);
    c.sketch.oversampling = o.oversampling.value_or(exact ? 0 : 10);
    c.sketch.power_iterations = o.power.value_or(exact ? 0 : 2);
    c.sketch.seed = o.seed;
    c.pet_k = o.pet_k;
    c.pet_s = o.pet_s;
    c.sample_distribution = o.dist == "uniform" ? SampleDistribution::uniform : SampleDistribution::length_squared;
    c.sample_replacement = o.replacement;
    for (Index m : o.mode_order) c.mode_order.push_back(m - 1);
    return c;
}

TuckerAlgorithm algorithm(const std::string& name) {
    const auto a = parse_algorithm(name);
    if (!a) throw std::invalid_argument("unknown algorithm '" + name + "'");
    return *a;
}

std::vector<TuckerAlgorithm> algorithms(const Options& o) {
    std::vector<TuckerAlgorithm> out;
    for (const auto& s : o.algos) out.push_back(algorithm(s));
    return out;
}

bool is_tns(const std::string& p) { return p.size() >= 4 && p.substr(p.size() - 4) == ".tns"; }

ExperimentSpec make_spec(const Options& o) {
    ExperimentSpec s;
    if (!o.input.empty()) s.generator = Generator::file;
    else if (o.generator == "function") s.generator = Generator::function_based;
    else if (o.generator == "hilbert") s.generator = Generator::hilbert;
    else if (o.generator == "sparse-cp") s.generator = Generator::sparse_cp;
    s.input = o.input;
    s.dims = Shape(o.dims);
    if (!o.gen_rank.empty()) s.gen_rank = MultilinearRank(o.gen_rank);
    s.gamma = o.gamma;
    s.sparsity = o.sparsity;
    s.noise_snr_db = o.snr_db;
    s.algos = algorithms(o);
    s.tucker = make_config(o);
    s.trials = o.trials;
    s.seed = o.seed;
    return s;
}

void check_finite(const TuckerResult& r) {
    bool ok = std::isfinite(r.report.relative_error) && r.model.core.vec().allFinite();
    for (const auto& f : r.model.factors) ok = ok && f.allFinite();
    if (!ok) throw numerical_failure("decomposition produced non-finite values");
}

void warn(const std::vector<std::string>& w) {
    for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

std::ostream& open_csv(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw io::format_error("cannot open " + path + " for writing");
    return file;
}

// ---------------------------------------------------------------------------

int run_generate(const Options& o) {
    if (o.output.empty()) throw std::invalid_argument("generate: --output is required");
    ExperimentSpec s = make_spec(o);
    if (o.generator == "sparse-cp" && is_tns(o.output) && !o.snr_db) {
        io::save_tns(o.output, gen_sparse_cp(s.dims, o.gamma, o.sparsity, o.seed));
        return 0;
    }
    if (is_tns(o.output)) throw std::invalid_argument("generate: .tns output is only available for noiseless sparse-cp");
    if (s.generator == Generator::low_rank && !s.gen_rank.order()) {
        if (o.rank.empty()) throw std::invalid_argument("generate: low-rank generator needs --gen-rank");
        s.gen_rank = MultilinearRank(o.rank);
    }
    s.noise_snr_db.reset();
    DenseTensor t = make_tensor(s, o.seed);
    if (o.snr_db) {
        const auto noisy = add_noise(t, *o.snr_db, o.seed ^ 0x6E6F697365ULL);
        std::cerr << "realized snr " << noisy.realized_snr_db << " dB, gamma " << noisy.gamma << '\n';
        t = noisy.tensor;
    }
    io::save_dts(o.output, t);
    return 0;
}

int run_decompose(const Options& o) {
    if (o.input.empty()) throw std::invalid_argument("decompose: --input is required");
    const std::string algo_name = o.algos.empty() ? "r-sthosvd" : o.algos.front();
    const TuckerConfig cfg = make_config(o);
    const std::string prefix = o.output.empty() ? "rtucker_out" : o.output;
    std::ofstream file;
    std::ostream& csv = open_csv(o.metrics, file);

    if (algo_name == "cp-accel") {
        if (o.cp_rank < 1) throw std::invalid_argument("decompose: cp-accel needs --cp-rank");
        const DenseTensor t = is_tns(o.input) ? io::load_tns(o.input).to_dense() : io::load_dts(o.input);
        const auto res = tucker_then_cp(t, algorithm(o.tucker_algo), cfg, o.cp_rank);
        warn(res.tucker.report.warnings);
        warn(res.cp.warnings);
        const DenseTensor approx = cp_reconstruct(res.cp.model);
        const double err = (approx.vec() - t.vec()).norm() / frobenius_norm(t);
        if (!std::isfinite(err)) throw numerical_failure("cp-accel produced non-finite values");
        const Vector& w = res.cp.model.weights;
        io::save_dts(prefix + ".weights.dts", DenseTensor(Shape{w.size()}, std::vector<double>(w.data(), w.data() + w.size())));
        for (std::size_t n = 0; n < res.cp.model.factors.size(); ++n) {
            const Matrix& f = res.cp.model.factors[n];
            io::save_dts(prefix + ".factor" + std::to_string(n + 1) + ".dts",
                         DenseTensor(Shape{f.rows(), f.cols()}, std::vector<double>(f.data(), f.data() + f.size())));
        }
        MetricsRow row{"cp-accel", "0", err, 1.0 - err, res.tucker.report.wall_time, 0.0,
                       static_cast<double>(res.tucker.report.passes_over_data)};
        row.compression_ratio_inv = compression_ratio_inv(t.shape(), cfg.rank);
        write_csv(csv, {row});
        return 0;
    }

    const TuckerAlgorithm algo = algorithm(algo_name);
    TuckerResult res;
    if (is_tns(o.input)) {
        const SparseTensorCoo sp = io::load_tns(o.input);
        if (algo == TuckerAlgorithm::r_sthosvd) res = r_sthosvd(sp, cfg);
        else if (algo == TuckerAlgorithm::r_st) res = r_st(sp, cfg);
        else res = decompose(sp.to_dense(), algo, cfg);
    } else {
        res = decompose(io::load_dts(o.input), algo, cfg);
    }
    warn(res.report.warnings);
    check_finite(res);
    io::save_dts(prefix + ".core.dts", res.model.core);
    for (std::size_t n = 0; n < res.model.factors.size(); ++n) {
        const Matrix& f = res.model.factors[n];
        io::save_dts(prefix + ".factor" + std::to_string(n + 1) + ".dts",
                     DenseTensor(Shape{f.rows(), f.cols()}, std::vector<double>(f.data(), f.data() + f.size())));
    }
    std::vector<Index> dims;
    for (const auto& f : res.model.factors) dims.push_back(f.rows());
    MetricsRow row{std::string(algorithm_name(algo)), "0", res.report.relative_error, res.report.fit,
                   res.report.wall_time, compression_ratio_inv(Shape(dims), cfg.rank),
                   static_cast<double>(res.report.passes_over_data)};
    write_csv(csv, {row});
    return 0;
}

int run_eval(const Options& o) {
    ExperimentSpec s = make_spec(o);
    s.trials = 1;
    std::ofstream file;
    std::ostream& csv = open_csv(o.output, file);
    const auto rows = run_experiment(s);
    for (const auto& r : rows)
        if (!std::isfinite(r.relative_error)) throw numerical_failure(r.algo + " produced a non-finite error");
    write_csv(csv, rows);
    return 0;
}

int run_bench(const Options& o) {
    const ExperimentSpec s = make_spec(o);
    std::ofstream file;
    std::ostream& csv = open_csv(o.output, file);
    auto rows = run_experiment(s);
    for (const auto& r : rows)
        if (!std::isfinite(r.relative_error)) throw numerical_failure(r.algo + " produced a non-finite error");
    for (auto& r : summarize(rows)) rows.push_back(std::move(r));
    write_csv(csv, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized Tucker decompositions"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("generate", "write a synthetic tensor to .dts (or .tns for sparse-cp)");
    add_data_options(gen, o);
    gen->add_option("--rank", o.rank, "rank of the low-rank generator")->delimiter(',');
    gen->add_option("--seed", o.seed, "random seed");
    gen->add_option("--output", o.output, "output file")->required();

    auto* dec = app.add_subcommand("decompose", "decompose a tensor file and write the model as .dts files");
    add_algo_options(dec, o, false);
    dec->add_option("--input", o.input, "input tensor (.dts or .tns)")->required()->check(CLI::ExistingFile);
    dec->add_option("--cp-rank", o.cp_rank, "CP rank for cp-accel");
    dec->add_option("--tucker-algo", o.tucker_algo, "compression algorithm for cp-accel");
    dec->add_option("--output", o.output, "output prefix for <prefix>.core.dts and <prefix>.factorN.dts");
    dec->add_option("--metrics", o.metrics, "metrics CSV file (default stdout)");

    auto* ev = app.add_subcommand("eval", "run several algorithms on one tensor and emit one CSV row each");
    add_data_options(ev, o);
    add_algo_options(ev, o, true);
    ev->add_option("--input", o.input, "input tensor (.dts or .tns) instead of a generator")->check(CLI::ExistingFile);
    ev->add_option("--output", o.output, "CSV file (default stdout)");

    auto* bench = app.add_subcommand("bench", "Monte Carlo trials with per-trial rows plus mean/std");
    add_data_options(bench, o);
    add_algo_options(bench, o, true);
    bench->add_option("--input", o.input, "input tensor (.dts or .tns) instead of a generator")->check(CLI::ExistingFile);
    bench->add_option("--trials", o.trials, "number of trials")->check(CLI::PositiveNumber);
    bench->add_option("--output", o.output, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*gen) return run_generate(o);
        if (*dec) return run_decompose(o);
        if (*ev) return run_eval(o);
        return run_bench(o);
    } catch (const numerical_failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const io::format_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
