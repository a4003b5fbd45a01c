#pragma once

// Synthetic tensors, noise injection, metrics and the CSV experiment runner.

#include "rtucker/algorithms.hpp"
#include "rtucker/cpd.hpp"
#include "rtucker/io.hpp"

#include <iomanip>
#include <ostream>

namespace rtucker {

// ---------------------------------------------------------------------------
// Generators

/// ⟦S; Q^(1), ..., Q^(N)⟧ with Gaussian core and factors.
[[nodiscard]] inline DenseTensor gen_low_rank(const Shape& dims, const MultilinearRank& rank, std::uint64_t seed) {
    rank.check_against(dims);
    RandomStream root(seed);
    TuckerModel m;
    m.core = root.split(1).tensor(Shape(rank.ranks));
    for (Index n = 0; n < dims.order(); ++n)
        m.factors.push_back(root.split(2, static_cast<std::uint64_t>(n)).matrix(dims[n], rank[n]));
    return tucker_reconstruct(m);
}

struct NoisyTensor {
    DenseTensor tensor;
    double gamma = 0.0;
    double realized_snr_db = std::numeric_limits<double>::infinity();
};

/// Y = X + γN with Gaussian N and γ = ‖X‖/(‖N‖·10^(snr/20)). An infinite SNR leaves X unchanged.
[[nodiscard]] inline NoisyTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw std::invalid_argument("add_noise: SNR must be a number or +inf");
    if (std::isinf(snr_db)) return {t, 0.0, snr_db};
    const double xn = frobenius_norm(t);
    if (xn == 0.0) throw std::invalid_argument("add_noise: tensor is zero");
    const DenseTensor noise = RandomStream(seed).split(3).tensor(t.shape());
    const double nn = frobenius_norm(noise);
    NoisyTensor out;
    out.gamma = xn / (nn * std::pow(10.0, snr_db / 20.0));
    out.tensor = DenseTensor(t.shape());
    out.tensor.vec() = t.vec() + out.gamma * noise.vec();
    out.realized_snr_db = 20.0 * std::log10(xn / (out.gamma * nn));
    return out;
}

/// x(i_1..i_N) = (Σ i_k⁵)^(−1/5), 1-based indices.
[[nodiscard]] inline DenseTensor gen_function(const Shape& dims) {
    DenseTensor t(dims);
    t.for_each_index([](std::span<const Index> idx, double& v) {
        double s = 0.0;
        for (Index i : idx) s += std::pow(static_cast<double>(i + 1), 5.0);
        v = std::pow(s, -0.2);
    });
    return t;
}

/// x(i_1..i_N) = 1/(i_1 + ... + i_N − N + 1), 1-based indices.
[[nodiscard]] inline DenseTensor gen_hilbert(const Shape& dims) {
    DenseTensor t(dims);
    t.for_each_index([](std::span<const Index> idx, double& v) {
        Index s = 0;
        for (Index i : idx) s += i;  // 0-based sum equals Σ i_k − N
        v = 1.0 / static_cast<double>(s + 1);
    });
    return t;
}

struct SparseCpOptions {
    Index terms = 200;
    Index leading = 10;  // terms weighted γ/i² instead of 1/i²
};

/// Σ_{i≤leading} (γ/i²) x_i∘y_i∘z_i + Σ_{i>leading} (1/i²) x_i∘y_i∘z_i with sparse
/// Gaussian vectors (each entry nonzero with probability `sparsity`). Only products
/// of nonzero entries are accumulated.
[[nodiscard]] inline SparseTensorCoo gen_sparse_cp(const Shape& dims, double gamma, double sparsity, std::uint64_t seed,
                                                   SparseCpOptions opts = {}) {
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw std::invalid_argument("gen_sparse_cp: sparsity must be in (0, 1]");
    const Index order = dims.order();
    RandomStream root(seed);
    SparseTensorCoo out(dims);
    std::vector<Index> idx(static_cast<std::size_t>(order));
    for (Index term = 1; term <= opts.terms; ++term) {
        const double w = (term <= opts.leading ? gamma : 1.0) / static_cast<double>(term * term);
        std::vector<std::vector<std::pair<Index, double>>> nz(static_cast<std::size_t>(order));
        for (Index n = 0; n < order; ++n) {
            RandomStream s = root.split(static_cast<std::uint64_t>(term), static_cast<std::uint64_t>(n));
            for (Index i = 0; i < dims[n]; ++i) {
                const double u = s.uniform();
                const double g = s.gaussian();
                if (u < sparsity) nz[static_cast<std::size_t>(n)].emplace_back(i, g);
            }
        }
        bool empty = false;
        for (const auto& v : nz) empty |= v.empty();
        if (empty) continue;
        std::vector<std::size_t> pos(static_cast<std::size_t>(order), 0);
        for (;;) {
            double v = w;
            for (Index n = 0; n < order; ++n) {
                const auto& e = nz[static_cast<std::size_t>(n)][pos[static_cast<std::size_t>(n)]];
                idx[static_cast<std::size_t>(n)] = e.first;
                v *= e.second;
            }
            out.push(idx, v);
            Index n = 0;
            for (; n < order; ++n) {
                auto& p = pos[static_cast<std::size_t>(n)];
                if (++p < nz[static_cast<std::size_t>(n)].size()) break;
                p = 0;
            }
            if (n == order) break;
        }
    }
    out.canonicalize();
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

/// (Π R_n + Σ I_n R_n) / Π I_n.
[[nodiscard]] inline double compression_ratio_inv(const Shape& dims, const MultilinearRank& rank) {
    if (rank.order() != dims.order()) throw dimension_error("compression: rank length differs from order");
    double core = 1.0, factors = 0.0, full = 1.0;
    for (Index n = 0; n < dims.order(); ++n) {
        core *= static_cast<double>(rank[n]);
        factors += static_cast<double>(dims[n]) * static_cast<double>(rank[n]);
        full *= static_cast<double>(dims[n]);
    }
    return (core + factors) / full;
}

struct Metrics {
    double relative_error = 0.0;
    double fit = 1.0;
    double compression_ratio_inv = 0.0;
};

[[nodiscard]] inline Metrics evaluate(const DenseTensor& t, const TuckerModel& model) {
    if (frobenius_norm(t) == 0.0) throw std::invalid_argument("evaluate: tensor has zero norm");
    Metrics m;
    m.relative_error = relative_error(t, model);
    m.fit = 1.0 - m.relative_error;
    m.compression_ratio_inv = compression_ratio_inv(t.shape(), model.rank());
    return m;
}

// ---------------------------------------------------------------------------
// Experiments and CSV

enum class Generator { low_rank, function_based, sparse_cp, hilbert, file };

struct ExperimentSpec {
    Generator generator = Generator::low_rank;
    Shape dims{100, 100, 100};
    MultilinearRank gen_rank;  // low_rank generator; defaults to the decomposition rank
    double gamma = 1000.0;     // sparse_cp
    double sparsity = 0.05;    // sparse_cp
    std::string input;         // file generator
    std::optional<double> noise_snr_db;
    std::vector<TuckerAlgorithm> algos{TuckerAlgorithm::r_sthosvd};
    TuckerConfig tucker;
    Index trials = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (noise_snr_db && std::isnan(*noise_snr_db)) throw std::invalid_argument("snr must be finite");
        if (algos.empty()) throw std::invalid_argument("no algorithm selected");
    }
};

struct MetricsRow {
    std::string algo;
    std::string trial;  // trial index, or "mean" / "std" in the summary
    double relative_error = 0.0;
    double fit = 1.0;
    double wall_time_s = 0.0;
    double compression_ratio_inv = 0.0;
    double passes = 0.0;
};

inline constexpr std::string_view kCsvHeader = "algo,trial,relative_error,fit,wall_time_s,compression_ratio_inv,passes";

inline void write_csv_row(std::ostream& os, const MetricsRow& r) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17) << r.algo << ',' << r.trial << ',' << r.relative_error << ',' << r.fit << ','
       << r.wall_time_s << ',' << r.compression_ratio_inv << ',' << r.passes << '\n';
    os.flags(flags);
    os.precision(prec);
}

inline void write_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) write_csv_row(os, r);
}

/// Mean and sample standard deviation rows for each algorithm (trial rows are left untouched).
[[nodiscard]] inline std::vector<MetricsRow> summarize(const std::vector<MetricsRow>& rows) {
    std::vector<std::string> algos;
    for (const auto& r : rows)
        if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
    std::vector<MetricsRow> out;
    for (const auto& a : algos) {
        std::vector<const MetricsRow*> sel;
        for (const auto& r : rows)
            if (r.algo == a) sel.push_back(&r);
        const double k = static_cast<double>(sel.size());
        auto stat = [&](auto field, bool sd) {
            double mean = 0.0;
            for (auto* r : sel) mean += field(*r);
            mean /= k;
            if (!sd) return mean;
            double v = 0.0;
            for (auto* r : sel) v += (field(*r) - mean) * (field(*r) - mean);
            return sel.size() > 1 ? std::sqrt(v / (k - 1.0)) : 0.0;
        };
        for (bool sd : {false, true}) {
            MetricsRow m;
            m.algo = a;
            m.trial = sd ? "std" : "mean";
            m.relative_error = stat([](const MetricsRow& r) { return r.relative_error; }, sd);
            m.fit = stat([](const MetricsRow& r) { return r.fit; }, sd);
            m.wall_time_s = stat([](const MetricsRow& r) { return r.wall_time_s; }, sd);
            m.compression_ratio_inv = stat([](const MetricsRow& r) { return r.compression_ratio_inv; }, sd);
            m.passes = stat([](const MetricsRow& r) { return r.passes; }, sd);
            out.push_back(m);
        }
    }
    return out;
}

/// Builds the data tensor for one trial (seed = base seed + trial index).
[[nodiscard]] inline DenseTensor make_tensor(const ExperimentSpec& spec, std::uint64_t seed) {
    DenseTensor t;
    switch (spec.generator) {
        case Generator::low_rank:
            t = gen_low_rank(spec.dims, spec.gen_rank.order() ? spec.gen_rank : spec.tucker.rank, seed);
            break;
        case Generator::function_based: t = gen_function(spec.dims); break;
        case Generator::hilbert: t = gen_hilbert(spec.dims); break;
        case Generator::sparse_cp: t = gen_sparse_cp(spec.dims, spec.gamma, spec.sparsity, seed).to_dense(); break;
        case Generator::file: {
            const auto& p = spec.input;
            if (p.size() >= 4 && p.substr(p.size() - 4) == ".tns") t = io::load_tns(p).to_dense();
            else t = io::load_dts(p);
            break;
        }
    }
    if (spec.noise_snr_db) t = add_noise(t, *spec.noise_snr_db, seed ^ 0x6E6F697365ULL).tensor;
    return t;
}

/// Runs every algorithm on every trial. Rows come back in (trial, algorithm) order.
[[nodiscard]] inline std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<MetricsRow> rows;
    for (Index trial = 0; trial < spec.trials; ++trial) {
        const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(trial);
        const DenseTensor t = make_tensor(spec, seed);
        for (auto algo : spec.algos) {
            TuckerConfig cfg = spec.tucker;
            cfg.sketch.seed = seed;
            const auto res = decompose(t, algo, cfg);
            MetricsRow r;
            r.algo = std::string(algorithm_name(algo));
            r.trial = std::to_string(trial);
            r.relative_error = res.report.relative_error;
            r.fit = res.report.fit;
            r.wall_time_s = res.report.wall_time;
            r.compression_ratio_inv = compression_ratio_inv(t.shape(), cfg.rank);
            r.passes = static_cast<double>(res.report.passes_over_data);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace rtucker
