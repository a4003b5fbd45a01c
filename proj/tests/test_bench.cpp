#include "oracles.hpp"
#include "rtucker/bench.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rtucker;

namespace {

TuckerConfig config(MultilinearRank r, Index p = 0, Index q = 0, std::uint64_t seed = 1) {
    TuckerConfig c;
    c.rank = std::move(r);
    c.sketch.oversampling = p;
    c.sketch.power_iterations = q;
    c.sketch.seed = seed;
    return c;
}

Index matrix_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    svd.setThreshold(1e-10);
    return svd.rank();
}

}  // namespace

TEST(GenLowRank, SeedDeterministicWithExactRank) {
    const Shape dims{30, 30, 30};
    const MultilinearRank r({3, 4, 2});
    const DenseTensor a = gen_low_rank(dims, r, 7), b = gen_low_rank(dims, r, 7), c = gen_low_rank(dims, r, 8);
    EXPECT_EQ(a.shape(), dims);
    EXPECT_EQ(a.vec(), b.vec());
    EXPECT_NE(a.vec(), c.vec());
    EXPECT_LE(thosvd(a, config(r)).report.relative_error, 1e-12);
    for (Index n = 0; n < 3; ++n) EXPECT_EQ(matrix_rank(unfold(a, n)), r[n]);
}

TEST(GenLowRank, FullRankWhenRankEqualsDims) {
    const DenseTensor t = gen_low_rank(Shape{5, 4, 3}, MultilinearRank({5, 4, 3}), 1);
    for (Index n = 0; n < 3; ++n) EXPECT_EQ(matrix_rank(unfold(t, n)), t.dim(n));
}

TEST(AddNoise, InfiniteSnrPassesThrough) {
    const DenseTensor t = gen_low_rank(Shape{6, 5, 4}, MultilinearRank({2, 2, 2}), 3);
    const auto y = add_noise(t, std::numeric_limits<double>::infinity(), 1);
    EXPECT_EQ(y.tensor.vec(), t.vec());
    EXPECT_EQ(y.gamma, 0.0);
}

TEST(AddNoise, NoiseNormFollowsRequestedSnr) {
    const DenseTensor t = gen_low_rank(Shape{12, 10, 8}, MultilinearRank({3, 3, 3}), 4);
    const double tn = frobenius_norm(t);
    // ‖γN‖ = ‖t‖ · 10^(−snr/20): 1 at 0 dB, 0.1 at 20 dB
    for (auto [snr, ratio] : {std::pair{0.0, 1.0}, std::pair{20.0, 0.1}}) {
        const auto y = add_noise(t, snr, 5);
        EXPECT_NEAR((y.tensor.vec() - t.vec()).norm() / tn, ratio, 1e-9 * ratio);
        EXPECT_NEAR(y.realized_snr_db, snr, 1e-9);
    }
}

TEST(AddNoise, RealizedSnrAcrossSeeds) {
    const DenseTensor t = gen_function(Shape{9, 9, 9});
    for (std::uint64_t s = 0; s < 20; ++s) {
        const double snr = -10.0 + 3.0 * static_cast<double>(s);
        const auto y = add_noise(t, snr, s);
        const double measured = 20.0 * std::log10(frobenius_norm(t) / (y.tensor.vec() - t.vec()).norm());
        EXPECT_NEAR(measured, snr, 1e-9);
    }
}

TEST(AddNoise, RejectsZeroTensorAndNan) {
    EXPECT_THROW((void)add_noise(DenseTensor(Shape{3, 3}), 10.0, 0), std::invalid_argument);
    EXPECT_THROW((void)add_noise(gen_hilbert(Shape{3, 3}), std::nan(""), 0), std::invalid_argument);
}

TEST(GenFunction, CornerValueAndSymmetry) {
    const DenseTensor t = gen_function(Shape{6, 6, 6});
    EXPECT_NEAR(t.at({0, 0, 0}), 0.802741561760230682, 1e-15);
    EXPECT_EQ(t.at({1, 3, 5}), t.at({5, 1, 3}));
    EXPECT_EQ(t.at({1, 3, 5}), t.at({3, 5, 1}));
    EXPECT_EQ(t.at({2, 0, 4}), t.at({0, 4, 2}));
}

TEST(GenHilbert, MatchesClassicalHilbertMatrix) {
    const DenseTensor h = gen_hilbert(Shape{5, 7});
    for (Index i = 1; i <= 5; ++i)
        for (Index j = 1; j <= 7; ++j) EXPECT_EQ(h.at({i - 1, j - 1}), 1.0 / static_cast<double>(i + j - 1));
    const DenseTensor t = gen_hilbert(Shape{4, 5, 6, 3});
    EXPECT_EQ(t.at({0, 0, 0, 0}), 1.0);
    EXPECT_EQ(t.at({1, 2, 3, 0}), t.at({3, 0, 2, 1}));
    EXPECT_DOUBLE_EQ(t.at({3, 4, 5, 2}), 1.0 / 15.0);
}

TEST(GenSparseCp, FullDensityGivesDenseCpTensor) {
    const Shape dims{10, 9, 8};
    const auto t = gen_sparse_cp(dims, 10.0, 1.0, 11, {2, 1});
    EXPECT_EQ(t.nnz(), dims.numel());
    const DenseTensor d = t.to_dense();
    for (Index n = 0; n < 3; ++n) EXPECT_EQ(matrix_rank(unfold(d, n)), 2);
    EXPECT_EQ(gen_sparse_cp(Shape{8, 8, 8}, 1000.0, 1.0, 12).nnz(), 512);
}

TEST(GenSparseCp, NonzeroCountWithinBinomialBound) {
    // order one with a single term: the tensor is the component vector itself
    const double dim = 10000.0, s = 0.05;
    const double mean = s * dim, sd = std::sqrt(dim * s * (1.0 - s));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto t = gen_sparse_cp(Shape{10000}, 1.0, s, seed, {1, 1});
        EXPECT_LE(std::abs(static_cast<double>(t.nnz()) - mean), 5.0 * sd);
    }
}

TEST(GenSparseCp, SeedDeterministicAndValidated) {
    const auto a = gen_sparse_cp(Shape{20, 20, 20}, 1000.0, 0.2, 4);
    const auto b = gen_sparse_cp(Shape{20, 20, 20}, 1000.0, 0.2, 4);
    EXPECT_EQ(a.to_dense().vec(), b.to_dense().vec());
    EXPECT_THROW((void)gen_sparse_cp(Shape{4, 4, 4}, 1.0, 0.0, 0), std::invalid_argument);
    EXPECT_THROW((void)gen_sparse_cp(Shape{4, 4, 4}, 1.0, 1.5, 0), std::invalid_argument);
}

TEST(GenSparseCp, RandomizedSthosvdOnLargeSparseTensor) {
    const DenseTensor t = gen_sparse_cp(Shape{200, 200, 200}, 1000.0, 0.05, 21).to_dense();
    const MultilinearRank r({15, 15, 15});
    const double det = sthosvd(t, config(r)).report.relative_error;
    const double rnd = r_sthosvd(t, config(r, 10, 2, 21)).report.relative_error;
    RecordProperty("sthosvd", std::to_string(det));
    RecordProperty("r_sthosvd", std::to_string(rnd));
    EXPECT_LE(rnd, 1e-3);
    // sequential truncation is not optimal, so the sketched run may land on either side
    EXPECT_LE(std::abs(rnd - det), 0.01 * det);
}

TEST(Metrics, CompressionRatioSpotValue) {
    // (10³ + (2200 + 1080 + 1980)·10) / (2200·1080·1980) = 53600 / 4704480000
    const double v = compression_ratio_inv(Shape{2200, 1080, 1980}, MultilinearRank({10, 10, 10}));
    EXPECT_NEAR(v, 1.13933952317790701629e-05, 1e-9 * v);
    EXPECT_THROW((void)compression_ratio_inv(Shape{3, 3}, MultilinearRank({1, 1, 1})), dimension_error);
}

TEST(Metrics, ExactAndZeroModels) {
    const DenseTensor t = gen_low_rank(Shape{8, 7, 6}, MultilinearRank({2, 3, 2}), 2);
    const auto exact = thosvd(t, config(MultilinearRank({2, 3, 2}))).model;
    const Metrics m = evaluate(t, exact);
    EXPECT_LE(m.relative_error, 1e-13);
    EXPECT_DOUBLE_EQ(m.fit, 1.0 - m.relative_error);
    TuckerModel zero = exact;
    zero.core.vec().setZero();
    EXPECT_DOUBLE_EQ(evaluate(t, zero).relative_error, 1.0);
    EXPECT_THROW((void)evaluate(DenseTensor(t.shape()), exact), std::invalid_argument);
}

TEST(Csv, HeaderAndFullPrecision) {
    MetricsRow r;
    r.algo = "r-sthosvd";
    r.trial = "3";
    r.relative_error = 0.1;
    r.fit = 1.0 / 3.0;
    r.wall_time_s = 2.5;
    r.compression_ratio_inv = 1e-5;
    r.passes = 3;
    std::ostringstream os;
    os << std::setprecision(3);
    write_csv(os, {r});
    EXPECT_EQ(os.str(), std::string(kCsvHeader) +
                            "\nr-sthosvd,3,0.10000000000000001,0.33333333333333331,2.5,1.0000000000000001e-05,3\n");
    EXPECT_EQ(os.precision(), 3);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(std::stod(line.substr(line.find(',', line.find(',') + 1) + 1)), 0.1);
}

TEST(Csv, SummaryMeanAndSampleStd) {
    std::vector<MetricsRow> rows;
    for (double e : {1.0, 2.0, 4.0}) {
        MetricsRow r;
        r.algo = "hooi";
        r.relative_error = e;
        rows.push_back(r);
    }
    MetricsRow other;
    other.algo = "thosvd";
    other.relative_error = 5.0;
    rows.push_back(other);
    const auto s = summarize(rows);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].trial, "mean");
    EXPECT_DOUBLE_EQ(s[0].relative_error, 7.0 / 3.0);
    EXPECT_EQ(s[1].trial, "std");
    EXPECT_NEAR(s[1].relative_error, std::sqrt(7.0 / 3.0), 1e-15);
    EXPECT_EQ(s[3].algo, "thosvd");
    EXPECT_EQ(s[3].relative_error, 0.0);
}

TEST(RunExperiment, TenTrialsPlusSummary) {
    ExperimentSpec spec;
    spec.dims = Shape{30, 30, 30};
    spec.tucker = config(MultilinearRank({3, 4, 2}));
    spec.algos = {TuckerAlgorithm::r_sthosvd, TuckerAlgorithm::sthosvd};
    spec.trials = 10;
    spec.seed = 100;
    const auto rows = run_experiment(spec);
    ASSERT_EQ(rows.size(), 20u);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(rows[k].trial, std::to_string(k / 2));
        EXPECT_LE(rows[k].relative_error, 1e-9);
        EXPECT_GE(rows[k].wall_time_s, 0.0);
        EXPECT_DOUBLE_EQ(rows[k].compression_ratio_inv, compression_ratio_inv(spec.dims, spec.tucker.rank));
    }
    EXPECT_EQ(rows[0].algo, "r-sthosvd");
    EXPECT_EQ(rows[1].algo, "sthosvd");
    std::vector<MetricsRow> all = rows;
    for (auto& s : summarize(rows)) all.push_back(s);
    std::ostringstream os;
    write_csv(os, all);
    const std::string csv = os.str();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 20 + 4);
}

TEST(RunExperiment, TrialSeedsAreIndependentOfAlgorithms) {
    ExperimentSpec spec;
    spec.dims = Shape{10, 10, 10};
    spec.tucker = config(MultilinearRank({2, 2, 2}));
    spec.noise_snr_db = 20.0;
    spec.trials = 2;
    spec.seed = 5;
    EXPECT_EQ(make_tensor(spec, 6).vec(), make_tensor(spec, 6).vec());
    spec.algos = {TuckerAlgorithm::thosvd};
    const auto one = run_experiment(spec);
    spec.algos = {TuckerAlgorithm::hooi, TuckerAlgorithm::thosvd};
    const auto two = run_experiment(spec);
    EXPECT_EQ(one[1].relative_error, two[3].relative_error);
}

TEST(RunExperiment, RejectsBadSpec) {
    ExperimentSpec spec;
    spec.trials = 0;
    EXPECT_THROW((void)run_experiment(spec), std::invalid_argument);
    spec.trials = 1;
    spec.algos.clear();
    EXPECT_THROW((void)run_experiment(spec), std::invalid_argument);
}
