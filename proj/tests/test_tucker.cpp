#include "oracles.hpp"
#include "rtucker/algorithms.hpp"

#include <gtest/gtest.h>

using namespace rtucker;

namespace {

// S ×_1 Q1 ×_2 Q2 ×_3 Q3 built with the reference mode product.
DenseTensor synthetic(oracle::Rng& rng, const oracle::Dims& dims, const oracle::Dims& ranks, double noise = 0.0) {
    auto x = rng.tensor(ranks);
    for (std::size_t n = 0; n < dims.size(); ++n)
        x = oracle::mode_product(x, rng.matrix(dims[n], ranks[n]), static_cast<long>(n) + 1);
    if (noise > 0.0) {
        const auto e = rng.tensor(dims);
        double xn = 0.0, en = 0.0;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            xn += x.data[i] * x.data[i];
            en += e.data[i] * e.data[i];
        }
        const double g = noise * std::sqrt(xn / en);
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += g * e.data[i];
    }
    return DenseTensor(Shape(std::vector<Index>(dims.begin(), dims.end())), x.data);
}

TuckerConfig config(MultilinearRank r, Index p = 0, Index q = 0, std::uint64_t seed = 1) {
    TuckerConfig c;
    c.rank = std::move(r);
    c.sketch.oversampling = p;
    c.sketch.power_iterations = q;
    c.sketch.seed = seed;
    return c;
}

double min_sv_ratio(const Matrix& m) {
    const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
    return s(s.size() - 1) / s(0);
}

}  // namespace

TEST(Algorithms, NamesRoundTrip) {
    for (const auto& [algo, name] : kAlgorithmNames) {
        EXPECT_EQ(parse_algorithm(name), algo);
        EXPECT_EQ(algorithm_name(algo), name);
    }
    EXPECT_FALSE(parse_algorithm("tucker").has_value());
    EXPECT_FALSE(is_randomized(TuckerAlgorithm::hooi));
    EXPECT_TRUE(is_randomized(TuckerAlgorithm::r_pet));
}

class EveryAlgorithm : public ::testing::TestWithParam<TuckerAlgorithm> {};

TEST_P(EveryAlgorithm, RecoversExactMultilinearRank) {
    oracle::Rng rng(100);
    const DenseTensor t = synthetic(rng, {20, 18, 16}, {3, 4, 2});
    const auto res = decompose(t, GetParam(), config({3, 4, 2}));
    EXPECT_EQ(tucker_reconstruct(res.model).shape(), t.shape());
    EXPECT_EQ(res.model.rank().ranks, (std::vector<Index>{3, 4, 2}));
    EXPECT_LE(res.report.relative_error, 1e-8);
    EXPECT_DOUBLE_EQ(res.report.fit, 1.0 - res.report.relative_error);
    EXPECT_NEAR(res.report.relative_error, relative_error(t, res.model), 1e-15);
    for (Index n = 0; n < 3; ++n) {
        const Matrix& f = res.model.factors[static_cast<std::size_t>(n)];
        if (res.model.orthonormal[static_cast<std::size_t>(n)])
            EXPECT_TRUE(is_orthonormal(f));
        else
            EXPECT_GT(min_sv_ratio(f), 1e-10);
    }
}

TEST_P(EveryAlgorithm, SeedDeterministicAndFiniteOnNoise) {
    oracle::Rng rng(101);
    const DenseTensor t = synthetic(rng, {12, 10, 9}, {3, 3, 3}, 0.1);
    const auto cfg = config({3, 3, 3}, 2, 1, 42);
    const auto a = decompose(t, GetParam(), cfg);
    const auto b = decompose(t, GetParam(), cfg);
    EXPECT_TRUE(std::isfinite(a.report.relative_error));
    EXPECT_EQ(a.model.core.vec(), b.model.core.vec());
    for (std::size_t n = 0; n < 3; ++n) EXPECT_EQ(a.model.factors[n], b.model.factors[n]);
}

TEST_P(EveryAlgorithm, RejectsRankAboveDimension) {
    const DenseTensor t(Shape{4, 5, 6});
    EXPECT_THROW((void)decompose(t, GetParam(), config({5, 2, 2})), dimension_error);
}

INSTANTIATE_TEST_SUITE_P(All, EveryAlgorithm,
                         ::testing::Values(TuckerAlgorithm::thosvd, TuckerAlgorithm::sthosvd, TuckerAlgorithm::hooi,
                                           TuckerAlgorithm::rp_hosvd, TuckerAlgorithm::rp_hooi,
                                           TuckerAlgorithm::r_sthosvd, TuckerAlgorithm::r_pet, TuckerAlgorithm::r_st,
                                           TuckerAlgorithm::r_hoid, TuckerAlgorithm::r_lshooi),
                         [](const auto& info) {
                             std::string s(algorithm_name(info.param));
                             std::replace(s.begin(), s.end(), '-', '_');
                             return s;
                         });

TEST(Thosvd, FullRankIsExact) {
    oracle::Rng rng(102);
    const DenseTensor t = synthetic(rng, {5, 4, 6}, {5, 4, 6});
    EXPECT_LE(thosvd(t, config({5, 4, 6})).report.relative_error, 1e-10);
    EXPECT_LE(sthosvd(t, config({5, 4, 6})).report.relative_error, 1e-10);
}

TEST(Thosvd, ExactLowRankAtTightTolerance) {
    oracle::Rng rng(103);
    const DenseTensor t = synthetic(rng, {30, 30, 30}, {3, 4, 2});
    EXPECT_LE(thosvd(t, config({3, 4, 2})).report.relative_error, 1e-12);
}

TEST(Thosvd, GramAndSvdRoutesAgree) {
    oracle::Rng rng(104);
    const DenseTensor t = synthetic(rng, {15, 12, 10}, {4, 4, 4}, 0.05);
    auto c = config({4, 4, 4});
    c.svd_method = SvdMethod::gram_evd;
    const double g = thosvd(t, c).report.relative_error;
    c.svd_method = SvdMethod::svd;
    const double s = thosvd(t, c).report.relative_error;
    EXPECT_NEAR(g, s, 1e-10);
}

TEST(Sthosvd, ShortcutMatchesModeProduct) {
    oracle::Rng rng(105);
    const DenseTensor t = synthetic(rng, {14, 11, 9}, {4, 3, 5}, 0.2);
    auto c = config({4, 3, 5});
    const auto plain = sthosvd(t, c);
    c.sthosvd_shortcut = true;
    const auto fast = sthosvd(t, c);
    const DenseTensor a = tucker_reconstruct(plain.model), b = tucker_reconstruct(fast.model);
    EXPECT_LE((a.vec() - b.vec()).norm(), 1e-12 * frobenius_norm(t));
}

TEST(Sthosvd, ModeOrdersSatisfyQuasiOptimality) {
    oracle::Rng rng(106);
    const DenseTensor t = synthetic(rng, {12, 10, 8}, {3, 3, 3}, 0.3);
    auto c = config({3, 3, 3});
    c.hooi_tol = 1e-13;
    c.hooi_max_iters = 500;
    const double best = hooi(t, c).report.relative_error;
    for (const std::vector<Index> order : {std::vector<Index>{0, 1, 2}, std::vector<Index>{2, 0, 1}}) {
        c.mode_order = order;
        EXPECT_LE(sthosvd(t, c).report.relative_error, std::sqrt(3.0) * best);
    }
    EXPECT_LE(thosvd(t, c).report.relative_error, std::sqrt(3.0) * best);
    c.mode_order = {0, 0, 1};
    EXPECT_THROW((void)sthosvd(t, c), std::invalid_argument);
}

TEST(Sthosvd, WithinTwiceThosvdOnExactRank) {
    oracle::Rng rng(107);
    const DenseTensor t = synthetic(rng, {25, 25, 25}, {3, 4, 2}, 1e-3);
    const double a = thosvd(t, config({3, 4, 2})).report.relative_error;
    const double b = sthosvd(t, config({3, 4, 2})).report.relative_error;
    EXPECT_LE(b, 2.0 * a);
}

TEST(Hooi, ExactRankConvergesInOneSweep) {
    oracle::Rng rng(108);
    const DenseTensor t = synthetic(rng, {15, 14, 13}, {2, 3, 4});
    const auto r = hooi(t, config({2, 3, 4}));
    EXPECT_EQ(r.report.iterations, 1);
    EXPECT_LE(r.report.relative_error, 1e-12);
}

TEST(Hooi, FitTraceIsMonotone) {
    oracle::Rng rng(109);
    for (int c = 0; c < 20; ++c) {
        const DenseTensor t = synthetic(rng, {10, 9, 8}, {4, 4, 4}, 0.5);
        auto cfg = config({2, 3, 2});
        cfg.init = c % 2 ? InitMethod::hosvd : InitMethod::random_gaussian;
        cfg.sketch.seed = static_cast<std::uint64_t>(c);
        const auto tr = hooi(t, cfg).report.fit_trace;
        ASSERT_GE(tr.size(), 2u);
        for (std::size_t k = 1; k < tr.size(); ++k) ASSERT_GE(tr[k], tr[k - 1] - 1e-12);
    }
}

TEST(Hooi, NoWorseThanThosvd) {
    oracle::Rng rng(110);
    const DenseTensor t = synthetic(rng, {16, 14, 12}, {3, 3, 3}, 0.2);
    EXPECT_LE(hooi(t, config({3, 3, 3})).report.relative_error,
              thosvd(t, config({3, 3, 3})).report.relative_error + 1e-14);
}

TEST(RpHooi, MedianFitTraceNonDecreasing) {
    oracle::Rng rng(111);
    const DenseTensor t = synthetic(rng, {14, 13, 12}, {3, 3, 3}, 0.3);
    std::vector<std::vector<double>> traces;
    std::size_t longest = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto cfg = config({3, 3, 3}, 5, 1, s);
        cfg.hooi_max_iters = 10;
        cfg.hooi_tol = 0.0;
        traces.push_back(rp_hooi(t, cfg).report.fit_trace);
        longest = std::max(longest, traces.back().size());
    }
    std::vector<double> median;
    for (std::size_t k = 0; k < longest; ++k) {
        std::vector<double> v;
        for (const auto& tr : traces) v.push_back(tr[std::min(k, tr.size() - 1)]);
        std::nth_element(v.begin(), v.begin() + 2, v.end());
        median.push_back(v[2]);
    }
    // fresh sketches every sweep, so the plateau jitters at the stopping tolerance
    for (std::size_t k = 1; k < median.size(); ++k) EXPECT_GE(median[k], median[k - 1] - 1e-8);
}

TEST(RpHosvd, MemoryEfficientSketchAlsoExact) {
    oracle::Rng rng(112);
    const DenseTensor t = synthetic(rng, {16, 15, 14}, {3, 2, 4});
    auto c = config({3, 2, 4});
    c.memory_efficient = true;
    EXPECT_LE(rp_hosvd(t, c).report.relative_error, 1e-10);
}

TEST(RpHosvd, OversamplingClampedWithWarning) {
    oracle::Rng rng(113);
    const DenseTensor t = synthetic(rng, {6, 6, 6}, {4, 4, 4});
    const auto r = rp_hosvd(t, config({4, 4, 4}, 10, 0));
    EXPECT_FALSE(r.report.warnings.empty());
    EXPECT_LE(r.report.relative_error, 1e-10);
}

TEST(RSthosvd, SparseInputMatchesDense) {
    oracle::Rng rng(114);
    SparseTensorCoo s(Shape{15, 12, 10});
    for (int e = 0; e < 300; ++e) {
        const std::vector<Index> idx{rng.integer(0, 14), rng.integer(0, 11), rng.integer(0, 9)};
        s.push(idx, rng.normal());
    }
    s.canonicalize();
    const DenseTensor d = s.to_dense();
    const auto cfg = config({4, 4, 4}, 3, 1, 9);
    const auto a = r_sthosvd(s, cfg), b = r_sthosvd(d, cfg);
    EXPECT_NEAR(a.report.relative_error, b.report.relative_error, 1e-10);
}

TEST(RPet, OnePassAndExact) {
    oracle::Rng rng(115);
    const DenseTensor t = synthetic(rng, {18, 16, 14}, {3, 3, 3});
    const SliceStream stream(t);
    auto r = r_pet(stream, config({3, 3, 3}));
    EXPECT_EQ(stream.passes(), 1);
    EXPECT_EQ(r.report.passes_over_data, 1);
    EXPECT_LE(relative_error(t, r.model), 1e-8);
}

TEST(RPet, ClampsSketchSizeWithWarning) {
    oracle::Rng rng(116);
    const DenseTensor t = synthetic(rng, {5, 20, 20}, {3, 3, 3});
    const auto r = r_pet(t, config({3, 3, 3}));
    ASSERT_FALSE(r.report.warnings.empty());
    EXPECT_NE(r.report.warnings.front().find("K_1"), std::string::npos);
    EXPECT_LE(r.report.relative_error, 1e-8);
    auto bad = config({3, 3, 3});
    bad.pet_k = {2, 6, 6};
    EXPECT_THROW((void)r_pet(t, bad), rank_error);
}

TEST(RPet, WithinHundredfoldOfRSthosvd) {
    oracle::Rng rng(117);
    const DenseTensor t = synthetic(rng, {30, 30, 30}, {4, 4, 4}, 1e-4);
    const double a = r_sthosvd(t, config({4, 4, 4}, 0, 0)).report.relative_error;
    const double b = r_pet(t, config({4, 4, 4})).report.relative_error;
    EXPECT_LE(b, 100.0 * a);
}

TEST(RSt, FactorsAreLiteralFibers) {
    oracle::Rng rng(118);
    const DenseTensor t = synthetic(rng, {10, 9, 8}, {2, 3, 2});
    for (auto dist : {SampleDistribution::uniform, SampleDistribution::length_squared}) {
        auto c = config({2, 3, 2});
        c.sample_distribution = dist;
        const auto r = r_st(t, c);
        ASSERT_EQ(r.report.selected.size(), 3u);
        for (Index n = 0; n < 3; ++n) {
            const Matrix u = unfold(t, n);
            const auto& sel = r.report.selected[static_cast<std::size_t>(n)];
            for (std::size_t k = 0; k < sel.size(); ++k)
                EXPECT_EQ(r.model.factors[static_cast<std::size_t>(n)].col(static_cast<Index>(k)), u.col(sel[k]));
        }
        EXPECT_LE(r.report.relative_error, 1e-9);
    }
}

TEST(RSt, SparseInputGivesSparseFactors) {
    SparseTensorCoo s(Shape{8, 7, 6});
    oracle::Rng rng(119);
    for (int e = 0; e < 40; ++e) {
        const std::vector<Index> idx{rng.integer(0, 7), rng.integer(0, 6), rng.integer(0, 5)};
        s.push(idx, rng.normal());
    }
    s.canonicalize();
    auto c = config({2, 2, 2});
    c.sample_distribution = SampleDistribution::length_squared;
    const auto r = r_st(s, c);
    const DenseTensor d = s.to_dense();
    Index dense_nnz = 0, factor_nnz = 0;
    for (Index n = 0; n < 3; ++n) {
        const Matrix& f = r.model.factors[static_cast<std::size_t>(n)];
        factor_nnz += (f.array() != 0.0).count();
        dense_nnz += f.size();
        const Matrix u = unfold(d, n);
        const auto& sel = r.report.selected[static_cast<std::size_t>(n)];
        for (std::size_t k = 0; k < sel.size(); ++k) EXPECT_EQ(f.col(static_cast<Index>(k)), u.col(sel[k]));
    }
    EXPECT_LT(factor_nnz, dense_nnz);
}

TEST(RHoid, SelectedColumnsAndNearRpHosvd) {
    oracle::Rng rng(120);
    const DenseTensor t = synthetic(rng, {20, 18, 16}, {3, 3, 3}, 1e-6);
    const auto r = r_hoid(t, config({3, 3, 3}, 5, 1));
    for (Index n = 0; n < 3; ++n) {
        const Matrix u = unfold(t, n);
        const auto& sel = r.report.selected[static_cast<std::size_t>(n)];
        for (std::size_t k = 0; k < sel.size(); ++k)
            EXPECT_EQ(r.model.factors[static_cast<std::size_t>(n)].col(static_cast<Index>(k)), u.col(sel[k]));
    }
    const double ref = rp_hosvd(t, config({3, 3, 3}, 5, 1)).report.relative_error;
    EXPECT_LE(r.report.relative_error, 10.0 * ref);
}

TEST(RLshooi, HosvdInitConvergesQuickly) {
    oracle::Rng rng(121);
    const DenseTensor t = synthetic(rng, {16, 15, 14}, {3, 2, 3});
    auto c = config({3, 2, 3});
    c.init = InitMethod::hosvd;
    c.hooi_max_iters = 3;
    const auto r = r_lshooi(t, c);
    EXPECT_LE(r.report.iterations, 3);
    EXPECT_LE(r.report.relative_error, 1e-8);
}

TEST(RLshooi, IdentitySketchMatchesHooi) {
    oracle::Rng rng(122);
    const DenseTensor t = synthetic(rng, {10, 9, 8}, {3, 3, 3}, 0.05);
    auto c = config({3, 3, 3});
    c.init = InitMethod::hosvd;
    c.lsq_sketch = LsqSketch::identity;
    c.hooi_tol = 1e-15;
    c.hooi_max_iters = 2000;
    const double a = r_lshooi(t, c).report.relative_error;
    const double b = hooi(t, c).report.relative_error;
    EXPECT_NEAR(a, b, 1e-10);
}

TEST(MlrankResidual, BoundsTheTuckerError) {
    oracle::Rng rng(123);
    for (int c = 0; c < 20; ++c) {
        const DenseTensor t = synthetic(rng, {20, 20, 20}, {5, 5, 5}, 0.3);
        const auto r = thosvd(t, config({2, 3, 4}));
        const auto res = mlrank_residual(t, r.model);
        double sum = 0.0;
        for (double v : res) sum += v * v;
        const double err = (t.vec() - tucker_reconstruct(r.model).vec()).squaredNorm();
        ASSERT_LE(err, sum + 1e-10);
    }
}

TEST(MlrankResidual, EdgeCases) {
    oracle::Rng rng(124);
    const DenseTensor t = synthetic(rng, {5, 4, 3}, {5, 4, 3});
    for (double v : mlrank_residual(t, thosvd(t, config({5, 4, 3})).model)) EXPECT_LE(v, 1e-10 * frobenius_norm(t));
    const DenseTensor z(Shape{5, 4, 3});
    TuckerModel m{DenseTensor(Shape{2, 2, 2}),
                  {orth(rng.matrix(5, 2)), orth(rng.matrix(4, 2)), orth(rng.matrix(3, 2))},
                  {true, true, true}};
    for (double v : mlrank_residual(z, m)) EXPECT_EQ(v, 0.0);
    m.factors[1] *= 2.0;
    EXPECT_THROW((void)mlrank_residual(z, m), std::invalid_argument);
}
