#pragma once

// Tucker / HOSVD decompositions: THOSVD, STHOSVD, HOOI and the randomized
// variants RP-HOSVD, RP-HOOI, R-STHOSVD, R-PET, R-ST, R-HOID and R-LSHOOI.
//
// Every entry point returns a TuckerResult: the model plus a report. Wall time
// covers the decomposition only; the relative error is computed afterwards by
// explicit reconstruction.

#include "rtucker/linalg.hpp"
#include "rtucker/random.hpp"
#include "rtucker/sketch.hpp"
#include "rtucker/sparse.hpp"

#include <chrono>
#include <optional>

namespace rtucker {

enum class InitMethod { hosvd, random_gaussian, random_uniform };

struct TuckerConfig {
    MultilinearRank rank;
    SketchConfig sketch;  // rank field unused; per-mode ranks come from `rank`
    Index hooi_max_iters = 50;
    double hooi_tol = 1e-8;
    std::vector<Index> mode_order;  // empty: ascending
    std::vector<Index> pet_k;       // empty: K_n = 2 R_n
    std::vector<Index> pet_s;       // empty: S_n = 2 K_n + 1
    SvdMethod svd_method = SvdMethod::automatic;
    std::optional<InitMethod> init;  // per-algorithm default when unset
    bool sthosvd_shortcut = false;   // S_(n) <- Λ Vᵀ instead of a mode product
    bool memory_efficient = false;   // RP-HOSVD sketches via t ×_{p≠n} Ω_p
    SampleDistribution sample_distribution = SampleDistribution::uniform;
    bool sample_replacement = false;
    LsqSketch lsq_sketch = LsqSketch::count_sketch;
    Index lsq_multiplier = 20;       // factor sketches: L_n = multiplier · R_n
    Index core_lsq_multiplier = 20;  // core sketch: L = multiplier · Π R_n
    bool compute_error = true;
};

struct DecompositionReport {
    double relative_error = 0.0;
    double fit = 1.0;
    double wall_time = 0.0;  // seconds
    Index iterations = 0;
    Index passes_over_data = 0;
    std::vector<double> fit_trace;              // iterative methods: initial fit, then one per sweep
    std::vector<std::vector<Index>> selected;   // R-ST / R-HOID: sampled unfolding columns per mode
    std::vector<std::string> warnings;
};

struct TuckerResult {
    TuckerModel model;
    DecompositionReport report;
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline std::vector<Index> resolve_order(const TuckerConfig& cfg, Index order) {
    std::vector<Index> p = cfg.mode_order;
    if (p.empty()) {
        p.resize(static_cast<std::size_t>(order));
        std::iota(p.begin(), p.end(), Index{0});
        return p;
    }
    std::vector<Index> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (Index k = 0; k < static_cast<Index>(sorted.size()); ++k)
        if (sorted[static_cast<std::size_t>(k)] != k || static_cast<Index>(sorted.size()) != order)
            throw dimension_error("mode_order must be a permutation of 0.." + std::to_string(order - 1));
    return p;
}

/// Per-mode sketch settings with R + p clamped to the matrix size.
inline SketchConfig mode_sketch(const TuckerConfig& cfg, Index rank, Index rows, Index cols, std::uint64_t seed,
                                std::vector<std::string>& warnings) {
    SketchConfig s = cfg.sketch;
    s.rank = rank;
    s.seed = seed;
    const Index room = std::min(rows, cols) - rank;
    if (room < 0) throw rank_error("rank " + std::to_string(rank) + " exceeds unfolding size");
    if (s.oversampling > room) {
        warnings.push_back("oversampling reduced from " + std::to_string(s.oversampling) + " to " +
                           std::to_string(room) + " (R + p must not exceed the unfolding size)");
        s.oversampling = room;
    }
    return s;
}

inline double fit_from_core(double xnorm2, double core_norm2) {
    if (xnorm2 <= 0.0) return 1.0;
    return 1.0 - std::sqrt(std::max(0.0, xnorm2 - core_norm2) / xnorm2);
}

inline double squared_norm(const DenseTensor& t) { return t.vec().squaredNorm(); }

/// Stopping rule for the iterative methods: the fit changed by less than tol, or the
/// squared error moved by roundoff only. The second test matters near exact recovery,
/// where the fit carries a sqrt(eps) cancellation error that never settles below tol.
inline bool converged(double fit, double next_fit, double err2, double next_err2, double xnorm2, double tol) {
    return std::abs(next_fit - fit) < tol ||
           std::abs(next_err2 - err2) <= 64.0 * std::numeric_limits<double>::epsilon() * xnorm2;
}

inline Matrix random_factor(RandomStream s, Index rows, Index cols, InitMethod m) {
    if (m == InitMethod::random_uniform) {
        Matrix f(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) f(i, j) = s.uniform();
        return f;
    }
    return orth(s.matrix(rows, cols));
}

inline bool has_full_column_rank(const Matrix& c) {
    Eigen::JacobiSVD<Matrix> svd(c);
    const auto& s = svd.singularValues();
    return s.size() > 0 && s(0) > 0.0 && s(s.size() - 1) > 1e-10 * s(0);
}

/// t ×_1 F_1† ... ×_N F_N†.
inline DenseTensor core_by_pseudo_inverse(const DenseTensor& t, const std::vector<Matrix>& factors) {
    DenseTensor s = t;
    for (Index n = 0; n < t.order(); ++n) s = mode_product(s, pseudo_inverse(factors[static_cast<std::size_t>(n)]), n);
    return s;
}

}  // namespace detail

/// ‖t − reconstruct(model)‖_F / ‖t‖_F.
[[nodiscard]] inline double relative_error(const DenseTensor& t, const TuckerModel& model) {
    const DenseTensor approx = tucker_reconstruct(model);
    if (!(approx.shape() == t.shape())) throw dimension_error("relative_error: model shape differs from tensor");
    const double tn = frobenius_norm(t);
    const double diff = (t.vec() - approx.vec()).norm();
    if (tn == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / tn;
}

inline void finalize(const DenseTensor& t, TuckerResult& r, const TuckerConfig& cfg) {
    if (!cfg.compute_error) return;
    r.report.relative_error = relative_error(t, r.model);
    r.report.fit = 1.0 - r.report.relative_error;
}

/// ‖(I − Q^(n)Q^(n)ᵀ) X_(n)‖_F for each mode; factors must be orthonormal.
[[nodiscard]] inline std::vector<double> mlrank_residual(const DenseTensor& t, const TuckerModel& model) {
    if (model.order() != t.order()) throw dimension_error("mlrank_residual: order mismatch");
    std::vector<double> out;
    for (Index n = 0; n < t.order(); ++n) {
        const Matrix& q = model.factors[static_cast<std::size_t>(n)];
        if (q.rows() != t.dim(n)) throw dimension_error("mlrank_residual: factor rows differ from mode size");
        if (!is_orthonormal(q)) throw std::invalid_argument("mlrank_residual: factor " + std::to_string(n + 1) +
                                                            " is not orthonormal");
        const Index r = t.shape().right(n);
        double acc = 0.0;
        for (Index k = 0; k < r; ++k) {
            const auto slab = t.slab(n, k);  // left × I_n, i.e. a block of X_(n)ᵀ
            acc += (slab - (slab * q) * q.transpose()).squaredNorm();
        }
        out.push_back(std::sqrt(acc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic algorithms

[[nodiscard]] inline TuckerResult thosvd(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    for (Index n = 0; n < t.order(); ++n) {
        auto ls = leading_left_singular(UnfoldingOperator(t, n), cfg.rank[n], cfg.svd_method);
        res.model.factors.push_back(std::move(ls.u));
    }
    res.model.core = project_all(t, res.model.factors);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), true);
    res.report.passes_over_data = t.order() + 1;
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

namespace detail {

/// One STHOSVD step on the working tensor: returns Q^(n) and shrinks s in place.
inline Matrix sthosvd_step(DenseTensor& s, Index n, Index rank, SvdMethod method, bool shortcut) {
    if (shortcut) {
        const Matrix sn = unfold(s, n);
        Eigen::BDCSVD<Matrix> svd(sn, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Index avail = std::min<Index>(rank, svd.singularValues().size());
        if (avail == rank) {
            Matrix q = svd.matrixU().leftCols(rank);
            const Matrix y = svd.singularValues().head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
            s = fold(y, n, s.shape().with(n, rank));
            return q;
        }
    }
    Matrix q = leading_left_singular(UnfoldingOperator(s, n), rank, method).u;
    s = mode_product_transposed(s, q, n);
    return q;
}

}  // namespace detail

[[nodiscard]] inline TuckerResult sthosvd(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    const auto order = detail::resolve_order(cfg, t.order());
    detail::Stopwatch clock;
    TuckerResult res;
    res.model.factors.resize(static_cast<std::size_t>(t.order()));
    DenseTensor s = t;
    for (Index n : order)
        res.model.factors[static_cast<std::size_t>(n)] =
            detail::sthosvd_step(s, n, cfg.rank[n], cfg.svd_method, cfg.sthosvd_shortcut);
    res.model.core = std::move(s);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), true);
    res.report.passes_over_data = 2;
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

[[nodiscard]] inline TuckerResult hooi(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    auto& q = res.model.factors;
    const InitMethod init = cfg.init.value_or(InitMethod::hosvd);
    if (init == InitMethod::hosvd) {
        for (Index n = 0; n < t.order(); ++n)
            q.push_back(leading_left_singular(UnfoldingOperator(t, n), cfg.rank[n], cfg.svd_method).u);
        res.report.passes_over_data += t.order();
    } else {
        RandomStream root(cfg.sketch.seed);
        for (Index n = 0; n < t.order(); ++n)
            q.push_back(orth(root.split(7, static_cast<std::uint64_t>(n)).matrix(t.dim(n), cfg.rank[n])));
    }
    const double xnorm2 = detail::squared_norm(t);
    DenseTensor core = project_all(t, q);
    double err2 = xnorm2 - detail::squared_norm(core);
    double fit = detail::fit_from_core(xnorm2, detail::squared_norm(core));
    res.report.fit_trace.push_back(fit);
    ++res.report.passes_over_data;
    for (Index it = 0; it < cfg.hooi_max_iters; ++it) {
        DenseTensor z;
        for (Index n = 0; n < t.order(); ++n) {
            z = project_all(t, q, n);
            q[static_cast<std::size_t>(n)] = leading_left_singular(UnfoldingOperator(z, n), cfg.rank[n], cfg.svd_method).u;
        }
        const Index last = t.order() - 1;
        core = mode_product_transposed(z, q[static_cast<std::size_t>(last)], last);
        res.report.passes_over_data += t.order();
        ++res.report.iterations;
        const double next_err2 = xnorm2 - detail::squared_norm(core);
        const double next = detail::fit_from_core(xnorm2, detail::squared_norm(core));
        res.report.fit_trace.push_back(next);
        const bool done = detail::converged(fit, next, err2, next_err2, xnorm2, cfg.hooi_tol);
        fit = next;
        err2 = next_err2;
        if (done) break;
    }
    res.model.core = std::move(core);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), true);
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Random projection

namespace detail {

/// Memory-efficient range sketch: W_(n) with W = t ×_{p≠n} Ω_pᵀ, Ω_p ∈ R^{I_p × c}
/// and c^(N−1) ≥ R + p columns in total.
inline Matrix tensor_range_sketch(const DenseTensor& t, Index n, Index k, RandomStream s, Distribution d) {
    const Index others = t.order() - 1;
    Index c = 1;
    auto columns = [&](Index c0) {
        Index total = 1;
        for (Index p = 0; p < t.order(); ++p)
            if (p != n) total *= std::min(c0, t.dim(p));
        return total;
    };
    while (columns(c) < k && others > 0) ++c;
    DenseTensor w = t;
    for (Index p = 0; p < t.order(); ++p) {
        if (p == n) continue;
        w = mode_product_transposed(w, s.split(static_cast<std::uint64_t>(p)).matrix(t.dim(p), std::min(c, t.dim(p)), d), p);
    }
    return unfold(w, n);
}

}  // namespace detail

[[nodiscard]] inline TuckerResult rp_hosvd(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    RandomStream root(cfg.sketch.seed);
    for (Index n = 0; n < t.order(); ++n) {
        const UnfoldingOperator op(t, n);
        const auto sc = detail::mode_sketch(cfg, cfg.rank[n], op.rows(), op.cols(), cfg.sketch.seed,
                                            res.report.warnings);
        RandomStream s = root.split(1, static_cast<std::uint64_t>(n));
        if (!cfg.memory_efficient) {
            res.model.factors.push_back(rsvd_basic(op, sc, s, {.compute_v = false}).u);
            res.report.passes_over_data += 2 + 2 * sc.power_iterations;
            continue;
        }
        Matrix y = detail::tensor_range_sketch(t, n, sc.rank + sc.oversampling, s, sc.distribution);
        for (Index it = 0; it < sc.power_iterations; ++it) y = op.times(orth(op.transpose_times(orth(y))));
        const Matrix basis = orth(y);
        const Matrix small = op.transpose_times(basis).transpose();
        res.model.factors.push_back(basis * leading_from_svd(small, sc.rank).u);
        res.report.passes_over_data += 2 + 2 * sc.power_iterations;
    }
    res.model.core = project_all(t, res.model.factors);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), true);
    ++res.report.passes_over_data;
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

[[nodiscard]] inline TuckerResult rp_hooi(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    auto& q = res.model.factors;
    RandomStream root(cfg.sketch.seed);
    const InitMethod init = cfg.init.value_or(InitMethod::random_gaussian);
    if (init == InitMethod::hosvd) {
        for (Index n = 0; n < t.order(); ++n)
            q.push_back(leading_left_singular(UnfoldingOperator(t, n), cfg.rank[n], cfg.svd_method).u);
        res.report.passes_over_data += t.order();
    } else {
        for (Index n = 0; n < t.order(); ++n)
            q.push_back(detail::random_factor(root.split(7, static_cast<std::uint64_t>(n)), t.dim(n), cfg.rank[n],
                                              InitMethod::random_gaussian));
    }
    const double xnorm2 = detail::squared_norm(t);
    DenseTensor core = project_all(t, q);
    double err2 = xnorm2 - detail::squared_norm(core);
    double fit = detail::fit_from_core(xnorm2, detail::squared_norm(core));
    res.report.fit_trace.push_back(fit);
    ++res.report.passes_over_data;
    for (Index it = 0; it < cfg.hooi_max_iters; ++it) {
        DenseTensor z;
        for (Index n = 0; n < t.order(); ++n) {
            z = project_all(t, q, n);
            const UnfoldingOperator op(z, n);
            const auto sc = detail::mode_sketch(cfg, cfg.rank[n], op.rows(), op.cols(), cfg.sketch.seed,
                                                res.report.warnings);
            RandomStream s = root.split(static_cast<std::uint64_t>(100 + it), static_cast<std::uint64_t>(n));
            q[static_cast<std::size_t>(n)] = rsvd_basic(op, sc, s, {.compute_v = false}).u;
        }
        const Index last = t.order() - 1;
        core = mode_product_transposed(z, q[static_cast<std::size_t>(last)], last);
        res.report.passes_over_data += t.order();
        ++res.report.iterations;
        const double next_err2 = xnorm2 - detail::squared_norm(core);
        const double next = detail::fit_from_core(xnorm2, detail::squared_norm(core));
        res.report.fit_trace.push_back(next);
        const bool done = detail::converged(fit, next, err2, next_err2, xnorm2, cfg.hooi_tol);
        fit = next;
        err2 = next_err2;
        if (done) break;
    }
    // keep the warnings list short: identical clamping messages repeat every sweep
    std::sort(res.report.warnings.begin(), res.report.warnings.end());
    res.report.warnings.erase(std::unique(res.report.warnings.begin(), res.report.warnings.end()),
                              res.report.warnings.end());
    res.model.core = std::move(core);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), true);
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

namespace detail {

template <class FirstOp, class FirstProject>
TuckerResult r_sthosvd_impl(const Shape& shape, const TuckerConfig& cfg, FirstOp&& first_op,
                            FirstProject&& first_project) {
    cfg.rank.check_against(shape);
    const auto order = resolve_order(cfg, shape.order());
    Stopwatch clock;
    TuckerResult res;
    res.model.factors.resize(static_cast<std::size_t>(shape.order()));
    RandomStream root(cfg.sketch.seed);
    DenseTensor s;
    bool first = true;
    for (Index n : order) {
        RandomStream stream = root.split(1, static_cast<std::uint64_t>(n));
        Matrix q;
        if (first) {
            const auto op = first_op(n);
            const auto sc = mode_sketch(cfg, cfg.rank[n], op.rows(), op.cols(), cfg.sketch.seed, res.report.warnings);
            q = rsvd_basic(op, sc, stream, {.compute_v = false}).u;
            s = first_project(q, n);
            res.report.passes_over_data = 3 + 2 * sc.power_iterations;
            first = false;
        } else {
            const UnfoldingOperator op(s, n);
            const auto sc = mode_sketch(cfg, cfg.rank[n], op.rows(), op.cols(), cfg.sketch.seed, res.report.warnings);
            q = rsvd_basic(op, sc, stream, {.compute_v = false}).u;
            s = mode_product_transposed(s, q, n);
        }
        res.model.factors[static_cast<std::size_t>(n)] = std::move(q);
    }
    res.model.core = std::move(s);
    res.model.orthonormal.assign(static_cast<std::size_t>(shape.order()), true);
    res.report.wall_time = clock.seconds();
    return res;
}

}  // namespace detail

[[nodiscard]] inline TuckerResult r_sthosvd(const DenseTensor& t, const TuckerConfig& cfg) {
    auto res = detail::r_sthosvd_impl(
        t.shape(), cfg, [&](Index n) { return UnfoldingOperator(t, n); },
        [&](const Matrix& q, Index n) { return mode_product_transposed(t, q, n); });
    finalize(t, res, cfg);
    return res;
}

/// Sparse input: only the first mode touches the COO data; later modes work on the dense shrunk tensor.
[[nodiscard]] inline TuckerResult r_sthosvd(const SparseTensorCoo& t, const TuckerConfig& cfg) {
    auto res = detail::r_sthosvd_impl(
        t.shape(), cfg, [&](Index n) { return SparseUnfoldingOperator(t, n); },
        [&](const Matrix& q, Index n) { return t.mode_product_transposed(q, n); });
    if (cfg.compute_error) finalize(t.to_dense(), res, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Single pass

/// Streams a dense tensor as slices along its last mode and counts sweeps.
class SliceStream {
public:
    explicit SliceStream(const DenseTensor& t) : t_(&t) {
        if (t.order() < 2) throw dimension_error("slice stream: order must be >= 2");
        std::vector<Index> d(t.shape().dims().begin(), t.shape().dims().end() - 1);
        slice_shape_ = Shape(std::move(d));
    }

    [[nodiscard]] const Shape& shape() const { return t_->shape(); }
    [[nodiscard]] const Shape& slice_shape() const { return slice_shape_; }
    [[nodiscard]] Index passes() const { return passes_; }

    template <class F>
    void sweep(F&& f) const {
        ++passes_;
        const Index len = slice_shape_.numel();
        const Index count = t_->dim(t_->order() - 1);
        for (Index k = 0; k < count; ++k) {
            std::vector<double> buf(t_->raw() + k * len, t_->raw() + (k + 1) * len);
            const DenseTensor slice(slice_shape_, std::move(buf));
            f(k, slice);
        }
    }

private:
    const DenseTensor* t_;
    Shape slice_shape_;
    mutable Index passes_ = 0;
};

/// One-pass sketch-and-recover Tucker approximation. The tensor is read once,
/// forming every factor sketch Y_n = X_(n)Ω_n and the core sketch
/// H = X ×_1 Ω̃_1 ... ×_N Ω̃_N in the same sweep.
[[nodiscard]] inline TuckerResult r_pet(const SliceStream& x, const TuckerConfig& cfg) {
    const Shape& shape = x.shape();
    cfg.rank.check_against(shape);
    const Index order = shape.order();
    const Index last = order - 1;
    std::vector<Index> kk(static_cast<std::size_t>(order)), ss(static_cast<std::size_t>(order));
    TuckerResult res;
    for (Index n = 0; n < order; ++n) {
        const auto un = static_cast<std::size_t>(n);
        Index k = cfg.pet_k.empty() ? 2 * cfg.rank[n] : cfg.pet_k.at(un);
        const Index cap = std::min(shape[n], shape.others(n));
        if (k > cap) {
            res.report.warnings.push_back("K_" + std::to_string(n + 1) + " reduced from " + std::to_string(k) +
                                          " to " + std::to_string(cap));
            k = cap;
        }
        const Index s = cfg.pet_s.empty() ? 2 * k + 1 : cfg.pet_s.at(un);
        if (cfg.rank[n] > k || k > s)
            throw rank_error("r_pet: need R_n <= K_n <= S_n in mode " + std::to_string(n + 1));
        kk[un] = k;
        ss[un] = s;
    }
    detail::Stopwatch clock;
    RandomStream root(cfg.sketch.seed);
    const Distribution dist = cfg.sketch.distribution;
    std::vector<Matrix> omega, omega_t, y;
    for (Index n = 0; n < order; ++n) {
        const auto un = static_cast<std::size_t>(n);
        omega.push_back(root.split(1, un).matrix(shape.others(n), kk[un], dist));
        omega_t.push_back(root.split(2, un).matrix(ss[un], shape[n], dist));
        y.push_back(Matrix::Zero(shape[n], kk[un]));
    }
    Index lead = 1;
    for (Index n = 0; n < last; ++n) lead *= ss[static_cast<std::size_t>(n)];
    Matrix h = Matrix::Zero(lead, ss[static_cast<std::size_t>(last)]);

    x.sweep([&](Index k, const DenseTensor& slice) {
        for (Index n = 0; n < last; ++n) {
            const auto un = static_cast<std::size_t>(n);
            const Index cols = slice.shape().others(n);
            y[un].noalias() += UnfoldingOperator(slice, n).times(omega[un].middleRows(k * cols, cols));
        }
        y[static_cast<std::size_t>(last)].row(k) = slice.vec().transpose() * omega[static_cast<std::size_t>(last)];
        DenseTensor g = slice;
        for (Index n = 0; n < last; ++n) g = mode_product(g, omega_t[static_cast<std::size_t>(n)], n);
        h.noalias() += g.vec() * omega_t[static_cast<std::size_t>(last)].col(k).transpose();
    });

    std::vector<Matrix> q;
    std::vector<Index> hdims(ss.begin(), ss.end());
    DenseTensor core(Shape(hdims), std::vector<double>(h.data(), h.data() + h.size()));
    for (Index n = 0; n < order; ++n) {
        const auto un = static_cast<std::size_t>(n);
        q.push_back(orth(y[un]));
        const Matrix m = omega_t[un] * q.back();
        check_conditioning(m, res.report.warnings, ("Omega~_" + std::to_string(n + 1) + " * Q").c_str());
        core = mode_product(core, pseudo_inverse(m), n);
    }
    // truncate the K-sized core to the target rank and absorb its factors
    TuckerConfig small;
    small.rank = cfg.rank;
    small.compute_error = false;
    small.svd_method = SvdMethod::svd;
    auto trunc = sthosvd(core, small);
    for (Index n = 0; n < order; ++n)
        q[static_cast<std::size_t>(n)] = q[static_cast<std::size_t>(n)] * trunc.model.factors[static_cast<std::size_t>(n)];
    res.model.factors = std::move(q);
    res.model.core = std::move(trunc.model.core);
    res.model.orthonormal.assign(static_cast<std::size_t>(order), true);
    res.report.passes_over_data = x.passes();
    res.report.wall_time = clock.seconds();
    return res;
}

[[nodiscard]] inline TuckerResult r_pet(const DenseTensor& t, const TuckerConfig& cfg) {
    const SliceStream stream(t);
    auto res = r_pet(stream, cfg);
    finalize(t, res, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Sampling and interpolative decompositions

namespace detail {

template <class Op>
Matrix sample_fibers(const Op& op, Index rank, const TuckerConfig& cfg, RandomStream stream, Index mode,
                     TuckerResult& res) {
    if (rank > op.cols()) throw rank_error("r_st: rank exceeds the number of mode fibers");
    const Vector p = cfg.sample_distribution == SampleDistribution::uniform
                         ? Vector::Constant(op.cols(), 1.0 / static_cast<double>(op.cols()))
                         : sampling_probabilities(op.column_norms_squared(), cfg.sample_distribution);
    SampleConfig sc{rank, cfg.sample_distribution, cfg.sample_replacement, 0};
    Matrix c;
    std::vector<Index> picked;
    constexpr int kRetries = 3;
    for (int attempt = 0; attempt <= kRetries; ++attempt) {
        auto sel = sample_columns(p, sc, stream.split(static_cast<std::uint64_t>(attempt)));
        c = op.columns(sel.indices);
        picked = std::move(sel.indices);
        if (has_full_column_rank(c)) break;
        if (attempt == kRetries)
            res.report.warnings.push_back("mode " + std::to_string(mode + 1) +
                                          ": sampled fibers rank-deficient after resampling, core uses pseudo-inverse");
    }
    res.report.selected.push_back(std::move(picked));
    return c;
}

}  // namespace detail

/// Factors are raw sampled mode fibers; core S = X ×_n Q^(n)†.
[[nodiscard]] inline TuckerResult r_st(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    RandomStream root(cfg.sketch.seed);
    for (Index n = 0; n < t.order(); ++n)
        res.model.factors.push_back(detail::sample_fibers(UnfoldingOperator(t, n), cfg.rank[n], cfg,
                                                          root.split(3, static_cast<std::uint64_t>(n)), n, res));
    res.model.core = detail::core_by_pseudo_inverse(t, res.model.factors);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), false);
    res.report.passes_over_data = 1 + (cfg.sample_distribution == SampleDistribution::length_squared ? t.order() : 0);
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

[[nodiscard]] inline TuckerResult r_st(const SparseTensorCoo& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    RandomStream root(cfg.sketch.seed);
    for (Index n = 0; n < t.order(); ++n)
        res.model.factors.push_back(detail::sample_fibers(SparseUnfoldingOperator(t, n), cfg.rank[n], cfg,
                                                          root.split(3, static_cast<std::uint64_t>(n)), n, res));
    DenseTensor s = t.mode_product_transposed(pseudo_inverse(res.model.factors[0]).transpose(), 0);
    for (Index n = 1; n < t.order(); ++n) s = mode_product(s, pseudo_inverse(res.model.factors[static_cast<std::size_t>(n)]), n);
    res.model.core = std::move(s);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), false);
    res.report.passes_over_data = 1;
    res.report.wall_time = clock.seconds();
    if (cfg.compute_error) finalize(t.to_dense(), res, cfg);
    return res;
}

/// Randomized interpolatory decomposition: per mode, project X_(n) onto a sketched
/// range basis Q, select columns of QᵀX_(n) by pivoted QR and keep those columns of X_(n).
[[nodiscard]] inline TuckerResult r_hoid(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    RandomStream root(cfg.sketch.seed);
    for (Index n = 0; n < t.order(); ++n) {
        const UnfoldingOperator op(t, n);
        const auto sc = detail::mode_sketch(cfg, cfg.rank[n], op.rows(), op.cols(), cfg.sketch.seed,
                                            res.report.warnings);
        RandomStream s = root.split(4, static_cast<std::uint64_t>(n));
        Matrix y = op.times(s.matrix(op.cols(), sc.rank + sc.oversampling, sc.distribution));
        for (Index it = 0; it < sc.power_iterations; ++it) y = op.times(orth(op.transpose_times(orth(y))));
        const Matrix basis = orth(y);
        const Matrix z = op.transpose_times(basis).transpose();
        auto id = interpolative_decomposition(z, cfg.rank[n]);
        if (id.r11_min_ratio < 1e-12)
            res.report.warnings.push_back("mode " + std::to_string(n + 1) +
                                          ": R11 numerically singular, using pseudo-inverse");
        res.model.factors.push_back(op.columns(id.indices));
        res.report.selected.push_back(std::move(id.indices));
        res.report.passes_over_data += 2 + 2 * sc.power_iterations;
    }
    res.model.core = detail::core_by_pseudo_inverse(t, res.model.factors);
    res.model.orthonormal.assign(static_cast<std::size_t>(t.order()), false);
    ++res.report.passes_over_data;
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Sketched least-squares HOOI

/// Alternates sketched least-squares solves for each factor,
///   Q^(n)ᵀ = argmin ‖T_n (⊗_{p≠n} Q^(p)) S_(n)ᵀ Qᵀ − T_n X_(n)ᵀ‖,
/// and for the core, s = argmin ‖T (⊗ Q^(n)) s − T x‖. The row sketches T_n, T are
/// drawn once, so the sketched data T_n X_(n)ᵀ and T x are formed once up front.
/// Each factor solution is re-orthonormalized by QR with R̂ absorbed into the core.
[[nodiscard]] inline TuckerResult r_lshooi(const DenseTensor& t, const TuckerConfig& cfg) {
    cfg.rank.check_against(t.shape());
    detail::Stopwatch clock;
    TuckerResult res;
    const Index order = t.order();
    RandomStream root(cfg.sketch.seed);
    auto& q = res.model.factors;
    DenseTensor core;
    const InitMethod init = cfg.init.value_or(InitMethod::random_uniform);
    if (init == InitMethod::hosvd) {
        for (Index n = 0; n < order; ++n)
            q.push_back(leading_left_singular(UnfoldingOperator(t, n), cfg.rank[n], cfg.svd_method).u);
        core = project_all(t, q);
        res.report.passes_over_data += order + 1;
    } else {
        for (Index n = 0; n < order; ++n)
            q.push_back(detail::random_factor(root.split(7, static_cast<std::uint64_t>(n)), t.dim(n), cfg.rank[n], init));
        core = RandomStream(root.split(8)).tensor(Shape(cfg.rank.ranks), Distribution::uniform_pm1);
        if (init == InitMethod::random_uniform)
            for (double& v : core.data()) v = 0.5 * (v + 1.0);
        // orthonormalize the initial factors, keeping the product unchanged
        for (Index n = 0; n < order; ++n) {
            Matrix qq, rr;
            thin_qr(q[static_cast<std::size_t>(n)], qq, rr);
            q[static_cast<std::size_t>(n)] = std::move(qq);
            core = mode_product(core, rr, n);
        }
    }

    auto make_sketch = [&](Index rows, Index l, std::uint64_t tag) {
        const LsqSketch kind = l >= rows ? LsqSketch::identity : cfg.lsq_sketch;
        return RowSketch(kind, rows, l, RandomStream(root.split(9, tag)).key());
    };
    std::vector<RowSketch> tn;
    std::vector<Matrix> tx;
    for (Index n = 0; n < order; ++n) {
        tn.push_back(make_sketch(t.shape().others(n), cfg.lsq_multiplier * cfg.rank[n], static_cast<std::uint64_t>(n)));
        tx.push_back(tn.back().apply(UnfoldingRows(t, n)));
    }
    Index core_size = 1;
    for (Index r : cfg.rank.ranks) core_size *= r;
    const RowSketch tc = make_sketch(t.size(), cfg.core_lsq_multiplier * core_size, 1000);
    const Matrix tcx = tc.apply(DenseRows(Eigen::Map<const Matrix>(t.raw(), t.size(), 1)));
    res.report.passes_over_data += order + 1;

    const double xnorm2 = detail::squared_norm(t);
    auto current_err2 = [&]() {
        const DenseTensor p = project_all(t, q);
        ++res.report.passes_over_data;
        return xnorm2 - 2.0 * p.vec().dot(core.vec()) + core.vec().squaredNorm();
    };
    auto fit_of = [&](double e2) { return xnorm2 > 0.0 ? 1.0 - std::sqrt(std::max(0.0, e2) / xnorm2) : 1.0; };
    double err2 = current_err2();
    double fit = fit_of(err2);
    res.report.fit_trace.push_back(fit);
    bool deficient = false;
    for (Index it = 0; it < cfg.hooi_max_iters; ++it) {
        for (Index n = 0; n < order; ++n) {
            std::vector<Matrix> rest;
            for (Index p = 0; p < order; ++p)
                if (p != n) rest.push_back(q[static_cast<std::size_t>(p)]);
            const KroneckerRows a(std::move(rest), unfold(core, n).transpose());
            const auto sol = solve_least_squares(tn[static_cast<std::size_t>(n)].apply(a), tx[static_cast<std::size_t>(n)]);
            deficient |= sol.rank_deficient;
            Matrix qq, rr;
            thin_qr(sol.x.transpose(), qq, rr);
            q[static_cast<std::size_t>(n)] = std::move(qq);
            core = mode_product(core, rr, n);
        }
        const KroneckerRows b(q);
        const auto sol = solve_least_squares_normal(tc.apply(b), tcx);
        deficient |= sol.rank_deficient;
        core = DenseTensor(core.shape(), std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size()));
        ++res.report.iterations;
        const double next_err2 = current_err2();
        const double next = fit_of(next_err2);
        res.report.fit_trace.push_back(next);
        const bool done = detail::converged(fit, next, err2, next_err2, xnorm2, cfg.hooi_tol);
        fit = next;
        err2 = next_err2;
        if (done) break;
    }
    if (deficient) res.report.warnings.push_back("sketched least-squares system was rank-deficient (minimum-norm solution used)");
    res.model.core = std::move(core);
    res.model.orthonormal.assign(static_cast<std::size_t>(order), true);
    res.report.wall_time = clock.seconds();
    finalize(t, res, cfg);
    return res;
}

}  // namespace rtucker
