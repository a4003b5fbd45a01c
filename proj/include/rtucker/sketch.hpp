#pragma once

// Matrix-level randomized kernels: randomized SVD (basic, two-sided and
// single-pass), column sampling, count-sketch, and sketched least squares.

#include "rtucker/linalg.hpp"
#include "rtucker/random.hpp"

#include <functional>
#include <numbers>
#include <optional>

namespace rtucker {

class rank_error : public dimension_error {
public:
    using dimension_error::dimension_error;
};

struct SketchConfig {
    Index rank = 1;
    Index oversampling = 10;
    Index power_iterations = 2;
    Distribution distribution = Distribution::gaussian;
    std::uint64_t seed = 0;
};

struct SvdFactors {
    Matrix u;
    Vector s;
    Matrix v;
    std::vector<std::string> warnings;

    [[nodiscard]] Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

struct QbFactors {
    Matrix q;
    Matrix b;
    std::vector<std::string> warnings;

    [[nodiscard]] Matrix reconstruct() const { return q * b; }
};

/// X ≈ Q1 · B · Q2ᵀ.
struct TwoSidedFactors {
    Matrix q1;
    Matrix b;
    Matrix q2;
    std::vector<std::string> warnings;

    [[nodiscard]] Matrix reconstruct() const { return q1 * b * q2.transpose(); }
};

// ---------------------------------------------------------------------------
// Randomized SVD

struct RsvdOptions {
    bool compute_v = true;
};

/// Randomized SVD with oversampling and power iteration. Power iterations
/// alternate orthonormalized products with X and Xᵀ instead of forming (XXᵀ)^q X.
template <LinearOperator Op>
[[nodiscard]] SvdFactors rsvd_basic(const Op& x, const SketchConfig& cfg, RandomStream stream,
                                    RsvdOptions opts = {}) {
    const Index rows = x.rows(), cols = x.cols();
    const Index k = cfg.rank + cfg.oversampling;
    if (cfg.rank < 1 || cfg.oversampling < 0 || cfg.power_iterations < 0)
        throw rank_error("rsvd: rank must be >= 1 and p, q >= 0");
    if (k > std::min(rows, cols))
        throw rank_error("rsvd: R + p = " + std::to_string(k) + " exceeds min(I, J) = " +
                         std::to_string(std::min(rows, cols)));
    const Matrix omega = stream.matrix(cols, k, cfg.distribution);
    Matrix y = x.times(omega);
    for (Index it = 0; it < cfg.power_iterations; ++it) {
        const Matrix z = orth(x.transpose_times(orth(y)));
        y = x.times(z);
    }
    const Matrix q = orth(y);
    const Matrix bt = x.transpose_times(q);  // Bᵀ = XᵀQ, J × k
    SvdFactors out;
    // SVD of Bᵀ gives the factors of B with the roles of U and V swapped
    Eigen::BDCSVD<Matrix> svd(bt, opts.compute_v ? (Eigen::ComputeThinU | Eigen::ComputeThinV)
                                                 : Eigen::ComputeThinV);
    out.u = q * svd.matrixV().leftCols(cfg.rank);
    out.s = svd.singularValues().head(cfg.rank);
    if (opts.compute_v) out.v = svd.matrixU().leftCols(cfg.rank);
    return out;
}

[[nodiscard]] inline SvdFactors rsvd_basic(const Matrix& x, const SketchConfig& cfg) {
    return rsvd_basic(MatrixOperator(x), cfg, RandomStream(cfg.seed));
}

/// Expected spectral-norm error bound for rsvd_basic:
/// (1 + √(R/(p−1)) + e·√(R+p)/p · √(min(I,J)−R))^(1/(2q+1)) · σ_{R+1}.
[[nodiscard]] inline double rsvd_error_bound(Index rows, Index cols, Index rank, Index oversampling, Index power,
                                             double sigma_next) {
    if (oversampling < 2) throw std::invalid_argument("rsvd_error_bound: oversampling must be >= 2");
    const double r = static_cast<double>(rank), p = static_cast<double>(oversampling);
    const double m = static_cast<double>(std::min(rows, cols));
    const double base = 1.0 + std::sqrt(r / (p - 1.0)) + std::numbers::e * std::sqrt(r + p) / p * std::sqrt(m - r);
    return std::pow(base, 1.0 / (2.0 * static_cast<double>(power) + 1.0)) * sigma_next;
}

/// Two-sided randomized SVD: both the range and co-range are sketched.
template <LinearOperator Op>
[[nodiscard]] SvdFactors rsvd_two_sided(const Op& x, const SketchConfig& cfg, RandomStream stream) {
    const Index k = cfg.rank + cfg.oversampling;
    if (cfg.rank < 1 || k > std::min(x.rows(), x.cols()))
        throw rank_error("rsvd_two_sided: R + p exceeds min(I, J)");
    const Matrix omega1 = stream.split(1).matrix(x.cols(), k, cfg.distribution);
    const Matrix omega2 = stream.split(2).matrix(x.rows(), k, cfg.distribution);
    const Matrix q1 = orth(x.times(omega1));
    const Matrix q2 = orth(x.transpose_times(omega2));
    const Matrix b = (x.transpose_times(q1)).transpose() * q2;  // Q1ᵀ X Q2
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors out;
    out.u = q1 * svd.matrixU().leftCols(cfg.rank);
    out.s = svd.singularValues().head(cfg.rank);
    out.v = q2 * svd.matrixV().leftCols(cfg.rank);
    return out;
}

[[nodiscard]] inline SvdFactors rsvd_two_sided(const Matrix& x, const SketchConfig& cfg) {
    return rsvd_two_sided(MatrixOperator(x), cfg, RandomStream(cfg.seed));
}

// ---------------------------------------------------------------------------
// Single-pass kernels

/// Streams a matrix in column blocks and counts full sweeps.
class MatrixStream {
public:
    explicit MatrixStream(const Matrix& m, Index block = 64) : m_(&m), block_(std::max<Index>(1, block)) {}

    [[nodiscard]] Index rows() const { return m_->rows(); }
    [[nodiscard]] Index cols() const { return m_->cols(); }
    [[nodiscard]] Index passes() const { return passes_; }

    /// f(first_column, block) for consecutive column blocks covering the matrix once.
    template <class F>
    void sweep(F&& f) const {
        ++passes_;
        for (Index c = 0; c < cols(); c += block_) {
            const Index w = std::min(block_, cols() - c);
            f(c, m_->middleCols(c, w));
        }
    }

private:
    const Matrix* m_;
    Index block_;
    mutable Index passes_ = 0;
};

inline void check_conditioning(const Matrix& m, std::vector<std::string>& warnings, const char* what) {
    const double c = condition_number(m);
    if (!(c <= 1e12)) warnings.push_back(std::string(what) + " is ill-conditioned (cond = " + std::to_string(c) + ")");
}

/// Co-range sketch size for the one-pass solves: 2k + 1, capped at the dimension.
[[nodiscard]] inline Index corange_size(Index k, Index dim) { return std::min(2 * k + 1, dim); }

/// One-pass QB: Y = XΩ and W = Ω₂X are formed in the same sweep, then
/// B = (Ω₂Q)† W. Ω has k = R + p columns; Ω₂ has min(2k + 1, I) rows so the
/// recovery is an overdetermined least-squares problem.
[[nodiscard]] inline QbFactors single_pass_qb(const MatrixStream& x, const SketchConfig& cfg) {
    const Index k = cfg.rank + cfg.oversampling;
    if (cfg.rank < 1 || cfg.oversampling < 0 || k > std::min(x.rows(), x.cols()))
        throw rank_error("single_pass_qb: R + p exceeds min(I, J)");
    const Index l = corange_size(k, x.rows());
    RandomStream stream(cfg.seed);
    const Matrix omega = stream.split(1).matrix(x.cols(), k, cfg.distribution);
    const Matrix omega2 = stream.split(2).matrix(l, x.rows(), cfg.distribution);
    Matrix y = Matrix::Zero(x.rows(), k);
    Matrix w(l, x.cols());
    x.sweep([&](Index c, const auto& block) {
        y.noalias() += block * omega.middleRows(c, block.cols());
        w.middleCols(c, block.cols()).noalias() = omega2 * block;
    });
    QbFactors out;
    out.q = orth(y);
    const Matrix core = omega2 * out.q;
    check_conditioning(core, out.warnings, "Omega2 * Q");
    out.b = core.completeOrthogonalDecomposition().solve(w);
    return out;
}

/// One-pass two-sided variant: B = (Ω₂Q1)† · Ω₂XΩ₁ · (Q2ᵀΩ₁)†, with range and
/// co-range sketches of k = R + p columns and core sketches of min(2k + 1, dim).
[[nodiscard]] inline TwoSidedFactors single_pass_two_sided(const MatrixStream& x, const SketchConfig& cfg) {
    const Index k = cfg.rank + cfg.oversampling;
    if (cfg.rank < 1 || cfg.oversampling < 0 || k > std::min(x.rows(), x.cols()))
        throw rank_error("single_pass_two_sided: R + p exceeds min(I, J)");
    const Index l1 = corange_size(k, x.cols()), l2 = corange_size(k, x.rows());
    RandomStream stream(cfg.seed);
    const Matrix phi = stream.split(1).matrix(x.cols(), k, cfg.distribution);   // range
    const Matrix psi = stream.split(2).matrix(x.rows(), k, cfg.distribution);   // co-range
    const Matrix omega1 = stream.split(3).matrix(x.cols(), l1, cfg.distribution);
    const Matrix omega2 = stream.split(4).matrix(l2, x.rows(), cfg.distribution);
    Matrix y1 = Matrix::Zero(x.rows(), k);
    Matrix y2(x.cols(), k);
    Matrix w = Matrix::Zero(l2, l1);
    x.sweep([&](Index c, const auto& block) {
        const Index width = block.cols();
        y1.noalias() += block * phi.middleRows(c, width);
        y2.middleRows(c, width).noalias() = block.transpose() * psi;
        w.noalias() += (omega2 * block) * omega1.middleRows(c, width);
    });
    TwoSidedFactors out;
    out.q1 = orth(y1);
    out.q2 = orth(y2);
    const Matrix left = omega2 * out.q1;
    const Matrix right = out.q2.transpose() * omega1;
    check_conditioning(left, out.warnings, "Omega2 * Q1");
    check_conditioning(right, out.warnings, "Q2^T * Omega1");
    out.b = pseudo_inverse(left) * w * pseudo_inverse(right);
    return out;
}

// ---------------------------------------------------------------------------
// Column sampling

enum class SampleDistribution { uniform, length_squared };

struct SampleConfig {
    Index count = 1;
    SampleDistribution probabilities = SampleDistribution::uniform;
    bool replacement = false;
    std::uint64_t seed = 0;
};

struct SampledColumns {
    std::vector<Index> indices;
    Vector probabilities;  // p_j over all columns
    Vector scale;          // per selected column; ones without replacement
};

/// p_j = ‖x_j‖² / ‖X‖_F² for length-squared, 1/J for uniform.
[[nodiscard]] inline Vector sampling_probabilities(const Vector& col_norms_sq, SampleDistribution d) {
    const Index j = col_norms_sq.size();
    if (d == SampleDistribution::uniform) return Vector::Constant(j, 1.0 / static_cast<double>(j));
    const double total = col_norms_sq.sum();
    if (!(total > 0.0)) throw rank_error("length-squared sampling: matrix has no nonzero columns");
    return col_norms_sq / total;
}

/// Draws columns by inverse CDF. Without replacement, each draw renormalizes the
/// remaining mass; the lowest index wins when the draw lands on a boundary.
[[nodiscard]] inline SampledColumns sample_columns(const Vector& probabilities, const SampleConfig& cfg,
                                                   RandomStream stream) {
    const Index n = probabilities.size();
    if (cfg.count < 1) throw rank_error("sampling: count must be >= 1");
    if ((probabilities.array() < 0.0).any()) throw std::invalid_argument("sampling: negative probability");
    SampledColumns out;
    out.probabilities = probabilities;
    Vector w = probabilities;
    if (!cfg.replacement) {
        const Index positive = (w.array() > 0.0).count();
        if (positive < cfg.count)
            throw rank_error("sampling: only " + std::to_string(positive) + " columns have nonzero probability, need " +
                             std::to_string(cfg.count));
    }
    auto pick = [&](const Vector& weights) {
        const double total = weights.sum();
        const double u = stream.uniform() * total;
        double acc = 0.0;
        Index last_positive = -1;
        for (Index j = 0; j < n; ++j) {
            if (weights(j) <= 0.0) continue;
            last_positive = j;
            acc += weights(j);
            if (u < acc) return j;
        }
        return last_positive;  // rounding at the top end
    };
    out.scale = Vector::Ones(cfg.count);
    for (Index r = 0; r < cfg.count; ++r) {
        const Index j = pick(w);
        out.indices.push_back(j);
        if (cfg.replacement) {
            out.scale(r) = 1.0 / std::sqrt(static_cast<double>(cfg.count) * probabilities(j));
        } else {
            w(j) = 0.0;
        }
    }
    return out;
}

struct ColumnSampleQb {
    std::vector<Index> indices;
    Matrix q;
    Matrix b;
};

/// Sampling QB: pick R columns, scale by 1/√(R p_j) when sampling with
/// replacement, orthonormalize, then B = QᵀX.
template <LinearOperator Op>
[[nodiscard]] ColumnSampleQb column_sample_qb(const Op& x, const SampleConfig& cfg) {
    if (cfg.count > x.cols()) throw rank_error("column_sample_qb: R exceeds column count");
    const Vector p = sampling_probabilities(x.column_norms_squared(), cfg.probabilities);
    auto sel = sample_columns(p, cfg, RandomStream(cfg.seed));
    Matrix c = x.columns(sel.indices);
    for (Index r = 0; r < c.cols(); ++r) c.col(r) *= sel.scale(r);
    ColumnSampleQb out;
    out.indices = std::move(sel.indices);
    out.q = orth(c);
    out.b = x.transpose_times(out.q).transpose();
    return out;
}

[[nodiscard]] inline ColumnSampleQb column_sample_qb(const Matrix& x, const SampleConfig& cfg) {
    return column_sample_qb(MatrixOperator(x), cfg);
}

// ---------------------------------------------------------------------------
// Pivoted-QR interpolative decomposition

struct Interpolative {
    std::vector<Index> indices;  // selected columns, pivot order
    Matrix f_transposed;         // R × J with X ≈ X(:, indices) · Fᵀ
    double r22_norm = 0.0;       // ‖R₂₂‖_F of the trailing block
    double r11_min_ratio = 1.0;  // min |diag R₁₁| / max |diag R₁₁|
};

/// Column-pivoted QR of X: X(:, p) = Q₁R₁₁, Fᵀ = [I, R₁₁⁻¹R₁₂] Πᵀ.
[[nodiscard]] inline Interpolative interpolative_decomposition(const Eigen::Ref<const Matrix>& x, Index rank) {
    if (rank < 1 || rank > std::min(x.rows(), x.cols())) throw rank_error("interpolative: rank out of range");
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation().indices();
    Interpolative out;
    for (Index k = 0; k < rank; ++k) out.indices.push_back(perm(k));
    const Matrix r11 = r.topLeftCorner(rank, rank);
    const Matrix r12 = r.topRightCorner(rank, x.cols() - rank);
    const Vector d = r11.diagonal().cwiseAbs();
    out.r11_min_ratio = d.maxCoeff() > 0.0 ? d.minCoeff() / d.maxCoeff() : 0.0;
    Matrix t(rank, x.cols());
    t.leftCols(rank).setIdentity();
    if (x.cols() > rank) {
        if (out.r11_min_ratio > 1e-14)
            t.rightCols(x.cols() - rank) = r11.triangularView<Eigen::Upper>().solve(r12);
        else
            t.rightCols(x.cols() - rank) = pseudo_inverse(r11) * r12;
    }
    out.f_transposed.resize(rank, x.cols());
    for (Index c = 0; c < x.cols(); ++c) out.f_transposed.col(perm(c)) = t.col(c);
    if (x.rows() > rank && x.cols() > rank) out.r22_norm = r.bottomRightCorner(x.rows() - rank, x.cols() - rank).norm();
    return out;
}

// ---------------------------------------------------------------------------
// Count-sketch

class CountSketchOp {
public:
    CountSketchOp(Index input_dim, Index sketch_dim, std::uint64_t seed)
        : input_dim_(input_dim), sketch_dim_(sketch_dim), seed_(seed) {
        if (input_dim < 1 || sketch_dim < 1) throw dimension_error("count sketch: dimensions must be >= 1");
        RandomStream s(seed);
        RandomStream hs = s.split(1), ss = s.split(2);
        hash_.resize(static_cast<std::size_t>(input_dim));
        sign_.resize(static_cast<std::size_t>(input_dim));
        for (Index j = 0; j < input_dim; ++j) {
            hash_[static_cast<std::size_t>(j)] = static_cast<Index>(hs.below(static_cast<std::uint64_t>(sketch_dim)));
            sign_[static_cast<std::size_t>(j)] = (ss() >> 63) ? -1.0 : 1.0;
        }
    }

    /// Explicit hash and signs, mostly for tests.
    CountSketchOp(Index sketch_dim, std::vector<Index> hash, std::vector<double> sign)
        : input_dim_(static_cast<Index>(hash.size())), sketch_dim_(sketch_dim), hash_(std::move(hash)),
          sign_(std::move(sign)) {
        if (hash_.size() != sign_.size()) throw dimension_error("count sketch: hash/sign length mismatch");
        for (Index h : hash_)
            if (h < 0 || h >= sketch_dim_) throw dimension_error("count sketch: bucket out of range");
    }

    [[nodiscard]] Index input_dim() const { return input_dim_; }
    [[nodiscard]] Index sketch_dim() const { return sketch_dim_; }
    [[nodiscard]] Index hash(Index j) const { return hash_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] double sign(Index j) const { return sign_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Dense L × J sketch matrix; for verification only.
    [[nodiscard]] Matrix materialize() const {
        Matrix s = Matrix::Zero(sketch_dim_, input_dim_);
        for (Index j = 0; j < input_dim_; ++j) s(hash(j), j) = sign(j);
        return s;
    }

private:
    Index input_dim_;
    Index sketch_dim_;
    std::uint64_t seed_ = 0;
    std::vector<Index> hash_;
    std::vector<double> sign_;
};

enum class SketchSide { rows, columns };

/// Columns side: output column ℓ = Σ_{h(j)=ℓ} s(j)·x_j (X·Sᵀ). Rows side: S·X.
[[nodiscard]] inline Matrix count_sketch_apply(const CountSketchOp& op, const Eigen::Ref<const Matrix>& x,
                                               SketchSide side) {
    if (side == SketchSide::columns) {
        if (x.cols() != op.input_dim()) throw dimension_error("count sketch: column count mismatch");
        Matrix out = Matrix::Zero(x.rows(), op.sketch_dim());
        for (Index j = 0; j < x.cols(); ++j) out.col(op.hash(j)) += op.sign(j) * x.col(j);
        return out;
    }
    if (x.rows() != op.input_dim()) throw dimension_error("count sketch: row count mismatch");
    Matrix out = Matrix::Zero(op.sketch_dim(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) out.row(op.hash(i)) += op.sign(i) * x.row(i);
    return out;
}

// ---------------------------------------------------------------------------
// Row-structured operands for sketched least squares.
//
// A row source exposes rows(), cols() and for_each_block(f), calling
// f(first_row, block_t) over consecutive row blocks. block_t holds the block
// transposed (cols × h) so that each operand row is a contiguous column; row
// sketches scatter whole columns. Structured operators generate rows on the fly.

class DenseRows {
public:
    explicit DenseRows(const Eigen::Ref<const Matrix>& m) : m_(m) {}
    [[nodiscard]] Index rows() const { return m_.rows(); }
    [[nodiscard]] Index cols() const { return m_.cols(); }
    template <class F>
    void for_each_block(F&& f) const {
        constexpr Index block = 256;
        for (Index r = 0; r < rows(); r += block) {
            const Index h = std::min(block, rows() - r);
            f(r, Matrix(m_.middleRows(r, h).transpose()));
        }
    }

private:
    Eigen::Ref<const Matrix> m_;
};

template <class Source>
[[nodiscard]] Matrix materialize_rows(const Source& src) {
    Matrix out(src.rows(), src.cols());
    src.for_each_block([&](Index r, const Matrix& bt) { out.middleRows(r, bt.cols()) = bt.transpose(); });
    return out;
}

/// (F_N ⊗ ... ⊗ F_1) · post, rows in first-factor-fastest order. `post` is optional.
class KroneckerRows {
public:
    explicit KroneckerRows(std::vector<Matrix> factors, std::optional<Matrix> post = std::nullopt)
        : f_(std::move(factors)), post_(std::move(post)) {
        if (f_.empty()) throw dimension_error("kronecker operator: no factors");
        for (const auto& m : f_) {
            kcols_ *= m.cols();
            rows_ *= m.rows();
        }
        if (post_ && post_->rows() != kcols_) throw dimension_error("kronecker operator: post matrix mismatch");
    }
    [[nodiscard]] Index rows() const { return rows_; }
    [[nodiscard]] Index cols() const { return post_ ? post_->cols() : kcols_; }

    /// One block per index tuple of factors 2..N: kron(row of the rest, F_1).
    template <class F>
    void for_each_block(F&& f) const {
        const Matrix first_t = f_.front().transpose();
        const Index fc = first_t.rows(), fr = first_t.cols();
        const Index outer = rows_ / fr;
        std::vector<Index> idx(f_.size(), 0);
        Matrix bt(kcols_, fr);
        Matrix post_t;
        if (post_) post_t = post_->transpose();
        Vector rest, next;
        for (Index o = 0; o < outer; ++o) {
            rest = Vector::Ones(1);
            for (std::size_t k = 1; k < f_.size(); ++k) {
                next.resize(rest.size() * f_[k].cols());
                for (Index c = 0; c < f_[k].cols(); ++c) next.segment(c * rest.size(), rest.size()) = f_[k](idx[k], c) * rest;
                std::swap(rest, next);
            }
            for (Index c = 0; c < rest.size(); ++c) bt.middleRows(c * fc, fc) = rest(c) * first_t;
            if (post_)
                f(o * fr, Matrix(post_t * bt));
            else
                f(o * fr, bt);
            for (std::size_t k = 1; k < f_.size(); ++k) {
                if (++idx[k] < f_[k].rows()) break;
                idx[k] = 0;
            }
        }
    }

    [[nodiscard]] Matrix materialize() const { return materialize_rows(*this); }

private:
    std::vector<Matrix> f_;
    std::optional<Matrix> post_;
    Index kcols_ = 1, rows_ = 1;
};

/// F_N ⊙ ... ⊙ F_1 (column-wise Kronecker), rows in first-factor-fastest order.
class KhatriRaoRows {
public:
    explicit KhatriRaoRows(std::vector<Matrix> factors) : f_(std::move(factors)) {
        if (f_.empty()) throw dimension_error("khatri-rao operator: no factors");
        for (const auto& m : f_) {
            if (m.cols() != f_.front().cols()) throw dimension_error("khatri-rao operator: column counts differ");
            rows_ *= m.rows();
        }
    }
    [[nodiscard]] Index rows() const { return rows_; }
    [[nodiscard]] Index cols() const { return f_.front().cols(); }

    template <class F>
    void for_each_block(F&& f) const {
        const Matrix first_t = f_.front().transpose();
        const Index outer = rows_ / first_t.cols();
        std::vector<Index> idx(f_.size(), 0);
        for (Index o = 0; o < outer; ++o) {
            Vector rest = Vector::Ones(cols());
            for (std::size_t k = 1; k < f_.size(); ++k) rest = rest.cwiseProduct(f_[k].row(idx[k]).transpose());
            f(o * first_t.cols(), Matrix(rest.asDiagonal() * first_t));
            for (std::size_t k = 1; k < f_.size(); ++k) {
                if (++idx[k] < f_[k].rows()) break;
                idx[k] = 0;
            }
        }
    }

    [[nodiscard]] Matrix materialize() const { return materialize_rows(*this); }

private:
    std::vector<Matrix> f_;
    Index rows_ = 1;
};

/// Rows of the transposed mode-n unfolding X_(n)ᵀ.
class UnfoldingRows {
public:
    UnfoldingRows(const DenseTensor& t, Index n) : t_(&t), n_(n) {
        check_mode(t.shape(), n);
        left_ = t.shape().left(n);
        right_ = t.shape().right(n);
    }
    [[nodiscard]] Index rows() const { return left_ * right_; }
    [[nodiscard]] Index cols() const { return t_->dim(n_); }

    template <class F>
    void for_each_block(F&& f) const {
        if (left_ > 1) {
            for (Index r = 0; r < right_; ++r) f(r * left_, Matrix(t_->slab(n_, r).transpose()));
            return;
        }
        // mode 0: X_(0) is already column-major I_0 × J
        const Eigen::Map<const Matrix> x(t_->raw(), cols(), right_);
        constexpr Index block = 256;
        for (Index r = 0; r < right_; r += block) {
            const Index h = std::min(block, right_ - r);
            f(r, Matrix(x.middleCols(r, h)));
        }
    }

private:
    const DenseTensor* t_;
    Index n_;
    Index left_ = 1, right_ = 1;
};

enum class LsqSketch { gaussian, count_sketch, row_sample, identity };

/// A fixed row sketch T: R^rows → R^L that can be applied to several operands.
class RowSketch {
public:
    RowSketch(LsqSketch kind, Index rows, Index sketch_rows, std::uint64_t seed)
        : kind_(kind), rows_(rows), l_(kind == LsqSketch::identity ? rows : sketch_rows), seed_(seed) {
        if (l_ < 1) throw dimension_error("row sketch: sketch size must be >= 1");
        if (kind_ == LsqSketch::count_sketch) cs_.emplace(rows, l_, seed);
        if (kind_ == LsqSketch::row_sample) {
            RandomStream s(seed);
            picks_.resize(static_cast<std::size_t>(rows));
            for (Index i = 0; i < l_; ++i)
                picks_[static_cast<std::size_t>(s.below(static_cast<std::uint64_t>(rows)))].push_back(i);
            scale_ = std::sqrt(static_cast<double>(rows) / static_cast<double>(l_));
        }
    }

    [[nodiscard]] Index input_dim() const { return rows_; }
    [[nodiscard]] Index sketch_dim() const { return l_; }
    [[nodiscard]] LsqSketch kind() const { return kind_; }

    template <class Source>
    [[nodiscard]] Matrix apply(const Source& src) const {
        if (src.rows() != rows_) throw dimension_error("row sketch: operand row count mismatch");
        Matrix out_t = Matrix::Zero(src.cols(), l_);
        const RandomStream base(seed_);
        src.for_each_block([&](Index r0, const Matrix& bt) {
            const Index h = bt.cols();
            switch (kind_) {
                case LsqSketch::identity:
                    out_t.middleCols(r0, h) = bt;
                    break;
                case LsqSketch::count_sketch:
                    for (Index i = 0; i < h; ++i) out_t.col(cs_->hash(r0 + i)) += cs_->sign(r0 + i) * bt.col(i);
                    break;
                case LsqSketch::row_sample:
                    for (Index i = 0; i < h; ++i)
                        for (Index dst : picks_[static_cast<std::size_t>(r0 + i)]) out_t.col(dst) = scale_ * bt.col(i);
                    break;
                case LsqSketch::gaussian: {
                    // row i of Gᵀ comes from its own substream so every operand sees the same G
                    Matrix gt(h, l_);
                    for (Index i = 0; i < h; ++i) {
                        RandomStream s = base.split(static_cast<std::uint64_t>(r0 + i));
                        for (Index k = 0; k < l_; ++k) gt(i, k) = s.gaussian();
                    }
                    out_t.noalias() += bt * gt / std::sqrt(static_cast<double>(l_));
                    break;
                }
            }
        });
        return out_t.transpose();
    }

private:
    LsqSketch kind_;
    Index rows_;
    Index l_;
    std::uint64_t seed_;
    std::optional<CountSketchOp> cs_;
    std::vector<std::vector<Index>> picks_;
    double scale_ = 1.0;
};

struct LsqResult {
    Matrix x;
    bool rank_deficient = false;
};

/// Least-squares solve by Householder QR; falls back to a complete orthogonal
/// decomposition (minimum-norm solution) when R has a negligible diagonal entry.
[[nodiscard]] inline LsqResult solve_least_squares(const Matrix& a, const Matrix& b) {
    if (a.rows() >= a.cols()) {
        Eigen::HouseholderQR<Matrix> qr(a);
        const Vector d = qr.matrixQR().diagonal().cwiseAbs();
        const double tol = static_cast<double>(std::max(a.rows(), a.cols())) *
                           std::numeric_limits<double>::epsilon() * d.maxCoeff();
        if (d.size() > 0 && d.minCoeff() > tol) return {qr.solve(b), false};
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    return {cod.solve(b), cod.rank() < a.cols()};
}

/// Normal-equations solve for sketched systems known to be well conditioned
/// (orthonormal A under a subspace embedding). Falls back to the QR route when
/// the Gram matrix's reciprocal condition estimate drops below 1e-6.
[[nodiscard]] inline LsqResult solve_least_squares_normal(const Matrix& a, const Matrix& b) {
    if (a.rows() >= a.cols()) {
        Matrix g = Matrix::Zero(a.cols(), a.cols());
        g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
        Eigen::LLT<Matrix> llt(g);
        if (llt.info() == Eigen::Success && llt.rcond() >= 1e-6) return {llt.solve(a.transpose() * b), false};
    }
    return solve_least_squares(a, b);
}

/// argmin ‖TAx − Tb‖ for a row-structured A and right-hand side(s) b.
template <class ASource, class BSource>
[[nodiscard]] LsqResult sketched_lsq(const ASource& a, const BSource& b, const RowSketch& sketch) {
    if (a.rows() != b.rows()) throw dimension_error("sketched_lsq: A and b row counts differ");
    if (sketch.sketch_dim() < a.cols())
        throw dimension_error("sketched_lsq: sketch rows L = " + std::to_string(sketch.sketch_dim()) +
                              " smaller than column count " + std::to_string(a.cols()));
    return solve_least_squares(sketch.apply(a), sketch.apply(b));
}

/// Default sketch: count-sketch with L = 20 · cols(A).
template <class ASource>
[[nodiscard]] LsqResult sketched_lsq(const ASource& a, const Vector& b, LsqSketch kind = LsqSketch::count_sketch,
                                     Index sketch_rows = 0, std::uint64_t seed = 0) {
    if (sketch_rows == 0) sketch_rows = 20 * a.cols();
    RowSketch t(kind, a.rows(), sketch_rows, seed);
    return sketched_lsq(a, DenseRows(b), t);
}

}  // namespace rtucker
