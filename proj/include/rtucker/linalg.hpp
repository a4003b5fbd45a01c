#pragma once

// Small dense helpers plus matrix-free views of unfoldings.
//
// Every kernel that only needs products with X or Xᵀ is written against the
// operator interface below, so a mode-n unfolding can be used in place of an
// explicit matrix without ever being materialized:
//
//   rows(), cols()
//   times(M)            X · M
//   transpose_times(M)  Xᵀ · M
//   gram()              X · Xᵀ
//   columns(idx)        X(:, idx)
//   column_norms_squared()
//   materialize()

#include "rtucker/sparse.hpp"
#include "rtucker/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <concepts>

namespace rtucker {

/// Thin orthonormal basis (economic QR) of the columns of y.
[[nodiscard]] inline Matrix orth(const Eigen::Ref<const Matrix>& y) {
    const Index k = std::min(y.rows(), y.cols());
    Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), k);
}

/// Economic QR returning both factors (Q: m×k, R: k×n with k = min(m, n)).
inline void thin_qr(const Eigen::Ref<const Matrix>& y, Matrix& q, Matrix& r) {
    const Index k = std::min(y.rows(), y.cols());
    Eigen::HouseholderQR<Matrix> qr(y);
    q = qr.householderQ() * Matrix::Identity(y.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

[[nodiscard]] inline double condition_number(const Eigen::Ref<const Matrix>& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// How leading left singular vectors are extracted.
enum class SvdMethod {
    automatic,  // Gram route when cols > 4·rows, else direct SVD
    svd,
    gram_evd,
};

struct LeftSingular {
    Matrix u;       // rows × r, orthonormal
    Vector sigma;   // r leading singular values, non-increasing
};

/// r leading eigenpairs of a symmetric PSD Gram matrix, as singular data.
[[nodiscard]] inline LeftSingular leading_from_gram(const Eigen::Ref<const Matrix>& gram, Index r) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Index n = gram.rows();
    LeftSingular out{Matrix(n, r), Vector(r)};
    // eigenvalues ascend; take from the back
    for (Index k = 0; k < r; ++k) {
        out.u.col(k) = es.eigenvectors().col(n - 1 - k);
        out.sigma(k) = std::sqrt(std::max(0.0, es.eigenvalues()(n - 1 - k)));
    }
    return out;
}

[[nodiscard]] inline LeftSingular leading_from_svd(const Eigen::Ref<const Matrix>& x, Index r) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
    LeftSingular out{Matrix::Zero(x.rows(), r), Vector::Zero(r)};
    const Index avail = std::min(r, static_cast<Index>(svd.singularValues().size()));
    out.u.leftCols(avail) = svd.matrixU().leftCols(avail);
    out.sigma.head(avail) = svd.singularValues().head(avail);
    if (avail < r) {
        // complete the basis when r exceeds the available singular vectors
        Matrix fill = Matrix::Identity(x.rows(), x.rows());
        Matrix q = orth((Matrix(x.rows(), r) << out.u.leftCols(avail), fill.leftCols(r - avail)).finished());
        out.u = q;
    }
    return out;
}

/// Dense matrix as an operator.
class MatrixOperator {
public:
    explicit MatrixOperator(const Matrix& m) : m_(&m) {}

    [[nodiscard]] Index rows() const { return m_->rows(); }
    [[nodiscard]] Index cols() const { return m_->cols(); }
    [[nodiscard]] Matrix times(const Eigen::Ref<const Matrix>& x) const { return *m_ * x; }
    [[nodiscard]] Matrix transpose_times(const Eigen::Ref<const Matrix>& y) const { return m_->transpose() * y; }
    [[nodiscard]] Matrix gram() const {
        Matrix g = Matrix::Zero(rows(), rows());
        g.selfadjointView<Eigen::Lower>().rankUpdate(*m_);
        return g.selfadjointView<Eigen::Lower>();
    }
    [[nodiscard]] Matrix columns(std::span<const Index> idx) const {
        Matrix out(rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Index>(c)) = m_->col(idx[c]);
        return out;
    }
    [[nodiscard]] Vector column_norms_squared() const { return m_->colwise().squaredNorm().transpose(); }
    [[nodiscard]] const Matrix& materialize() const { return *m_; }

private:
    const Matrix* m_;
};

/// Mode-n unfolding of a dense tensor, evaluated slab by slab.
class UnfoldingOperator {
public:
    UnfoldingOperator(const DenseTensor& t, Index n) : t_(&t), n_(n) {
        check_mode(t.shape(), n);
        left_ = t.shape().left(n);
        right_ = t.shape().right(n);
    }

    [[nodiscard]] Index rows() const { return t_->dim(n_); }
    [[nodiscard]] Index cols() const { return left_ * right_; }

    [[nodiscard]] Matrix times(const Eigen::Ref<const Matrix>& x) const {
        if (x.rows() != cols()) throw dimension_error("unfolding times: row mismatch");
        if (left_ == 1) return direct() * x;
        Matrix out = Matrix::Zero(rows(), x.cols());
        for (Index r = 0; r < right_; ++r) out.noalias() += t_->slab(n_, r).transpose() * x.middleRows(r * left_, left_);
        return out;
    }

    [[nodiscard]] Matrix transpose_times(const Eigen::Ref<const Matrix>& y) const {
        if (y.rows() != rows()) throw dimension_error("unfolding transpose_times: row mismatch");
        if (left_ == 1) return direct().transpose() * y;
        Matrix out(cols(), y.cols());
        for (Index r = 0; r < right_; ++r) out.middleRows(r * left_, left_).noalias() = t_->slab(n_, r) * y;
        return out;
    }

    [[nodiscard]] Matrix gram() const {
        Matrix g = Matrix::Zero(rows(), rows());
        if (left_ == 1) {
            g.selfadjointView<Eigen::Lower>().rankUpdate(direct());
        } else {
            for (Index r = 0; r < right_; ++r)
                g.selfadjointView<Eigen::Lower>().rankUpdate(t_->slab(n_, r).transpose());
        }
        return g.selfadjointView<Eigen::Lower>();
    }

    [[nodiscard]] Matrix columns(std::span<const Index> idx) const {
        Matrix out(rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            const Index j = idx[c];
            out.col(static_cast<Index>(c)) = t_->slab(n_, j / left_).row(j % left_).transpose();
        }
        return out;
    }

    [[nodiscard]] Vector column_norms_squared() const {
        Vector out(cols());
        for (Index r = 0; r < right_; ++r)
            out.segment(r * left_, left_) = t_->slab(n_, r).rowwise().squaredNorm();
        return out;
    }

    [[nodiscard]] Matrix materialize() const { return unfold(*t_, n_); }

private:
    [[nodiscard]] Eigen::Map<const Matrix> direct() const { return {t_->raw(), rows(), right_}; }

    const DenseTensor* t_;
    Index n_;
    Index left_ = 1, right_ = 1;
};

/// Mode-n unfolding of a COO tensor held as a compressed sparse matrix.
class SparseUnfoldingOperator {
public:
    SparseUnfoldingOperator(const SparseTensorCoo& t, Index n) {
        check_mode(t.shape(), n);
        std::vector<Eigen::Triplet<double, Index>> trip;
        trip.reserve(static_cast<std::size_t>(t.nnz()));
        for (Index e = 0; e < t.nnz(); ++e)
            trip.emplace_back(t.index(e)[static_cast<std::size_t>(n)], t.unfolding_column(e, n), t.value(e));
        m_.resize(t.shape()[n], t.shape().others(n));
        m_.setFromTriplets(trip.begin(), trip.end());
    }

    [[nodiscard]] Index rows() const { return m_.rows(); }
    [[nodiscard]] Index cols() const { return m_.cols(); }
    [[nodiscard]] Matrix times(const Eigen::Ref<const Matrix>& x) const { return m_ * x; }
    [[nodiscard]] Matrix transpose_times(const Eigen::Ref<const Matrix>& y) const { return m_.transpose() * y; }
    [[nodiscard]] Matrix gram() const { return Matrix(m_ * m_.transpose()); }
    [[nodiscard]] Matrix columns(std::span<const Index> idx) const {
        Matrix out(rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Index>(c)) = m_.col(idx[c]);
        return out;
    }
    [[nodiscard]] Vector column_norms_squared() const {
        Vector out(cols());
        for (Index j = 0; j < cols(); ++j) out(j) = m_.col(j).squaredNorm();
        return out;
    }
    [[nodiscard]] Matrix materialize() const { return Matrix(m_); }
    [[nodiscard]] const Eigen::SparseMatrix<double, Eigen::ColMajor, Index>& sparse() const { return m_; }

private:
    Eigen::SparseMatrix<double, Eigen::ColMajor, Index> m_;
};

template <class Op>
concept LinearOperator = requires(const Op& op, const Matrix& m) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.times(m) } -> std::convertible_to<Matrix>;
    { op.transpose_times(m) } -> std::convertible_to<Matrix>;
};

/// r leading left singular vectors of the operator.
template <class Op>
[[nodiscard]] LeftSingular leading_left_singular(const Op& op, Index r, SvdMethod method = SvdMethod::automatic) {
    if (r < 1 || r > op.rows()) throw dimension_error("leading_left_singular: rank out of range");
    if (method == SvdMethod::automatic) method = op.cols() > 4 * op.rows() ? SvdMethod::gram_evd : SvdMethod::svd;
    if (method == SvdMethod::gram_evd) return leading_from_gram(op.gram(), r);
    return leading_from_svd(op.materialize(), r);
}

}  // namespace rtucker
