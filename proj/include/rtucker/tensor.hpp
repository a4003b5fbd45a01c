#pragma once

// Dense tensors in first-mode-fastest layout, n-unfolding, mode products and
// the Kronecker/Khatri-Rao helpers the decomposition algorithms rely on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtucker {

using Index = std::ptrdiff_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class dimension_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered mode sizes I_1..I_N. Modes are 0-based in the API.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}
    explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw dimension_error("shape: order must be >= 1");
        for (Index d : dims_)
            if (d < 1) throw dimension_error("shape: every mode size must be >= 1");
        // overflow guard for the element count
        Index n = 1;
        for (Index d : dims_) {
            if (n > std::numeric_limits<Index>::max() / d)
                throw dimension_error("shape: element count overflows index type");
            n *= d;
        }
        numel_ = n;
    }

    [[nodiscard]] Index order() const { return static_cast<Index>(dims_.size()); }
    [[nodiscard]] Index operator[](Index n) const { return dims_[static_cast<std::size_t>(n)]; }
    [[nodiscard]] Index numel() const { return numel_; }
    [[nodiscard]] const std::vector<Index>& dims() const { return dims_; }

    /// Product of mode sizes strictly before mode n.
    [[nodiscard]] Index left(Index n) const {
        Index p = 1;
        for (Index k = 0; k < n; ++k) p *= dims_[static_cast<std::size_t>(k)];
        return p;
    }
    /// Product of mode sizes strictly after mode n.
    [[nodiscard]] Index right(Index n) const {
        Index p = 1;
        for (Index k = n + 1; k < order(); ++k) p *= dims_[static_cast<std::size_t>(k)];
        return p;
    }
    /// Π_{k≠n} I_k, the column count of the mode-n unfolding.
    [[nodiscard]] Index others(Index n) const { return left(n) * right(n); }

    [[nodiscard]] Shape with(Index n, Index size) const {
        auto d = dims_;
        d[static_cast<std::size_t>(n)] = size;
        return Shape(std::move(d));
    }

    friend bool operator==(const Shape& a, const Shape& b) { return a.dims_ == b.dims_; }

    [[nodiscard]] std::string str() const {
        std::string s;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (k) s += "x";
            s += std::to_string(dims_[k]);
        }
        return s;
    }

private:
    std::vector<Index> dims_{1};
    Index numel_ = 1;
};

/// Multilinear (Tucker) rank (R_1..R_N).
struct MultilinearRank {
    std::vector<Index> ranks;

    MultilinearRank() = default;
    MultilinearRank(std::initializer_list<Index> r) : ranks(r) {}
    explicit MultilinearRank(std::vector<Index> r) : ranks(std::move(r)) {}

    [[nodiscard]] Index order() const { return static_cast<Index>(ranks.size()); }
    [[nodiscard]] Index operator[](Index n) const { return ranks[static_cast<std::size_t>(n)]; }

    static MultilinearRank full(const Shape& s) { return MultilinearRank(s.dims()); }

    void check_against(const Shape& s) const {
        if (order() != s.order())
            throw dimension_error("rank: length " + std::to_string(order()) +
                                  " does not match tensor order " + std::to_string(s.order()));
        for (Index n = 0; n < order(); ++n) {
            if ((*this)[n] < 1 || (*this)[n] > s[n])
                throw dimension_error("rank: R_" + std::to_string(n + 1) + "=" +
                                      std::to_string((*this)[n]) + " outside [1, " +
                                      std::to_string(s[n]) + "]");
        }
    }
};

inline void check_mode(const Shape& s, Index n) {
    if (n < 0 || n >= s.order())
        throw dimension_error("mode " + std::to_string(n) + " out of range for order " +
                              std::to_string(s.order()));
}

/// N-way array of doubles. Entry (i_1..i_N) lives at Σ i_k Π_{m<k} I_m (0-based).
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape)
        : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_.numel()), 0.0) {}
    DenseTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<Index>(data_.size()) != shape_.numel())
            throw dimension_error("tensor: data length " + std::to_string(data_.size()) +
                                  " != element count " + std::to_string(shape_.numel()));
    }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] Index order() const { return shape_.order(); }
    [[nodiscard]] Index dim(Index n) const { return shape_[n]; }
    [[nodiscard]] Index size() const { return shape_.numel(); }

    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] double* raw() { return data_.data(); }
    [[nodiscard]] const double* raw() const { return data_.data(); }

    [[nodiscard]] Eigen::Map<const Vector> vec() const { return {data_.data(), size()}; }
    [[nodiscard]] Eigen::Map<Vector> vec() { return {data_.data(), size()}; }

    [[nodiscard]] Index linear_index(std::span<const Index> idx) const {
        Index lin = 0, stride = 1;
        for (Index k = 0; k < order(); ++k) {
            lin += idx[static_cast<std::size_t>(k)] * stride;
            stride *= shape_[k];
        }
        return lin;
    }
    [[nodiscard]] double operator()(std::span<const Index> idx) const {
        return data_[static_cast<std::size_t>(linear_index(idx))];
    }
    double& operator()(std::span<const Index> idx) { return data_[static_cast<std::size_t>(linear_index(idx))]; }
    [[nodiscard]] double at(std::initializer_list<Index> idx) const {
        return (*this)(std::span<const Index>(idx.begin(), idx.size()));
    }
    double& at(std::initializer_list<Index> idx) { return (*this)(std::span<const Index>(idx.begin(), idx.size())); }

    /// Calls f(index, value&) over every entry in storage order.
    template <class F>
    void for_each_index(F&& f) {
        std::vector<Index> idx(static_cast<std::size_t>(order()), 0);
        for (Index lin = 0; lin < size(); ++lin) {
            f(std::span<const Index>(idx), data_[static_cast<std::size_t>(lin)]);
            for (Index k = 0; k < order(); ++k) {
                if (++idx[static_cast<std::size_t>(k)] < shape_[k]) break;
                idx[static_cast<std::size_t>(k)] = 0;
            }
        }
    }

    /// View as left(n) x I_n x right(n): slab r is a column-major left × I_n matrix.
    [[nodiscard]] Eigen::Map<const Matrix> slab(Index n, Index r) const {
        const Index l = shape_.left(n), m = shape_[n];
        return {data_.data() + r * l * m, l, m};
    }
    [[nodiscard]] Eigen::Map<Matrix> slab(Index n, Index r) {
        const Index l = shape_.left(n), m = shape_[n];
        return {data_.data() + r * l * m, l, m};
    }

private:
    Shape shape_;
    std::vector<double> data_{0.0};
};

[[nodiscard]] inline double frobenius_norm(const DenseTensor& t) { return t.vec().norm(); }

[[nodiscard]] inline DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
    if (!(a.shape() == b.shape())) throw dimension_error("tensor difference: shape mismatch");
    DenseTensor out(a.shape());
    out.vec() = a.vec() - b.vec();
    return out;
}

/// n-unfolding: I_n × Π_{k≠n} I_k, column j = Σ_{k≠n} i_k J_k with J_k = Π_{m≠n,m<k} I_m.
[[nodiscard]] inline Matrix unfold(const DenseTensor& t, Index n) {
    check_mode(t.shape(), n);
    const Index l = t.shape().left(n), m = t.dim(n), r = t.shape().right(n);
    Matrix out(m, l * r);
    for (Index k = 0; k < r; ++k) out.middleCols(k * l, l) = t.slab(n, k).transpose();
    return out;
}

/// Inverse of unfold.
[[nodiscard]] inline DenseTensor fold(const Eigen::Ref<const Matrix>& mat, Index n, const Shape& shape) {
    check_mode(shape, n);
    if (mat.rows() != shape[n] || mat.cols() != shape.others(n))
        throw dimension_error("fold: matrix is " + std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()) +
                              ", expected " + std::to_string(shape[n]) + "x" + std::to_string(shape.others(n)));
    DenseTensor out(shape);
    const Index l = shape.left(n), r = shape.right(n);
    for (Index k = 0; k < r; ++k) out.slab(n, k) = mat.middleCols(k * l, l).transpose();
    return out;
}

/// t ×_n B, with B of size J × I_n.
[[nodiscard]] inline DenseTensor mode_product(const DenseTensor& t, const Eigen::Ref<const Matrix>& b, Index n) {
    check_mode(t.shape(), n);
    if (b.cols() != t.dim(n))
        throw dimension_error("mode_product: matrix has " + std::to_string(b.cols()) + " columns, mode " +
                              std::to_string(n + 1) + " has size " + std::to_string(t.dim(n)));
    DenseTensor out(t.shape().with(n, b.rows()));
    const Index l = t.shape().left(n), r = t.shape().right(n);
    if (l == 1) {
        Eigen::Map<const Matrix> in(t.raw(), t.dim(n), r);
        Eigen::Map<Matrix> res(out.raw(), b.rows(), r);
        res.noalias() = b * in;
        return out;
    }
    for (Index k = 0; k < r; ++k) out.slab(n, k).noalias() = t.slab(n, k) * b.transpose();
    return out;
}

/// t ×_n Bᵀ, with B of size I_n × J.
[[nodiscard]] inline DenseTensor mode_product_transposed(const DenseTensor& t, const Eigen::Ref<const Matrix>& b,
                                                         Index n) {
    check_mode(t.shape(), n);
    if (b.rows() != t.dim(n))
        throw dimension_error("mode_product_transposed: matrix has " + std::to_string(b.rows()) +
                              " rows, mode " + std::to_string(n + 1) + " has size " + std::to_string(t.dim(n)));
    DenseTensor out(t.shape().with(n, b.cols()));
    const Index l = t.shape().left(n), r = t.shape().right(n);
    if (l == 1) {
        Eigen::Map<const Matrix> in(t.raw(), t.dim(n), r);
        Eigen::Map<Matrix> res(out.raw(), b.cols(), r);
        res.noalias() = b.transpose() * in;
        return out;
    }
    for (Index k = 0; k < r; ++k) out.slab(n, k).noalias() = t.slab(n, k) * b;
    return out;
}

struct ModeMatrix {
    Index mode;
    Matrix matrix;
};

/// Applies t ×_{m} M_m for each entry (or M_mᵀ when transpose is set).
[[nodiscard]] inline DenseTensor multi_mode_product(const DenseTensor& t, std::span<const ModeMatrix> mats,
                                                    bool transpose = false) {
    std::vector<bool> seen(static_cast<std::size_t>(t.order()), false);
    for (const auto& mm : mats) {
        check_mode(t.shape(), mm.mode);
        if (seen[static_cast<std::size_t>(mm.mode)])
            throw dimension_error("multi_mode_product: duplicate mode " + std::to_string(mm.mode + 1));
        seen[static_cast<std::size_t>(mm.mode)] = true;
    }
    DenseTensor out = t;
    for (const auto& mm : mats)
        out = transpose ? mode_product_transposed(out, mm.matrix, mm.mode) : mode_product(out, mm.matrix, mm.mode);
    return out;
}

/// Shrinks the modes in ascending size-reduction order; factors[n] is I_n × R_n and
/// the result is t ×_1 F_1ᵀ ... ×_N F_Nᵀ (skipping `skip` when set).
[[nodiscard]] inline DenseTensor project_all(const DenseTensor& t, std::span<const Matrix> factors,
                                             Index skip = -1) {
    if (static_cast<Index>(factors.size()) != t.order())
        throw dimension_error("project_all: need one factor per mode");
    std::vector<Index> modes;
    for (Index n = 0; n < t.order(); ++n)
        if (n != skip) modes.push_back(n);
    // contract the modes with the largest reduction first
    std::sort(modes.begin(), modes.end(), [&](Index a, Index b) {
        const auto& fa = factors[static_cast<std::size_t>(a)];
        const auto& fb = factors[static_cast<std::size_t>(b)];
        return static_cast<double>(fa.cols()) / static_cast<double>(fa.rows()) <
               static_cast<double>(fb.cols()) / static_cast<double>(fb.rows());
    });
    DenseTensor out = t;
    for (Index n : modes) out = mode_product_transposed(out, factors[static_cast<std::size_t>(n)], n);
    return out;
}

/// Standard Kronecker product.
[[nodiscard]] inline Matrix kronecker(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-wise Kronecker product.
[[nodiscard]] inline Matrix khatri_rao(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    if (a.cols() != b.cols())
        throw dimension_error("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.cols()) + ")");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
    return out;
}

/// SVD pseudo-inverse; singular values below max(rows,cols)·eps·σ_max are dropped.
[[nodiscard]] inline Matrix pseudo_inverse(const Eigen::Ref<const Matrix>& m) {
    if (m.size() == 0) throw dimension_error("pseudo_inverse: empty matrix");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Core tensor plus one factor per mode.
struct TuckerModel {
    DenseTensor core;
    std::vector<Matrix> factors;
    std::vector<bool> orthonormal;

    [[nodiscard]] Index order() const { return static_cast<Index>(factors.size()); }

    [[nodiscard]] MultilinearRank rank() const { return MultilinearRank(core.shape().dims()); }

    [[nodiscard]] Shape target_shape() const {
        std::vector<Index> d;
        for (const auto& f : factors) d.push_back(f.rows());
        return Shape(std::move(d));
    }

    void validate() const {
        if (core.order() != order()) throw dimension_error("tucker model: core order != factor count");
        for (Index n = 0; n < order(); ++n)
            if (factors[static_cast<std::size_t>(n)].cols() != core.dim(n))
                throw dimension_error("tucker model: factor " + std::to_string(n + 1) +
                                      " column count does not match core");
    }
};

[[nodiscard]] inline bool is_orthonormal(const Matrix& q, double tol = 1e-10) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// S ×_1 Q^(1) ... ×_N Q^(N).
[[nodiscard]] inline DenseTensor tucker_reconstruct(const TuckerModel& model) {
    model.validate();
    // expand the modes with the smallest growth first
    std::vector<Index> modes(static_cast<std::size_t>(model.order()));
    std::iota(modes.begin(), modes.end(), Index{0});
    std::sort(modes.begin(), modes.end(), [&](Index a, Index b) {
        const auto& fa = model.factors[static_cast<std::size_t>(a)];
        const auto& fb = model.factors[static_cast<std::size_t>(b)];
        return static_cast<double>(fa.rows()) / static_cast<double>(fa.cols()) <
               static_cast<double>(fb.rows()) / static_cast<double>(fb.cols());
    });
    DenseTensor out = model.core;
    for (Index n : modes) out = mode_product(out, model.factors[static_cast<std::size_t>(n)], n);
    return out;
}

/// Q^(N) ⊗ ... ⊗ Q^(1) with mode `skip` left out; rows follow the n-unfolding column order.
[[nodiscard]] inline Matrix reversed_kronecker(std::span<const Matrix> factors, Index skip = -1) {
    Matrix out = Matrix::Ones(1, 1);
    for (Index n = 0; n < static_cast<Index>(factors.size()); ++n) {
        if (n == skip) continue;
        out = kronecker(factors[static_cast<std::size_t>(n)], out);
    }
    return out;
}

}  // namespace rtucker
