#pragma once

// Coordinate-format sparse tensors. Unfoldings are never materialized; fibers and
// mode products are computed by filtering/accumulating over the stored entries.

#include "rtucker/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace rtucker {

class SparseTensorCoo {
public:
    SparseTensorCoo() = default;
    explicit SparseTensorCoo(Shape shape) : shape_(std::move(shape)) {}

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] Index order() const { return shape_.order(); }
    [[nodiscard]] Index nnz() const { return static_cast<Index>(values_.size()); }

    /// 0-based index tuple of entry e.
    [[nodiscard]] std::span<const Index> index(Index e) const {
        return {indices_.data() + e * order(), static_cast<std::size_t>(order())};
    }
    [[nodiscard]] double value(Index e) const { return values_[static_cast<std::size_t>(e)]; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    /// Appends an entry (0-based). Call canonicalize() once ingest is finished.
    void push(std::span<const Index> idx, double v) {
        if (static_cast<Index>(idx.size()) != order()) throw dimension_error("coo: index arity != order");
        for (Index k = 0; k < order(); ++k)
            if (idx[static_cast<std::size_t>(k)] < 0 || idx[static_cast<std::size_t>(k)] >= shape_[k])
                throw dimension_error("coo: index out of bounds in mode " + std::to_string(k + 1));
        indices_.insert(indices_.end(), idx.begin(), idx.end());
        values_.push_back(v);
        canonical_ = false;
    }

    [[nodiscard]] Index linear_index(Index e) const {
        Index lin = 0, stride = 1;
        for (Index k = 0; k < order(); ++k) {
            lin += indices_[static_cast<std::size_t>(e * order() + k)] * stride;
            stride *= shape_[k];
        }
        return lin;
    }

    /// Sorts entries into storage order and sums duplicate coordinates.
    void canonicalize() {
        if (canonical_) return;
        std::vector<Index> lin(values_.size());
        for (Index e = 0; e < nnz(); ++e) lin[static_cast<std::size_t>(e)] = linear_index(e);
        std::vector<Index> perm(values_.size());
        std::iota(perm.begin(), perm.end(), Index{0});
        std::stable_sort(perm.begin(), perm.end(),
                         [&](Index a, Index b) { return lin[static_cast<std::size_t>(a)] < lin[static_cast<std::size_t>(b)]; });
        std::vector<Index> idx;
        std::vector<double> val;
        idx.reserve(indices_.size());
        val.reserve(values_.size());
        Index last = -1;
        for (Index p : perm) {
            const Index l = lin[static_cast<std::size_t>(p)];
            if (l == last) {
                val.back() += values_[static_cast<std::size_t>(p)];
                continue;
            }
            last = l;
            auto src = index(p);
            idx.insert(idx.end(), src.begin(), src.end());
            val.push_back(values_[static_cast<std::size_t>(p)]);
        }
        indices_ = std::move(idx);
        values_ = std::move(val);
        canonical_ = true;
    }

    [[nodiscard]] DenseTensor to_dense() const {
        DenseTensor out(shape_);
        for (Index e = 0; e < nnz(); ++e) out.raw()[linear_index(e)] += value(e);
        return out;
    }

    [[nodiscard]] double frobenius_norm() const {
        // duplicates must be merged before the norm is meaningful
        if (!canonical_) {
            SparseTensorCoo c = *this;
            c.canonicalize();
            return c.frobenius_norm();
        }
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

    /// Column index of entry e in the mode-n unfolding.
    [[nodiscard]] Index unfolding_column(Index e, Index n) const {
        Index j = 0, stride = 1;
        for (Index k = 0; k < order(); ++k) {
            if (k == n) continue;
            j += indices_[static_cast<std::size_t>(e * order() + k)] * stride;
            stride *= shape_[k];
        }
        return j;
    }

    /// Columns `cols` of the mode-n unfolding, gathered by index filtering.
    [[nodiscard]] Matrix fibers(Index n, std::span<const Index> cols) const {
        check_mode(shape_, n);
        Matrix out = Matrix::Zero(shape_[n], static_cast<Index>(cols.size()));
        std::unordered_map<Index, std::vector<Index>> where;
        for (std::size_t c = 0; c < cols.size(); ++c) where[cols[c]].push_back(static_cast<Index>(c));
        for (Index e = 0; e < nnz(); ++e) {
            auto it = where.find(unfolding_column(e, n));
            if (it == where.end()) continue;
            for (Index c : it->second) out(index(e)[static_cast<std::size_t>(n)], c) += value(e);
        }
        return out;
    }

    /// Squared norm of every mode-n fiber (column norms of the unfolding).
    [[nodiscard]] Vector fiber_norms_squared(Index n) const {
        Vector out = Vector::Zero(shape_.others(n));
        // merge duplicates per coordinate before squaring
        SparseTensorCoo c = *this;
        c.canonicalize();
        for (Index e = 0; e < c.nnz(); ++e) out(c.unfolding_column(e, n)) += c.value(e) * c.value(e);
        return out;
    }

    /// coo ×_n Bᵀ accumulated directly into a dense result (B is I_n × J).
    [[nodiscard]] DenseTensor mode_product_transposed(const Eigen::Ref<const Matrix>& b, Index n) const {
        check_mode(shape_, n);
        if (b.rows() != shape_[n]) throw dimension_error("coo mode product: row count mismatch");
        DenseTensor out(shape_.with(n, b.cols()));
        const Index l = shape_.left(n);
        for (Index e = 0; e < nnz(); ++e) {
            const Index j = unfolding_column(e, n);
            const Index lo = j % l, hi = j / l;
            const Index in = index(e)[static_cast<std::size_t>(n)];
            double* base = out.raw() + lo + hi * l * b.cols();
            for (Index c = 0; c < b.cols(); ++c) base[c * l] += value(e) * b(in, c);
        }
        return out;
    }

private:
    Shape shape_;
    std::vector<Index> indices_;
    std::vector<double> values_;
    bool canonical_ = true;
};

}  // namespace rtucker
