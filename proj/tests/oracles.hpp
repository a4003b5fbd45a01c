#pragma once

// Reference implementations for the tests. They follow the textbook
// definitions entry by entry and share no code with the library kernels.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Dims = std::vector<long>;

struct Tensor {
    Dims dims;
    std::vector<double> data;  // first index fastest

    long numel() const {
        long n = 1;
        for (long d : dims) n *= d;
        return n;
    }
};

/// 1-based multi-index → 0-based storage offset, 1 + Σ (i_k − 1) Π_{m<k} I_m minus one.
inline long offset(const Dims& dims, const std::vector<long>& idx1) {
    long lin = 0, stride = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        lin += (idx1[k] - 1) * stride;
        stride *= dims[k];
    }
    return lin;
}

/// Visits all 1-based multi-indices in storage order.
template <class F>
void for_each(const Dims& dims, F&& f) {
    std::vector<long> idx(dims.size(), 1);
    long total = 1;
    for (long d : dims) total *= d;
    for (long lin = 0; lin < total; ++lin) {
        f(idx);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (++idx[k] <= dims[k]) break;
            idx[k] = 1;
        }
    }
}

/// n-unfolding with n 1-based: X_(n)(i_n, j), j = 1 + Σ_{k≠n} (i_k − 1) J_k, J_k = Π_{m<k, m≠n} I_m.
inline Matrix unfold(const Tensor& t, long n) {
    long cols = 1;
    for (std::size_t k = 0; k < t.dims.size(); ++k)
        if (static_cast<long>(k) + 1 != n) cols *= t.dims[k];
    Matrix out(t.dims[static_cast<std::size_t>(n - 1)], cols);
    for_each(t.dims, [&](const std::vector<long>& idx) {
        long j = 1;
        for (long k = 1; k <= static_cast<long>(t.dims.size()); ++k) {
            if (k == n) continue;
            long jk = 1;
            for (long m = 1; m < k; ++m)
                if (m != n) jk *= t.dims[static_cast<std::size_t>(m - 1)];
            j += (idx[static_cast<std::size_t>(k - 1)] - 1) * jk;
        }
        out(idx[static_cast<std::size_t>(n - 1)] - 1, j - 1) = t.data[static_cast<std::size_t>(offset(t.dims, idx))];
    });
    return out;
}

/// (t ×_n B)(…, j, …) = Σ_{i_n} t(…, i_n, …) B(j, i_n), n 1-based.
inline Tensor mode_product(const Tensor& t, const Matrix& b, long n) {
    Tensor out;
    out.dims = t.dims;
    out.dims[static_cast<std::size_t>(n - 1)] = b.rows();
    out.data.assign(static_cast<std::size_t>(out.numel()), 0.0);
    for_each(t.dims, [&](const std::vector<long>& idx) {
        const double v = t.data[static_cast<std::size_t>(offset(t.dims, idx))];
        std::vector<long> o = idx;
        for (long j = 1; j <= b.rows(); ++j) {
            o[static_cast<std::size_t>(n - 1)] = j;
            out.data[static_cast<std::size_t>(offset(out.dims, o))] += v * b(j - 1, idx[static_cast<std::size_t>(n - 1)] - 1);
        }
    });
    return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < out.rows(); ++i)
        for (long j = 0; j < out.cols(); ++j)
            out(i, j) = a(i / b.rows(), j / b.cols()) * b(i % b.rows(), j % b.cols());
    return out;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double normal() { return norm_(gen_); }
    long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen_); }
    Matrix matrix(long r, long c) {
        Matrix m(r, c);
        for (long j = 0; j < c; ++j)
            for (long i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }
    Tensor tensor(const Dims& dims) {
        Tensor t{dims, {}};
        t.data.resize(static_cast<std::size_t>(t.numel()));
        for (double& v : t.data) v = normal();
        return t;
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> norm_;
};

}  // namespace oracle
