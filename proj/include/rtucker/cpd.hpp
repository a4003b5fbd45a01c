#pragma once

// CP decomposition by ALS, and CPD of a large tensor through a Tucker-compressed
// core: compress, run ALS on the core, lift the factors with A^(n) = Q^(n) Ã^(n).

#include "rtucker/algorithms.hpp"

namespace rtucker {

struct CpModel {
    Vector weights;
    std::vector<Matrix> factors;  // I_n × R each

    [[nodiscard]] Index rank() const { return weights.size(); }
    [[nodiscard]] Index order() const { return static_cast<Index>(factors.size()); }

    void validate() const {
        for (const auto& f : factors)
            if (f.cols() != rank()) throw dimension_error("cp model: factor column count differs from rank");
    }
};

/// A_{N} ⊙ ... ⊙ A_{1} with mode `skip` left out; rows follow the unfolding column order.
[[nodiscard]] inline Matrix khatri_rao_except(const std::vector<Matrix>& factors, Index skip) {
    Matrix out;
    bool first = true;
    for (Index p = 0; p < static_cast<Index>(factors.size()); ++p) {
        if (p == skip) continue;
        out = first ? factors[static_cast<std::size_t>(p)] : khatri_rao(factors[static_cast<std::size_t>(p)], out);
        first = false;
    }
    if (first) out = Matrix::Ones(1, factors.empty() ? 0 : factors.front().cols());
    return out;
}

[[nodiscard]] inline DenseTensor cp_reconstruct(const CpModel& m) {
    m.validate();
    std::vector<Index> dims;
    for (const auto& f : m.factors) dims.push_back(f.rows());
    const Shape shape(dims);
    const Matrix unf = m.factors[0] * m.weights.asDiagonal() * khatri_rao_except(m.factors, 0).transpose();
    return fold(unf, 0, shape);
}

/// Unit-norm columns, non-negative weights sorted non-increasing, and the
/// largest-magnitude entry of each column positive in all but the last mode.
inline void canonicalize(CpModel& m) {
    m.validate();
    const Index r = m.rank(), order = m.order();
    for (Index c = 0; c < r; ++c) {
        for (Index n = 0; n < order; ++n) {
            auto col = m.factors[static_cast<std::size_t>(n)].col(c);
            const double nrm = col.norm();
            if (nrm > 0.0) {
                col /= nrm;
                m.weights(c) *= nrm;
            }
        }
        for (Index n = 0; n + 1 < order; ++n) {
            auto col = m.factors[static_cast<std::size_t>(n)].col(c);
            Index at = 0;
            col.cwiseAbs().maxCoeff(&at);
            if (col(at) < 0.0) {
                col = -col;
                m.factors[static_cast<std::size_t>(order - 1)].col(c) *= -1.0;
            }
        }
        if (m.weights(c) < 0.0) {
            m.weights(c) = -m.weights(c);
            m.factors[static_cast<std::size_t>(order - 1)].col(c) *= -1.0;
        }
    }
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::stable_sort(perm.begin(), perm.end(), [&](Index a, Index b) { return m.weights(a) > m.weights(b); });
    CpModel out;
    out.weights.resize(r);
    for (Index c = 0; c < r; ++c) out.weights(c) = m.weights(perm[static_cast<std::size_t>(c)]);
    for (const auto& f : m.factors) {
        Matrix g(f.rows(), r);
        for (Index c = 0; c < r; ++c) g.col(c) = f.col(perm[static_cast<std::size_t>(c)]);
        out.factors.push_back(std::move(g));
    }
    m = std::move(out);
}

struct Congruence {
    std::vector<Index> match;  // match[r] = component of the second model paired with r
    std::vector<double> score; // Π_n |cos| of the paired columns
    [[nodiscard]] double min() const {
        return score.empty() ? 0.0 : *std::min_element(score.begin(), score.end());
    }
};

/// Greedy pairing of components by the product over modes of absolute column cosines.
[[nodiscard]] inline Congruence congruence(const CpModel& a, const CpModel& b) {
    if (a.order() != b.order()) throw dimension_error("congruence: order mismatch");
    const Index ra = a.rank(), rb = b.rank();
    Matrix c = Matrix::Ones(ra, rb);
    for (Index n = 0; n < a.order(); ++n) {
        Matrix fa = a.factors[static_cast<std::size_t>(n)], fb = b.factors[static_cast<std::size_t>(n)];
        fa.colwise().normalize();
        fb.colwise().normalize();
        c = c.cwiseProduct((fa.transpose() * fb).cwiseAbs());
    }
    Congruence out;
    out.match.assign(static_cast<std::size_t>(ra), -1);
    out.score.assign(static_cast<std::size_t>(ra), 0.0);
    std::vector<bool> used_a(static_cast<std::size_t>(ra), false), used_b(static_cast<std::size_t>(rb), false);
    for (Index k = 0; k < std::min(ra, rb); ++k) {
        double best = -1.0;
        Index bi = -1, bj = -1;
        for (Index i = 0; i < ra; ++i) {
            if (used_a[static_cast<std::size_t>(i)]) continue;
            for (Index j = 0; j < rb; ++j)
                if (!used_b[static_cast<std::size_t>(j)] && c(i, j) > best) {
                    best = c(i, j);
                    bi = i;
                    bj = j;
                }
        }
        used_a[static_cast<std::size_t>(bi)] = used_b[static_cast<std::size_t>(bj)] = true;
        out.match[static_cast<std::size_t>(bi)] = bj;
        out.score[static_cast<std::size_t>(bi)] = best;
    }
    return out;
}

struct CpOptions {
    Index max_iters = 200;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

struct CpResult {
    CpModel model;
    std::vector<double> fit_trace;
    Index iterations = 0;
    std::vector<std::string> warnings;
};

/// CP-ALS with Hadamard-of-Grams normal equations. Initialized from leading
/// singular vectors when R ≤ min mode size, otherwise from Gaussian factors.
[[nodiscard]] inline CpResult cp_als(const DenseTensor& t, Index rank, const CpOptions& opts = {}) {
    if (rank < 1) throw rank_error("cp_als: rank must be >= 1");
    const Index order = t.order();
    CpResult res;
    auto& a = res.model.factors;
    const Index min_dim = *std::min_element(t.shape().dims().begin(), t.shape().dims().end());
    RandomStream root(opts.seed);
    for (Index n = 0; n < order; ++n) {
        if (rank <= min_dim)
            a.push_back(leading_left_singular(UnfoldingOperator(t, n), rank).u);
        else
            a.push_back(root.split(static_cast<std::uint64_t>(n)).matrix(t.dim(n), rank));
    }
    res.model.weights = Vector::Ones(rank);
    const double xnorm2 = t.vec().squaredNorm();
    const double xnorm = std::sqrt(xnorm2);
    bool ridged = false;
    double fit = 0.0;
    for (Index it = 0; it < opts.max_iters; ++it) {
        Matrix m;
        for (Index n = 0; n < order; ++n) {
            Matrix v = Matrix::Ones(rank, rank);
            for (Index p = 0; p < order; ++p)
                if (p != n) v = v.cwiseProduct(a[static_cast<std::size_t>(p)].transpose() * a[static_cast<std::size_t>(p)]);
            m = UnfoldingOperator(t, n).times(khatri_rao_except(a, n));
            Eigen::LLT<Matrix> llt(v);
            const double scale = std::max(1.0, v.diagonal().maxCoeff());
            if (llt.info() != Eigen::Success || v.diagonal().minCoeff() <= 0.0 ||
                condition_number(v) > 1e14) {
                v.diagonal().array() += 1e-12 * scale;
                llt.compute(v);
                ridged = true;
            }
            a[static_cast<std::size_t>(n)] = llt.solve(m.transpose()).transpose();
            if (n + 1 < order) {
                // keep the scale in the last factor so the fit below is exact
                for (Index c = 0; c < rank; ++c) {
                    const double nrm = a[static_cast<std::size_t>(n)].col(c).norm();
                    if (nrm > 0.0) a[static_cast<std::size_t>(n)].col(c) /= nrm;
                }
            }
        }
        const Matrix& last = a[static_cast<std::size_t>(order - 1)];
        const double inner = last.cwiseProduct(m).sum();
        Matrix g = Matrix::Ones(rank, rank);
        for (const auto& f : a) g = g.cwiseProduct(f.transpose() * f);
        const double model2 = g.sum();
        const double err2 = std::max(0.0, xnorm2 - 2.0 * inner + model2);
        const double next = xnorm > 0.0 ? 1.0 - std::sqrt(err2) / xnorm : 1.0;
        res.fit_trace.push_back(next);
        ++res.iterations;
        const bool done = it > 0 && std::abs(next - fit) < opts.tol;
        fit = next;
        if (done) break;
    }
    if (ridged) res.warnings.push_back("Khatri-Rao Gram was ill-conditioned; solved with ridge 1e-12");
    canonicalize(res.model);
    return res;
}

struct TuckerCpResult {
    CpResult cp;
    TuckerResult tucker;
};

/// Tucker-compress, run ALS on the core, lift A^(n) = Q^(n) Ã^(n).
[[nodiscard]] inline TuckerCpResult tucker_then_cp(const DenseTensor& t, TuckerAlgorithm algo, const TuckerConfig& cfg,
                                                   Index cp_rank, const CpOptions& opts = {}) {
    cfg.rank.check_against(t.shape());
    for (Index n = 0; n < cfg.rank.order(); ++n)
        if (cp_rank > cfg.rank[n])
            throw rank_error("tucker_then_cp: cp_rank " + std::to_string(cp_rank) + " exceeds tucker rank R_" +
                             std::to_string(n + 1) + " = " + std::to_string(cfg.rank[n]));
    TuckerCpResult out;
    out.tucker = decompose(t, algo, cfg);
    out.cp = cp_als(out.tucker.model.core, cp_rank, opts);
    for (Index n = 0; n < t.order(); ++n)
        out.cp.model.factors[static_cast<std::size_t>(n)] =
            out.tucker.model.factors[static_cast<std::size_t>(n)] * out.cp.model.factors[static_cast<std::size_t>(n)];
    canonicalize(out.cp.model);
    return out;
}

}  // namespace rtucker
