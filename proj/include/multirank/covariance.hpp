#ifndef MULTIRANK_COVARIANCE_HPP
#define MULTIRANK_COVARIANCE_HPP

#include <algorithm>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "multirank/ranks.hpp"

namespace multirank {

enum class CovarianceVariant { continuous, tied, censored };

inline std::string_view to_string(CovarianceVariant v) {
    switch (v) {
        case CovarianceVariant::continuous: return "continuous";
        case CovarianceVariant::tied: return "tied";
        case CovarianceVariant::censored: return "censored";
    }
    return "unknown";
}

struct CovarianceOptions {
    /// Eigenvalues at or below relative_epsilon * (largest eigenvalue) are dropped.
    double relative_epsilon = 1e-8;
};

/// Result of the thresholded eigendecomposition of a symmetric matrix.
struct PseudoInverse {
    Matrix inverse;
    /// K x K' factor W with inverse = W W'; whitens scores in the kept directions.
    Matrix whitener;
    Vector eigenvalues;
    Index effective_rank = 0;
    double epsilon = 0.0;
};

struct RankCovariance {
    Matrix sigma;
    Matrix inverse;
    Matrix whitener;
    Index effective_rank = 0;
    double epsilon = 0.0;
    CovarianceVariant variant = CovarianceVariant::continuous;
    /// Columns whose scores vanish identically (constant or fully missing).
    std::vector<Index> degenerate_columns;
};

/**
 * Moore-Penrose inverse of a symmetric matrix through its eigendecomposition,
 * keeping only the eigenvalues strictly above `epsilon`.
 */
inline PseudoInverse regularised_inverse(const Matrix& sigma, double epsilon) {
    detail::require(sigma.rows() == sigma.cols() && sigma.rows() > 0, ErrorCode::invalid_argument,
                    "covariance must be a non-empty square matrix");
    detail::require(epsilon > 0.0, ErrorCode::invalid_argument, "epsilon must be positive");
    const Matrix sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    detail::require(eig.info() == Eigen::Success, ErrorCode::degenerate_covariance,
                    "eigendecomposition failed");

    PseudoInverse out;
    out.eigenvalues = eig.eigenvalues();
    out.epsilon = epsilon;
    const Index K = sym.rows();
    std::vector<Index> kept;
    for (Index i = 0; i < K; ++i)
        if (out.eigenvalues(i) > epsilon) kept.push_back(i);
    out.effective_rank = static_cast<Index>(kept.size());
    detail::require(out.effective_rank > 0, ErrorCode::degenerate_covariance,
                    "covariance has no eigenvalue above the regularisation threshold");

    out.whitener.resize(K, out.effective_rank);
    for (Index c = 0; c < out.effective_rank; ++c) {
        const Index i = kept[static_cast<std::size_t>(c)];
        out.whitener.col(c) = eig.eigenvectors().col(i) / std::sqrt(out.eigenvalues(i));
    }
    out.inverse = out.whitener * out.whitener.transpose();
    out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
    return out;
}

namespace detail {

inline RankCovariance finish_covariance(Matrix sigma, CovarianceVariant variant, const CovarianceOptions& opts) {
    RankCovariance out;
    out.sigma = 0.5 * (sigma + sigma.transpose());
    out.variant = variant;
    for (Index k = 0; k < out.sigma.rows(); ++k)
        if (out.sigma(k, k) == 0.0) out.degenerate_columns.push_back(k);
    require(static_cast<Index>(out.degenerate_columns.size()) < out.sigma.rows(),
            ErrorCode::degenerate_covariance, "every coordinate is degenerate");

    const double largest = Eigen::SelfAdjointEigenSolver<Matrix>(out.sigma, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .cwiseAbs()
                               .maxCoeff();
    require(largest > 0.0, ErrorCode::degenerate_covariance, "covariance is identically zero");
    PseudoInverse inv = regularised_inverse(out.sigma, opts.relative_epsilon * largest);
    out.inverse = std::move(inv.inverse);
    out.whitener = std::move(inv.whitener);
    out.effective_rank = inv.effective_rank;
    out.epsilon = inv.epsilon;
    return out;
}

// (4 / n^3) * scores' scores, scores in rank units.
inline Matrix scaled_gram(const Matrix& scores) {
    const double n = static_cast<double>(scores.rows());
    Matrix g = scores.transpose() * scores;
    return g * (4.0 / (n * n * n));
}

} // namespace detail

/**
 * Rank covariance of tie-free data:
 * (4/n) sum_i (F_k(X_ik) - 1/2)(F_k'(X_ik') - 1/2) with F = rank / n.
 */
inline RankCovariance estimate_sigma(const RankTable& table, const CovarianceOptions& opts = {}) {
    detail::require(!table.has_ties, ErrorCode::invalid_argument,
                    "ties present: use estimate_sigma_tied");
    const double half_n = 0.5 * static_cast<double>(table.rows());
    const Matrix shifted = table.ranks.cast<double>().array() - half_n;
    return detail::finish_covariance(detail::scaled_gram(shifted), CovarianceVariant::continuous, opts);
}

/**
 * Covariance for discrete data, the sample analogue of
 * E[{F(X-) + F(X) - 1}{...}].  The centered-rank form would sit 1/n^2 below
 * estimate_sigma on tie-free data, so that case is delegated to it.
 */
inline RankCovariance estimate_sigma_tied(const RankTable& table, const CovarianceOptions& opts = {}) {
    if (!table.has_ties) return estimate_sigma(table, opts);
    return detail::finish_covariance(detail::scaled_gram(table.centered), CovarianceVariant::tied, opts);
}

inline RankCovariance estimate_sigma_tied(const DataMatrix& data, const CovarianceOptions& opts = {}) {
    return estimate_sigma_tied(compute_ranks(data), opts);
}

/**
 * Per-cell scores g_k(i) = Fup(lower_ik) + Flo(upper_ik -) - 1 where Fup and
 * Flo are the empirical c.d.f.s of the upper and lower bound columns and the
 * left limit counts strict inequalities.  n * g equals the row sums of the
 * pairwise censoring kernel.
 */
inline Matrix censored_scores(const DataMatrix& data) {
    const Index n = data.rows();
    const Index K = data.cols();
    Matrix g(n, K);
    std::vector<double> up(static_cast<std::size_t>(n)), lo(static_cast<std::size_t>(n));
    for (Index k = 0; k < K; ++k) {
        for (Index i = 0; i < n; ++i) {
            up[static_cast<std::size_t>(i)] = data.upper()(i, k);
            lo[static_cast<std::size_t>(i)] = data.lower()(i, k);
        }
        std::sort(up.begin(), up.end());
        std::sort(lo.begin(), lo.end());
        for (Index i = 0; i < n; ++i) {
            const auto below_upper = std::upper_bound(up.begin(), up.end(), data.lower()(i, k)) - up.begin();
            const auto below_lower = std::lower_bound(lo.begin(), lo.end(), data.upper()(i, k)) - lo.begin();
            g(i, k) = static_cast<double>(below_upper + below_lower - n) / static_cast<double>(n);
        }
    }
    return g;
}

inline RankCovariance estimate_sigma_censored(const DataMatrix& data, const CovarianceOptions& opts = {}) {
    if (!data.has_censoring() && data.all_finite()) {
        const RankTable table = compute_ranks(data);
        if (!table.has_ties) return estimate_sigma(table, opts);
    }
    const Matrix g = censored_scores(data);
    const double n = static_cast<double>(data.rows());
    return detail::finish_covariance(g.transpose() * g / n, CovarianceVariant::censored, opts);
}

/// Chooses the covariance variant matching the data: censored, tied or continuous.
inline RankCovariance estimate_covariance(const DataMatrix& data, const CovarianceOptions& opts = {}) {
    if (data.has_censoring()) return estimate_sigma_censored(data, opts);
    return estimate_sigma_tied(compute_ranks(data), opts);
}

inline RankCovariance estimate_covariance(const RankTable& table, const CovarianceOptions& opts = {}) {
    return estimate_sigma_tied(table, opts);
}

} // namespace multirank

#endif
