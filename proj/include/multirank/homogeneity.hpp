#ifndef MULTIRANK_HOMOGENEITY_HPP
#define MULTIRANK_HOMOGENEITY_HPP

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "multirank/covariance.hpp"

namespace multirank {

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
inline double chi2_sf(double df, double x) {
    detail::require(df > 0.0, ErrorCode::invalid_argument, "chi2_sf: df must be positive");
    detail::require(x >= 0.0, ErrorCode::invalid_argument, "chi2_sf: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Group boundaries n_1 < ... < n_{L-1}; group l covers rows n_l+1 .. n_{l+1}
/// (1-based) with n_0 = 0 and n_L = n.
struct GroupSpec {
    std::vector<Index> boundaries;

    Index num_groups() const noexcept { return static_cast<Index>(boundaries.size()) + 1; }

    void validate(Index n) const {
        detail::require(!boundaries.empty(), ErrorCode::invalid_argument, "need at least two groups");
        Index prev = 0;
        for (Index b : boundaries) {
            detail::require(b > prev, ErrorCode::invalid_argument,
                            "group boundaries must be strictly increasing and leave no empty group");
            prev = b;
        }
        detail::require(prev < n, ErrorCode::invalid_argument, "last group is empty");
    }

    /// Start (0-based, inclusive) and stop (exclusive) rows of group l.
    std::pair<Index, Index> group(Index l, Index n) const {
        const Index start = l == 0 ? 0 : boundaries[static_cast<std::size_t>(l - 1)];
        const Index stop = l + 1 == num_groups() ? n : boundaries[static_cast<std::size_t>(l)];
        return {start, stop};
    }
};

struct TestReport {
    double statistic = 0.0;
    Index df = 0;
    double pvalue = 1.0;
    Index effective_rank = 0;
    CovarianceVariant variant = CovarianceVariant::continuous;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_split(Index n, Index n1) {
    require(n1 >= 1 && n1 <= n - 1, ErrorCode::invalid_argument, "split index must lie in [1, n-1]");
}

inline double u_scale(Index n, Index n1) {
    return 2.0 / std::sqrt(static_cast<double>(n) * static_cast<double>(n1) * static_cast<double>(n - n1));
}

inline void sample_size_warning(Index n, Index K, std::vector<std::string>& warnings) {
    if (n < 8 * K)
        warnings.push_back("n = " + std::to_string(n) + " is below 8K = " + std::to_string(8 * K) +
                           "; the chi-square approximation may be inaccurate");
}

inline double quadratic_form(const Vector& u, const Matrix& inverse) { return u.dot(inverse * u); }

} // namespace detail

/**
 * Normalised Mann-Whitney vector from centered ranks:
 * U_k(n1) = 2 / sqrt(n n1 (n - n1)) * sum_{j > n1} centered(j, k).
 */
inline Vector u_vector(const RankTable& table, Index n1) {
    const Index n = table.rows();
    detail::check_split(n, n1);
    Vector tail = table.centered.bottomRows(n - n1).colwise().sum().transpose();
    return tail * detail::u_scale(n, n1);
}

/// Double sum of the censoring kernel over (i <= n1, j > n1); O(K n1 (n - n1)).
inline Vector u_vector_censored(const DataMatrix& data, Index n1) {
    const Index n = data.rows();
    detail::check_split(n, n1);
    Vector u(data.cols());
    for (Index k = 0; k < data.cols(); ++k) {
        long total = 0;
        for (Index i = 0; i < n1; ++i)
            for (Index j = n1; j < n; ++j)
                total += pair_kernel(data.lower()(i, k), data.upper()(i, k), data.lower()(j, k), data.upper()(j, k));
        u(k) = static_cast<double>(total);
    }
    return u * (0.5 * detail::u_scale(n, n1));
}

/// S_n(n1) = U' Sigma^+ U with the covariance variant matched to the data.
inline TestReport two_sample_stat(const DataMatrix& data, Index n1, const CovarianceOptions& opts = {}) {
    const Index n = data.rows();
    const Index K = data.cols();
    detail::require(n >= std::max<Index>(K + 1, 4), ErrorCode::invalid_argument,
                    "two-sample test needs n >= max(K + 1, 4)");
    detail::check_split(n, n1);

    Vector u;
    RankCovariance cov;
    if (data.has_censoring()) {
        cov = estimate_sigma_censored(data, opts);
        u = u_vector_censored(data, n1);
    } else {
        const RankTable table = compute_ranks(data);
        cov = estimate_covariance(table, opts);
        u = u_vector(table, n1);
    }

    TestReport report;
    report.statistic = std::max(0.0, detail::quadratic_form(u, cov.inverse));
    report.effective_rank = cov.effective_rank;
    report.df = cov.effective_rank;
    report.variant = cov.variant;
    report.pvalue = chi2_sf(static_cast<double>(report.df), report.statistic);
    detail::sample_size_warning(n, K, report.warnings);
    return report;
}

/// Per-group means of the centered ranks, one row per group.
inline Matrix group_mean_ranks(const RankTable& table, const GroupSpec& groups) {
    const Index n = table.rows();
    groups.validate(n);
    Matrix means(groups.num_groups(), table.cols());
    for (Index l = 0; l < groups.num_groups(); ++l) {
        const auto [start, stop] = groups.group(l, n);
        means.row(l) = table.centered.middleRows(start, stop - start).colwise().sum() /
                       static_cast<double>(stop - start);
    }
    return means;
}

/// T = (4/n^2) sum_l (n_{l+1} - n_l) Rbar_l' Sigma^+ Rbar_l.
inline double multigroup_stat_value(const RankTable& table, const Matrix& inverse, const GroupSpec& groups) {
    const Index n = table.rows();
    const Matrix means = group_mean_ranks(table, groups);
    double total = 0.0;
    for (Index l = 0; l < groups.num_groups(); ++l) {
        const auto [start, stop] = groups.group(l, n);
        const Vector r = means.row(l).transpose();
        total += static_cast<double>(stop - start) * detail::quadratic_form(r, inverse);
    }
    const double nd = static_cast<double>(n);
    return std::max(0.0, 4.0 * total / (nd * nd));
}

/// Multivariate Kruskal-Wallis statistic; df = (L - 1) K'.
inline TestReport multigroup_stat(const DataMatrix& data, const GroupSpec& groups,
                                  const CovarianceOptions& opts = {}) {
    detail::require(!data.has_censoring(), ErrorCode::invalid_argument,
                    "the multigroup statistic is not defined for censored or missing data");
    const RankTable table = compute_ranks(data);
    groups.validate(table.rows());
    const RankCovariance cov = estimate_covariance(table, opts);

    TestReport report;
    report.statistic = multigroup_stat_value(table, cov.inverse, groups);
    report.effective_rank = cov.effective_rank;
    report.df = (groups.num_groups() - 1) * cov.effective_rank;
    report.variant = cov.variant;
    report.pvalue = chi2_sf(static_cast<double>(report.df), report.statistic);
    detail::sample_size_warning(data.rows(), data.cols(), report.warnings);
    return report;
}

} // namespace multirank

#endif
