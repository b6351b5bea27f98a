#ifndef MULTIRANK_RANKS_HPP
#define MULTIRANK_RANKS_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "multirank/data_matrix.hpp"

namespace multirank {

using IntMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

/**
 * Marginal rank summaries of an uncensored observation matrix.
 *
 * ranks(j, k)       = #{i : X(i,k) <= X(j,k)}
 * tie_counts(j, k)  = #{i : X(i,k) == X(j,k)}
 * centered(j, k)    = ranks(j, k) - (n + tie_counts(j, k)) / 2
 *
 * `centered` is the midrank minus (n + 1) / 2; every entry is a multiple of
 * 1/2, so column sums are exactly zero in floating point.
 */
struct RankTable {
    IntMatrix ranks;
    IntMatrix tie_counts;
    Matrix centered;
    bool has_ties = false;

    Index rows() const noexcept { return ranks.rows(); }
    Index cols() const noexcept { return ranks.cols(); }
};

namespace detail {

inline void check_rankable(const DataMatrix& data) {
    require(data.rows() >= 2, ErrorCode::invalid_argument, "need at least 2 observations");
    require(!data.has_censoring(), ErrorCode::invalid_argument,
            "censored or missing cells need the censoring-aware statistics");
    require(data.all_finite(), ErrorCode::invalid_argument, "observations must be finite");
}

// Fills one column of the table from the values of that column.
inline void rank_column(const Matrix& values, Index k, RankTable& out, std::vector<Index>& order) {
    const Index n = values.rows();
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values(a, k) < values(b, k); });

    Index start = 0;
    while (start < n) {
        Index stop = start + 1;
        while (stop < n && values(order[stop], k) == values(order[start], k)) ++stop;
        const long rank = static_cast<long>(stop);
        const long ties = static_cast<long>(stop - start);
        if (ties > 1) out.has_ties = true;
        const double center = rank - 0.5 * static_cast<double>(n + ties);
        for (Index p = start; p < stop; ++p) {
            out.ranks(order[p], k) = rank;
            out.tie_counts(order[p], k) = ties;
            out.centered(order[p], k) = center;
        }
        start = stop;
    }
}

} // namespace detail

/// Ranks every column; O(K n log n).
inline RankTable compute_ranks(const DataMatrix& data) {
    detail::check_rankable(data);
    const Index n = data.rows();
    const Index K = data.cols();
    RankTable table;
    table.ranks.resize(n, K);
    table.tie_counts.resize(n, K);
    table.centered.resize(n, K);
    std::vector<Index> order;
    for (Index k = 0; k < K; ++k) detail::rank_column(data.values(), k, table, order);
    return table;
}

/// F_hat(X(i,k)) = ranks(i,k) / n.
inline Matrix empirical_cdf(const RankTable& table) {
    return table.ranks.cast<double>() / static_cast<double>(table.rows());
}

inline Matrix empirical_cdf(const DataMatrix& data) { return empirical_cdf(compute_ranks(data)); }

/// +1 when the first interval lies confidently below the second, -1 in the
/// opposite case, 0 when the intervals overlap.
constexpr int pair_kernel(double x_lower, double x_upper, double y_lower, double y_upper) noexcept {
    return static_cast<int>(x_upper <= y_lower) - static_cast<int>(y_upper <= x_lower);
}

} // namespace multirank

#endif
