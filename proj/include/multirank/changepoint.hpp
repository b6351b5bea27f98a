#ifndef MULTIRANK_CHANGEPOINT_HPP
#define MULTIRANK_CHANGEPOINT_HPP

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "multirank/asymptotics.hpp"
#include "multirank/homogeneity.hpp"

namespace multirank {

/// V_k(n1) = 2 / n^{3/2} * sum_{j > n1} centered(j, k); U rescaled by sqrt(n1 (n - n1)) / n.
inline Vector v_vector(const RankTable& table, Index n1) {
    const Index n = table.rows();
    detail::check_split(n, n1);
    const double nd = static_cast<double>(n);
    return table.centered.bottomRows(n - n1).colwise().sum().transpose() * (2.0 / (nd * std::sqrt(nd)));
}

struct ScanResult {
    double wstat = 0.0;
    /// Split maximising the profile (1-based count of rows before the change).
    Index argmax = 0;
    /// profile[n1 - 1] = V(n1)' Sigma^+ V(n1), n1 = 1 .. n-1.
    std::vector<double> profile;
    double pvalue = 1.0;
    Index effective_rank = 0;
    int kiefer_terms = 0;
    bool kiefer_converged = true;
    CovarianceVariant variant = CovarianceVariant::continuous;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_uncensored(const DataMatrix& data) {
    require(!data.has_censoring(), ErrorCode::invalid_argument,
            "change-point estimation is not defined for censored or missing data");
}

} // namespace detail

struct ScanOptions {
    CovarianceOptions covariance;
    int kiefer_terms = default_kiefer_terms;
};

/// Profile of V' Sigma^+ V over all splits with running tail sums.
inline ScanResult scan_single(const RankTable& table, const RankCovariance& cov, const ScanOptions& opts = {}) {
    const Index n = table.rows();
    const double nd = static_cast<double>(n);
    const double scale = 2.0 / (nd * std::sqrt(nd));

    ScanResult out;
    out.profile.resize(static_cast<std::size_t>(n - 1));
    out.effective_rank = cov.effective_rank;
    out.variant = cov.variant;

    Vector tail = table.centered.colwise().sum().transpose();
    for (Index n1 = 1; n1 < n; ++n1) {
        tail -= table.centered.row(n1 - 1).transpose();
        const Vector v = tail * scale;
        const double s = std::max(0.0, detail::quadratic_form(v, cov.inverse));
        out.profile[static_cast<std::size_t>(n1 - 1)] = s;
        if (s > out.wstat || n1 == 1) {
            out.wstat = s;
            out.argmax = n1;
        }
    }
    const KieferResult k = out.wstat > 0.0
                               ? kiefer_pvalue(static_cast<int>(cov.effective_rank), out.wstat, opts.kiefer_terms)
                               : KieferResult{1.0, opts.kiefer_terms, 0.0, true};
    out.pvalue = k.pvalue;
    out.kiefer_terms = k.terms;
    out.kiefer_converged = k.converged;
    if (!k.converged) out.warnings.push_back("Kiefer series did not reach the 1e-12 tail tolerance");
    return out;
}

/// W_n = max_{n1} V(n1)' Sigma^+ V(n1) with its asymptotic p-value.
inline ScanResult scan_single(const DataMatrix& data, const ScanOptions& opts = {}) {
    detail::check_uncensored(data);
    const Index n = data.rows();
    detail::require(n >= std::max<Index>(data.cols() + 2, 8), ErrorCode::invalid_argument,
                    "scan needs n >= max(K + 2, 8)");
    const RankTable table = compute_ranks(data);
    const RankCovariance cov = estimate_covariance(table, opts.covariance);
    ScanResult out = scan_single(table, cov, opts);
    detail::sample_size_warning(n, data.cols(), out.warnings);
    return out;
}

/**
 * Segment costs (4/n^2) * len * Rbar' Sigma^+ Rbar from prefix sums of the
 * whitened centered ranks, so each cost is O(K').
 */
class SegmentCostModel {
public:
    SegmentCostModel(const RankTable& table, const Matrix& whitener) : n_(table.rows()) {
        // One column per prefix length so each cost reads two contiguous columns.
        const Matrix z = whitener.transpose() * table.centered.transpose();
        prefix_.setZero(z.rows(), z.cols() + 1);
        for (Index i = 0; i < z.cols(); ++i) prefix_.col(i + 1) = prefix_.col(i) + z.col(i);
        const double nd = static_cast<double>(n_);
        scale_ = 4.0 / (nd * nd);
    }

    Index size() const noexcept { return n_; }

    /// Cost of the segment covering rows first .. last (1-based, inclusive).
    double operator()(Index first, Index last) const {
        const double len = static_cast<double>(last - first + 1);
        return scale_ * (prefix_.col(last) - prefix_.col(first - 1)).squaredNorm() / len;
    }

private:
    Index n_;
    double scale_ = 0.0;
    Matrix prefix_;
};

/// Cost of rows i .. j (1-based, inclusive) for a given (pseudo-)inverse.
inline double segment_cost(const RankTable& table, const Matrix& inverse, Index i, Index j) {
    detail::require(1 <= i && i <= j && j <= table.rows(), ErrorCode::invalid_argument,
                    "segment must satisfy 1 <= i <= j <= n");
    const Vector sum = table.centered.middleRows(i - 1, j - i + 1).colwise().sum().transpose();
    const double nd = static_cast<double>(table.rows());
    return 4.0 / (nd * nd) * detail::quadratic_form(sum, inverse) / static_cast<double>(j - i + 1);
}

enum class SegmentationMethod { dp, brute };

inline std::string_view to_string(SegmentationMethod m) { return m == SegmentationMethod::dp ? "dp" : "brute"; }

struct Segmentation {
    /// Change indices n_1 < ... < n_{L-1}: segment l ends at row n_l (1-based).
    std::vector<Index> boundaries;
    /// T(n_1, ..., n_{L-1}) = sum of segment_costs.
    double criterion = 0.0;
    std::vector<double> segment_costs;
    /// Best criterion with l + 1 segments, l = 0 .. L-1 (dp only).
    std::vector<double> layer_criteria;
    SegmentationMethod method = SegmentationMethod::dp;
    Index effective_rank = 0;
};

namespace detail {

inline void check_segmentation_args(Index n, Index L, Index min_len) {
    require(L >= 1, ErrorCode::invalid_argument, "number of segments must be >= 1");
    require(min_len >= 1, ErrorCode::invalid_argument, "minimum segment length must be >= 1");
    require(n >= L * min_len, ErrorCode::infeasible, "series too short for the requested segmentation");
}

template <class Cost>
inline std::vector<double> costs_for(const std::vector<Index>& bounds, Index n, const Cost& cost) {
    std::vector<double> out;
    Index start = 1;
    for (Index b : bounds) {
        out.push_back(cost(start, b));
        start = b + 1;
    }
    out.push_back(cost(start, n));
    return out;
}

} // namespace detail

/**
 * Exact maximiser of T over L segments by the recursion
 * I_l(p) = max_q { I_{l-1}(q) + cost(q+1, p) }.
 * Costs are evaluated on demand: O(L n^2 K') time, O(L n + n K') memory.
 * Ties go to the smallest previous boundary.
 */
inline Segmentation dp_segment(const RankTable& table, const RankCovariance& cov, Index L, Index min_len = 1) {
    const Index n = table.rows();
    detail::check_segmentation_args(n, L, min_len);
    const SegmentCostModel cost(table, cov.whitener);

    constexpr double minus_inf = -std::numeric_limits<double>::infinity();
    // best[l][p]: best criterion for rows 1..p split into l+1 segments.
    std::vector<std::vector<double>> best(static_cast<std::size_t>(L), std::vector<double>(n + 1, minus_inf));
    std::vector<std::vector<Index>> from(static_cast<std::size_t>(L), std::vector<Index>(n + 1, 0));

    for (Index p = min_len; p <= n; ++p) best[0][p] = cost(1, p);
    for (Index l = 1; l < L; ++l) {
        auto& cur = best[static_cast<std::size_t>(l)];
        const auto& prev = best[static_cast<std::size_t>(l - 1)];
        auto& arg = from[static_cast<std::size_t>(l)];
        const Index first_end = (l + 1) * min_len;
        for (Index p = first_end; p <= n; ++p) {
            double top = minus_inf;
            Index where = 0;
            for (Index q = l * min_len; q <= p - min_len; ++q) {
                const double value = prev[q] + cost(q + 1, p);
                if (value > top) {
                    top = value;
                    where = q;
                }
            }
            cur[p] = top;
            arg[p] = where;
        }
    }

    Segmentation out;
    out.method = SegmentationMethod::dp;
    out.effective_rank = cov.effective_rank;
    out.layer_criteria.resize(static_cast<std::size_t>(L));
    for (Index l = 0; l < L; ++l) out.layer_criteria[static_cast<std::size_t>(l)] = best[static_cast<std::size_t>(l)][n];

    out.boundaries.resize(static_cast<std::size_t>(L - 1));
    Index p = n;
    for (Index l = L - 1; l >= 1; --l) {
        p = from[static_cast<std::size_t>(l)][p];
        out.boundaries[static_cast<std::size_t>(l - 1)] = p;
    }
    out.segment_costs = detail::costs_for(out.boundaries, n, cost);
    out.criterion = best[static_cast<std::size_t>(L - 1)][n];
    return out;
}

inline Segmentation dp_segment(const DataMatrix& data, Index L, Index min_len = 1,
                               const CovarianceOptions& opts = {}) {
    detail::check_uncensored(data);
    detail::check_segmentation_args(data.rows(), L, min_len);
    const RankTable table = compute_ranks(data);
    return dp_segment(table, estimate_covariance(table, opts), L, min_len);
}

/**
 * Exhaustive maximisation of T over all admissible boundary tuples, visited
 * in lexicographic order (the first maximiser wins).  Each candidate is
 * scored directly from group mean ranks and Sigma^+.  Refuses instances with
 * more than 1e6 tuples.
 */
inline Segmentation brute_force_segment(const DataMatrix& data, Index L, Index min_len = 1,
                                        const CovarianceOptions& opts = {}) {
    detail::check_uncensored(data);
    const Index n = data.rows();
    detail::check_segmentation_args(n, L, min_len);
    const RankTable table = compute_ranks(data);
    const RankCovariance cov = estimate_covariance(table, opts);

    Segmentation out;
    out.method = SegmentationMethod::brute;
    out.effective_rank = cov.effective_rank;
    const auto direct = [&](Index i, Index j) { return segment_cost(table, cov.inverse, i, j); };
    if (L == 1) {
        out.segment_costs = {direct(1, n)};
        out.criterion = out.segment_costs[0];
        return out;
    }

    double combos = 1.0;
    for (Index i = 0; i < L - 1; ++i)
        combos = combos * static_cast<double>(n - 1 - i) / static_cast<double>(i + 1);
    detail::require(combos <= 1e6, ErrorCode::too_large, "brute-force segmentation limited to 1e6 boundary tuples");

    const Index changes = L - 1;
    std::vector<Index> bounds(static_cast<std::size_t>(changes));
    for (Index i = 0; i < changes; ++i) bounds[static_cast<std::size_t>(i)] = (i + 1) * min_len;

    auto advance = [&]() {
        // Lexicographic successor subject to segment lengths >= min_len.
        for (Index i = changes - 1; i >= 0; --i) {
            const Index limit = n - (changes - i) * min_len;
            if (bounds[static_cast<std::size_t>(i)] < limit) {
                ++bounds[static_cast<std::size_t>(i)];
                for (Index j = i + 1; j < changes; ++j)
                    bounds[static_cast<std::size_t>(j)] = bounds[static_cast<std::size_t>(j - 1)] + min_len;
                return true;
            }
        }
        return false;
    };

    double top = -std::numeric_limits<double>::infinity();
    do {
        if (bounds.back() > n - min_len) continue;
        const GroupSpec groups{bounds};
        const double value = multigroup_stat_value(table, cov.inverse, groups);
        if (value > top) {
            top = value;
            out.boundaries = bounds;
        }
    } while (advance());

    out.criterion = top;
    out.segment_costs = detail::costs_for(out.boundaries, n, direct);
    return out;
}

/**
 * Kink of a criterion curve I_0 .. I_Lmax: for each L in 1 .. Lmax-1, fit
 * least-squares lines to {l <= L} and {l >= L} and return the L with the
 * smallest summed residual sum of squares (smallest L on ties).
 */
inline Index slope_heuristic(const std::vector<double>& curve, std::vector<double>* rss_out = nullptr) {
    const Index last = static_cast<Index>(curve.size()) - 1;
    detail::require(last >= 2, ErrorCode::invalid_argument, "slope heuristic needs at least 3 points");

    auto rss = [&](Index a, Index b) {
        const double m = static_cast<double>(b - a + 1);
        double sx = 0, sy = 0;
        for (Index l = a; l <= b; ++l) {
            sx += static_cast<double>(l);
            sy += curve[static_cast<std::size_t>(l)];
        }
        const double mx = sx / m, my = sy / m;
        double sxx = 0, sxy = 0;
        for (Index l = a; l <= b; ++l) {
            const double dx = static_cast<double>(l) - mx;
            sxx += dx * dx;
            sxy += dx * (curve[static_cast<std::size_t>(l)] - my);
        }
        const double slope = sxy / sxx;
        double total = 0;
        for (Index l = a; l <= b; ++l) {
            const double r = curve[static_cast<std::size_t>(l)] - my - slope * (static_cast<double>(l) - mx);
            total += r * r;
        }
        return total;
    };

    Index best = 1;
    double best_rss = std::numeric_limits<double>::infinity();
    if (rss_out) rss_out->assign(static_cast<std::size_t>(last + 1), std::numeric_limits<double>::quiet_NaN());
    for (Index L = 1; L < last; ++L) {
        const double total = rss(0, L) + rss(L, last);
        if (rss_out) (*rss_out)[static_cast<std::size_t>(L)] = total;
        if (total < best_rss) {
            best_rss = total;
            best = L;
        }
    }
    return best;
}

struct Selection {
    Index num_changes = 0;
    double gate_pvalue = 1.0;
    /// Best criterion with l changes, l = 0 .. Lmax (empty when the gate stops).
    std::vector<double> curve;
    std::vector<double> rss;
    Segmentation segmentation;
};

/**
 * Number of changes: 0 unless the single-change scan is significant at
 * `alpha_gate`, otherwise the slope-heuristic kink of the DP criterion curve.
 */
inline Selection select_num_changes(const DataMatrix& data, Index max_changes, double alpha_gate = 0.001,
                                    Index min_len = 1, const ScanOptions& opts = {}) {
    detail::require(max_changes >= 3, ErrorCode::invalid_argument, "Lmax must be >= 3");
    detail::require(alpha_gate > 0.0 && alpha_gate < 1.0, ErrorCode::invalid_argument,
                    "alpha gate must lie in (0, 1)");
    detail::check_uncensored(data);
    const RankTable table = compute_ranks(data);
    const RankCovariance cov = estimate_covariance(table, opts.covariance);

    Selection out;
    out.gate_pvalue = scan_single(data, opts).pvalue;
    if (out.gate_pvalue >= alpha_gate) {
        out.segmentation = dp_segment(table, cov, 1, min_len);
        return out;
    }
    const Segmentation full = dp_segment(table, cov, max_changes + 1, min_len);
    out.curve = full.layer_criteria;
    out.num_changes = slope_heuristic(out.curve, &out.rss);
    out.segmentation = dp_segment(table, cov, out.num_changes + 1, min_len);
    return out;
}

} // namespace multirank

#endif
