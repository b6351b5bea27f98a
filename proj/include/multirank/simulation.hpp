#ifndef MULTIRANK_SIMULATION_HPP
#define MULTIRANK_SIMULATION_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "multirank/changepoint.hpp"
#include "multirank/parallel.hpp"

namespace multirank {

enum class ScenarioKind { null, cross_mixture, noise_padding, correlated_shift, outlier_contamination };

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::null: return "null";
        case ScenarioKind::cross_mixture: return "cross_mixture";
        case ScenarioKind::noise_padding: return "noise_padding";
        case ScenarioKind::correlated_shift: return "correlated_shift";
        case ScenarioKind::outlier_contamination: return "outlier_contamination";
    }
    return "unknown";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
    for (auto k : {ScenarioKind::null, ScenarioKind::cross_mixture, ScenarioKind::noise_padding,
                   ScenarioKind::correlated_shift, ScenarioKind::outlier_contamination})
        if (to_string(k) == s) return k;
    detail::fail(ErrorCode::invalid_argument, "unknown scenario kind: " + std::string(s));
}

/**
 * Synthetic data description.
 *
 *  - null / correlated_shift / outlier_contamination: N(mean, C) rows with C
 *    tridiagonal (unit diagonal, `correlation` off the diagonal).
 *  - cross_mixture: K = 2, equal-weight mixture of N(0, diag(4, 0.2)) and
 *    N(0, diag(0.2, 4)).
 *  - noise_padding: cross_mixture plus dim - 2 extra N(0, noise_sd^2) coordinates.
 *
 * Segment means alternate 0, shift, 0, shift, ... across `change_points`
 * unless `segment_means` lists one mean per segment.  Outlier rows
 * (probability `outlier_fraction`) replace the noise by N(0, outlier_scale I).
 */
struct Scenario {
    ScenarioKind kind = ScenarioKind::null;
    Index n = 100;
    Index dim = 5;
    std::vector<Index> change_points;
    Vector shift;
    std::vector<Vector> segment_means;
    double correlation = 0.0;
    double outlier_fraction = 0.0;
    double outlier_scale = 10.0;
    double noise_sd = 2.5;
    std::uint64_t seed = 0;

    void validate() const {
        using detail::require;
        require(n >= 2 && dim >= 1, ErrorCode::invalid_argument, "scenario needs n >= 2 and dim >= 1");
        require(outlier_fraction >= 0.0 && outlier_fraction <= 1.0, ErrorCode::invalid_argument,
                "outlier fraction must lie in [0, 1]");
        require(outlier_scale > 0.0 && noise_sd > 0.0, ErrorCode::invalid_argument, "scales must be positive");
        require(std::abs(correlation) < 1.0, ErrorCode::invalid_argument, "correlation must lie in (-1, 1)");
        if (kind == ScenarioKind::cross_mixture)
            require(dim == 2, ErrorCode::invalid_argument, "cross_mixture is two-dimensional");
        if (kind == ScenarioKind::noise_padding)
            require(dim > 2, ErrorCode::invalid_argument, "noise_padding needs dim > 2");
        Index prev = 0;
        for (Index c : change_points) {
            require(c > prev && c < n, ErrorCode::invalid_argument, "change points must increase inside (0, n)");
            prev = c;
        }
        require(shift.size() <= dim, ErrorCode::invalid_argument, "shift longer than dim");
        if (!segment_means.empty()) {
            require(segment_means.size() == change_points.size() + 1, ErrorCode::invalid_argument,
                    "need one mean per segment");
            for (const auto& m : segment_means)
                require(m.size() <= dim, ErrorCode::invalid_argument, "segment mean longer than dim");
        }
    }

    /// Same scenario without any mean change.
    Scenario without_change() const {
        Scenario s = *this;
        s.shift = Vector();
        s.segment_means.clear();
        return s;
    }

    /// Tridiagonal correlation matrix of the Gaussian kinds.
    Matrix gaussian_covariance() const {
        Matrix c = Matrix::Identity(dim, dim);
        for (Index k = 0; k + 1 < dim; ++k) c(k, k + 1) = c(k + 1, k) = correlation;
        return c;
    }
};

namespace detail {

inline Vector padded(const Vector& v, Index dim) {
    Vector out = Vector::Zero(dim);
    out.head(v.size()) = v;
    return out;
}

inline Vector segment_mean(const Scenario& s, std::size_t segment) {
    if (!s.segment_means.empty()) return padded(s.segment_means[segment], s.dim);
    if (segment % 2 == 1) return padded(s.shift, s.dim);
    return Vector::Zero(s.dim);
}

} // namespace detail

/// Draws one data set; identical scenario and seed give identical output.
inline DataMatrix generate(const Scenario& s) {
    s.validate();
    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;

    Matrix chol;
    const bool gaussian_kind = s.kind == ScenarioKind::null || s.kind == ScenarioKind::correlated_shift ||
                               s.kind == ScenarioKind::outlier_contamination;
    if (gaussian_kind) {
        Eigen::LLT<Matrix> llt(s.gaussian_covariance());
        detail::require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
                        "scenario correlation matrix is not positive definite");
        chol = llt.matrixL();
    }

    Matrix x(s.n, s.dim);
    std::size_t segment = 0;
    Vector mean = detail::segment_mean(s, 0);
    Vector z(s.dim);
    for (Index i = 0; i < s.n; ++i) {
        while (segment < s.change_points.size() && i >= s.change_points[segment]) {
            ++segment;
            mean = detail::segment_mean(s, segment);
        }
        for (Index k = 0; k < s.dim; ++k) z(k) = normal(rng);
        Vector row(s.dim);
        if (gaussian_kind) {
            row = chol * z;
        } else {
            const bool first = unit(rng) < 0.5;
            row(0) = z(0) * std::sqrt(first ? 4.0 : 0.2);
            row(1) = z(1) * std::sqrt(first ? 0.2 : 4.0);
            for (Index k = 2; k < s.dim; ++k) row(k) = z(k) * s.noise_sd;
        }
        if (s.outlier_fraction > 0.0 && unit(rng) < s.outlier_fraction) row = z * std::sqrt(s.outlier_scale);
        x.row(i) = (row + mean).transpose();
    }
    return DataMatrix(std::move(x));
}

namespace detail {

inline Matrix hotelling_precision(const DataMatrix& data) {
    require(!data.has_censoring() && data.all_finite(), ErrorCode::invalid_argument,
            "Hotelling statistics need complete finite data");
    const Matrix& x = data.values();
    const Matrix centered = x.rowwise() - x.colwise().mean();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
    Eigen::LLT<Matrix> llt(cov);
    require(llt.info() == Eigen::Success, ErrorCode::degenerate_covariance, "empirical covariance is singular");
    return llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
}

} // namespace detail

/**
 * H_n(n1) = (n1 (n - n1) / n) (xbar_1 - xbar_2)' C^{-1} (xbar_1 - xbar_2),
 * C the empirical covariance of all n rows (divisor n).
 */
inline double hotelling_stat(const DataMatrix& data, Index n1) {
    const Index n = data.rows();
    detail::check_split(n, n1);
    const Matrix prec = detail::hotelling_precision(data);
    const Matrix& x = data.values();
    const Vector d = (x.topRows(n1).colwise().mean() - x.bottomRows(n - n1).colwise().mean()).transpose();
    return static_cast<double>(n1) * static_cast<double>(n - n1) / static_cast<double>(n) * d.dot(prec * d);
}

struct HotellingScan {
    double statistic = 0.0;
    Index argmax = 0;
};

/// max over n1 of H_n(n1), the Hotelling-based change-point scan.
inline HotellingScan hotelling_scan(const DataMatrix& data) {
    const Index n = data.rows();
    const Matrix prec = detail::hotelling_precision(data);
    const Matrix& x = data.values();
    const Vector total = x.colwise().sum().transpose();
    Vector head = Vector::Zero(data.cols());
    HotellingScan out;
    for (Index n1 = 1; n1 < n; ++n1) {
        head += x.row(n1 - 1).transpose();
        const double a = static_cast<double>(n1), b = static_cast<double>(n - n1);
        const Vector d = head / a - (total - head) / b;
        const double h = a * b / static_cast<double>(n) * d.dot(prec * d);
        if (n1 == 1 || h > out.statistic) {
            out.statistic = h;
            out.argmax = n1;
        }
    }
    return out;
}

/// max_k max_{n1} V_k(n1): marginal decisions combined by a maximum.
inline double bonferroni_scan(const DataMatrix& data) {
    detail::require(data.rows() >= 4, ErrorCode::invalid_argument, "Bonferroni scan needs n >= 4");
    const RankTable table = compute_ranks(data);
    const Index n = table.rows();
    const double nd = static_cast<double>(n);
    const double scale = 2.0 / (nd * std::sqrt(nd));
    double best = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < table.cols(); ++k) {
        double tail = 0.0;
        for (Index j = n - 1; j >= 1; --j) {
            tail += table.centered(j, k);
            best = std::max(best, tail * scale);
        }
    }
    return best;
}

/// Upper bound on P(bonferroni_scan > v) under no change: K exp(-2 v^2 / sigma_kk).
inline double bonferroni_pvalue(double value, Index K, double sigma_kk = 1.0 / 3.0) {
    if (value <= 0.0) return 1.0;
    return std::min(1.0, static_cast<double>(K) * std::exp(-2.0 * value * value / sigma_kk));
}

using Detector = std::function<double(const DataMatrix&)>;

struct NamedDetector {
    std::string name;
    Detector detect;
};

namespace detectors {

/// W_n.
inline NamedDetector multirank_scan() {
    return {"multirank_scan", [](const DataMatrix& d) { return scan_single(d).wstat; }};
}

/// T(n1_hat) = max_{n1} S_n(n1).
inline NamedDetector multirank_max_split() {
    return {"multirank_max_split", [](const DataMatrix& d) {
                const ScanResult s = scan_single(d);
                const double n = static_cast<double>(d.rows());
                double best = 0.0;
                for (std::size_t i = 0; i < s.profile.size(); ++i) {
                    const double n1 = static_cast<double>(i + 1);
                    best = std::max(best, s.profile[i] * n * n / (n1 * (n - n1)));
                }
                return best;
            }};
}

inline NamedDetector multirank_two_sample(Index n1) {
    return {"multirank_two_sample", [n1](const DataMatrix& d) { return two_sample_stat(d, n1).statistic; }};
}

inline NamedDetector hotelling_scan() {
    return {"hotelling_scan", [](const DataMatrix& d) { return multirank::hotelling_scan(d).statistic; }};
}

inline NamedDetector hotelling_two_sample(Index n1) {
    return {"hotelling_two_sample", [n1](const DataMatrix& d) { return hotelling_stat(d, n1); }};
}

inline NamedDetector bonferroni() {
    return {"bonferroni_scan", [](const DataMatrix& d) { return bonferroni_scan(d); }};
}

inline NamedDetector by_name(std::string_view name, Index n1) {
    if (name == "multirank_scan") return multirank_scan();
    if (name == "multirank_max_split") return multirank_max_split();
    if (name == "multirank_two_sample") return multirank_two_sample(n1);
    if (name == "hotelling_scan") return hotelling_scan();
    if (name == "hotelling_two_sample") return hotelling_two_sample(n1);
    if (name == "bonferroni_scan") return bonferroni();
    detail::fail(ErrorCode::invalid_argument, "unknown detector: " + std::string(name));
}

} // namespace detectors

struct RocCurve {
    std::string name;
    /// Thresholds in decreasing order; the first is +inf (nothing flagged).
    std::vector<double> thresholds;
    std::vector<double> false_alarm_rates;
    std::vector<double> detection_rates;
    double auc = 0.0;
    double auc_se = 0.0;
    Index replications = 0;
    std::vector<double> null_scores;
    std::vector<double> alt_scores;

    /// Best detection rate among operating points with false-alarm rate <= level.
    double detection_at(double level) const {
        double best = 0.0;
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            if (false_alarm_rates[i] <= level) best = std::max(best, detection_rates[i]);
        return best;
    }
};

/// Exact empirical ROC: a declaration is `score >= threshold`.
inline RocCurve roc_curve(std::vector<double> null_scores, std::vector<double> alt_scores, std::string name = {}) {
    detail::require(!null_scores.empty() && !alt_scores.empty(), ErrorCode::invalid_argument,
                    "ROC needs scores under both hypotheses");
    RocCurve c;
    c.name = std::move(name);
    c.replications = static_cast<Index>(std::min(null_scores.size(), alt_scores.size()));
    std::vector<double> pooled = null_scores;
    pooled.insert(pooled.end(), alt_scores.begin(), alt_scores.end());
    std::sort(pooled.begin(), pooled.end(), std::greater<>());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    std::vector<double> h0 = null_scores, h1 = alt_scores;
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    const auto at_least = [](const std::vector<double>& v, double t) {
        return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t)) / static_cast<double>(v.size());
    };
    c.thresholds.push_back(infinity);
    c.false_alarm_rates.push_back(0.0);
    c.detection_rates.push_back(0.0);
    for (double t : pooled) {
        c.thresholds.push_back(t);
        c.false_alarm_rates.push_back(at_least(h0, t));
        c.detection_rates.push_back(at_least(h1, t));
    }

    // Mann-Whitney form, ties counted one half.
    double wins = 0.0;
    for (double a : h1) {
        const auto lo = std::lower_bound(h0.begin(), h0.end(), a);
        const auto hi = std::upper_bound(lo, h0.end(), a);
        wins += static_cast<double>(lo - h0.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    c.auc = wins / (static_cast<double>(h0.size()) * static_cast<double>(h1.size()));
    c.auc_se = std::sqrt(c.auc * (1.0 - c.auc) / static_cast<double>(c.replications));
    c.null_scores = std::move(null_scores);
    c.alt_scores = std::move(alt_scores);
    return c;
}

/**
 * Paired Monte Carlo ROC: replication r draws one null set (stream 2r) and
 * one alternative set (stream 2r + 1) and scores both with every detector.
 */
inline std::vector<RocCurve> roc_compare(const std::vector<NamedDetector>& dets, const Scenario& alternative,
                                         const Scenario& null, Index reps, int threads = 0) {
    detail::require(reps >= 100, ErrorCode::invalid_argument, "ROC needs at least 100 replications");
    detail::require(!dets.empty(), ErrorCode::invalid_argument, "ROC needs at least one detector");
    const std::size_t D = dets.size();
    std::vector<std::vector<double>> h0(D, std::vector<double>(static_cast<std::size_t>(reps)));
    std::vector<std::vector<double>> h1 = h0;

    parallel_for(static_cast<std::size_t>(reps), resolve_threads(threads), [&](std::size_t r) {
        Scenario s0 = null, s1 = alternative;
        s0.seed = split_seed(alternative.seed, 2 * r);
        s1.seed = split_seed(alternative.seed, 2 * r + 1);
        const DataMatrix d0 = generate(s0);
        const DataMatrix d1 = generate(s1);
        for (std::size_t d = 0; d < D; ++d) {
            try {
                h0[d][r] = dets[d].detect(d0);
                h1[d][r] = dets[d].detect(d1);
            } catch (const Error& e) {
                throw Error(e.code(), dets[d].name + " failed at replication " + std::to_string(r) + ": " + e.what());
            }
        }
    });

    std::vector<RocCurve> out;
    for (std::size_t d = 0; d < D; ++d) out.push_back(roc_curve(std::move(h0[d]), std::move(h1[d]), dets[d].name));
    return out;
}

inline std::pair<RocCurve, RocCurve> roc(const NamedDetector& a, const NamedDetector& b, const Scenario& alternative,
                                         Index reps, int threads = 0) {
    auto curves = roc_compare({a, b}, alternative, alternative.without_change(), reps, threads);
    return {std::move(curves[0]), std::move(curves[1])};
}

/// detector,threshold,false_alarm_rate,detection_rate rows.
inline void write_roc_csv(std::ostream& os, const std::vector<RocCurve>& curves) {
    os << "detector,threshold,false_alarm_rate,detection_rate\n";
    os.precision(17);
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.thresholds.size(); ++i)
            os << c.name << ',' << c.thresholds[i] << ',' << c.false_alarm_rates[i] << ',' << c.detection_rates[i]
               << '\n';
}

/// Equal-width histogram of `values` on [lo, hi] as bin_lo,bin_hi,count rows.
inline void write_histogram_csv(std::ostream& os, const std::vector<double>& values, double lo, double hi,
                                Index bins) {
    detail::require(bins >= 1 && hi > lo, ErrorCode::invalid_argument, "histogram needs bins >= 1 and hi > lo");
    std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        const Index b = std::min(bins - 1, static_cast<Index>((v - lo) / width));
        ++counts[static_cast<std::size_t>(b)];
    }
    os << "bin_lo,bin_hi,count\n";
    os.precision(17);
    for (Index b = 0; b < bins; ++b)
        os << lo + width * static_cast<double>(b) << ',' << lo + width * static_cast<double>(b + 1) << ','
           << counts[static_cast<std::size_t>(b)] << '\n';
}

/// sup |F_emp - F| of a sample against a continuous c.d.f.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    detail::require(!sample.empty(), ErrorCode::invalid_argument, "KS statistic needs a sample");
    std::sort(sample.begin(), sample.end());
    const double m = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

/// Asymptotic Kolmogorov p-value with the (sqrt(m) + 0.12 + 0.11/sqrt(m)) correction.
inline double ks_pvalue(double d, std::size_t m) {
    const double sm = std::sqrt(static_cast<double>(m));
    const double lambda = (sm + 0.12 + 0.11 / sm) * d;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace multirank

#endif
