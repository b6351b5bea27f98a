#ifndef MULTIRANK_ASYMPTOTICS_HPP
#define MULTIRANK_ASYMPTOTICS_HPP

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "multirank/data_matrix.hpp"

namespace multirank {

namespace detail {

// Ascending series; used for x <= 8 where cancellation costs at most ~3 digits.
inline double bessel_j_series(double nu, double x) {
    const double q = -0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * (nu + static_cast<double>(k)));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum * std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
}

// Miller backward recurrence normalised with
// (x/2)^nu / Gamma(nu+1) = sum_k d_k J_{nu+2k}(x),
// d_0 = 1, d_k = (nu+2k) (nu+1)...(nu+k-1) / k!.
inline double bessel_j_miller(double nu, double x) {
    const double top = std::max(x, nu);
    Index steps = static_cast<Index>(std::ceil(top - nu + std::sqrt(160.0 * top) + 20.0));
    if (steps % 2) ++steps;

    constexpr double big = 1e250;
    double next = 0.0;   // f_{j+1}
    double cur = 1e-280; // f_j
    double norm = 0.0;

    std::vector<double> d(static_cast<std::size_t>(steps / 2 + 1));
    d[0] = 1.0;
    double p = 1.0;
    for (Index k = 1; k <= steps / 2; ++k) {
        p = (k == 1) ? 1.0 : p * (nu + static_cast<double>(k - 1)) / static_cast<double>(k);
        d[static_cast<std::size_t>(k)] = (nu + 2.0 * static_cast<double>(k)) * p;
    }

    for (Index j = steps; j >= 1; --j) {
        if (j % 2 == 0) norm += d[static_cast<std::size_t>(j / 2)] * cur;
        const double prev = 2.0 * (nu + static_cast<double>(j)) / x * cur - next;
        next = cur;
        cur = prev;
        if (std::abs(cur) > big) {
            cur /= big;
            next /= big;
            norm /= big;
        }
    }
    norm += d[0] * cur;
    const double log_pref = nu * std::log(0.5 * x) - std::lgamma(nu + 1.0);
    return cur / norm * std::exp(log_pref);
}

} // namespace detail

/// Bessel function of the first kind J_nu(x) for nu >= -1/2, x > 0.
inline double bessel_j(double nu, double x) {
    detail::require(nu >= -0.5, ErrorCode::invalid_argument, "bessel_j: order must be >= -1/2");
    detail::require(x > 0.0, ErrorCode::invalid_argument, "bessel_j: argument must be positive");
    if (nu == -0.5) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::cos(x);
    if (nu == 0.5) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    if (x <= 8.0) return detail::bessel_j_series(nu, x);
    return detail::bessel_j_miller(nu, x);
}

/// dJ_nu/dx = (nu/x) J_nu - J_{nu+1}.
inline double bessel_j_derivative(double nu, double x) {
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

/**
 * First `count` positive zeros of J_nu.  Sign changes are bracketed on a
 * grid of step 0.5 (consecutive zeros are more than 2.4 apart for nu >= -1/2)
 * and each bracket is refined by Newton steps that fall back to bisection
 * whenever an iterate leaves the bracket.
 */
inline std::vector<double> bessel_zeros(double nu, int count) {
    detail::require(nu >= -0.5, ErrorCode::invalid_argument, "bessel_zeros: order must be >= -1/2");
    detail::require(count >= 1, ErrorCode::invalid_argument, "bessel_zeros: need at least one zero");
    std::vector<double> zeros;
    zeros.reserve(static_cast<std::size_t>(count));
    if (nu == -0.5 || nu == 0.5) {
        const double offset = nu < 0 ? 0.5 : 0.0;
        for (int m = 1; m <= count; ++m) zeros.push_back((m - offset) * std::numbers::pi);
        return zeros;
    }

    constexpr double step = 0.5;
    double a = std::max(nu, 0.0) + 1e-3;
    double fa = bessel_j(nu, a);
    while (static_cast<int>(zeros.size()) < count) {
        const double b = a + step;
        const double fb = bessel_j(nu, b);
        if (fb == 0.0) {
            zeros.push_back(b);
        } else if ((fa < 0.0) != (fb < 0.0)) {
            double lo = a, hi = b, flo = fa;
            double x = 0.5 * (lo + hi);
            for (int it = 0; it < 100; ++it) {
                const double fx = bessel_j(nu, x);
                if (fx == 0.0) break;
                if ((fx < 0.0) == (flo < 0.0)) {
                    lo = x;
                    flo = fx;
                } else {
                    hi = x;
                }
                double trial = x - fx / bessel_j_derivative(nu, x);
                if (!(trial > lo && trial < hi)) trial = 0.5 * (lo + hi);
                const double moved = std::abs(trial - x);
                x = trial;
                if (moved < 1e-15 * x || hi - lo < 1e-15 * x) break;
            }
            zeros.push_back(x);
        }
        a = b;
        fa = fb;
    }
    return zeros;
}

/// m-th positive zero of J_nu (m >= 1).
inline double bessel_zero(double nu, int m) {
    detail::require(m >= 1, ErrorCode::invalid_argument, "bessel_zero: m must be >= 1");
    return bessel_zeros(nu, m).back();
}

/// Zeros of J_{(K-2)/2} and the values of J_{K/2} at those zeros.
struct KieferTable {
    int dimension = 0;
    double nu = 0.0;
    std::vector<double> zeros;
    std::vector<double> bessel_at_zeros;

    std::size_t size() const noexcept { return zeros.size(); }
};

inline KieferTable make_kiefer_table(int K, int terms) {
    detail::require(K >= 1, ErrorCode::invalid_argument, "Kiefer series needs K >= 1");
    detail::require(terms >= 1, ErrorCode::invalid_argument, "Kiefer series needs at least one term");
    KieferTable table;
    table.dimension = K;
    table.nu = 0.5 * (K - 2);
    table.zeros = bessel_zeros(table.nu, terms);
    table.bessel_at_zeros.reserve(table.zeros.size());
    for (double z : table.zeros) table.bessel_at_zeros.push_back(bessel_j(table.nu + 1.0, z));
    return table;
}

/// Process-wide cache of Kiefer tables keyed by (K, terms).
inline std::shared_ptr<const KieferTable> cached_kiefer_table(int K, int terms) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const KieferTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{K, terms}];
    if (!slot) slot = std::make_shared<const KieferTable>(make_kiefer_table(K, terms));
    return slot;
}

struct KieferResult {
    double pvalue = 1.0;
    int terms = 0;
    /// Magnitude of the last included term relative to the full sum.
    double tail_term = 0.0;
    bool converged = true;
};

inline constexpr int default_kiefer_terms = 30;

/**
 * P(sup_t sum_{k<=K} B_k(t)^2 > b) for independent Brownian bridges B_k:
 *
 *   1 - 4 / (Gamma(K/2) 2^{K/2} b^{K/2})
 *       * sum_m g_m^{K-2} exp(-g_m^2 / (2b)) / J_{K/2}(g_m)^2
 *
 * with g_m the m-th zero of J_{(K-2)/2}.  The series is truncated after
 * `terms` terms; when `adaptive` is set and the last term still exceeds
 * 1e-12, the length is doubled until it does not (up to 4096 terms).
 */
inline KieferResult kiefer_pvalue(int K, double b, int terms = default_kiefer_terms, bool adaptive = true) {
    detail::require(K >= 1, ErrorCode::invalid_argument, "Kiefer p-value needs K >= 1");
    detail::require(b > 0.0, ErrorCode::invalid_argument, "Kiefer p-value needs b > 0");
    const double half_k = 0.5 * K;
    const double log_pref = std::log(4.0) - std::lgamma(half_k) - half_k * std::log(2.0 * b);

    KieferResult out;
    for (int M = terms;; M *= 2) {
        const auto table = cached_kiefer_table(K, M);
        double sum = 0.0;
        double last = 0.0;
        for (std::size_t m = 0; m < table->size(); ++m) {
            const double g = table->zeros[m];
            const double jv = table->bessel_at_zeros[m];
            last = std::exp(log_pref + (K - 2) * std::log(g) - g * g / (2.0 * b) - 2.0 * std::log(std::abs(jv)));
            sum += last;
        }
        out.terms = M;
        out.tail_term = last;
        out.converged = last <= 1e-12;
        out.pvalue = std::clamp(1.0 - sum, 0.0, 1.0);
        if (out.converged || !adaptive || M >= 4096) break;
    }
    return out;
}

/// Local shift alternative: later sample shifted by delta / sqrt(n).
struct ShiftAlternative {
    Vector delta;
    double t1 = 0.5;
    /// Marginal scales sigma_k of the independent model.
    Vector marginal_scales;
    /// Covariance C of the Gaussian model (its diagonal gives sigma_k^2).
    Matrix covariance;
};

namespace detail {

inline void check_fraction(double t1) {
    require(t1 > 0.0 && t1 < 1.0, ErrorCode::invalid_argument, "split fraction must lie in (0, 1)");
}

inline Vector spd_solve(const Matrix& m, const Vector& rhs, const char* what) {
    Eigen::LLT<Matrix> llt(m);
    require(llt.info() == Eigen::Success, ErrorCode::degenerate_covariance, what);
    return llt.solve(rhs);
}

} // namespace detail

/// d_H = t1 (1 - t1) delta' C^{-1} delta.
inline double noncentrality_hotelling(const ShiftAlternative& alt) {
    detail::check_fraction(alt.t1);
    detail::require(alt.covariance.rows() == alt.delta.size() && alt.covariance.cols() == alt.delta.size(),
                    ErrorCode::invalid_argument, "covariance and shift dimensions differ");
    const Vector x = detail::spd_solve(alt.covariance, alt.delta, "covariance must be positive definite");
    return alt.t1 * (1.0 - alt.t1) * alt.delta.dot(x);
}

/// Rank covariance of a Gaussian vector: (2/pi) asin(C_kl / (2 sigma_k sigma_l)).
inline Matrix gaussian_rank_covariance(const Matrix& C) {
    const Index K = C.rows();
    Matrix out(K, K);
    for (Index k = 0; k < K; ++k)
        for (Index l = 0; l < K; ++l)
            out(k, l) = 2.0 / std::numbers::pi * std::asin(C(k, l) / (2.0 * std::sqrt(C(k, k) * C(l, l))));
    return out;
}

/// d_S = 4 t1 (1 - t1) delta' A' Sigma^{-1} A delta for a Gaussian model with
/// covariance C, A = diag(1 / sigma_k) / (2 sqrt(pi)).
inline double noncentrality_multirank_gaussian(const ShiftAlternative& alt) {
    detail::check_fraction(alt.t1);
    const Matrix& C = alt.covariance;
    detail::require(C.rows() == alt.delta.size() && C.cols() == alt.delta.size(), ErrorCode::invalid_argument,
                    "covariance and shift dimensions differ");
    const Vector a = C.diagonal().cwiseSqrt().cwiseInverse() / (2.0 * std::sqrt(std::numbers::pi));
    const Vector ad = a.cwiseProduct(alt.delta);
    const Vector x = detail::spd_solve(gaussian_rank_covariance(C), ad, "rank covariance is singular");
    return 4.0 * alt.t1 * (1.0 - alt.t1) * ad.dot(x);
}

/// lambda = integral of (sigma f(sigma x))^2 dx for common marginal families.
inline constexpr double lambda_gaussian = 0.28209479177387814;   // 1 / (2 sqrt(pi))
inline constexpr double lambda_uniform = 0.28867513459481287;    // 1 / (2 sqrt(3))
inline constexpr double lambda_laplace = 0.35355339059327373;    // 1 / (2 sqrt(2))

/**
 * Independent coordinates with arbitrary symmetric marginals:
 * d_S = 12 t1 (1 - t1) sum_k (delta_k / sigma_k)^2 lambda_k^2.
 */
inline double noncentrality_multirank_independent(const ShiftAlternative& alt, const Vector& lambdas) {
    detail::check_fraction(alt.t1);
    detail::require(alt.marginal_scales.size() == alt.delta.size() && lambdas.size() == alt.delta.size(),
                    ErrorCode::invalid_argument, "shift, scale and lambda dimensions differ");
    detail::require((alt.marginal_scales.array() > 0.0).all(), ErrorCode::invalid_argument,
                    "marginal scales must be positive");
    const Vector z = alt.delta.cwiseQuotient(alt.marginal_scales);
    return 12.0 * alt.t1 * (1.0 - alt.t1) * z.cwiseProduct(lambdas).squaredNorm();
}

/// Independent-coordinate Hotelling noncentrality t1 (1 - t1) sum (delta_k / sigma_k)^2.
inline double noncentrality_hotelling_independent(const ShiftAlternative& alt) {
    detail::check_fraction(alt.t1);
    detail::require(alt.marginal_scales.size() == alt.delta.size(), ErrorCode::invalid_argument,
                    "shift and scale dimensions differ");
    return alt.t1 * (1.0 - alt.t1) * alt.delta.cwiseQuotient(alt.marginal_scales).squaredNorm();
}

/// (3/pi) (sigma_min^2 / sigma_max^2) (lambda_min(C) / lambda_max(|C|)).
inline double are_gaussian_lower_bound(const Matrix& C) {
    detail::require(C.rows() == C.cols() && C.rows() > 0, ErrorCode::invalid_argument,
                    "covariance must be square");
    const Vector diag = C.diagonal();
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(C, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    const Matrix absC = C.cwiseAbs();
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(absC, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    return 3.0 / std::numbers::pi * (diag.minCoeff() / diag.maxCoeff()) * (lmin / lmax);
}

} // namespace multirank

#endif
