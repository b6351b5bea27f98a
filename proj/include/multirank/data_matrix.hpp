#ifndef MULTIRANK_DATA_MATRIX_HPP
#define MULTIRANK_DATA_MATRIX_HPP

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "multirank/error.hpp"

namespace multirank {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/**
 * n x K observations (rows are time, columns are coordinates) with optional
 * per-cell censoring bounds.
 *
 * A cell is censored when lower < upper; its value is then unknown and
 * stored as NaN. Missing cells use the degenerate interval (-inf, +inf).
 */
class DataMatrix {
public:
    DataMatrix() = default;

    explicit DataMatrix(Matrix values)
        : values_(std::move(values)), lower_(values_), upper_(values_) {
        validate();
    }

    DataMatrix(Matrix values, Matrix lower, Matrix upper)
        : values_(std::move(values)), lower_(std::move(lower)), upper_(std::move(upper)) {
        validate();
    }

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }

    const Matrix& values() const noexcept { return values_; }
    const Matrix& lower() const noexcept { return lower_; }
    const Matrix& upper() const noexcept { return upper_; }

    bool is_censored(Index i, Index k) const { return !(lower_(i, k) == upper_(i, k)); }
    bool is_missing(Index i, Index k) const {
        return lower_(i, k) == -infinity && upper_(i, k) == infinity;
    }

    bool has_censoring() const {
        for (Index k = 0; k < cols(); ++k)
            for (Index i = 0; i < rows(); ++i)
                if (is_censored(i, k)) return true;
        return false;
    }

    bool all_finite() const { return values_.allFinite(); }

    /// Marks cell (i, k) as known only to lie in [lo, hi].
    void censor(Index i, Index k, double lo, double hi) {
        detail::require(!(lo > hi), ErrorCode::invalid_argument, "censoring bounds must satisfy lower <= upper");
        lower_(i, k) = lo;
        upper_(i, k) = hi;
        values_(i, k) = (lo == hi) ? lo : std::numeric_limits<double>::quiet_NaN();
    }

    void set_missing(Index i, Index k) { censor(i, k, -infinity, infinity); }

    /// Rows [first, first + count) as a new matrix, censoring preserved.
    DataMatrix slice_rows(Index first, Index count) const {
        return DataMatrix(values_.middleRows(first, count), lower_.middleRows(first, count),
                          upper_.middleRows(first, count));
    }

    bool operator==(const DataMatrix& other) const {
        auto same = [](const Matrix& a, const Matrix& b) {
            if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
            for (Index i = 0; i < a.size(); ++i) {
                const double x = a.data()[i], y = b.data()[i];
                if (!(x == y) && !(std::isnan(x) && std::isnan(y))) return false;
            }
            return true;
        };
        return same(values_, other.values_) && same(lower_, other.lower_) && same(upper_, other.upper_);
    }

private:
    void validate() const {
        detail::require(values_.rows() >= 2, ErrorCode::invalid_argument, "need at least 2 observations");
        detail::require(values_.cols() >= 1, ErrorCode::invalid_argument, "need at least 1 coordinate");
        detail::require(lower_.rows() == values_.rows() && lower_.cols() == values_.cols() &&
                            upper_.rows() == values_.rows() && upper_.cols() == values_.cols(),
                        ErrorCode::invalid_argument, "censoring bounds must match the value matrix shape");
        for (Index i = 0; i < values_.size(); ++i) {
            const double v = values_.data()[i];
            const double lo = lower_.data()[i];
            const double hi = upper_.data()[i];
            detail::require(!std::isnan(lo) && !std::isnan(hi), ErrorCode::invalid_argument,
                            "censoring bounds must not be NaN");
            detail::require(lo <= hi, ErrorCode::invalid_argument, "censoring bounds must satisfy lower <= upper");
            if (std::isfinite(v))
                detail::require(lo <= v && v <= hi, ErrorCode::invalid_argument,
                                "value lies outside its censoring bounds");
        }
    }

    Matrix values_;
    Matrix lower_;
    Matrix upper_;
};

} // namespace multirank

#endif
