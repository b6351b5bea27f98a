#ifndef MULTIRANK_CSV_IO_HPP
#define MULTIRANK_CSV_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "multirank/data_matrix.hpp"

namespace multirank {

/**
 * CSV cells: a number, an empty cell or NA (missing), or "lo..hi" for a
 * value censored to [lo, hi] (either side may be -inf / inf).  A first row
 * that does not parse is taken as a header.
 */
struct CsvTable {
    std::vector<std::string> header;
    DataMatrix data;
};

namespace detail {

struct Cell {
    double value;
    double lower;
    double upper;
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\"");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\"");
    return s.substr(a, b - a + 1);
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || std::isnan(v)) return std::nullopt;
    return v;
}

inline std::optional<Cell> parse_cell(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty() || s == "NA") return Cell{std::nan(""), -infinity, infinity};
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        const auto lo = parse_number(trim(s.substr(0, dots)));
        const auto hi = parse_number(trim(s.substr(dots + 2)));
        if (!lo || !hi || *lo > *hi) return std::nullopt;
        return Cell{*lo == *hi ? *lo : std::nan(""), *lo, *hi};
    }
    const auto v = parse_number(s);
    if (!v) return std::nullopt;
    return Cell{*v, *v, *v};
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

inline CsvTable read_csv(std::istream& in) {
    std::vector<std::vector<detail::Cell>> rows;
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_line(line);
        std::vector<detail::Cell> cells;
        bool ok = true;
        for (const auto& f : fields) {
            const auto c = detail::parse_cell(f);
            if (!c) {
                ok = false;
                break;
            }
            cells.push_back(*c);
        }
        if (!ok) {
            if (rows.empty() && table.header.empty()) {
                for (const auto& f : fields) table.header.push_back(detail::trim(f));
                width = fields.size();
                continue;
            }
            detail::fail(ErrorCode::parse_error, "non-numeric cell on line " + std::to_string(line_no));
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            detail::fail(ErrorCode::parse_error, "ragged row on line " + std::to_string(line_no) + ": expected " +
                                                     std::to_string(width) + " fields, got " +
                                                     std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    if (rows.size() < 2) detail::fail(ErrorCode::parse_error, "CSV needs at least 2 data rows");

    const Index n = static_cast<Index>(rows.size());
    const Index K = static_cast<Index>(width);
    Matrix v(n, K), lo(n, K), hi(n, K);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < K; ++k) {
            const auto& c = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            v(i, k) = c.value;
            lo(i, k) = c.lower;
            hi(i, k) = c.upper;
        }
    table.data = DataMatrix(std::move(v), std::move(lo), std::move(hi));
    return table;
}

inline DataMatrix ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorCode::io_error, "cannot open " + path);
    return read_csv(in).data;
}

/// Shortest round-trip formatting, so read_csv(write_csv(d)) == d.
inline void write_csv(std::ostream& os, const DataMatrix& data, const std::vector<std::string>& header = {}) {
    if (!header.empty()) {
        for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
        os << '\n';
    }
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index k = 0; k < data.cols(); ++k) {
            if (k) os << ',';
            if (data.is_missing(i, k)) continue;
            if (data.is_censored(i, k))
                os << detail::format_double(data.lower()(i, k)) << ".." << detail::format_double(data.upper()(i, k));
            else
                os << detail::format_double(data.values()(i, k));
        }
        os << '\n';
    }
}

} // namespace multirank

#endif
