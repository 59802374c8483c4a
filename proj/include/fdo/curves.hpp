#pragma once

// Regularly sampled functional observations: one curve per row, p samples on
// the dyadic grid t_j = j/p, j = 0..p-1.

#include "fdo/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fdo {

using Index = std::size_t;
using IndexList = std::vector<Index>;

class CurveSet {
public:
    /// Takes ownership of an n x p matrix. Throws InvalidArgument if p < 2,
    /// if any entry is non-finite or if ids has the wrong length.
    explicit CurveSet(Eigen::MatrixXd values, std::vector<std::string> ids = {})
        : values_(std::move(values)), ids_(std::move(ids)) {
        if (values_.cols() < 2) throw InvalidArgument("a curve needs at least 2 samples");
        if (!values_.allFinite()) throw InvalidArgument("curve values must be finite");
        const auto n = static_cast<Index>(values_.rows());
        if (ids_.empty()) {
            ids_.reserve(n);
            for (Index i = 0; i < n; ++i) ids_.push_back("day-" + std::to_string(i));
        } else if (ids_.size() != n) {
            throw InvalidArgument("expected " + std::to_string(n) + " curve ids, got " +
                                  std::to_string(ids_.size()));
        }
        const auto p = static_cast<Index>(values_.cols());
        times_.resize(p);
        for (Index j = 0; j < p; ++j) times_[j] = static_cast<double>(j) / static_cast<double>(p);
    }

    Index n() const noexcept { return static_cast<Index>(values_.rows()); }
    Index p() const noexcept { return static_cast<Index>(values_.cols()); }

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const std::vector<double>& sample_times() const noexcept { return times_; }
    const std::vector<std::string>& curve_ids() const noexcept { return ids_; }

    auto row(Index i) const { return values_.row(static_cast<Eigen::Index>(i)); }

    /// Curves restricted to the given rows, keeping their ids.
    CurveSet subset(const IndexList& rows) const {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (Index r = 0; r < rows.size(); ++r) {
            if (rows[r] >= n()) throw InvalidArgument("row index out of range");
            v.row(static_cast<Eigen::Index>(r)) = row(rows[r]);
            ids.push_back(ids_[rows[r]]);
        }
        return CurveSet(std::move(v), std::move(ids));
    }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> ids_;
    std::vector<double> times_;
};

class SplitLabels;
SplitLabels make_split(Index n, IndexList nominal);

/// Partition of the curve indices into a certified-nominal set and a test
/// set. Built only through make_split, which validates the partition.
class SplitLabels {
public:
    const IndexList& nominal_indices() const noexcept { return nominal_; }
    const IndexList& test_indices() const noexcept { return test_; }
    Index n_nominal() const noexcept { return nominal_.size(); }
    Index n_test() const noexcept { return test_.size(); }
    Index n() const noexcept { return nominal_.size() + test_.size(); }

    /// Rows used to fit a PCA basis: nominal positions 1, 3, 5, ...
    IndexList pca_fit_indices() const {
        IndexList out;
        for (Index pos = 1; pos < nominal_.size(); pos += 2) out.push_back(nominal_[pos]);
        return out;
    }

    /// Nominal rows left for testing once the PCA fit rows are removed
    /// (positions 0, 2, 4, ...).
    IndexList pca_holdout_indices() const {
        IndexList out;
        for (Index pos = 0; pos < nominal_.size(); pos += 2) out.push_back(nominal_[pos]);
        return out;
    }

private:
    friend SplitLabels make_split(Index n, IndexList nominal);
    SplitLabels(IndexList nominal, IndexList test) : nominal_(std::move(nominal)), test_(std::move(test)) {}

    IndexList nominal_;
    IndexList test_;
};

inline SplitLabels make_split(Index n, IndexList nominal) {
    std::sort(nominal.begin(), nominal.end());
    if (std::adjacent_find(nominal.begin(), nominal.end()) != nominal.end())
        throw InvalidArgument("duplicate nominal index");
    if (!nominal.empty() && nominal.back() >= n)
        throw InvalidArgument("nominal index " + std::to_string(nominal.back()) + " out of range for n = " +
                              std::to_string(n));
    if (nominal.size() < 4) throw InvalidArgument("the nominal set needs at least 4 curves");
    if (nominal.size() >= n) throw InvalidArgument("the test set is empty");

    IndexList test;
    test.reserve(n - nominal.size());
    auto it = nominal.begin();
    for (Index i = 0; i < n; ++i) {
        if (it != nominal.end() && *it == i) {
            ++it;
            continue;
        }
        test.push_back(i);
    }
    return SplitLabels(std::move(nominal), std::move(test));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

/// Parses a finite double; row and column are 1-based for messages.
inline double parse_cell(std::string_view cell, std::size_t row, std::size_t column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(row, column, std::string(cell));
    return v;
}

/// Shortest form is not needed; 17 significant digits always round-trip.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Reads a numeric matrix, one row per line, comma separated.
inline Eigen::MatrixXd read_numeric_csv(std::istream& in, bool has_header, std::vector<std::string>* header = nullptr) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = detail::trim(line);
        if (view.empty()) continue;
        const auto cells = detail::split_commas(view);
        if (header_pending) {
            header_pending = false;
            if (header)
                for (auto c : cells) header->emplace_back(c);
            continue;
        }
        if (rows.empty()) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw FormatError("ragged row at line " + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " fields, found " + std::to_string(cells.size()));
        }
        std::vector<double> r;
        r.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) r.push_back(detail::parse_cell(cells[c], line_no, c + 1));
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw EmptyInputError("no data rows found");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline void write_numeric_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {}) {
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
        out << '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(m(i, j));
        }
        out << '\n';
    }
}

inline CurveSet load_csv(const std::string& path, bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return CurveSet(read_numeric_csv(in, has_header));
}

inline void save_csv(const CurveSet& curves, const std::string& path, bool with_header = false) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    std::vector<std::string> header;
    if (with_header)
        for (Index j = 0; j < curves.p(); ++j) header.push_back("t" + std::to_string(j));
    write_numeric_csv(out, curves.values(), header);
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Parses "0-9,12,20-22" style index lists (inclusive ranges).
inline IndexList parse_index_list(std::string_view text) {
    IndexList out;
    for (auto cell : detail::split_commas(text)) {
        if (cell.empty()) continue;
        const auto dash = cell.find('-', 1);
        auto parse = [&](std::string_view s) {
            Index v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw InvalidArgument("bad index '" + std::string(s) + "'");
            return v;
        };
        if (dash == std::string_view::npos) {
            out.push_back(parse(cell));
        } else {
            const Index lo = parse(detail::trim(cell.substr(0, dash)));
            const Index hi = parse(detail::trim(cell.substr(dash + 1)));
            if (hi < lo) throw InvalidArgument("empty range '" + std::string(cell) + "'");
            for (Index i = lo; i <= hi; ++i) out.push_back(i);
        }
    }
    return out;
}

} // namespace fdo
