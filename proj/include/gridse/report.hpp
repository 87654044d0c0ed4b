#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace gridse {

/// Rectangular numeric report with labelled rows, used for the estimator
/// comparison and model metric tables. CSV emission round-trips exactly.
struct Table {
    std::string title;
    std::vector<std::string> columns;     // value column names
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> values;  // row-major, values[r].size() == columns.size()

    bool operator==(const Table&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace detail

inline std::string emit_csv(const Table& t) {
    std::ostringstream os;
    os << "# " << t.title << "\n";
    os << "label";
    for (const auto& c : t.columns) os << ',' << c;
    os << '\n';
    for (size_t r = 0; r < t.row_labels.size(); ++r) {
        os << t.row_labels[r];
        for (double v : t.values[r]) os << ',' << detail::format_double(v);
        os << '\n';
    }
    return os.str();
}

inline Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream is(text);
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.title = line.size() > 2 ? line.substr(2) : "";
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (!have_header) {
            if (fields.empty() || fields[0] != "label")
                throw std::invalid_argument("parse_csv: missing header row");
            t.columns.assign(fields.begin() + 1, fields.end());
            have_header = true;
            continue;
        }
        if (fields.size() != t.columns.size() + 1)
            throw std::invalid_argument("parse_csv: ragged row");
        t.row_labels.push_back(fields[0]);
        std::vector<double> row;
        for (size_t c = 1; c < fields.size(); ++c) row.push_back(std::stod(fields[c]));
        t.values.push_back(std::move(row));
    }
    if (!have_header) throw std::invalid_argument("parse_csv: empty input");
    return t;
}

/// Aligned plain-text rendering. Rows listed in `mark_rows` compete for the
/// per-column minimum, which is tagged with '*'.
inline std::string render_text(const Table& t, const std::vector<size_t>& mark_rows = {}) {
    const size_t nc = t.columns.size();
    std::vector<size_t> best(nc, SIZE_MAX);
    for (size_t c = 0; c < nc; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        for (size_t r : mark_rows) {
            if (r < t.values.size() && t.values[r][c] < lo) {
                lo = t.values[r][c];
                best[c] = r;
            }
        }
    }
    std::vector<std::vector<std::string>> cells(t.row_labels.size());
    for (size_t r = 0; r < t.row_labels.size(); ++r) {
        for (size_t c = 0; c < nc; ++c) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", t.values[r][c]);
            cells[r].push_back(std::string(buf) + (best[c] == r ? " *" : ""));
        }
    }
    std::vector<size_t> width(nc + 1, 0);
    width[0] = std::string("model").size();
    for (const auto& l : t.row_labels) width[0] = std::max(width[0], l.size());
    for (size_t c = 0; c < nc; ++c) {
        width[c + 1] = t.columns[c].size();
        for (size_t r = 0; r < cells.size(); ++r)
            width[c + 1] = std::max(width[c + 1], cells[r][c].size());
    }
    std::ostringstream os;
    os << t.title << '\n';
    os << std::left << std::setw(static_cast<int>(width[0])) << "model";
    for (size_t c = 0; c < nc; ++c)
        os << "  " << std::setw(static_cast<int>(width[c + 1])) << t.columns[c];
    os << '\n';
    for (size_t r = 0; r < t.row_labels.size(); ++r) {
        os << std::left << std::setw(static_cast<int>(width[0])) << t.row_labels[r];
        for (size_t c = 0; c < nc; ++c)
            os << "  " << std::setw(static_cast<int>(width[c + 1])) << cells[r][c];
        os << '\n';
    }
    return os.str();
}

/// Interpolated quantile of an unsorted sample (numpy's default scheme).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace gridse
