#pragma once

// Minimal numeric CSV reading/writing. Doubles are written in shortest
// round-trip form so files re-parse to the identical values.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "reachgym/error.hpp"

namespace reachgym {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        // from_chars rejects "inf"/"nan" spellings written by to_chars on some
        // libstdc++ builds; accept them explicitly.
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
        throw ParseError("malformed number '" + std::string(s) + "'", line_no);
    }
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError("missing column '" + name + "'");
    }
};

/// Parse numeric CSV text with a header row. Every row must match the header
/// width; errors carry the 1-based line number.
inline CsvTable parse_csv(std::istream& in, const std::vector<std::string>& expected_prefix = {}) {
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header) {
            t.header = split_csv_line(line);
            have_header = true;
            if (t.header.size() < expected_prefix.size())
                throw ParseError("header has too few columns", line_no);
            for (std::size_t i = 0; i < expected_prefix.size(); ++i)
                if (t.header[i] != expected_prefix[i])
                    throw ParseError("unexpected header column '" + t.header[i] + "', expected '" +
                                         expected_prefix[i] + "'",
                                     line_no);
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(cells.size()),
                             line_no);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, line_no));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable read_csv(const std::filesystem::path& path,
                         const std::vector<std::string>& expected_prefix = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_csv(in, expected_prefix);
}

inline void write_csv_row(std::ostream& out, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << format_double(row[i]);
    }
    out << '\n';
}

inline void write_csv_header(std::ostream& out, const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
}

}  // namespace reachgym
