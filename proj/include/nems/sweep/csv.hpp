// csv.hpp - fixed-format CSV output (comma separated, LF endings, 17 significant digits)

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "nems/errors.hpp"

namespace nems::sweep {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

// Quotes a field when it contains a separator, quote or line break.
inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else if (c == '\n' || c == '\r') out += ' ';
        else out += c;
    }
    out += '"';
    return out;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw DimensionError("CsvTable: row width does not match header");
        rows_.push_back(std::move(cells));
    }

    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path);
}

} // namespace nems::sweep
