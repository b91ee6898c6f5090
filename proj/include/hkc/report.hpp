#pragma once

// Tabular output: CSV with a header row and LF line endings, numbers printed in the
// shortest form that reads back to the same double, so reruns are byte-identical.
// JSON summaries keep insertion order for the same reason.

#include "hkc/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace hkc {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kReportVersion = "1.0";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct OutputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CsvTable {
public:
    using Cell = std::variant<double, long long, bool, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw DomainError("CsvTable: row width does not match the header");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& row : rows_) {
            std::vector<std::string> cells;
            for (const Cell& c : row) cells.push_back(render(c));
            append_line(out, cells);
        }
        return out;
    }

private:
    static std::string render(const Cell& c) {
        if (const double* d = std::get_if<double>(&c)) return format_number(*d);
        if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
        if (const bool* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
        return quote(std::get<std::string>(c));
    }
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

// JSON numbers that are not finite become strings so the document stays valid.
inline ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw OutputError(path.string() + ": write failed");
}

inline void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace hkc
