// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Minimal CSV layer for the toolkit's fixed schemas: comma-separated, UTF-8,
// '.' decimal point, RFC-4180-style quoting, '#' comment lines. Numbers are
// emitted with shortest round-trip formatting so outputs are byte-stable.

#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "refuge/errors.hpp"

namespace refuge {

/// Locale-independent shortest round-trip representation.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw SchemaError(context + ": cannot parse number '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s, const std::string& context) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError(context + ": cannot parse integer '" + s + "'");
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_numbers;  // 1-based line number per data row
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && field.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field += ch;
        }
    }
    if (quoted)
        throw SchemaError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(field);
    return fields;
}

inline std::string quote_csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

}  // namespace detail

/// Parses a CSV stream. Lines starting with '#' are skipped; the first
/// remaining line is the header. Data rows must match the header width.
inline CsvTable read_csv(std::istream& in, const std::string& name) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = detail::split_csv_line(line, line_no);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw SchemaError(name + " line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
            table.row_numbers.push_back(line_no);
        }
    }
    if (table.header.empty()) throw SchemaError(name + ": missing CSV header");
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file: " + path);
    return read_csv(in, path);
}

inline void expect_header(const CsvTable& t, const std::vector<std::string>& expected,
                          const std::string& name, std::size_t required_prefix = 0) {
    const std::size_t need = required_prefix == 0 ? expected.size() : required_prefix;
    auto mismatch = [&] {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw SchemaError(name + ": header must be '" + want + "'");
    };
    if (t.header.size() < need || t.header.size() > expected.size()) mismatch();
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] != expected[i]) mismatch();
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
        if (!out_) throw IoError("cannot write file: " + path);
    }

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << detail::quote_csv_field(fields[i]);
        }
        out_ << '\n';
    }

    void close() {
        out_.flush();
        if (!out_) throw IoError("short write on file: " + path_);
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace refuge
