#pragma once

#include <aegan/error.hpp>
#include <aegan/schema.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace aegan {

namespace csv_detail {

// Reads one RFC-4180 record. Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    int c = in.peek();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
        c = in.get();
        if (c == EOF) {
            if (quoted) throw Error(ErrorCode::io, "unterminated quoted field");
            if (any || !field.empty()) fields.push_back(std::move(field));
            return !fields.empty();
        }
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::optional<double> parse_number(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CsvText {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> records;
};

inline CsvText read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    if (in.peek() == 0xEF) { // UTF-8 byte order mark
        char bom[3];
        in.read(bom, 3);
    }
    CsvText text;
    if (!read_record(in, text.header)) throw Error(ErrorCode::empty_table, "'" + path + "' has no header row");
    for (auto& h : text.header) h = trim(h);
    std::vector<std::string> fields;
    while (read_record(in, fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty()) continue; // blank line
        if (fields.size() != text.header.size())
            throw Error(ErrorCode::shape_mismatch, "record " + std::to_string(text.records.size()) + " has " +
                                                       std::to_string(fields.size()) + " fields, header has " +
                                                       std::to_string(text.header.size()));
        text.records.push_back(fields);
    }
    return text;
}

} // namespace csv_detail

/// Loads a CSV whose header matches the schema's column names as a set.
/// Rows come back in schema column order.
inline RawTable load_csv(const std::string& path, const TableSchema& schema) {
    auto text = csv_detail::read_all(path);
    const auto& cols = schema.columns();

    std::unordered_set<std::string> header_set(text.header.begin(), text.header.end());
    if (header_set.size() != text.header.size() || text.header.size() != cols.size())
        throw Error(ErrorCode::header_mismatch, "header of '" + path + "' does not match schema columns");
    std::vector<std::size_t> source(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        auto it = std::find(text.header.begin(), text.header.end(), cols[j].name);
        if (it == text.header.end())
            throw Error(ErrorCode::header_mismatch, "column '" + cols[j].name + "' missing from '" + path + "'");
        source[j] = static_cast<std::size_t>(it - text.header.begin());
    }
    if (text.records.empty()) throw Error(ErrorCode::empty_table, "'" + path + "' has no data rows");

    std::vector<std::unordered_map<std::string, std::size_t>> vocab(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t k = 0; k < cols[j].categories.size(); ++k) vocab[j].emplace(cols[j].categories[k], k);

    RawTable table{schema, {}};
    table.rows.reserve(text.records.size());
    for (std::size_t i = 0; i < text.records.size(); ++i) {
        Row row;
        row.reserve(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::string& raw = text.records[i][source[j]];
            if (csv_detail::trim(raw).empty())
                throw CellError(ErrorCode::missing_value, cols[j].name, i,
                                "missing value in column '" + cols[j].name + "' at row " + std::to_string(i));
            if (cols[j].is_categorical()) {
                std::string token = csv_detail::trim(raw);
                if (!vocab[j].count(token))
                    throw CellError(ErrorCode::unknown_category, cols[j].name, i,
                                    "unknown category '" + token + "' in column '" + cols[j].name + "' at row " +
                                        std::to_string(i));
                row.emplace_back(std::move(token));
            } else {
                auto v = csv_detail::parse_number(raw);
                if (!v)
                    throw CellError(ErrorCode::bad_number, cols[j].name, i,
                                    "non-numeric value '" + raw + "' in column '" + cols[j].name + "' at row " +
                                        std::to_string(i));
                row.emplace_back(*v);
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void write_csv(std::ostream& out, const RawTable& table) {
    const auto& cols = table.schema.columns();
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << csv_detail::quote(cols[j].name);
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            if (std::holds_alternative<double>(row[j])) out << csv_detail::format_number(as_number(row[j]));
            else out << csv_detail::quote(as_token(row[j]));
        }
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const RawTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    write_csv(out, table);
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path + "'");
}

/// Columns that are all-numeric with more than `categorical_threshold` distinct
/// values become continuous; everything else is categorical with its tokens in
/// first-appearance order.
inline TableSchema infer_schema(const std::string& path, const std::string& target,
                                std::size_t categorical_threshold = 20) {
    auto text = csv_detail::read_all(path);
    if (std::find(text.header.begin(), text.header.end(), target) == text.header.end())
        throw Error(ErrorCode::target_not_found, "target column '" + target + "' not found in '" + path + "'");
    if (text.records.empty()) throw Error(ErrorCode::empty_table, "'" + path + "' has no data rows");

    std::vector<ColumnSpec> cols;
    for (std::size_t j = 0; j < text.header.size(); ++j) {
        ColumnSpec spec;
        spec.name = text.header[j];
        std::unordered_set<std::string> seen;
        std::vector<std::string> order;
        bool numeric = true;
        std::unordered_set<double> distinct_values;
        for (std::size_t i = 0; i < text.records.size(); ++i) {
            std::string tok = csv_detail::trim(text.records[i][j]);
            if (tok.empty())
                throw CellError(ErrorCode::missing_value, spec.name, i,
                                "missing value in column '" + spec.name + "' at row " + std::to_string(i));
            if (seen.insert(tok).second) order.push_back(tok);
            if (numeric) {
                auto v = csv_detail::parse_number(tok);
                if (v) distinct_values.insert(*v);
                else numeric = false;
            }
        }
        if (order.size() < 2)
            throw Error(ErrorCode::degenerate_column, "column '" + spec.name + "' has a single distinct value");
        if (numeric && spec.name != target && distinct_values.size() > categorical_threshold) {
            spec.kind = ColumnKind::continuous;
        } else {
            spec.kind = ColumnKind::categorical;
            spec.categories = std::move(order);
        }
        cols.push_back(std::move(spec));
    }
    return TableSchema(std::move(cols), target);
}

} // namespace aegan
