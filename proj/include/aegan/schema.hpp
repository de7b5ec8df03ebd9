#pragma once

#include <aegan/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace aegan {

enum class ColumnKind { continuous, categorical };

inline std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::continuous ? "continuous" : "categorical";
}

inline ColumnKind parse_column_kind(std::string_view s) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "categorical") return ColumnKind::categorical;
    throw Error(ErrorCode::invalid_schema, "unknown column kind '" + std::string(s) + "'");
}

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<std::string> categories; // empty for continuous columns

    bool is_categorical() const noexcept { return kind == ColumnKind::categorical; }

    /// Index of a token in the vocabulary, or nullopt.
    std::optional<std::size_t> category_index(std::string_view token) const {
        auto it = std::find(categories.begin(), categories.end(), token);
        if (it == categories.end()) return std::nullopt;
        return static_cast<std::size_t>(it - categories.begin());
    }

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

class TableSchema {
public:
    TableSchema() = default;

    TableSchema(std::vector<ColumnSpec> columns, std::string target)
        : columns_(std::move(columns)), target_(std::move(target)) {
        validate();
    }

    const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
    const std::string& target() const noexcept { return target_; }
    std::size_t size() const noexcept { return columns_.size(); }
    const ColumnSpec& operator[](std::size_t i) const { return columns_[i]; }

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t target_index() const { return *index_of(target_); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(columns_.size());
        for (const auto& c : columns_) out.push_back(c.name);
        return out;
    }

    std::size_t count(ColumnKind kind) const {
        return static_cast<std::size_t>(std::count_if(
            columns_.begin(), columns_.end(), [kind](const ColumnSpec& c) { return c.kind == kind; }));
    }

    /// Same columns rearranged into `order` (a permutation of the column names).
    TableSchema reordered(const std::vector<std::string>& order) const {
        if (order.size() != columns_.size())
            throw Error(ErrorCode::invalid_argument, "column order has wrong length");
        std::vector<ColumnSpec> cols;
        cols.reserve(order.size());
        std::unordered_set<std::string> seen;
        for (const auto& name : order) {
            auto idx = index_of(name);
            if (!idx || !seen.insert(name).second)
                throw Error(ErrorCode::invalid_argument, "column order is not a permutation (at '" + name + "')");
            cols.push_back(columns_[*idx]);
        }
        return TableSchema(std::move(cols), target_);
    }

    friend bool operator==(const TableSchema&, const TableSchema&) = default;

private:
    void validate() const {
        if (columns_.empty()) throw Error(ErrorCode::invalid_schema, "schema has no columns");
        std::unordered_set<std::string> names;
        for (const auto& c : columns_) {
            if (c.name.empty()) throw Error(ErrorCode::invalid_schema, "empty column name");
            if (!names.insert(c.name).second)
                throw Error(ErrorCode::invalid_schema, "duplicate column name '" + c.name + "'");
            if (c.is_categorical()) {
                if (c.categories.size() < 2)
                    throw Error(ErrorCode::invalid_schema,
                                "categorical column '" + c.name + "' needs at least 2 categories");
                std::unordered_set<std::string> vocab(c.categories.begin(), c.categories.end());
                if (vocab.size() != c.categories.size())
                    throw Error(ErrorCode::invalid_schema, "duplicate category in column '" + c.name + "'");
            } else if (!c.categories.empty()) {
                throw Error(ErrorCode::invalid_schema,
                            "continuous column '" + c.name + "' must not declare categories");
            }
        }
        auto t = index_of(target_);
        if (!t) throw Error(ErrorCode::target_not_found, "target column '" + target_ + "' not in schema");
        if (!columns_[*t].is_categorical())
            throw Error(ErrorCode::invalid_schema, "target column '" + target_ + "' must be categorical");
    }

    std::vector<ColumnSpec> columns_;
    std::string target_;
};

/// A cell is either a finite number (continuous) or a category token.
using Cell = std::variant<double, std::string>;
using Row = std::vector<Cell>;

inline double as_number(const Cell& c) { return std::get<double>(c); }
inline const std::string& as_token(const Cell& c) { return std::get<std::string>(c); }

struct RawTable {
    TableSchema schema;
    std::vector<Row> rows;

    std::size_t num_rows() const noexcept { return rows.size(); }
    std::size_t num_columns() const noexcept { return schema.size(); }

    std::vector<double> numeric_column(std::size_t j) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(as_number(r[j]));
        return out;
    }

    std::vector<std::string> token_column(std::size_t j) const {
        std::vector<std::string> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(as_token(r[j]));
        return out;
    }

    /// Vocabulary indices of a categorical column (throws on unknown tokens).
    std::vector<std::size_t> category_codes(std::size_t j) const {
        const auto& spec = schema[j];
        std::unordered_map<std::string, std::size_t> lookup;
        for (std::size_t k = 0; k < spec.categories.size(); ++k) lookup.emplace(spec.categories[k], k);
        std::vector<std::size_t> out;
        out.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto it = lookup.find(as_token(rows[i][j]));
            if (it == lookup.end())
                throw CellError(ErrorCode::unknown_category, spec.name, i,
                                "unknown category '" + as_token(rows[i][j]) + "' in column '" + spec.name +
                                    "' at row " + std::to_string(i));
            out.push_back(it->second);
        }
        return out;
    }

    /// Same data with columns rearranged into `order`.
    RawTable reordered(const std::vector<std::string>& order) const {
        RawTable out{schema.reordered(order), {}};
        std::vector<std::size_t> src;
        src.reserve(order.size());
        for (const auto& name : order) src.push_back(*schema.index_of(name));
        out.rows.reserve(rows.size());
        for (const auto& r : rows) {
            Row nr;
            nr.reserve(src.size());
            for (auto s : src) nr.push_back(r[s]);
            out.rows.push_back(std::move(nr));
        }
        return out;
    }

    RawTable subset(const std::vector<std::size_t>& indices) const {
        RawTable out{schema, {}};
        out.rows.reserve(indices.size());
        for (auto i : indices) out.rows.push_back(rows.at(i));
        return out;
    }
};

/// Checks every RawTable invariant; throws CellError naming the first bad cell.
inline void validate_table(const RawTable& table) {
    const auto& cols = table.schema.columns();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != cols.size())
            throw Error(ErrorCode::shape_mismatch, "row " + std::to_string(i) + " has " +
                                                       std::to_string(row.size()) + " cells, expected " +
                                                       std::to_string(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].is_categorical()) {
                if (!std::holds_alternative<std::string>(row[j]) || !cols[j].category_index(as_token(row[j])))
                    throw CellError(ErrorCode::unknown_category, cols[j].name, i,
                                    "invalid category in column '" + cols[j].name + "' at row " +
                                        std::to_string(i));
            } else if (!std::holds_alternative<double>(row[j]) || !std::isfinite(as_number(row[j]))) {
                throw CellError(ErrorCode::bad_number, cols[j].name, i,
                                "non-finite value in column '" + cols[j].name + "' at row " +
                                    std::to_string(i));
            }
        }
    }
}

// ---- JSON ----------------------------------------------------------------

inline nlohmann::json schema_to_json(const TableSchema& schema) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : schema.columns()) {
        nlohmann::json jc{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
        if (c.is_categorical()) jc["categories"] = c.categories;
        cols.push_back(std::move(jc));
    }
    return {{"columns", std::move(cols)}, {"target", schema.target()}};
}

inline TableSchema schema_from_json(const nlohmann::json& j) {
    try {
        std::vector<ColumnSpec> cols;
        for (const auto& jc : j.at("columns")) {
            ColumnSpec c;
            c.name = jc.at("name").get<std::string>();
            c.kind = parse_column_kind(jc.at("kind").get<std::string>());
            if (jc.contains("categories")) c.categories = jc.at("categories").get<std::vector<std::string>>();
            cols.push_back(std::move(c));
        }
        return TableSchema(std::move(cols), j.at("target").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_schema, std::string("malformed schema: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::io, "cannot parse '" + path + "': " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path + "'");
}

inline void save_schema(const TableSchema& schema, const std::string& path) {
    write_json_file(path, schema_to_json(schema));
}

inline TableSchema load_schema(const std::string& path) { return schema_from_json(read_json_file(path)); }

} // namespace aegan
