#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aegan {

enum class ErrorCode {
    io,
    header_mismatch,
    bad_number,
    unknown_category,
    empty_table,
    missing_value,
    target_not_found,
    degenerate_column,
    invalid_schema,
    stratification,
    version_mismatch,
    invalid_argument,
    shape_mismatch,
    non_finite,
    divergence,
    label_mismatch,
    config,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::header_mismatch: return "header_mismatch";
    case ErrorCode::bad_number: return "bad_number";
    case ErrorCode::unknown_category: return "unknown_category";
    case ErrorCode::empty_table: return "empty_table";
    case ErrorCode::missing_value: return "missing_value";
    case ErrorCode::target_not_found: return "target_not_found";
    case ErrorCode::degenerate_column: return "degenerate_column";
    case ErrorCode::invalid_schema: return "invalid_schema";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::label_mismatch: return "label_mismatch";
    case ErrorCode::config: return "config";
    }
    return "unknown";
}

/// Every failure in the library is reported as an Error carrying a code, so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Data errors that point at a specific cell.
class CellError : public Error {
public:
    CellError(ErrorCode code, std::string column, std::size_t row, const std::string& message)
        : Error(code, message), column_(std::move(column)), row_(row) {}

    const std::string& column() const noexcept { return column_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string column_;
    std::size_t row_;
};

} // namespace aegan
