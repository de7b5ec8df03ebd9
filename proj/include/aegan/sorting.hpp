#pragma once

#include <aegan/association.hpp>
#include <aegan/encoding.hpp>
#include <aegan/error.hpp>
#include <aegan/schema.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace aegan {

enum class OrderMethod { original, by_type, by_correlation, algorithm1 };

inline std::string_view to_string(OrderMethod m) {
    switch (m) {
    case OrderMethod::original: return "original";
    case OrderMethod::by_type: return "by_type";
    case OrderMethod::by_correlation: return "by_correlation";
    case OrderMethod::algorithm1: return "algorithm1";
    }
    return "original";
}

/// Accepts the method names and the short CLI spellings (type, correlation).
inline OrderMethod parse_order_method(std::string_view s) {
    if (s == "original") return OrderMethod::original;
    if (s == "by_type" || s == "type") return OrderMethod::by_type;
    if (s == "by_correlation" || s == "correlation") return OrderMethod::by_correlation;
    if (s == "algorithm1") return OrderMethod::algorithm1;
    throw Error(ErrorCode::invalid_argument, "unknown column order '" + std::string(s) + "'");
}

struct ColumnOrder {
    std::vector<std::string> order;
    OrderMethod method = OrderMethod::original;
    std::string provenance; // hash of the association snapshot, empty when none was used

    friend bool operator==(const ColumnOrder&, const ColumnOrder&) = default;
};

/// Stable textual fingerprint of an association matrix.
inline std::string association_fingerprint(const AssociationMatrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    };
    for (const auto& l : m.labels) mix(l);
    char buf[40];
    for (Eigen::Index i = 0; i < m.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", m.values.data()[i]);
        mix(buf);
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace sorting_detail {

inline std::vector<std::size_t> assoc_index(const TableSchema& schema, const AssociationMatrix& assoc) {
    std::vector<std::size_t> idx;
    for (const auto& c : schema.columns()) {
        auto it = std::find(assoc.labels.begin(), assoc.labels.end(), c.name);
        if (it == assoc.labels.end())
            throw Error(ErrorCode::label_mismatch, "association matrix has no entry for '" + c.name + "'");
        idx.push_back(static_cast<std::size_t>(it - assoc.labels.begin()));
    }
    return idx;
}

} // namespace sorting_detail

/// Result of the correlation-centering sort, with the final side counters.
struct SortTrace {
    ColumnOrder order;
    std::size_t left_width = 0;  // encoded columns added to the left of the seed pair
    std::size_t right_width = 0; // encoded columns added to the right of the seed pair
    std::vector<std::string> seed_pair;
};

/// Groups highly associated features in the middle of the column order,
/// balancing the encoded width added on either side.
///
/// Pairs are visited by descending |association| (ties: lexicographic on the
/// sorted pair names). The first pair seeds the order in schema order. Each
/// later pair contributes its not-yet-placed member(s), which are appended on
/// the right when the right counter is strictly smaller than the left one and
/// prepended on the left otherwise; the receiving counter grows by their
/// encoded width. `widths` is aligned with the schema's column order.
inline SortTrace sort_features_traced(const TableSchema& schema, const AssociationMatrix& assoc,
                                      std::span<const std::size_t> widths) {
    const std::size_t f = schema.size();
    if (widths.size() != f)
        throw Error(ErrorCode::invalid_argument, "expected " + std::to_string(f) + " feature widths, got " +
                                                     std::to_string(widths.size()));
    for (std::size_t i = 0; i < f; ++i)
        if (widths[i] == 0) throw Error(ErrorCode::invalid_argument, "feature '" + schema[i].name + "' has no width");
    const auto idx = sorting_detail::assoc_index(schema, assoc);

    SortTrace trace;
    trace.order.method = OrderMethod::algorithm1;
    trace.order.provenance = association_fingerprint(assoc);
    if (f == 1) {
        trace.order.order = {schema[0].name};
        return trace;
    }

    struct Pair {
        double value;
        std::size_t a, b; // schema indices, a < b
        std::string lo, hi;
    };
    std::vector<Pair> pairs;
    pairs.reserve(f * (f - 1) / 2);
    for (std::size_t a = 0; a < f; ++a)
        for (std::size_t b = a + 1; b < f; ++b) {
            const double v = std::abs(assoc(idx[a], idx[b]));
            const auto& na = schema[a].name;
            const auto& nb = schema[b].name;
            pairs.push_back({std::isfinite(v) ? v : 0.0, a, b, std::min(na, nb), std::max(na, nb)});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        if (x.value != y.value) return x.value > y.value;
        if (x.lo != y.lo) return x.lo < y.lo;
        return x.hi < y.hi;
    });

    std::deque<std::size_t> sorted;
    std::vector<bool> placed(f, false);
    std::size_t n_placed = 0;
    for (const auto& p : pairs) {
        if (n_placed == f) break;
        std::vector<std::size_t> fresh;
        if (!placed[p.a]) fresh.push_back(p.a);
        if (!placed[p.b]) fresh.push_back(p.b);
        if (fresh.empty()) continue;
        std::size_t c = 0;
        for (auto i : fresh) c += widths[i];
        if (sorted.empty()) {
            sorted = {p.a, p.b};
            trace.seed_pair = {schema[p.a].name, schema[p.b].name};
        } else if (trace.right_width < trace.left_width) {
            for (auto i : fresh) sorted.push_back(i);
            trace.right_width += c;
        } else {
            for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) sorted.push_front(*it);
            trace.left_width += c;
        }
        for (auto i : fresh) placed[i] = true;
        n_placed += fresh.size();
    }
    for (auto i : sorted) trace.order.order.push_back(schema[i].name);
    return trace;
}

inline ColumnOrder sort_features(const TableSchema& schema, const AssociationMatrix& assoc,
                                 std::span<const std::size_t> widths) {
    return sort_features_traced(schema, assoc, widths).order;
}

/// Continuous columns first, then categorical, each in schema order.
inline ColumnOrder order_by_type(const TableSchema& schema) {
    ColumnOrder out;
    out.method = OrderMethod::by_type;
    for (const auto& c : schema.columns())
        if (!c.is_categorical()) out.order.push_back(c.name);
    for (const auto& c : schema.columns())
        if (c.is_categorical()) out.order.push_back(c.name);
    return out;
}

/// Features sorted by their strongest |association| with any other feature,
/// descending; ties keep schema order.
inline ColumnOrder order_by_correlation(const TableSchema& schema, const AssociationMatrix& assoc) {
    const auto idx = sorting_detail::assoc_index(schema, assoc);
    const std::size_t f = schema.size();
    std::vector<double> score(f, 0.0);
    for (std::size_t a = 0; a < f; ++a)
        for (std::size_t b = 0; b < f; ++b)
            if (a != b) score[a] = std::max(score[a], std::abs(assoc(idx[a], idx[b])));
    std::vector<std::size_t> perm(f);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
    ColumnOrder out;
    out.method = OrderMethod::by_correlation;
    out.provenance = association_fingerprint(assoc);
    for (auto i : perm) out.order.push_back(schema[i].name);
    return out;
}

inline ColumnOrder original_order(const TableSchema& schema) { return {schema.names(), OrderMethod::original, {}}; }

// ---- text form -----------------------------------------------------------

inline void write_order(std::ostream& out, const ColumnOrder& order) {
    out << "# method: " << to_string(order.method) << '\n';
    if (!order.provenance.empty()) out << "# provenance: " << order.provenance << '\n';
    for (const auto& name : order.order) out << name << '\n';
}

inline void save_order(const std::string& path, const ColumnOrder& order) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    write_order(out, order);
}

inline ColumnOrder read_order(std::istream& in) {
    ColumnOrder order;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# method: ", 0) == 0) {
            order.method = parse_order_method(line.substr(10));
        } else if (line.rfind("# provenance: ", 0) == 0) {
            order.provenance = line.substr(14);
        } else if (line[0] != '#') {
            order.order.push_back(line);
        }
    }
    return order;
}

inline ColumnOrder load_order(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    return read_order(in);
}

// ---- square layout and sparsity -----------------------------------------

struct SquareLayout {
    std::size_t side = 0;
    std::size_t total_width = 0;
    std::size_t pad_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> cell_of_column; // row-major (row, col) per encoded column
};

inline SquareLayout square_layout_with_side(std::size_t total_width, std::size_t side) {
    if (total_width == 0) throw Error(ErrorCode::invalid_argument, "total width must be >= 1");
    if (side * side < total_width)
        throw Error(ErrorCode::invalid_argument, "side " + std::to_string(side) + " too small for width " +
                                                     std::to_string(total_width));
    SquareLayout l;
    l.side = side;
    l.total_width = total_width;
    l.pad_count = side * side - total_width;
    l.cell_of_column.reserve(total_width);
    for (std::size_t i = 0; i < total_width; ++i) l.cell_of_column.emplace_back(i / side, i % side);
    return l;
}

/// Smallest square that holds `total_width` cells, filled row-major with zero padding at the tail.
inline SquareLayout square_layout(std::size_t total_width) {
    if (total_width == 0) throw Error(ErrorCode::invalid_argument, "total width must be >= 1");
    auto side = static_cast<std::size_t>(std::sqrt(static_cast<double>(total_width)));
    while (side * side < total_width) ++side;
    while (side > 1 && (side - 1) * (side - 1) >= total_width) --side;
    return square_layout_with_side(total_width, side);
}

struct SparsityReport {
    std::size_t side = 0;
    std::size_t total_width = 0;
    std::size_t pad_count = 0;
    std::size_t mode_specific_features = 0;
    std::size_t one_hot_features = 0;
    std::size_t scalar_features = 0; // min-max and label
    std::size_t nonzeros_per_row = 0;
    double zero_fraction = 0.0;
};

inline SparsityReport sparsity_report(const EncoderState& state, const SquareLayout& layout) {
    if (layout.side * layout.side < state.total_width)
        throw Error(ErrorCode::invalid_argument, "layout smaller than encoded width");
    SparsityReport r;
    r.side = layout.side;
    r.total_width = state.total_width;
    r.pad_count = layout.side * layout.side - state.total_width;
    for (const auto& fe : state.features) {
        if (std::holds_alternative<ModeSpecificTransform>(fe.transform)) ++r.mode_specific_features;
        else if (std::holds_alternative<OneHotTransform>(fe.transform)) ++r.one_hot_features;
        else ++r.scalar_features;
        r.nonzeros_per_row += transform_nonzeros(fe.transform);
    }
    r.zero_fraction =
        1.0 - static_cast<double>(r.nonzeros_per_row) / static_cast<double>(layout.side * layout.side);
    return r;
}

inline nlohmann::json sparsity_to_json(const SparsityReport& r) {
    return {{"side", r.side},
            {"total_width", r.total_width},
            {"pad_count", r.pad_count},
            {"mode_specific_features", r.mode_specific_features},
            {"one_hot_features", r.one_hot_features},
            {"scalar_features", r.scalar_features},
            {"nonzeros_per_row", r.nonzeros_per_row},
            {"zero_fraction", r.zero_fraction}};
}

} // namespace aegan
