#pragma once

#include <aegan/error.hpp>
#include <aegan/schema.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace aegan {

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified train/test partition of row indices.
///
/// The training side gets ceil(n * (1 - f)) rows. Per-class training counts are
/// floor(n_c * (1 - f)) plus one extra row for the classes with the largest
/// fractional parts until the total is met, so each class is proportionally
/// represented and rounding favours the training side. Index lists are sorted.
inline SplitIndices split_indices(const RawTable& table, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::invalid_argument, "test fraction must lie in (0, 1)");
    const std::size_t n = table.num_rows();
    if (n == 0) throw Error(ErrorCode::empty_table, "cannot split an empty table");

    const std::size_t t = table.schema.target_index();
    const auto codes = table.category_codes(t);
    const std::size_t n_classes = table.schema[t].categories.size();

    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[codes[i]].push_back(i);
    for (std::size_t c = 0; c < n_classes; ++c)
        if (by_class[c].size() == 1)
            throw Error(ErrorCode::stratification, "target class '" + table.schema[t].categories[c] +
                                                       "' has a single row and cannot be stratified");

    const double keep = 1.0 - test_fraction;
    const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * keep - 1e-9));

    std::vector<std::size_t> quota(n_classes);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) * keep;
        quota[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += quota[c];
        if (!by_class[c].empty()) remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n_train && k < remainders.size(); ++k) {
        ++quota[remainders[k].second];
        ++assigned;
    }

    std::mt19937_64 rng(seed);
    SplitIndices out;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t q = std::min(quota[c], idx.size());
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q));
        out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(q), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline std::pair<RawTable, RawTable> split(const RawTable& table, double test_fraction, std::uint64_t seed) {
    auto idx = split_indices(table, test_fraction, seed);
    return {table.subset(idx.train), table.subset(idx.test)};
}

} // namespace aegan
