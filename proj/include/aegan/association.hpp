#pragma once

#include <aegan/error.hpp>
#include <aegan/schema.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace aegan {

/// An association coefficient. Degenerate inputs (zero variance, a single
/// observed level) score 0 and set the flag instead of failing.
struct Association {
    double value = 0.0;
    bool degenerate = false;
};

inline Association pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::shape_mismatch, "pearson: length mismatch");
    if (x.size() < 2) throw Error(ErrorCode::invalid_argument, "pearson: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

/// Cramér's V of an r x c contingency table (no bias correction). Empty rows
/// and columns are ignored when counting levels.
inline Association cramers_v_from_counts(const std::vector<std::vector<double>>& counts) {
    const std::size_t r = counts.size();
    const std::size_t c = r ? counts[0].size() : 0;
    std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            row_sum[i] += counts[i][j];
            col_sum[j] += counts[i][j];
            n += counts[i][j];
        }
    const auto levels = [](const std::vector<double>& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](double v) { return v > 0.0; }));
    };
    const std::size_t lr = levels(row_sum), lc = levels(col_sum);
    if (lr < 2 || lc < 2) return {0.0, true};
    double chi2 = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (row_sum[i] == 0.0) continue;
        for (std::size_t j = 0; j < c; ++j) {
            if (col_sum[j] == 0.0) continue;
            const double expected = row_sum[i] * col_sum[j] / n;
            const double d = counts[i][j] - expected;
            chi2 += d * d / expected;
        }
    }
    const double v = std::sqrt(chi2 / (n * static_cast<double>(std::min(lr, lc) - 1)));
    return {std::min(v, 1.0), false};
}

namespace association_detail {

template <typename T>
std::vector<std::size_t> codes_of(std::span<const T> values, std::size_t& levels) {
    std::map<T, std::size_t> lookup;
    std::vector<std::size_t> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        auto [it, inserted] = lookup.emplace(v, lookup.size());
        out.push_back(it->second);
    }
    levels = lookup.size();
    return out;
}

} // namespace association_detail

inline Association cramers_v_codes(std::span<const std::size_t> a, std::size_t levels_a,
                                   std::span<const std::size_t> b, std::size_t levels_b) {
    if (a.size() != b.size()) throw Error(ErrorCode::shape_mismatch, "cramers_v: length mismatch");
    std::vector<std::vector<double>> counts(levels_a, std::vector<double>(levels_b, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) counts[a[i]][b[i]] += 1.0;
    return cramers_v_from_counts(counts);
}

inline Association cramers_v(std::span<const std::string> a, std::span<const std::string> b) {
    std::size_t la = 0, lb = 0;
    auto ca = association_detail::codes_of(a, la);
    auto cb = association_detail::codes_of(b, lb);
    return cramers_v_codes(ca, la, cb, lb);
}

inline Association correlation_ratio_codes(std::span<const std::size_t> cat, std::size_t levels,
                                           std::span<const double> num) {
    if (cat.size() != num.size()) throw Error(ErrorCode::shape_mismatch, "correlation_ratio: length mismatch");
    if (num.empty()) throw Error(ErrorCode::invalid_argument, "correlation_ratio: empty input");
    std::vector<double> sum(levels, 0.0), cnt(levels, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        sum[cat[i]] += num[i];
        cnt[cat[i]] += 1.0;
        mean += num[i];
    }
    mean /= static_cast<double>(num.size());
    double total = 0.0;
    for (double v : num) total += (v - mean) * (v - mean);
    double between = 0.0;
    std::size_t observed = 0;
    for (std::size_t k = 0; k < levels; ++k) {
        if (cnt[k] == 0.0) continue;
        ++observed;
        const double d = sum[k] / cnt[k] - mean;
        between += cnt[k] * d * d;
    }
    if (total <= 0.0 || observed < 2) return {0.0, true};
    return {std::min(std::sqrt(between / total), 1.0), false};
}

inline Association correlation_ratio(std::span<const std::string> cat, std::span<const double> num) {
    std::size_t levels = 0;
    auto codes = association_detail::codes_of(cat, levels);
    return correlation_ratio_codes(codes, levels, num);
}

/// Symmetric mixed-type association matrix over the features of a table.
struct AssociationMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> labels;
    std::vector<ColumnKind> kinds;
    std::vector<std::pair<std::size_t, std::size_t>> degenerate_pairs; // i < j

    std::size_t size() const noexcept { return labels.size(); }
    double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// Same matrix with rows/columns rearranged to `order` (feature names).
    AssociationMatrix reordered(const std::vector<std::string>& order) const {
        std::vector<std::size_t> idx;
        for (const auto& name : order) {
            auto it = std::find(labels.begin(), labels.end(), name);
            if (it == labels.end()) throw Error(ErrorCode::label_mismatch, "unknown feature '" + name + "'");
            idx.push_back(static_cast<std::size_t>(it - labels.begin()));
        }
        AssociationMatrix out;
        const auto f = static_cast<Eigen::Index>(idx.size());
        out.values.resize(f, f);
        for (Eigen::Index a = 0; a < f; ++a)
            for (Eigen::Index b = 0; b < f; ++b)
                out.values(a, b) = values(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                                          static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
        for (auto i : idx) {
            out.labels.push_back(labels[i]);
            out.kinds.push_back(kinds[i]);
        }
        return out;
    }
};

/// Pearson for two continuous features, Cramér's V for two categorical ones,
/// and the correlation ratio for a mixed pair.
inline AssociationMatrix association_matrix(const RawTable& table) {
    if (table.num_rows() < 2) throw Error(ErrorCode::invalid_argument, "association matrix needs >= 2 rows");
    const std::size_t f = table.num_columns();
    AssociationMatrix m;
    m.values = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f));
    m.labels = table.schema.names();
    for (const auto& c : table.schema.columns()) m.kinds.push_back(c.kind);

    std::vector<std::vector<double>> nums(f);
    std::vector<std::vector<std::size_t>> codes(f);
    std::vector<std::size_t> levels(f, 0);
    for (std::size_t j = 0; j < f; ++j) {
        if (m.kinds[j] == ColumnKind::continuous) {
            nums[j] = table.numeric_column(j);
        } else {
            auto tokens = table.token_column(j);
            codes[j] = association_detail::codes_of(std::span<const std::string>(tokens), levels[j]);
        }
    }
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = i + 1; j < f; ++j) {
            Association a;
            const bool ci = m.kinds[i] == ColumnKind::continuous, cj = m.kinds[j] == ColumnKind::continuous;
            if (ci && cj) a = pearson(nums[i], nums[j]);
            else if (!ci && !cj) a = cramers_v_codes(codes[i], levels[i], codes[j], levels[j]);
            else if (ci) a = correlation_ratio_codes(codes[j], levels[j], nums[i]);
            else a = correlation_ratio_codes(codes[i], levels[i], nums[j]);
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            m.values(ii, jj) = m.values(jj, ii) = a.value;
            if (a.degenerate) m.degenerate_pairs.emplace_back(i, j);
        }
    }
    return m;
}

/// Square root of the sum of squared entry differences over every ordered
/// pair (i, j), both triangles included.
inline double dif_corr(const AssociationMatrix& real, const AssociationMatrix& synth) {
    if (real.labels != synth.labels || real.kinds != synth.kinds)
        throw Error(ErrorCode::label_mismatch, "association matrices describe different features");
    return (real.values - synth.values).norm();
}

/// Heatmap-ready grid: header row of labels, then one labelled row per feature.
inline void write_association_csv(std::ostream& out, const AssociationMatrix& m) {
    out << "feature";
    for (const auto& l : m.labels) out << ',' << l;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.labels[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace aegan
