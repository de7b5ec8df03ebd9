#pragma once

#include <aegan/error.hpp>
#include <aegan/gmm.hpp>
#include <aegan/schema.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace aegan {

/// full: mode-specific normalization + one-hot; no_msn: min-max + one-hot;
/// plain: min-max + label encoding.
enum class EncodingMode { full, no_msn, plain };

inline std::string_view to_string(EncodingMode m) {
    switch (m) {
    case EncodingMode::full: return "full";
    case EncodingMode::no_msn: return "no_msn";
    case EncodingMode::plain: return "plain";
    }
    return "full";
}

inline EncodingMode parse_encoding_mode(std::string_view s) {
    if (s == "full") return EncodingMode::full;
    if (s == "no_msn") return EncodingMode::no_msn;
    if (s == "plain") return EncodingMode::plain;
    throw Error(ErrorCode::invalid_argument, "unknown encoding mode '" + std::string(s) + "'");
}

struct OneHotTransform {
    std::vector<std::string> vocabulary;
    friend bool operator==(const OneHotTransform&, const OneHotTransform&) = default;
};

struct ModeSpecificTransform {
    GmmParams gmm;
    friend bool operator==(const ModeSpecificTransform&, const ModeSpecificTransform&) = default;
};

struct MinMaxTransform {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const MinMaxTransform&, const MinMaxTransform&) = default;
};

struct LabelTransform {
    std::vector<std::string> vocabulary;
    friend bool operator==(const LabelTransform&, const LabelTransform&) = default;
};

using ColumnTransform = std::variant<OneHotTransform, ModeSpecificTransform, MinMaxTransform, LabelTransform>;

inline std::size_t transform_width(const ColumnTransform& t) {
    return std::visit(
        [](const auto& v) -> std::size_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, OneHotTransform>) return v.vocabulary.size();
            else if constexpr (std::is_same_v<T, ModeSpecificTransform>) return 1 + v.gmm.active_modes();
            else return 1;
        },
        t);
}

/// Nonzero slots an encoded cell occupies (before any value happens to be 0).
inline std::size_t transform_nonzeros(const ColumnTransform& t) {
    if (std::holds_alternative<ModeSpecificTransform>(t)) return 2;
    return 1;
}

struct FeatureEncoding {
    std::string name;
    ColumnTransform transform;
    std::size_t offset = 0;
    std::size_t width = 0;
    bool degenerate = false; // zero-variance continuous column fell back to min-max

    friend bool operator==(const FeatureEncoding&, const FeatureEncoding&) = default;
};

struct EncoderState {
    TableSchema schema;
    EncodingMode mode = EncodingMode::full;
    std::vector<FeatureEncoding> features;
    std::size_t total_width = 0;

    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w;
        for (const auto& f : features) w.push_back(f.width);
        return w;
    }

    const FeatureEncoding& feature(std::string_view name) const {
        for (const auto& f : features)
            if (f.name == name) return f;
        throw Error(ErrorCode::invalid_argument, "no encoded feature named '" + std::string(name) + "'");
    }

    const FeatureEncoding& target_feature() const { return feature(schema.target()); }

    bool has_degenerate_columns() const {
        return std::any_of(features.begin(), features.end(), [](const auto& f) { return f.degenerate; });
    }

    friend bool operator==(const EncoderState&, const EncoderState&) = default;
};

/// Encoded rows as an n x total_width matrix plus the state that made them.
struct EncodedMatrix {
    Eigen::MatrixXd values;
    std::shared_ptr<const EncoderState> state;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t width() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Stable 64-bit FNV-1a, used to derive per-column seeds independent of column order.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct EncoderOptions {
    EncodingMode mode = EncodingMode::full;
    EmOptions em{};
};

inline EncoderState fit_encoder(const RawTable& table, const EncoderOptions& opt, std::uint64_t seed) {
    if (table.num_rows() == 0) throw Error(ErrorCode::empty_table, "cannot fit an encoder on an empty table");
    EncoderState state;
    state.schema = table.schema;
    state.mode = opt.mode;
    std::size_t offset = 0;
    for (std::size_t j = 0; j < table.num_columns(); ++j) {
        const ColumnSpec& spec = table.schema[j];
        FeatureEncoding fe;
        fe.name = spec.name;
        if (spec.is_categorical()) {
            if (spec.categories.size() < 2)
                throw Error(ErrorCode::invalid_schema, "categorical column '" + spec.name + "' has < 2 categories");
            if (opt.mode == EncodingMode::plain) fe.transform = LabelTransform{spec.categories};
            else fe.transform = OneHotTransform{spec.categories};
        } else {
            const auto values = table.numeric_column(j);
            const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            if (*lo == *hi) {
                fe.transform = MinMaxTransform{*lo, *hi};
                fe.degenerate = true;
            } else if (opt.mode == EncodingMode::full) {
                EmOptions em = opt.em;
                fe.transform = ModeSpecificTransform{em_fit_1d_trace(values, em, seed ^ fnv1a(spec.name)).params};
            } else {
                fe.transform = MinMaxTransform{*lo, *hi};
            }
        }
        fe.offset = offset;
        fe.width = transform_width(fe.transform);
        offset += fe.width;
        state.features.push_back(std::move(fe));
    }
    state.total_width = offset;
    return state;
}

inline EncoderState fit_encoder(const RawTable& table, EncodingMode mode = EncodingMode::full,
                                std::size_t max_modes = 10, std::uint64_t seed = 0) {
    EncoderOptions opt;
    opt.mode = mode;
    opt.em.max_modes = max_modes;
    return fit_encoder(table, opt, seed);
}

namespace encoding_detail {

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

inline double minmax_forward(double x, double lo, double hi) {
    if (hi == lo) return 0.0;
    return clamp_unit(2.0 * (x - lo) / (hi - lo) - 1.0);
}

inline double minmax_inverse(double v, double lo, double hi) {
    return (clamp_unit(v) + 1.0) * 0.5 * (hi - lo) + lo;
}

inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline std::size_t vocab_index(const std::vector<std::string>& vocab, const std::string& token,
                               const std::string& column) {
    auto it = std::find(vocab.begin(), vocab.end(), token);
    if (it == vocab.end())
        throw Error(ErrorCode::unknown_category, "category '" + token + "' not in vocabulary of '" + column + "'");
    return static_cast<std::size_t>(it - vocab.begin());
}

} // namespace encoding_detail

/// Encodes one row into `out` (length total_width).
inline void encode_row(const Row& row, const EncoderState& state, std::span<double> out) {
    using namespace encoding_detail;
    if (row.size() != state.features.size())
        throw Error(ErrorCode::shape_mismatch, "row length does not match encoder schema");
    if (out.size() != state.total_width) throw Error(ErrorCode::shape_mismatch, "output span has wrong width");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < row.size(); ++j) {
        const auto& fe = state.features[j];
        auto span = out.subspan(fe.offset, fe.width);
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, OneHotTransform>) {
                    span[vocab_index(t.vocabulary, as_token(row[j]), fe.name)] = 1.0;
                } else if constexpr (std::is_same_v<T, LabelTransform>) {
                    const double idx = static_cast<double>(vocab_index(t.vocabulary, as_token(row[j]), fe.name));
                    span[0] = minmax_forward(idx, 0.0, static_cast<double>(t.vocabulary.size() - 1));
                } else if constexpr (std::is_same_v<T, MinMaxTransform>) {
                    span[0] = minmax_forward(as_number(row[j]), t.lo, t.hi);
                } else {
                    const double x = as_number(row[j]);
                    const std::size_t k = t.gmm.argmax_posterior(x);
                    span[0] = clamp_unit((x - t.gmm.means[k]) / (4.0 * t.gmm.stds[k]));
                    span[1 + k] = 1.0;
                }
            },
            fe.transform);
    }
}

inline std::vector<double> encode_row(const Row& row, const EncoderState& state) {
    std::vector<double> out(state.total_width);
    encode_row(row, state, out);
    return out;
}

inline Row decode_row(std::span<const double> v, const EncoderState& state) {
    using namespace encoding_detail;
    if (v.size() != state.total_width) throw Error(ErrorCode::shape_mismatch, "encoded vector has wrong width");
    for (double x : v)
        if (!std::isfinite(x)) throw Error(ErrorCode::non_finite, "non-finite entry in encoded vector");
    Row row;
    row.reserve(state.features.size());
    for (const auto& fe : state.features) {
        auto span = v.subspan(fe.offset, fe.width);
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, OneHotTransform>) {
                    row.emplace_back(t.vocabulary[argmax(span)]);
                } else if constexpr (std::is_same_v<T, LabelTransform>) {
                    const double hi = static_cast<double>(t.vocabulary.size() - 1);
                    const double idx = std::round(minmax_inverse(span[0], 0.0, hi));
                    row.emplace_back(t.vocabulary[static_cast<std::size_t>(std::clamp(idx, 0.0, hi))]);
                } else if constexpr (std::is_same_v<T, MinMaxTransform>) {
                    row.emplace_back(minmax_inverse(span[0], t.lo, t.hi));
                } else {
                    const std::size_t k = argmax(span.subspan(1));
                    row.emplace_back(clamp_unit(span[0]) * 4.0 * t.gmm.stds[k] + t.gmm.means[k]);
                }
            },
            fe.transform);
    }
    return row;
}

inline EncodedMatrix encode_table(const RawTable& table, std::shared_ptr<const EncoderState> state) {
    if (!(table.schema == state->schema)) throw Error(ErrorCode::shape_mismatch, "table schema differs from encoder's");
    EncodedMatrix m;
    m.values.resize(static_cast<Eigen::Index>(table.num_rows()), static_cast<Eigen::Index>(state->total_width));
    std::vector<double> buf(state->total_width);
    for (std::size_t i = 0; i < table.num_rows(); ++i) {
        encode_row(table.rows[i], *state, buf);
        for (std::size_t c = 0; c < buf.size(); ++c)
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = buf[c];
    }
    m.state = std::move(state);
    return m;
}

inline EncodedMatrix encode_table(const RawTable& table, const EncoderState& state) {
    return encode_table(table, std::make_shared<const EncoderState>(state));
}

inline RawTable decode_matrix(const Eigen::MatrixXd& values, const EncoderState& state) {
    RawTable out{state.schema, {}};
    out.rows.reserve(static_cast<std::size_t>(values.rows()));
    std::vector<double> buf(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) buf[static_cast<std::size_t>(c)] = values(i, c);
        out.rows.push_back(decode_row(buf, state));
    }
    return out;
}

inline RawTable decode_table(const EncodedMatrix& m) { return decode_matrix(m.values, *m.state); }

// ---- JSON ----------------------------------------------------------------

inline nlohmann::json encoder_to_json(const EncoderState& s) {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& fe : s.features) {
        nlohmann::json jf{{"name", fe.name}, {"offset", fe.offset}, {"width", fe.width}, {"degenerate", fe.degenerate}};
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, OneHotTransform>) {
                    jf["transform"] = "one_hot";
                    jf["vocabulary"] = t.vocabulary;
                } else if constexpr (std::is_same_v<T, LabelTransform>) {
                    jf["transform"] = "label";
                    jf["vocabulary"] = t.vocabulary;
                } else if constexpr (std::is_same_v<T, MinMaxTransform>) {
                    jf["transform"] = "min_max";
                    jf["lo"] = t.lo;
                    jf["hi"] = t.hi;
                } else {
                    jf["transform"] = "mode_specific";
                    jf["weights"] = t.gmm.weights;
                    jf["means"] = t.gmm.means;
                    jf["stds"] = t.gmm.stds;
                }
            },
            fe.transform);
        feats.push_back(std::move(jf));
    }
    return {{"schema", schema_to_json(s.schema)},
            {"mode", std::string(to_string(s.mode))},
            {"features", std::move(feats)},
            {"total_width", s.total_width}};
}

inline EncoderState encoder_from_json(const nlohmann::json& j) {
    try {
        EncoderState s;
        s.schema = schema_from_json(j.at("schema"));
        s.mode = parse_encoding_mode(j.at("mode").get<std::string>());
        s.total_width = j.at("total_width").get<std::size_t>();
        std::size_t expect = 0;
        for (const auto& jf : j.at("features")) {
            FeatureEncoding fe;
            fe.name = jf.at("name").get<std::string>();
            fe.offset = jf.at("offset").get<std::size_t>();
            fe.width = jf.at("width").get<std::size_t>();
            fe.degenerate = jf.at("degenerate").get<bool>();
            const auto kind = jf.at("transform").get<std::string>();
            if (kind == "one_hot") fe.transform = OneHotTransform{jf.at("vocabulary").get<std::vector<std::string>>()};
            else if (kind == "label") fe.transform = LabelTransform{jf.at("vocabulary").get<std::vector<std::string>>()};
            else if (kind == "min_max") fe.transform = MinMaxTransform{jf.at("lo").get<double>(), jf.at("hi").get<double>()};
            else if (kind == "mode_specific")
                fe.transform = ModeSpecificTransform{GmmParams{jf.at("weights").get<std::vector<double>>(),
                                                               jf.at("means").get<std::vector<double>>(),
                                                               jf.at("stds").get<std::vector<double>>()}};
            else throw Error(ErrorCode::invalid_schema, "unknown transform '" + kind + "'");
            if (fe.offset != expect || fe.width != transform_width(fe.transform))
                throw Error(ErrorCode::invalid_schema, "inconsistent span for feature '" + fe.name + "'");
            expect += fe.width;
            s.features.push_back(std::move(fe));
        }
        if (expect != s.total_width || s.features.size() != s.schema.size())
            throw Error(ErrorCode::invalid_schema, "encoder spans do not tile total_width");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_schema, std::string("malformed encoder state: ") + e.what());
    }
}

} // namespace aegan
