#pragma once

#include <aegan/association.hpp>
#include <aegan/encoding.hpp>
#include <aegan/error.hpp>
#include <aegan/schema.hpp>
#include <aegan/sorting.hpp>
#include <aegan/synthesis.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace aegan {

// ---- Wasserstein-1 -------------------------------------------------------

/// L1 distance between the empirical quantile functions of a and b.
inline double wd_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::invalid_argument, "wd_1d: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    if (x.size() == y.size()) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
        return s / static_cast<double>(x.size());
    }
    // Walk the merged probability grid {i/n} U {j/m}; both quantile functions
    // are constant between consecutive grid points.
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double p = 0.0, total = 0.0;
    while (i < x.size() && j < y.size()) {
        const double next_x = static_cast<double>(i + 1) / n, next_y = static_cast<double>(j + 1) / m;
        const double next = std::min(next_x, next_y);
        total += (next - p) * std::abs(x[i] - y[j]);
        p = next;
        // advance whichever grid point was reached (compare in exact integers)
        const auto lhs = (i + 1) * y.size(), rhs = (j + 1) * x.size();
        if (lhs <= rhs) ++i;
        if (rhs <= lhs) ++j;
    }
    return total;
}

/// Total variation distance between category frequency vectors (Wasserstein-1
/// under the 0/1 ground metric). Tokens seen only in b carry their own mass.
inline double wd_1d(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::invalid_argument, "wd_1d: empty sample");
    std::map<std::string, std::pair<double, double>> freq;
    for (const auto& t : a) freq[t].first += 1.0;
    for (const auto& t : b) freq[t].second += 1.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double s = 0.0;
    for (const auto& [token, c] : freq) s += std::abs(c.first / na - c.second / nb);
    return 0.5 * s;
}

struct TableWd {
    std::vector<std::string> columns;
    std::vector<double> per_column;
    double mean = 0.0;
};

namespace eval_detail {

inline void require_same_columns(const TableSchema& a, const TableSchema& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::invalid_schema, "tables have different column counts");
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j].name != b[j].name || a[j].kind != b[j].kind)
            throw Error(ErrorCode::invalid_schema, "tables disagree on column " + std::to_string(j) + " ('" + a[j].name +
                                                       "' vs '" + b[j].name + "')");
}

} // namespace eval_detail

/// Per-column wd_1d on raw values, and their mean. Columns of `synth` are
/// matched to `real` by name.
inline TableWd table_wd(const RawTable& real, const RawTable& synth) {
    const RawTable aligned = synth.schema.names() == real.schema.names() ? synth : [&] {
        for (const auto& n : real.schema.names())
            if (!synth.schema.index_of(n)) throw Error(ErrorCode::invalid_schema, "synthetic table lacks column '" + n + "'");
        if (synth.schema.size() != real.schema.size())
            throw Error(ErrorCode::invalid_schema, "tables have different column counts");
        return synth.reordered(real.schema.names());
    }();
    eval_detail::require_same_columns(real.schema, aligned.schema);
    TableWd out;
    out.columns = real.schema.names();
    for (std::size_t j = 0; j < real.num_columns(); ++j) {
        double d;
        if (real.schema[j].kind == ColumnKind::continuous) d = wd_1d(real.numeric_column(j), aligned.numeric_column(j));
        else d = wd_1d(std::span<const std::string>(real.token_column(j)), std::span<const std::string>(aligned.token_column(j)));
        out.per_column.push_back(d);
    }
    double s = 0.0;
    for (double d : out.per_column) s += d;
    out.mean = out.per_column.empty() ? 0.0 : s / static_cast<double>(out.per_column.size());
    return out;
}

inline void write_wd_csv(std::ostream& out, const TableWd& wd) {
    out << "column,wd\n";
    for (std::size_t j = 0; j < wd.columns.size(); ++j) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", wd.per_column[j]);
        out << wd.columns[j] << ',' << buf << '\n';
    }
}

// ---- ML utility ----------------------------------------------------------

/// One-hot categoricals plus standardized continuous columns, target excluded.
/// Standardization statistics come from the table the featurizer is fitted on.
class Featurizer {
public:
    explicit Featurizer(const RawTable& train) : schema_(train.schema) {
        const auto t = schema_.target_index();
        for (std::size_t j = 0; j < schema_.size(); ++j) {
            if (j == t) continue;
            if (schema_[j].kind == ColumnKind::continuous) {
                const auto v = train.numeric_column(j);
                double mu = 0.0;
                for (double x : v) mu += x;
                mu /= static_cast<double>(v.size());
                double var = 0.0;
                for (double x : v) var += (x - mu) * (x - mu);
                const double sd = std::sqrt(var / static_cast<double>(v.size()));
                stats_.push_back({j, mu, sd > 0.0 ? sd : 1.0, 1});
            } else {
                stats_.push_back({j, 0.0, 1.0, schema_[j].categories.size()});
            }
            width_ += stats_.back().width;
        }
    }

    std::size_t width() const noexcept { return width_; }

    Eigen::MatrixXd transform(const RawTable& table) const {
        eval_detail::require_same_columns(schema_, table.schema);
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.num_rows()), static_cast<Eigen::Index>(width_));
        std::size_t off = 0;
        for (const auto& s : stats_) {
            if (schema_[s.column].kind == ColumnKind::continuous) {
                for (std::size_t i = 0; i < table.num_rows(); ++i)
                    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(off)) =
                        (as_number(table.rows[i][s.column]) - s.mean) / s.sd;
            } else {
                const auto codes = table.category_codes(s.column);
                for (std::size_t i = 0; i < codes.size(); ++i)
                    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(off + codes[i])) = 1.0;
            }
            off += s.width;
        }
        return x;
    }

private:
    struct Stat {
        std::size_t column;
        double mean, sd;
        std::size_t width;
    };
    TableSchema schema_;
    std::vector<Stat> stats_;
    std::size_t width_ = 0;
};

/// Multinomial logistic regression with L2 penalty, full-batch gradient descent
/// from zero weights.
class LogisticRegression {
public:
    struct Options {
        std::size_t iterations = 500;
        double learning_rate = 0.5;
        double l2 = 1e-3;
    };

    LogisticRegression() = default;
    explicit LogisticRegression(Options opt) : opt_(opt) {}

    void fit(const Eigen::MatrixXd& x, std::span<const std::size_t> y, std::size_t n_classes) {
        const auto n = x.rows(), d = x.cols(), k = static_cast<Eigen::Index>(n_classes);
        w_ = Eigen::MatrixXd::Zero(d, k);
        b_ = Eigen::RowVectorXd::Zero(k);
        Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
        for (Eigen::Index i = 0; i < n; ++i) onehot(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) = 1.0;
        for (std::size_t it = 0; it < opt_.iterations; ++it) {
            Eigen::MatrixXd p = probabilities(x);
            Eigen::MatrixXd err = (p - onehot) / static_cast<double>(n);
            w_ -= opt_.learning_rate * (x.transpose() * err + opt_.l2 * w_);
            b_ -= opt_.learning_rate * err.colwise().sum();
        }
    }

    std::vector<std::size_t> predict(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd s = (x * w_).rowwise() + b_;
        std::vector<std::size_t> out(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            Eigen::Index best = 0;
            s.row(i).maxCoeff(&best);
            out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
        }
        return out;
    }

private:
    Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd s = (x * w_).rowwise() + b_;
        s = s.colwise() - s.rowwise().maxCoeff();
        s = s.array().exp().matrix();
        return s.array().colwise() / s.rowwise().sum().array();
    }

    Options opt_{};
    Eigen::MatrixXd w_;
    Eigen::RowVectorXd b_;
};

/// Axis-aligned decision tree grown greedily by information gain.
class DecisionTree {
public:
    struct Options {
        std::size_t max_depth = 4;
        std::size_t min_split = 2;
    };

    DecisionTree() = default;
    explicit DecisionTree(Options opt) : opt_(opt) {}

    void fit(const Eigen::MatrixXd& x, std::span<const std::size_t> y, std::size_t n_classes) {
        nodes_.clear();
        n_classes_ = n_classes;
        std::vector<std::size_t> idx(static_cast<std::size_t>(x.rows()));
        std::iota(idx.begin(), idx.end(), 0);
        grow(x, y, idx, 0);
    }

    std::vector<std::size_t> predict(const Eigen::MatrixXd& x) const {
        std::vector<std::size_t> out(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            std::size_t n = 0;
            while (!nodes_[n].leaf) n = x(i, static_cast<Eigen::Index>(nodes_[n].feature)) <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
            out[static_cast<std::size_t>(i)] = nodes_[n].label;
        }
        return out;
    }

private:
    struct Node {
        bool leaf = true;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0, right = 0, label = 0;
    };

    static double entropy(const std::vector<double>& counts, double total) {
        double h = 0.0;
        for (double c : counts)
            if (c > 0.0) h -= (c / total) * std::log2(c / total);
        return h;
    }

    std::size_t grow(const Eigen::MatrixXd& x, std::span<const std::size_t> y, std::vector<std::size_t>& idx,
                     std::size_t depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();
        std::vector<double> counts(n_classes_, 0.0);
        for (auto i : idx) counts[y[i]] += 1.0;
        nodes_[id].label = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        const double total = static_cast<double>(idx.size());
        const double parent_h = entropy(counts, total);
        if (depth >= opt_.max_depth || idx.size() < opt_.min_split || parent_h == 0.0) return id;

        double best_gain = 1e-12;
        std::size_t best_f = 0;
        double best_t = 0.0;
        std::vector<std::pair<double, std::size_t>> col(idx.size());
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
            for (std::size_t k = 0; k < idx.size(); ++k) col[k] = {x(static_cast<Eigen::Index>(idx[k]), f), y[idx[k]]};
            std::sort(col.begin(), col.end());
            std::vector<double> left(n_classes_, 0.0), right = counts;
            for (std::size_t k = 0; k + 1 < col.size(); ++k) {
                left[col[k].second] += 1.0;
                right[col[k].second] -= 1.0;
                if (col[k].first == col[k + 1].first) continue;
                const double nl = static_cast<double>(k + 1), nr = total - nl;
                const double gain = parent_h - (nl / total) * entropy(left, nl) - (nr / total) * entropy(right, nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<std::size_t>(f);
                    best_t = 0.5 * (col[k].first + col[k + 1].first);
                }
            }
        }
        if (best_gain <= 1e-12) return id;
        std::vector<std::size_t> li, ri;
        for (auto i : idx) (x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best_f)) <= best_t ? li : ri).push_back(i);
        nodes_[id].leaf = false;
        nodes_[id].feature = best_f;
        nodes_[id].threshold = best_t;
        const std::size_t l = grow(x, y, li, depth + 1);
        const std::size_t r = grow(x, y, ri, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    Options opt_{};
    std::size_t n_classes_ = 0;
    std::vector<Node> nodes_;
};

struct LearnerResult {
    std::string name;
    std::optional<double> real_accuracy;  // absent when skipped
    std::optional<double> synth_accuracy;
    bool skipped = false;
    std::string reason;
};

struct UtilityRecord {
    std::vector<LearnerResult> learners;
    std::optional<double> diff; // mean |acc_real - acc_synth| over non-skipped learners
};

namespace eval_detail {

inline double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(pred.size());
}

inline std::size_t distinct(std::span<const std::size_t> v) {
    std::vector<std::size_t> c(v.begin(), v.end());
    std::sort(c.begin(), c.end());
    return static_cast<std::size_t>(std::unique(c.begin(), c.end()) - c.begin());
}

template <typename Learner>
std::optional<double> train_and_score(const RawTable& train, const RawTable& test) {
    const auto t = train.schema.target_index();
    const auto y = train.category_codes(t);
    if (distinct(y) < 2) return std::nullopt;
    Featurizer feat(train);
    Learner learner;
    learner.fit(feat.transform(train), y, train.schema[t].categories.size());
    const auto pred = learner.predict(feat.transform(test));
    return accuracy(pred, test.category_codes(test.schema.target_index()));
}

} // namespace eval_detail

/// Resamples `synth` to exactly `n` rows: identity when sizes match, a subset
/// without replacement when larger, all rows plus draws with replacement when
/// smaller. Sizes outside [n/2, 2n] are rejected.
inline RawTable match_row_count(const RawTable& synth, std::size_t n, std::uint64_t seed) {
    const std::size_t m = synth.num_rows();
    if (m == 0 || 2 * m < n || m > 2 * n)
        throw Error(ErrorCode::invalid_argument, "synthetic table has " + std::to_string(m) + " rows; need within x2 of " +
                                                     std::to_string(n));
    if (m == n) return synth;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    if (m > n) {
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(n);
        std::sort(idx.begin(), idx.end());
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        while (idx.size() < n) idx.push_back(pick(rng));
    }
    return synth.subset(idx);
}

/// Trains each learner on real_train and on (resampled) synth, scores both on
/// real_test, and averages the absolute accuracy gaps.
inline UtilityRecord ml_utility_diff(const RawTable& real_train, const RawTable& real_test, const RawTable& synth,
                                     std::uint64_t seed) {
    eval_detail::require_same_columns(real_train.schema, real_test.schema);
    const RawTable aligned = synth.schema.names() == real_train.schema.names() ? synth : synth.reordered(real_train.schema.names());
    eval_detail::require_same_columns(real_train.schema, aligned.schema);
    const RawTable matched = match_row_count(aligned, real_train.num_rows(), seed);

    UtilityRecord rec;
    auto run = [&](const std::string& name, auto score) {
        LearnerResult r;
        r.name = name;
        r.real_accuracy = score(real_train);
        r.synth_accuracy = score(matched);
        if (!r.real_accuracy || !r.synth_accuracy) {
            r.skipped = true;
            r.reason = !r.real_accuracy ? "real training set has a single target class"
                                        : "synthetic training set has a single target class";
        }
        rec.learners.push_back(std::move(r));
    };
    run("logistic_regression", [&](const RawTable& t) { return eval_detail::train_and_score<LogisticRegression>(t, real_test); });
    run("decision_tree", [&](const RawTable& t) { return eval_detail::train_and_score<DecisionTree>(t, real_test); });

    double s = 0.0;
    std::size_t k = 0;
    for (const auto& l : rec.learners)
        if (!l.skipped) {
            s += std::abs(*l.real_accuracy - *l.synth_accuracy);
            ++k;
        }
    if (k) rec.diff = s / static_cast<double>(k);
    return rec;
}

// ---- permutation sensitivity --------------------------------------------

/// 100 * (max - min) / min over per-order scores.
inline double sensitivity_pct(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorCode::invalid_argument, "sensitivity needs at least two values");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!std::isfinite(*lo) || !std::isfinite(*hi)) throw Error(ErrorCode::non_finite, "non-finite score");
    if (*lo < 0.0) throw Error(ErrorCode::invalid_argument, "scores must be nonnegative");
    if (*hi == *lo) return 0.0;
    if (*lo == 0.0) return std::numeric_limits<double>::infinity();
    return 100.0 * (*hi - *lo) / *lo;
}

/// Summary row over several datasets: the mean of their sensitivities.
inline double average_sensitivity(std::span<const double> per_dataset_pct) {
    if (per_dataset_pct.empty()) throw Error(ErrorCode::invalid_argument, "no sensitivities to average");
    double s = 0.0;
    for (double v : per_dataset_pct) s += v;
    return s / static_cast<double>(per_dataset_pct.size());
}

struct SensitivityCell {
    std::size_t order_index = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::optional<double> mean_wd;
    bool failed = false;
    std::string error;
};

struct OrderSummary {
    std::string method;
    std::vector<std::string> order;
    std::optional<double> mean_wd; // mean over successful repeats
    std::size_t successes = 0;
};

struct SensitivityRecord {
    std::vector<OrderSummary> orders;
    std::vector<SensitivityCell> cells;
    std::optional<double> max_diff_pct; // absent unless every order has a successful repeat
};

struct SensitivityOptions {
    std::size_t repeats = 1;
    EncodingMode encoding = EncodingMode::full;
    std::size_t max_modes = 10;
    std::size_t latent_len = 0;   // 0: derived from width
    std::size_t gan_hidden = 256;
    std::size_t noise_len = 100;
    std::uint64_t seed = 0;
    std::function<void(const std::string&)> log; // progress sink, may be empty
};

/// Seed of repeat r. Shared by all orders so that only the column order varies
/// between cells of the same repeat.
inline std::uint64_t repeat_seed(std::uint64_t base, std::size_t repeat) {
    return synth_detail::stream_seed(base, 1000 + repeat);
}

/// Runs fit-encode-train-synthesize for every (order, repeat) cell and scores
/// each synthetic table against `table` by mean per-column WD.
inline SensitivityRecord sensitivity_experiment(const RawTable& table, const std::vector<ColumnOrder>& orders,
                                                const TrainConfig& cfg, const SensitivityOptions& opt) {
    if (orders.size() < 2) throw Error(ErrorCode::invalid_argument, "sensitivity needs at least two orders");
    if (opt.repeats < 1) throw Error(ErrorCode::invalid_argument, "repeats must be >= 1");
    SensitivityRecord rec;
    for (std::size_t o = 0; o < orders.size(); ++o) {
        OrderSummary summary;
        summary.method = std::string(to_string(orders[o].method));
        summary.order = orders[o].order;
        const RawTable permuted = table.reordered(orders[o].order);
        double sum = 0.0;
        for (std::size_t r = 0; r < opt.repeats; ++r) {
            SensitivityCell cell;
            cell.order_index = o;
            cell.repeat = r;
            cell.seed = repeat_seed(opt.seed, r);
            if (opt.log)
                opt.log("order " + std::to_string(o) + " (" + summary.method + "), repeat " + std::to_string(r));
            try {
                auto state = std::make_shared<const EncoderState>(fit_encoder(permuted, opt.encoding, opt.max_modes, cell.seed));
                const auto encoded = encode_table(permuted, state);
                TrainConfig c = cfg;
                c.seed = cell.seed;
                const auto spec = make_net_spec(*state, opt.latent_len, opt.gan_hidden, opt.noise_len);
                const SynthModel model = train(encoded, spec, c);
                const RawTable synth = synthesize(model, permuted.num_rows(), cell.seed + 1);
                cell.mean_wd = table_wd(table, synth).mean;
                sum += *cell.mean_wd;
                ++summary.successes;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::divergence && e.code() != ErrorCode::non_finite) throw;
                cell.failed = true;
                cell.error = e.what();
            }
            rec.cells.push_back(std::move(cell));
        }
        if (summary.successes) summary.mean_wd = sum / static_cast<double>(summary.successes);
        rec.orders.push_back(std::move(summary));
    }
    std::vector<double> means;
    for (const auto& s : rec.orders)
        if (s.mean_wd) means.push_back(*s.mean_wd);
    if (means.size() == rec.orders.size()) rec.max_diff_pct = sensitivity_pct(means);
    return rec;
}

// ---- report --------------------------------------------------------------

struct EvalReport {
    std::optional<TableWd> wd;
    std::optional<double> dif_corr;
    std::optional<UtilityRecord> ml_utility;
    std::optional<SensitivityRecord> sensitivity;
    nlohmann::json config = nullptr;
    nlohmann::json seeds = nullptr;
};

inline constexpr int eval_report_version = 1;

namespace eval_detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::optional<double> opt_double(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

} // namespace eval_detail

inline nlohmann::json report_to_json(const EvalReport& r) {
    using eval_detail::opt_json;
    nlohmann::json j;
    j["version"] = eval_report_version;
    if (r.wd) {
        j["columns"] = r.wd->columns;
        j["per_column_wd"] = r.wd->per_column;
        j["mean_wd"] = r.wd->mean;
    } else {
        j["columns"] = nullptr;
        j["per_column_wd"] = nullptr;
        j["mean_wd"] = nullptr;
    }
    j["dif_corr"] = opt_json(r.dif_corr);
    if (r.ml_utility) {
        nlohmann::json learners = nlohmann::json::array();
        for (const auto& l : r.ml_utility->learners)
            learners.push_back({{"name", l.name},
                                {"real_accuracy", opt_json(l.real_accuracy)},
                                {"synth_accuracy", opt_json(l.synth_accuracy)},
                                {"skipped", l.skipped},
                                {"reason", l.reason}});
        j["ml_utility"] = {{"learners", learners}, {"diff", opt_json(r.ml_utility->diff)}};
    } else {
        j["ml_utility"] = nullptr;
    }
    if (r.sensitivity) {
        nlohmann::json orders = nlohmann::json::array(), cells = nlohmann::json::array();
        for (const auto& o : r.sensitivity->orders)
            orders.push_back({{"method", o.method}, {"order", o.order}, {"mean_wd", opt_json(o.mean_wd)}, {"successes", o.successes}});
        for (const auto& c : r.sensitivity->cells)
            cells.push_back({{"order_index", c.order_index},
                             {"repeat", c.repeat},
                             {"seed", c.seed},
                             {"mean_wd", opt_json(c.mean_wd)},
                             {"failed", c.failed},
                             {"error", c.error}});
        j["sensitivity"] = {{"orders", orders}, {"cells", cells}, {"max_diff_pct", opt_json(r.sensitivity->max_diff_pct)}};
    } else {
        j["sensitivity"] = nullptr;
    }
    j["config"] = r.config;
    j["seeds"] = r.seeds;
    return j;
}

/// Parses a report; any missing field or other version is a version mismatch.
inline EvalReport report_from_json(const nlohmann::json& j) {
    using eval_detail::opt_double;
    EvalReport r;
    try {
        if (j.at("version").get<int>() != eval_report_version)
            throw Error(ErrorCode::version_mismatch, "unsupported report version " + j.at("version").dump());
        if (!j.at("mean_wd").is_null()) {
            TableWd wd;
            wd.columns = j.at("columns").get<std::vector<std::string>>();
            wd.per_column = j.at("per_column_wd").get<std::vector<double>>();
            wd.mean = j.at("mean_wd").get<double>();
            r.wd = std::move(wd);
        } else {
            (void)j.at("columns");
            (void)j.at("per_column_wd");
        }
        r.dif_corr = opt_double(j.at("dif_corr"));
        if (const auto& u = j.at("ml_utility"); !u.is_null()) {
            UtilityRecord rec;
            for (const auto& l : u.at("learners"))
                rec.learners.push_back({l.at("name").get<std::string>(), opt_double(l.at("real_accuracy")),
                                        opt_double(l.at("synth_accuracy")), l.at("skipped").get<bool>(),
                                        l.at("reason").get<std::string>()});
            rec.diff = opt_double(u.at("diff"));
            r.ml_utility = std::move(rec);
        }
        if (const auto& s = j.at("sensitivity"); !s.is_null()) {
            SensitivityRecord rec;
            for (const auto& o : s.at("orders"))
                rec.orders.push_back({o.at("method").get<std::string>(), o.at("order").get<std::vector<std::string>>(),
                                      opt_double(o.at("mean_wd")), o.at("successes").get<std::size_t>()});
            for (const auto& c : s.at("cells"))
                rec.cells.push_back({c.at("order_index").get<std::size_t>(), c.at("repeat").get<std::size_t>(),
                                     c.at("seed").get<std::uint64_t>(), opt_double(c.at("mean_wd")),
                                     c.at("failed").get<bool>(), c.at("error").get<std::string>()});
            rec.max_diff_pct = opt_double(s.at("max_diff_pct"));
            r.sensitivity = std::move(rec);
        }
        r.config = j.at("config");
        r.seeds = j.at("seeds");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::version_mismatch, std::string("malformed report: ") + e.what());
    }
    return r;
}

inline void save_report(const std::string& path, const EvalReport& r) { write_json_file(path, report_to_json(r)); }
inline EvalReport load_report(const std::string& path) { return report_from_json(read_json_file(path)); }

/// Similarity of a synthetic table to a real one: per-column WD and dif_corr,
/// plus ML utility when a held-out real test split is supplied.
inline EvalReport evaluate(const RawTable& real_train, const RawTable& synth, const RawTable* real_test = nullptr,
                           std::uint64_t seed = 0) {
    EvalReport r;
    r.wd = table_wd(real_train, synth);
    const RawTable aligned = synth.schema.names() == real_train.schema.names() ? synth : synth.reordered(real_train.schema.names());
    r.dif_corr = dif_corr(association_matrix(real_train), association_matrix(aligned));
    if (real_test) r.ml_utility = ml_utility_diff(real_train, *real_test, aligned, seed);
    return r;
}

} // namespace aegan
