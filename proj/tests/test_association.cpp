#include <aegan/association.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace aegan;

TEST(Pearson, HandValues) {
    const std::vector<double> x{1, 2, 3, 4};
    std::vector<double> y2, yn;
    for (double v : x) {
        y2.push_back(2 * v + 1);
        yn.push_back(-v);
    }
    EXPECT_NEAR(pearson(x, y2).value, 1.0, 1e-15);
    EXPECT_NEAR(pearson(x, yn).value, -1.0, 1e-15);
    EXPECT_NEAR(pearson(x, std::vector<double>{1, 3, 2, 4}).value, 0.8, 1e-12);
}

TEST(Pearson, ZeroVarianceIsFlagged) {
    const auto a = pearson(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5});
    EXPECT_EQ(a.value, 0.0);
    EXPECT_TRUE(a.degenerate);
}

TEST(CramersV, HandValues) {
    EXPECT_NEAR(cramers_v_from_counts({{10, 0}, {0, 10}}).value, 1.0, 1e-15);
    EXPECT_NEAR(cramers_v_from_counts({{6, 4}, {4, 6}}).value, 0.2, 1e-12);
    EXPECT_NEAR(cramers_v_from_counts({{5, 5}, {5, 5}}).value, 0.0, 1e-15);
    const std::vector<std::string> a{"p", "q", "p", "q"};
    EXPECT_NEAR(cramers_v(a, a).value, 1.0, 1e-15);
    const auto d = cramers_v(a, std::vector<std::string>{"z", "z", "z", "z"});
    EXPECT_TRUE(d.degenerate);
    EXPECT_EQ(d.value, 0.0);
}

TEST(CramersV, InvariantToRelabeling) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> u(0, 2);
    std::vector<std::string> a, b, a2;
    for (int i = 0; i < 300; ++i) {
        const int x = u(rng);
        a.push_back("l" + std::to_string(x));
        a2.push_back("renamed" + std::to_string(2 - x));
        b.push_back((x + u(rng)) % 3 == 0 ? "m" : "n");
    }
    EXPECT_NEAR(cramers_v(a, b).value, cramers_v(a2, b).value, 1e-14);
}

TEST(CorrelationRatio, HandValues) {
    const std::vector<std::string> cat{"A", "A", "B", "B"};
    EXPECT_NEAR(correlation_ratio(cat, std::vector<double>{1, 2, 3, 4}).value, std::sqrt(4.0 / 5.0), 1e-12);
    EXPECT_NEAR(correlation_ratio(cat, std::vector<double>{7, 7, 9, 9}).value, 1.0, 1e-15);
    EXPECT_NEAR(correlation_ratio(cat, std::vector<double>{1, 3, 1, 3}).value, 0.0, 1e-15);
    EXPECT_TRUE(correlation_ratio(cat, std::vector<double>{2, 2, 2, 2}).degenerate);
}

namespace {

RawTable three_features(std::size_t n, std::uint64_t seed) {
    TableSchema s({{"x", ColumnKind::continuous, {}},
                   {"c", ColumnKind::categorical, {"u", "v", "w"}},
                   {"y", ColumnKind::continuous, {}},
                   {"t", ColumnKind::categorical, {"no", "yes"}}},
                  "t");
    RawTable t{s, {}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<std::string> cs{"u", "v", "w"};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g(rng);
        const auto c = static_cast<std::size_t>(std::min(2.0, std::max(0.0, std::floor(x + 1.5))));
        t.rows.push_back({x, cs[c], 0.7 * x + g(rng), std::string(x + g(rng) > 0 ? "yes" : "no")});
    }
    return t;
}

} // namespace

TEST(AssociationMatrix, MatchesPerPairCalls) {
    const auto t = three_features(400, 1);
    const auto m = association_matrix(t);
    const auto x = t.numeric_column(0), y = t.numeric_column(2);
    const auto c = t.token_column(1), tt = t.token_column(3);
    EXPECT_EQ(m(0, 2), pearson(x, y).value);
    EXPECT_EQ(m(0, 1), correlation_ratio(c, x).value);
    EXPECT_EQ(m(1, 3), cramers_v(c, tt).value);
    EXPECT_EQ(m(3, 2), correlation_ratio(tt, y).value);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(m(i, i), 1.0);
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(m(i, j), m(j, i));
            EXPECT_LE(std::abs(m(i, j)), 1.0 + 1e-9);
        }
    }
}

TEST(AssociationMatrix, DuplicateColumnsScoreOne) {
    TableSchema s({{"x", ColumnKind::continuous, {}},
                   {"x2", ColumnKind::continuous, {}},
                   {"c", ColumnKind::categorical, {"p", "q"}},
                   {"c2", ColumnKind::categorical, {"p", "q"}}},
                  "c");
    RawTable t{s, {}};
    for (int i = 0; i < 20; ++i) {
        const std::string c = i % 3 ? "p" : "q";
        t.rows.push_back({i * 0.5, i * 0.5, c, c});
    }
    const auto m = association_matrix(t);
    EXPECT_NEAR(m(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(m(2, 3), 1.0, 1e-12);
}

TEST(AssociationMatrix, RowOrderInvarianceAndColumnEquivariance) {
    auto t = three_features(300, 2);
    const auto m = association_matrix(t);
    auto shuffled = t;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
    EXPECT_LT((association_matrix(shuffled).values - m.values).cwiseAbs().maxCoeff(), 1e-12);

    const std::vector<std::string> order{"t", "y", "x", "c"};
    const auto mp = association_matrix(t.reordered(order));
    EXPECT_LT((mp.values - m.reordered(order).values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssociationMatrix, DegeneratePairsAreFlaggedNotFatal) {
    TableSchema s({{"x", ColumnKind::continuous, {}}, {"t", ColumnKind::categorical, {"a", "b"}}}, "t");
    RawTable t{s, {{1.0, std::string("a")}, {2.0, std::string("a")}, {3.0, std::string("a")}}};
    const auto m = association_matrix(t);
    EXPECT_EQ(m(0, 1), 0.0);
    ASSERT_EQ(m.degenerate_pairs.size(), 1u);
}

TEST(DifCorr, HandValuesAndInvariance) {
    AssociationMatrix a, b;
    a.labels = b.labels = {"p", "q"};
    a.kinds = b.kinds = {ColumnKind::continuous, ColumnKind::continuous};
    a.values = Eigen::MatrixXd::Identity(2, 2);
    b.values = a.values;
    EXPECT_EQ(dif_corr(a, b), 0.0);
    b.values(0, 1) = b.values(1, 0) = 0.5;
    EXPECT_NEAR(dif_corr(a, b), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(dif_corr(a.reordered({"q", "p"}), b.reordered({"q", "p"})), dif_corr(a, b), 1e-15);
    b.labels = {"q", "p"};
    EXPECT_THROW(dif_corr(a, b), Error);
}

TEST(DifCorr, MatchesDoubleSum) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index f = 1 + trial % 10;
        AssociationMatrix a, b;
        for (Eigen::Index i = 0; i < f; ++i) {
            a.labels.push_back("f" + std::to_string(i));
            a.kinds.push_back(ColumnKind::continuous);
        }
        b.labels = a.labels;
        b.kinds = a.kinds;
        a.values = Eigen::MatrixXd::NullaryExpr(f, f, [&] { return u(rng); });
        b.values = Eigen::MatrixXd::NullaryExpr(f, f, [&] { return u(rng); });
        EXPECT_NEAR(dif_corr(a, b), aegan::testing::dif_corr_bruteforce(a.values, b.values), 1e-12);
    }
}

TEST(AssociationCsv, HeaderAndRows) {
    const auto m = association_matrix(three_features(50, 3));
    std::ostringstream out;
    write_association_csv(out, m);
    const auto s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "feature,x,c,y,t");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
}
