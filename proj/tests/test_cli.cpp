#include <aegan/csv.hpp>
#include <aegan/schema.hpp>

#include "toy_fixture.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aegan;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Result {
    int status = -1;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        static int counter = 0;
        dir_ = fs::temp_directory_path() / ("aegan_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    Result run(const std::string& args) const {
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = std::string(AEGAN_CLI_PATH) + " " + args + " 2> '" + err.string() + "'";
        Result r;
        const int raw = std::system(cmd.c_str());
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.err = slurp(err);
        return r;
    }

    /// Last stderr line parsed as JSON.
    static json error_json(const Result& r) {
        std::string last, line;
        std::istringstream in(r.err);
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        return json::parse(last);
    }

    void write_toy(std::size_t n = 300) const {
        write_csv(path("toy.csv"), aegan::testing::toy_table(n, 7));
        save_schema(aegan::testing::toy_table(1).schema, path("toy.schema.json"));
    }

    fs::path dir_;
};

/// Loan-like table: 12 mixed columns plus a binary target, 1,000 rows.
RawTable loan_like(std::size_t n) {
    TableSchema s({{"age", ColumnKind::continuous, {}},
                   {"experience", ColumnKind::continuous, {}},
                   {"income", ColumnKind::continuous, {}},
                   {"family", ColumnKind::categorical, {"1", "2", "3", "4"}},
                   {"ccavg", ColumnKind::continuous, {}},
                   {"education", ColumnKind::categorical, {"1", "2", "3"}},
                   {"mortgage", ColumnKind::continuous, {}},
                   {"securities", ColumnKind::categorical, {"0", "1"}},
                   {"cd", ColumnKind::categorical, {"0", "1"}},
                   {"online", ColumnKind::categorical, {"0", "1"}},
                   {"creditcard", ColumnKind::categorical, {"0", "1"}},
                   {"zip", ColumnKind::continuous, {}},
                   {"loan", ColumnKind::categorical, {"0", "1"}}},
                  "loan");
    RawTable t{s, {}};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> fam(1, 4), edu(1, 3);
    std::bernoulli_distribution coin(0.3), rare(0.1);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = std::round(45 + 11 * g(rng));
        const double income = std::max(8.0, std::round(70 + 45 * g(rng)));
        const double ccavg = std::max(0.0, income / 40 + 0.8 * g(rng));
        const double mortgage = coin(rng) ? std::round(100 + 80 * std::abs(g(rng))) : 0.0;
        const bool loan = income + 20 * g(rng) > 120;
        t.rows.push_back({age, age - 25 + std::round(g(rng)), income, std::to_string(fam(rng)), ccavg,
                          std::to_string(edu(rng)), mortgage, std::string(rare(rng) ? "1" : "0"),
                          std::string(rare(rng) ? "1" : "0"), std::string(coin(rng) ? "0" : "1"),
                          std::string(coin(rng) ? "1" : "0"), std::round(94000 + 1500 * g(rng)),
                          std::string(loan ? "1" : "0")});
    }
    return t;
}

const std::string kQuick = "--epochs 2 --ae-epochs 3 --batch 128 --latent 8 --gan-hidden 32 --noise 16";

} // namespace

TEST_F(CliTest, TrainSynthesizeEvaluateEndToEnd) {
    write_csv(path("loan.csv"), loan_like(1000));
    ASSERT_EQ(run("schema --data " + path("loan.csv") + " --target loan --out " + path("schema.json")).status, 0);
    ASSERT_EQ(run("train --data " + path("loan.csv") + " --schema " + path("schema.json") +
                  " --order algorithm1 --seed 1 --out " + path("ckpt") + " " + kQuick)
                  .status,
              0);
    for (const char* f : {"meta.json", "enc.bin", "dec.bin", "gen.bin", "disc.bin", "cls.bin", "order.txt"})
        EXPECT_TRUE(fs::exists(dir_ / "ckpt" / f)) << f;
    ASSERT_EQ(run("synthesize --checkpoint " + path("ckpt") + " --n 800 --seed 2 --out " + path("synth.csv")).status, 0);
    const auto r = run("evaluate --real " + path("loan.csv") + " --synth " + path("synth.csv") + " --schema " +
                       path("schema.json") + " --out " + path("report.json"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto report = json::parse(slurp(path("report.json")));
    EXPECT_EQ(report.at("columns").size(), 13u);
    EXPECT_TRUE(report.at("mean_wd").is_number());
    EXPECT_TRUE(report.at("dif_corr").is_number());
    EXPECT_EQ(report.at("ml_utility").at("learners").size(), 2u);
    EXPECT_TRUE(report.at("sensitivity").is_null());
}

TEST_F(CliTest, SensitivityWithThreeOrders) {
    write_toy();
    const std::string args = "sensitivity --data " + path("toy.csv") + " --schema " + path("toy.schema.json") +
                             " --orders original,type,correlation --repeats 1 --seed 3 " + kQuick + " --out ";
    const auto r = run(args + path("sens.json"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto report = json::parse(slurp(path("sens.json")));
    const auto& s = report.at("sensitivity");
    ASSERT_EQ(s.at("orders").size(), 3u);
    EXPECT_EQ(s.at("orders")[1].at("method"), "by_type");
    EXPECT_TRUE(s.at("max_diff_pct").is_number());
    EXPECT_GE(s.at("max_diff_pct").get<double>(), 0.0);
    EXPECT_NE(r.err.find("max diff %"), std::string::npos);

    ASSERT_EQ(run(args + path("sens2.json")).status, 0);
    EXPECT_EQ(slurp(path("sens.json")), slurp(path("sens2.json")));
}

TEST_F(CliTest, EvaluateRealAgainstItself) {
    write_toy();
    const auto r = run("evaluate --real " + path("toy.csv") + " --synth " + path("toy.csv") + " --schema " +
                       path("toy.schema.json") + " --out " + path("self.json"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto report = json::parse(slurp(path("self.json")));
    EXPECT_EQ(report.at("mean_wd").get<double>(), 0.0);
    EXPECT_EQ(report.at("dif_corr").get<double>(), 0.0);
}

TEST_F(CliTest, ReproducibleBytesAndUntouchedInputs) {
    write_toy();
    const auto csv_before = slurp(path("toy.csv")), schema_before = slurp(path("toy.schema.json"));
    for (const char* d : {"a", "b"}) {
        ASSERT_EQ(run("train --data " + path("toy.csv") + " --schema " + path("toy.schema.json") + " --seed 4 --out " +
                      path(d) + " " + kQuick)
                      .status,
                  0);
        const std::string synth = (dir_ / d / "synth.csv").string(), report = (dir_ / d / "report.json").string();
        ASSERT_EQ(run("synthesize --checkpoint " + path(d) + " --n 300 --seed 5 --out " + synth).status, 0);
        ASSERT_EQ(run("evaluate --real " + path("toy.csv") + " --synth " + synth + " --schema " +
                      path("toy.schema.json") + " --seed 6 --out " + report)
                      .status,
                  0);
    }
    for (const char* f : {"meta.json", "enc.bin", "dec.bin", "gen.bin", "disc.bin", "cls.bin", "order.txt", "synth.csv",
                          "report.json"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    EXPECT_EQ(slurp(path("toy.csv")), csv_before);
    EXPECT_EQ(slurp(path("toy.schema.json")), schema_before);
}

TEST_F(CliTest, ErrorsAreJsonLines) {
    auto r = run("synthesize --checkpoint " + path("nope") + " --n 10 --out " + path("x.csv"));
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(error_json(r).at("error"), "config");

    write_toy();
    std::ofstream(path("bad.csv")) << "bimodal,linked,label\n1.0,2.0,maybe\n";
    r = run("evaluate --real " + path("toy.csv") + " --synth " + path("bad.csv") + " --schema " + path("toy.schema.json") +
            " --out " + path("e.json"));
    EXPECT_NE(r.status, 0);
    const auto j = error_json(r);
    EXPECT_EQ(j.at("error"), "unknown_category");
    EXPECT_EQ(j.at("column"), "label");
    EXPECT_FALSE(fs::exists(path("e.json")));

    r = run("frobnicate");
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(error_json(r).at("error"), "config");
}

TEST_F(CliTest, ConfigValidationListsEveryProblem) {
    const auto r = run("train --epochs 0 --batch 1 --encoding fancy");
    EXPECT_NE(r.status, 0);
    const auto j = error_json(r);
    EXPECT_EQ(j.at("error"), "config");
    std::string all;
    for (const auto& v : j.at("violations")) all += v.get<std::string>() + "\n";
    for (const char* field : {"data:", "schema:", "out:", "epochs:", "batch:", "encoding:"})
        EXPECT_NE(all.find(field), std::string::npos) << field << " missing from\n" << all;
}

TEST_F(CliTest, ConfigFileWithFlagOverrides) {
    write_toy();
    std::ofstream(path("cfg.json")) << R"({"gan_epochs": 2, "ae_epochs": 3, "batch_size": 64, "latent_len": 8,
                                          "gan_hidden": 16, "noise_len": 8, "seed": 12})";
    ASSERT_EQ(run("train --data " + path("toy.csv") + " --schema " + path("toy.schema.json") + " --config " +
                  path("cfg.json") + " --epochs 3 --out " + path("ck"))
                  .status,
              0);
    const auto meta = json::parse(slurp(dir_ / "ck" / "meta.json"));
    EXPECT_EQ(meta.at("config").at("gan_epochs"), 3);
    EXPECT_EQ(meta.at("config").at("batch_size"), 64);
    EXPECT_EQ(meta.at("config").at("seed"), 12);
    EXPECT_EQ(meta.at("net_spec").at("latent_len"), 8);

    std::ofstream(path("bad.json")) << R"({"gan_epochs": 2, "learning_rat": 0.1})";
    const auto r = run("train --data " + path("toy.csv") + " --schema " + path("toy.schema.json") + " --config " +
                       path("bad.json") + " --out " + path("ck2"));
    EXPECT_NE(r.status, 0);
    EXPECT_NE(error_json(r).dump().find("learning_rat"), std::string::npos);
}

TEST_F(CliTest, SortAndSparsity) {
    write_toy();
    ASSERT_EQ(run("sort --data " + path("toy.csv") + " --schema " + path("toy.schema.json") + " --order type --out " +
                  path("order.txt"))
                  .status,
              0);
    EXPECT_EQ(slurp(path("order.txt")), "# method: by_type\nbimodal\nlinked\nlabel\n");
    ASSERT_EQ(run("sparsity --data " + path("toy.csv") + " --schema " + path("toy.schema.json") + " --order-file " +
                  path("order.txt") + " --side 6 --out " + path("sp.json"))
                  .status,
              0);
    const auto sp = json::parse(slurp(path("sp.json")));
    EXPECT_EQ(sp.at("side"), 6);
    EXPECT_EQ(sp.at("one_hot_features"), 1);
    EXPECT_NEAR(sp.at("zero_fraction").get<double>(), 1.0 - 5.0 / 36.0, 1e-12);
}
