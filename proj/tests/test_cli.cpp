#include "cli_pipeline.hpp"
#include "test_util.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

namespace {

using nlohmann::json;

json last_json_line(const std::string& text) {
    const auto end = text.find_last_not_of('\n');
    const auto start = text.rfind('\n', end);
    return json::parse(text.substr(start == std::string::npos ? 0 : start + 1, end + 1));
}

}  // namespace

TEST(Cli, UnknownSubcommandIsAUsageError) {
    testutil::TempDir dir;
    EXPECT_EQ(pipeline::run_cli(dir.path(), "frobnicate", "x"), 2);
    const auto err = last_json_line(testutil::slurp(dir.file("x.stderr")));
    EXPECT_EQ(err["error"], "usage");
    EXPECT_NE(err["message"].get<std::string>().find("frobnicate"), std::string::npos);
}

TEST(Cli, MissingInputIsASingleLineError) {
    testutil::TempDir dir;
    EXPECT_EQ(pipeline::run_cli(dir.path(), "ingest --input nowhere.jsonl", "x"), 1);
    const auto text = testutil::slurp(dir.file("x.stderr"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_TRUE(last_json_line(text).contains("error"));
}

TEST(Cli, BadConfigFieldIsNamed) {
    testutil::TempDir dir;
    testutil::write(dir.file("cfg.json"), R"({"kernel": {"n_stepz": 4}})");
    EXPECT_EQ(pipeline::run_cli(dir.path(), "--config cfg.json synth-bench --kind entropy", "x"), 1);
    EXPECT_NE(testutil::slurp(dir.file("x.stderr")).find("n_stepz"), std::string::npos);

    testutil::write(dir.file("cfg.json"), R"({"kernel": {"n_steps": "many"}})");
    EXPECT_EQ(pipeline::run_cli(dir.path(), "--config cfg.json synth-bench --kind entropy", "y"), 1);
    EXPECT_NE(testutil::slurp(dir.file("y.stderr")).find("n_steps"), std::string::npos);
}

TEST(Cli, EntropyReportsAnEntropy) {
    testutil::TempDir dir;
    testutil::write(dir.file("s.jsonl"), R"({"text":"a","vector":[1,0]})" "\n" R"({"text":"b","vector":[0,1]})" "\n");
    ASSERT_EQ(pipeline::run_cli(dir.path(), "entropy --samples s.jsonl --out e.json", "x"), 0);
    const auto report = json::parse(testutil::slurp(dir.file("e.json")));
    EXPECT_EQ(report["command"], "entropy");
    EXPECT_DOUBLE_EQ(report["result"]["entropy"].get<double>(), 1.0);
}

TEST(Cli, VersionAndHelpExitZero) {
    testutil::TempDir dir;
    EXPECT_EQ(pipeline::run_cli(dir.path(), "--help", "h"), 0);
    EXPECT_EQ(pipeline::run_cli(dir.path(), "--version", "v"), 0);
    EXPECT_NE(testutil::slurp(dir.file("v.stdout")).find("0.1.0"), std::string::npos);
}

TEST(Cli, SynthBenchIsByteIdenticalAcrossRuns) {
    testutil::TempDir a, b;
    ASSERT_EQ(pipeline::run_cli(a.path(), "--out-dir out synth-bench --kind all", "log"), 0);
    ASSERT_EQ(pipeline::run_cli(b.path(), "--out-dir out synth-bench --kind all", "log"), 0);
    const auto sa = pipeline::snapshot(a.path());
    EXPECT_GT(sa.size(), 60u);
    EXPECT_TRUE(pipeline::differences(sa, pipeline::snapshot(b.path())).empty());
}

TEST(Cli, FullPipelineRuns) {
    testutil::TempDir dir;
    ASSERT_EQ(pipeline::run_all(dir.path()), "");
    const auto model = json::parse(testutil::slurp(dir.file("o/report.json")));
    EXPECT_GE(model["result"]["accuracy"].get<double>(), 0.0);
    const auto csv = testutil::slurp(dir.file("o/eval.csv"));
    EXPECT_EQ(csv.substr(0, 4), "rho,");
    const auto kernel = testutil::slurp(dir.file("o/kernel.csv"));
    EXPECT_EQ(std::count(kernel.begin(), kernel.end(), '\n'), 5);
}
