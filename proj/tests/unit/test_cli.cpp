#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "erwlab/cli.hpp"
#include "erwlab/error.hpp"

using namespace erwlab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "erw-lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path tmp_dir() {
    const char* env = std::getenv("ERWLAB_TEST_TMP");
    fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "erwlab_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, AnalyzeReportsRegime) {
    const auto r = run({"analyze", "--preset", "erw", "--param", "p=0.75"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["regime_report"]["regime"], "Critical");
    EXPECT_TRUE(j.contains("config_hash"));
}

TEST(Cli, FreeFormParameters) {
    const auto r = run({"analyze", "--preset", "erw", "--p", "0.6"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["regime_report"]["clt_variance"][0][0].get<double>(), 5.0 / 3.0, 1e-12);
}

TEST(Cli, PresetsListing) {
    const auto r = run({"presets"});
    ASSERT_EQ(r.code, 0);
    for (const char* name : {"erw", "minimal", "kdim", "random-step", "market"})
        EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run({"analyze", "--preset", "no-such-walk"}).code, 2);
    EXPECT_EQ(run({"analyze", "--preset", "erw", "--param", "p=1.5"}).code, 2);
    EXPECT_EQ(run({"analyze", "--model", (tmp_dir() / "missing.json").string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--preset", "erw", "--n", "100", "--N", "1"}).code, 2);
    EXPECT_EQ(run({"sa", "--drift", "x + 1"}).code, 2);
    const auto bad_tol = tmp_dir() / "bad_tol.json";
    std::ofstream(bad_tol) << R"({"slln.zz": 3})";
    const auto r = run({"verify", "--preset", "erw", "--suite", "slln", "--n", "100", "--N", "10", "--tol-overrides",
                        bad_tol.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("slln.zz"), std::string::npos);
}

TEST(Cli, FailedCheckExitsOne) {
    // a zero relative tolerance on a sampled variance cannot hold
    const auto tol = tmp_dir() / "zero_tol.json";
    std::ofstream(tol) << R"({"clt.rel_tol_diffusive": 0})";
    const auto r = run({"verify", "--preset", "erw", "--p", "0.6", "--suite", "clt", "--n", "200", "--N", "20",
                        "--tol-overrides", tol.string()});
    EXPECT_EQ(r.code, 1) << r.err;
}

TEST(Cli, VerifyPassesAndIsReproducible) {
    const std::vector<std::string> args{"verify", "--preset", "erw", "--p", "0.6", "--suite", "slln",
                                        "--n",    "2000",     "--N", "200", "--seed", "5"};
    const auto a = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    auto more = args;
    more.insert(more.end(), {"--threads", "3"});
    const auto b = run(more);
    EXPECT_EQ(a.out, b.out);
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Cli, OutputFileWithSidecars) {
    const auto out = tmp_dir() / "sim.csv";
    fs::remove(out);
    const auto r = run({"simulate", "--preset", "erw", "--n", "500", "--N", "20", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = slurp(out);
    EXPECT_EQ(text.rfind("# config_hash: ", 0), 0u);
    EXPECT_TRUE(fs::exists(out.string() + ".meta.json"));
    const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
    EXPECT_NE(text.find(meta["config_hash"].get<std::string>()), std::string::npos);
}

TEST(Cli, ConfigHashIgnoresThreads) {
    const auto a = run({"simulate", "--preset", "erw", "--n", "300", "--N", "8", "--threads", "1"});
    const auto b = run({"simulate", "--preset", "erw", "--n", "300", "--N", "8", "--threads", "2"});
    const auto c = run({"simulate", "--preset", "erw", "--n", "300", "--N", "8", "--seed", "7"});
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.substr(0, a.out.find('\n')), c.out.substr(0, c.out.find('\n')));
}

TEST(Cli, OracleTable) {
    const auto r = run({"oracle", "--preset", "erw", "--n", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("n,count,S,prob"), std::string::npos);
}

TEST(Cli, SaRunsAndReports) {
    const auto r = run({"sa", "--drift", "x", "--noise", "gaussian:1", "--n", "1000", "--N", "50"});
    ASSERT_NE(r.code, 2) << r.err;
    EXPECT_NO_THROW(nlohmann::json::parse(r.out));
}

TEST(Tolerances, DefaultsAndOverrides) {
    Tolerances t;
    EXPECT_EQ(t.get("slln.z"), 4.0);
    EXPECT_EQ(t.get("clt.rel_tol_diffusive"), 0.05);
    t.apply(nlohmann::json{{"slln.z", 5.0}});
    EXPECT_EQ(t.get("slln.z"), 5.0);
    EXPECT_THROW(t.apply(nlohmann::json{{"nope", 1.0}}), Error);
    EXPECT_THROW(t.apply(nlohmann::json{{"slln.z", "x"}}), Error);
}
