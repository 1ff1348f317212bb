#include "generators.hpp"

#include "ivnsim/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ivnsim;
namespace fs = std::filesystem;

namespace {

const std::string kSmall = std::string(IVNSIM_SCENARIO_DIR) + "/small_network.andl";
const std::string kExt = std::string(IVNSIM_SCENARIO_DIR) + "/recbar_extension.andl";

struct Result {
    int rc;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int rc = cli::main(args, out, err);
    return {rc, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("ivnsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, ValidateGoodFile)
{
    const auto r = run({"validate", kSmall});
    EXPECT_EQ(r.rc, 0) << r.err;
}

TEST_F(CliTest, ValidateReportsPositions)
{
    const auto bad = path("bad.andl");
    std::ofstream(bad) << "network n {\n  devices {\n    node a\n  }\n}\n";
    const auto r = run({"validate", bad});
    EXPECT_EQ(r.rc, cli::kExitSemantic);
    EXPECT_NE(r.err.find("bad.andl:4:"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingFileIsAnIoError)
{
    EXPECT_EQ(run({"validate", path("nope.andl")}).rc, cli::kExitIo);
    EXPECT_EQ(run({"run", path("nope.andl")}).rc, cli::kExitIo);
}

TEST_F(CliTest, CompileThenRunFromJson)
{
    const auto json = path("small.json");
    ASSERT_EQ(run({"compile", kSmall, "-o", json}).rc, 0);
    ASSERT_TRUE(fs::exists(json));
    const auto out = path("res");
    const auto r = run({"run", json, "--horizon", "20ms", "--out", out});
    EXPECT_EQ(r.rc, 0) << r.err;
    EXPECT_TRUE(fs::exists(fs::path(out) / "scalars.csv"));
    EXPECT_NE(r.out.find("results in"), std::string::npos);
}

TEST_F(CliTest, JsonAndAndlRunsExportTheSameMetrics)
{
    const auto json = path("small.json");
    ASSERT_EQ(run({"compile", kSmall, "-o", json}).rc, 0);
    const auto a = run({"run", json, "--horizon", "20ms", "--out", path("a")});
    const auto b = run({"run", kSmall, "--horizon", "20ms", "--out", path("b")});
    ASSERT_EQ(a.rc, 0);
    ASSERT_EQ(b.rc, 0);
    const auto hash = [](const std::string& s) { return s.substr(s.rfind("hash")); };
    EXPECT_EQ(hash(a.out), hash(b.out));
}

TEST_F(CliTest, MergedFilesAndAnalyze)
{
    const auto out = path("res");
    const auto r = run({"run", kSmall + "+" + kExt, "--horizon", "50ms", "--out", out, "--seed", "3"});
    ASSERT_EQ(r.rc, 0) << r.err;

    const auto lat = run({"analyze", out, "--metric", "latency", "--filter", "camFront"});
    EXPECT_EQ(lat.rc, 0) << lat.err;
    EXPECT_NE(lat.out.find("camFront"), std::string::npos);
    EXPECT_EQ(lat.out.find("msg1"), std::string::npos);

    const auto bw = run({"analyze", out, "--metric", "bandwidth"});
    EXPECT_EQ(bw.rc, 0);
    EXPECT_NE(bw.out.find("cb1"), std::string::npos);

    const auto jit = run({"analyze", out, "--metric", "jitter", "--filter", "msg2"});
    EXPECT_EQ(jit.rc, 0);

    const auto q = run({"analyze", out, "--metric", "queues", "--filter", "s1*"});
    EXPECT_EQ(q.rc, 0) << q.err;

    const auto plot = path("plot.csv");
    EXPECT_EQ(run({"analyze", out, "--metric", "latency", "--filter", "msg2", "--plot", plot}).rc, 0);
    EXPECT_TRUE(fs::exists(plot));
}

TEST_F(CliTest, SeveralScenariosGoToSubdirectories)
{
    const auto out = path("res");
    const auto r = run({"run", kSmall, kSmall + "+" + kExt, "--horizon", "10ms", "--out", out, "--jobs", "2"});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_TRUE(fs::exists(fs::path(out) / "small_network" / "scalars.csv"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "small_network+recbar_extension" / "scalars.csv"));
}

TEST_F(CliTest, StructuredFormat)
{
    const auto out = path("res");
    ASSERT_EQ(run({"run", kSmall, "--horizon", "5ms", "--out", out, "--format", "structured"}).rc, 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "results.json"));
    EXPECT_EQ(run({"analyze", out, "--metric", "latency"}).rc, 0);
}

TEST_F(CliTest, OverridesAndUsageErrors)
{
    EXPECT_EQ(run({"run", kSmall, "--horizon", "0s", "--out", path("r")}).rc, cli::kExitSemantic);
    EXPECT_EQ(run({"run", kSmall, "--set", "msg2.period=fast", "--out", path("r")}).rc, cli::kExitSemantic);
    EXPECT_EQ(run({"run", kSmall, "--set", "msg2.period=250us", "--horizon", "5ms", "--out", path("r")}).rc, 0);
    EXPECT_EQ(run({"bogus"}).rc, cli::kExitSemantic);
    EXPECT_EQ(run({"analyze", path("r"), "--metric", "latency", "--filter", "nothing"}).rc, cli::kExitSemantic);
    EXPECT_EQ(run({"analyze", path("missing"), "--metric", "latency"}).rc, cli::kExitIo);
}

TEST_F(CliTest, HelpExitsCleanly)
{
    EXPECT_EQ(run({"--help"}).rc, 0);
}
