// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(TFD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("tfd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

    void write_config(const std::string& name, const std::string& extra_arch) {
        std::ofstream(dir_ / name) << R"({"data": {"hr_dir": ")" << p("hr") << R"(", "patch": 8, "stride": 8, "limit": 4},
  "degradations": ["clean", "noise"],
  "arch": {"in_channels": 1, "channels": 4, "blocks": 2, "insert_at": 1, "scale": 2, "feature_size": 8)"
                                       << extra_arch << R"(},
  "train": {"iters": 6, "batch": 4, "seed": 1},
  "eval": {"presets": ["clean", "noise"], "seed": 2},
  "out_dir": ")" << p("run") << R"("})";
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("train " + p("missing.json")), 2);
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 2 --size 32 --channels 1 --seed 1"), 0);
    EXPECT_EQ(run("degrade --preset bogus --seed 1 --in " + p("hr") + " --out " + p("lr")), 2);
    std::ofstream(p("bad.json")) << R"({"arch": {"wat": 1}})";
    EXPECT_EQ(run("train " + p("bad.json")), 2);
}

TEST_F(Cli, DegradeIsReplayable) {
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 3 --size 32 --channels 3 --seed 4"), 0);
    ASSERT_EQ(run("degrade --preset noise --seed 7 --in " + p("hr") + " --out " + p("a")), 0);
    ASSERT_EQ(run("degrade --preset noise --seed 7 --in " + p("hr") + " --out " + p("b")), 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "a")) {
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
        ++files;
    }
    EXPECT_EQ(files, 4u);
    EXPECT_NE(slurp(p("a/manifest.csv")).find("noise"), std::string::npos);
}

TEST_F(Cli, TrainEvalAnalyzeRoundTrip) {
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 4 --size 32 --channels 1 --seed 2"), 0);
    write_config("cfg.json", "");
    ASSERT_EQ(run("train " + p("cfg.json")), 0);
    const std::string ckpt = slurp(p("run/model.tfd1"));
    ASSERT_FALSE(ckpt.empty());
    EXPECT_NE(slurp(p("run/history.csv")).find('\n'), std::string::npos);
    fs::rename(dir_ / "run", dir_ / "run1");
    ASSERT_EQ(run("train " + p("cfg.json")), 0);
    EXPECT_EQ(slurp(p("run/model.tfd1")), ckpt);

    ASSERT_EQ(run("eval --config " + p("cfg.json") + " --checkpoint " + p("run/model.tfd1") + " --hr " + p("hr") +
                  " --out " + p("r1.csv")),
              0);
    ASSERT_EQ(run("eval --config " + p("cfg.json") + " --checkpoint " + p("run/model.tfd1") + " --hr " + p("hr") +
                  " --out " + p("r2.csv")),
              0);
    const std::string report = slurp(p("r1.csv"));
    EXPECT_EQ(report, slurp(p("r2.csv")));
    EXPECT_NE(report.find("AVERAGE"), std::string::npos);
    EXPECT_EQ(run("eval --config " + p("cfg.json") + " --checkpoint " + p("nope.tfd1") + " --hr " + p("hr")), 2);

    for (const char* sub : {"cossim", "audit"}) {
        const std::string base = std::string("analyze ") + sub + " --config " + p("cfg.json") + " --checkpoint " +
                                 p("run/model.tfd1") + " --hr " + p("hr") + " --seed 3 --out ";
        ASSERT_EQ(run(base + p("x.csv")), 0) << sub;
        ASSERT_EQ(run(base + p("y.csv")), 0) << sub;
        EXPECT_EQ(slurp(p("x.csv")), slurp(p("y.csv"))) << sub;
    }
}

TEST_F(Cli, AllOffBaselineTrains) {
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 2 --size 32 --channels 1 --seed 3"), 0);
    write_config("off.json", R"(, "nd": false, "sd": false, "fd": false)");
    EXPECT_EQ(run("train " + p("off.json")), 0);
}

TEST_F(Cli, SingleClassDataIsADataError) {
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 2 --size 32 --channels 1 --seed 3"), 0);
    write_config("cfg.json", "");
    std::string text = slurp(p("cfg.json"));
    text.replace(text.find(R"(["clean", "noise"])"), 18, R"(["clean", "blur"])");
    std::ofstream(p("cfg.json")) << text;
    EXPECT_EQ(run("train " + p("cfg.json")), 3);
}

TEST_F(Cli, AnalyzeProbesAreReplayable) {
    ASSERT_EQ(run("synth --out " + p("hr") + " --count 2 --size 64 --channels 3 --seed 5"), 0);
    for (const std::string& args :
         {std::string("analyze spectrum --hr ") + p("hr") + " --preset noise --bins 8 --seed 1 --out ",
          std::string("analyze freqp --steps 40 --seed 2 --out "),
          std::string("analyze snr --sigma 20 --weight radial --steps 5 --seed 3 --out ")}) {
        ASSERT_EQ(run(args + p("x.csv")), 0) << args;
        ASSERT_EQ(run(args + p("y.csv")), 0) << args;
        EXPECT_EQ(slurp(p("x.csv")), slurp(p("y.csv"))) << args;
    }
}
