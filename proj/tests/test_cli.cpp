#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wire_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    int cli(const std::string& args) {
        const std::string cmd = std::string(WIRE_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                                " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

std::vector<std::vector<std::string>> csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_F(CliTest, RunWritesDiagnostics) {
    const fs::path cfg = write("c.json", R"({"N": 32, "T": 0.25, "output": {"snapshot_every": 4}})");
    ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << read(dir_ / "stderr.txt");
    const auto rows = csv(read(dir_ / "out" / "diagnostics.csv"));
    ASSERT_GE(rows.size(), 9u);
    EXPECT_EQ(rows[0][0], "time");
    EXPECT_EQ(rows[0].size(), 11u);
    double last = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 11u);
        const double t = std::stod(rows[i][0]);
        EXPECT_GT(t, last);
        last = t;
        EXPECT_NEAR(std::stod(rows[i][1]), 4 * M_PI * M_PI, 0.2);
    }
    EXPECT_NEAR(last, 0.25, 1e-12);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "snapshot_000000.json"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "snapshot_000008.json"));
    const auto snap = nlohmann::json::parse(read(dir_ / "out" / "snapshot_000008.json"));
    EXPECT_EQ(snap["N"].get<int>(), 32);
    EXPECT_EQ(snap["gamma"].size(), 64u);
}

TEST_F(CliTest, InvalidConfigExitsWithTwo) {
    const fs::path cfg = write("bad.json", R"({"N": 4, "initial": {"curve": {"name": "trefoil"}}})");
    EXPECT_EQ(cli("run --config " + cfg.string()), 2);
    const std::string err = read(dir_ / "stderr.txt");
    EXPECT_NE(err.find("N >= 8 required"), std::string::npos);
    EXPECT_NE(err.find("initial.curve.name"), std::string::npos);
    EXPECT_EQ(cli("check --config " + cfg.string()), 2);
    EXPECT_EQ(cli("run --config " + (dir_ / "missing.json").string()), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
}

TEST_F(CliTest, CheckAcceptsValidConfig) {
    const fs::path cfg = write("ok.json", R"({"manifold": {"name": "hyperbolic"},
        "initial": {"curve": {"name": "hyperbolic-loop", "center": [0, 1]}}})");
    EXPECT_EQ(cli("check --config " + cfg.string()), 0);
    EXPECT_NE(read(dir_ / "stdout.txt").find("ok"), std::string::npos);
}

TEST_F(CliTest, GeodesicAbortsWithThree) {
    const fs::path cfg = write("g.json", R"({"manifold": {"name": "flat-torus"}, "N": 16, "T": 0.25,
        "initial": {"curve": {"name": "flat-torus-geodesic"}}})");
    EXPECT_EQ(cli("run --config " + cfg.string() + " --out " + (dir_ / "out").string()), 3);
    const auto f = nlohmann::json::parse(read(dir_ / "out" / "failure.json"));
    EXPECT_EQ(f["kind"].get<std::string>(), "near-geodesic");
    EXPECT_LT(f["bentness"].get<double>(), 1e-3);
}

TEST_F(CliTest, StudyReportsOrders) {
    const fs::path cfg = write("s.json", R"({"N": 16, "T": 0.25,
        "initial": {"curve": {"name": "perturbed-circle", "m": 2, "eps": 0.05}}})");
    ASSERT_EQ(cli("study --quiet --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0)
        << read(dir_ / "stderr.txt");
    const auto j = nlohmann::json::parse(read(dir_ / "out" / "study.json"));
    EXPECT_EQ(j["N"].size(), 3u);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "study.csv"));
    EXPECT_TRUE(read(dir_ / "stdout.txt").empty());
}

TEST_F(CliTest, Version) {
    EXPECT_EQ(cli("--version"), 0);
    EXPECT_NE(read(dir_ / "stdout.txt").find("0.1.0"), std::string::npos);
}
