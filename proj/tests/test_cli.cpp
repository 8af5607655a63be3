#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sqhhg/config.hpp>

namespace fs = std::filesystem;

namespace {

const std::string cli = SQHHG_CLI_PATH;

const std::string desk =
    " --set grid.x_half_width=256 --set grid.nx=1024 --set grid.dt=0.1 --set atom.calibrate=false"
    " --set atom.softening_a=1.189242 --set stats.bootstrap_resamples=200";

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args)
{
    Result res;
    const std::string cmd = cli + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) res.out += buf;
    const int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("sqhhg_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" `");
    const auto e = s.find_last_not_of(" `");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

TEST_CASE("malformed config exits with status 2 naming the key")
{
    const auto dir = scratch("badcfg");
    std::ofstream(dir / "bad.json") << R"({"grid": {"nx": "many"}})";
    const auto res = run("run --config " + (dir / "bad.json").string() + " --out " + dir.string());
    CHECK(res.code == 2);
    CHECK(res.out.find("grid.nx") != std::string::npos);

    CHECK(run("run --set no.such.key=1").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("--version").code == 0);
}

TEST_CASE("README defaults table matches the effective defaults")
{
    std::ifstream in(SQHHG_README_PATH);
    REQUIRE(in);
    std::string line;
    bool inside = false;
    std::size_t rows = 0;
    const sqhhg::ConfigValues defaults;
    while (std::getline(in, line)) {
        if (line.find("<!-- defaults:begin -->") != std::string::npos) inside = true;
        else if (line.find("<!-- defaults:end -->") != std::string::npos) inside = false;
        else if (inside && line.rfind("| `", 0) == 0) {
            std::vector<std::string> cells;
            std::stringstream ss(line.substr(1));
            for (std::string cell; std::getline(ss, cell, '|');) cells.push_back(trim(cell));
            REQUIRE(cells.size() >= 2);
            INFO(line);
            const auto expected = defaults.at(cells[0]);
            const auto documented = sqhhg::json::parse(cells[1]);
            if (expected.is_number()) CHECK(documented.get<double>() == expected.get<double>());
            else CHECK(documented == expected);
            ++rows;
        }
    }
    CHECK(rows == sqhhg::config_keys().size());
}

TEST_CASE("print-config reflects overrides")
{
    const auto res = run("run --print-config --seed 99 --set squeeze.r=0.5");
    REQUIRE(res.code == 0);
    const auto doc = sqhhg::json::parse(res.out);
    CHECK(doc["ensemble"]["master_seed"] == 99);
    CHECK(doc["squeeze"]["r"] == 0.5);
}

TEST_CASE("run output is reproducible and independent of workers")
{
    const std::string args = "run" + desk + " --set ensemble.n_shot=4 --set squeeze.r=1 --set squeeze.theta=1.5708";
    const auto a = scratch("run_a");
    const auto b = scratch("run_b");
    REQUIRE(run(args + " --workers 1 --out " + a.string()).code == 0);
    REQUIRE(run(args + " --workers 3 --out " + b.string()).code == 0);
    CHECK(slurp(a / "shots.csv") == slurp(b / "shots.csv"));
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    CHECK(slurp(a / "stats.json") == slurp(b / "stats.json"));

    const auto manifest = sqhhg::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["driver_kind"] == "squeezed");
    CHECK(manifest["schema_version"] == 1);
    CHECK(manifest["config"]["squeeze"]["r"] == 1.0);
    const auto rows = read_csv(a / "shots.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].front() == "shot_index");
    CHECK(rows[0].size() == 9);
    CHECK(slurp(a / "shots.csv").find('\r') == std::string::npos);
}

TEST_CASE("quality gate exit status")
{
    const auto dir = scratch("gate");
    // A vanishing drop threshold cannot be met, so every shot is flagged.
    const auto res = run("run" + desk + " --set ensemble.n_shot=2 --set protocol.drop_decades=40 --out " + dir.string());
    CHECK(res.code == 3);
    CHECK(fs::exists(dir / "shots.csv"));
}

TEST_CASE("single-point sweep has no two-channel fit")
{
    const auto dir = scratch("sweep");
    const auto res = run("sweep" + desk + " --set ensemble.n_shot=3 --set sweep.values=[0.5] --workers 2 --out " + dir.string());
    REQUIRE(res.code == 0);
    CHECK(fs::exists(dir / "sweep.csv"));
    CHECK(fs::exists(dir / "reference.json"));
    CHECK(!fs::exists(dir / "twochannel.json"));
    CHECK(read_csv(dir / "sweep.csv").size() == 2);
}

TEST_CASE("analytics tables")
{
    const auto dir = scratch("analytics");
    REQUIRE(run("analytics --out " + dir.string()).code == 0);
    const auto yield = read_csv(dir / "yield_vs_r.csv");
    REQUIRE(yield.size() == 32);
    for (std::size_t i = 1; i < yield.size(); ++i) {
        CHECK(std::stod(yield[i][2]) <= 1.0);
        CHECK(std::stod(yield[i][5]) >= 1.0);
    }
    const auto cutoff = read_csv(dir / "cutoff_vs_r.csv");
    REQUIRE(cutoff.size() == 32);
    CHECK(cutoff.back().back() == "0");
    for (std::size_t i = 2; i < cutoff.size(); ++i) CHECK(std::stod(cutoff[i][10]) > std::stod(cutoff[i - 1][10]));
}
