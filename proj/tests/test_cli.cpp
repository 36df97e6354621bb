#include <doctest.h>

#include <cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int rc;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "kdvist");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = kdvist::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {rc, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kdvist_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

fs::path write_potential(const fs::path& dir, const json& j) {
    const fs::path p = dir / "potential.json";
    std::ofstream(p) << j.dump();
    return p;
}

}  // namespace

TEST_CASE("solve on the zero potential") {
    const auto dir = scratch("zero");
    const auto pot = write_potential(dir, {{"kind", "zero"}});
    const auto r = invoke({"solve", "--potential", pot.string(), "--x=-2:2:0.5", "--t", "0.5,1", "--out", dir.string()});
    REQUIRE(r.rc == 0);
    const auto rows = read_csv(dir / "solution.csv");
    CHECK(rows.size() == 18);
    for (const auto& row : rows) {
        REQUIRE(row.size() == 5);
        CHECK(row[2] == 0);
        CHECK(row[3] == 1);
    }
    const json m = json::parse(slurp(dir / "manifest.json"));
    for (const char* key : {"config", "versions", "tuned", "precision"}) CHECK(m.contains(key));
}

TEST_CASE("solve output is reproducible") {
    const auto dir = scratch("repeat");
    const auto pot = write_potential(dir, {{"kind", "soliton"}, {"kappa", 1}});
    std::string first;
    for (int i = 0; i < 2; ++i) {
        const auto r = invoke({"solve", "--potential", pot.string(), "--x=-3:3:0.5", "--t", "0.5", "--out", dir.string()});
        REQUIRE(r.rc == 0);
        const auto csv = slurp(dir / "solution.csv");
        if (i == 0)
            first = csv;
        else
            CHECK(csv == first);
    }
    // Row at x = 0: -2 sech^2(2).
    const auto rows = read_csv(dir / "solution.csv");
    const double c = std::cosh(2.0);
    CHECK(std::abs(rows[6][2] + 2 / (c * c)) < 1e-8);
}

TEST_CASE("convergence sweep on the pure step") {
    const auto dir = scratch("conv");
    const auto pot = write_potential(dir, {{"kind", "pure_step"}, {"h", 1}});
    const auto r = invoke({"convergence", "--potential", pot.string(), "--bs=-10,-20,-40", "--at", "0,1", "--out", dir.string()});
    REQUIRE(r.rc == 0);
    const auto rows = read_csv(dir / "convergence.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[2][2] < rows[1][2]);
}

TEST_CASE("validate runs a single check") {
    const auto r = invoke({"validate", "--suite", "soliton"});
    CHECK(r.rc == 0);
    CHECK(r.out.find("[PASS]") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
    const auto dir = scratch("bad");
    CHECK(invoke({"solve", "--x", "not-a-grid"}).rc == 2);
    CHECK(invoke({"solve", "--potential", (dir / "missing.json").string()}).rc == 2);
    CHECK(invoke({"validate", "--suite", "nope"}).rc == 2);
    const auto pot = write_potential(dir, {{"kind", "box"}, {"depth", -1}});
    CHECK(invoke({"solve", "--potential", pot.string()}).rc == 2);
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << "[1, 2]";
    CHECK(invoke({"solve", "--config", cfg.string()}).rc == 2);
}

TEST_CASE("help exits cleanly") {
    const auto r = invoke({"--help"});
    CHECK(r.rc == 0);
    CHECK(r.out.find("convergence") != std::string::npos);
}
