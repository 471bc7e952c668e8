#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "qps/cli.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("qps_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

int run(const std::string& args, const fs::path& dir) {
    std::string cmd = std::string(QPS_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                      (dir / "stderr.txt").string();
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
    qps::Config c = qps::Config::parse("# comment\nlambda = 25\n\nomega = 0.3  # inline\ncoeffs = 1, 2,3\n");
    CHECK(c.num("lambda") == 25.0);
    CHECK(c.omega() == doctest::Approx(0.3));
    CHECK(c.list("coeffs") == std::vector<double>{1, 2, 3});
    CHECK(qps::Config().omega() == doctest::Approx((std::sqrt(5.0) - 1) / 2));
    CHECK(qps::Config().integer("N1") == 4);
    CHECK_THROWS_AS(qps::Config::parse("lamda = 3\n"), qps::ConfigError);
    CHECK_THROWS_AS(qps::Config::parse("lambda = abc\n"), qps::ConfigError);
    CHECK_THROWS_AS(qps::Config::parse("just a line\n"), qps::ConfigError);
    CHECK_THROWS_AS(qps::Config::parse("N1 = 2.5\n"), qps::ConfigError);
    CHECK_THROWS_AS(qps::Config::parse("strict = maybe\n"), qps::ConfigError);
    // Round trip through the resolved text form.
    qps::Config back = qps::Config::parse(c.to_text());
    CHECK(back.to_json() == c.to_json());
}

TEST_CASE("malformed config exits 2 without writing outputs") {
    fs::path d = scratch("malformed");
    write(d / "bad.cfg", "lambda = 1e4\nnot_a_key = 1\n");
    CHECK(run("lyapunov --config " + (d / "bad.cfg").string() + " --out " + (d / "out").string(), d) == 2);
    CHECK_FALSE(fs::exists(d / "out" / "lyapunov.csv"));
    CHECK(slurp(d / "stderr.txt").find("not_a_key") != std::string::npos);
    CHECK(run("nosuchcommand", d) == 2);
    CHECK(run("verify Z --out " + (d / "out").string(), d) == 2);
    write(d / "var.cfg", "T = 10\ndelta = 1e-3\n");
    CHECK(run("variation --config " + (d / "var.cfg").string() + " --out " + (d / "out").string(), d) == 2);
    CHECK_FALSE(fs::exists(d / "out" / "variation.json"));
}

TEST_CASE("lyapunov of the zero potential") {
    fs::path d = scratch("lyap");
    write(d / "z.cfg", "potential = zero\nlambda = 1\nE_grid = 3, 0\nn = 2000\nx_samples = 10\n");
    REQUIRE(run("lyapunov --config " + (d / "z.cfg").string() + " --out " + d.string(), d) == 0);
    std::istringstream csv(slurp(d / "lyapunov.csv"));
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header = false, preamble = false;
    while (std::getline(csv, line)) {
        if (line.rfind("# ", 0) == 0) {
            preamble = true;
            continue;
        }
        if (line == "E,L,std_error") {
            header = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cellv;
        while (std::getline(ls, cellv, ',')) row.push_back(std::stod(cellv));
        rows.push_back(row);
    }
    CHECK(preamble);
    CHECK(header);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == 3.0);
    CHECK(rows[0][1] == doctest::Approx(std::log((3 + std::sqrt(5.0)) / 2)).epsilon(1e-3));
    CHECK(std::fabs(rows[1][1]) < 1e-9);
}

TEST_CASE("identical invocations produce identical bytes") {
    fs::path d = scratch("determinism");
    write(d / "c.cfg", "x_grid = 8\nomega_grid = 8\ndomain_samples = 50\nscales = 1\n");
    std::string base = "multiscale --config " + (d / "c.cfg").string() + " --out ";
    REQUIRE(run(base + (d / "a").string(), d) == 0);
    REQUIRE(run(base + (d / "b").string(), d) == 0);
    CHECK(slurp(d / "a" / "multiscale.json") == slurp(d / "b" / "multiscale.json"));
    CHECK(slurp(d / "a" / "multiscale_branches.csv") == slurp(d / "b" / "multiscale_branches.csv"));
    REQUIRE(run("verify A --seed 3 --out " + (d / "a").string(), d) == 0);
    REQUIRE(run("verify A --seed 3 --out " + (d / "b").string(), d) == 0);
    CHECK(slurp(d / "a" / "verify_A.json") == slurp(d / "b" / "verify_A.json"));
    nlohmann::json j = nlohmann::json::parse(slurp(d / "a" / "multiscale.json"));
    CHECK(j["version"] == qps::kVersion);
    CHECK(j["config"]["x_grid"] == "8");
}

TEST_CASE("strict multiscale at coupling 10 names the failed audit") {
    fs::path d = scratch("strict");
    write(d / "c.cfg", "lambda = 10\nscales = 1\n");
    std::string base = "multiscale --config " + (d / "c.cfg").string() + " --out " + d.string();
    CHECK(run(base, d) == 0);
    CHECK(run(base + " --strict", d) == 1);
    CHECK(slurp(d / "stderr.txt").find("h1_decay") != std::string::npos);
    nlohmann::json j = nlohmann::json::parse(slurp(d / "multiscale.json"));
    CHECK(j["report"]["all_pass"] == false);
    CHECK(j["report"]["first_failure"] == "s1:h1_decay");
}

TEST_CASE("zero variation") {
    fs::path d = scratch("variation");
    write(d / "c.cfg", "variation_params = zero\n");
    REQUIRE(run("variation --config " + (d / "c.cfg").string() + " --out " + d.string(), d) == 0);
    nlohmann::json j = nlohmann::json::parse(slurp(d / "variation.json"));
    CHECK(j["command"] == "variation");
    CHECK(j["report"]["derivative_bounds"]["max_over_orders"] == 0.0);
}
