#include "doctest.h"

#include "tvvol/data_io.hpp"
#include "tvvol/parallel.hpp"
#include "tvvol/property_suite.hpp"

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

using namespace tvvol;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"tvvol"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tvvol_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("simulate then fit writes curves and metrics") {
    const fs::path dir = fresh_dir("pipeline");
    const std::string data = (dir / "a.csv").string();
    REQUIRE(run({"simulate", "--scenario", "arch1", "--n", "300", "--seed", "1", "--out", data}) == 0);
    CHECK(read_text_file(data).rfind("index,return\n1,", 0) == 0);

    const std::string fit = (dir / "fit").string();
    REQUIRE(run({"fit", "--model", "arch", "--p", "1", "--data", data, "--iters", "600", "--burnin",
                 "300", "--seed", "1", "--out", fit}) == 0);
    for (const char* f : {"curves.csv", "metrics.json", "config.json", "draws.csv", "series.csv",
                          "variances.csv", "adaptation.csv"}) {
        CHECK(fs::exists(fs::path(fit) / f));
    }
    CHECK(read_text_file(fit + "/curves.csv").rfind("t,coef,mean,lower95,upper95\n", 0) == 0);
    const std::string metrics = read_text_file(fit + "/metrics.json");
    for (const char* key : {"\"amse\"", "\"accept_rate\"", "\"seed\"", "\"model\"", "\"n\"", "\"knots\""}) {
        CHECK(metrics.find(key) != std::string::npos);
    }

    // Same seed, same bytes.
    const std::string again = (dir / "fit2").string();
    REQUIRE(run({"fit", "--model", "arch", "--data", data, "--iters", "600", "--burnin", "300",
                 "--seed", "1", "--out", again}) == 0);
    CHECK(read_text_file(fit + "/curves.csv") == read_text_file(again + "/curves.csv"));
    CHECK(read_text_file(fit + "/draws.csv") == read_text_file(again + "/draws.csv"));

    const std::string kern = (dir / "kernel").string();
    REQUIRE(run({"fit", "--method", "kernel", "--bandwidth", "0.2", "--data", data, "--seed", "1",
                 "--out", kern}) == 0);
    const std::string summary = (dir / "summary").string();
    REQUIRE(run({"summarize", "--fit", fit, "--fit", kern, "--out", summary}) == 0);
    CHECK(read_text_file(summary + "/summary.json").find("amse_star") != std::string::npos);
    CHECK(fs::exists(fs::path(summary) / "fit_1" / "trace.csv"));
    // Recomputed from the saved draws, the curves match the fit's own.
    CHECK(read_text_file(summary + "/fit_1/curves.csv") == read_text_file(fit + "/curves.csv"));
}

TEST_CASE("config precedence: flags over file over defaults") {
    const fs::path dir = fresh_dir("config");
    const std::string data = (dir / "a.csv").string();
    REQUIRE(run({"simulate", "--scenario", "arch1", "--n", "200", "--seed", "2", "--out", data}) == 0);
    const std::string cfg = (dir / "cfg.json").string();
    write_text_file(cfg, R"({"hmc": {"total_iters": 500, "burn_in": 250, "seed": 5}, "model": {"knots": 3}})");
    const std::string out = (dir / "fit").string();
    REQUIRE(run({"fit", "--config", cfg, "--data", data, "--iters", "400", "--out", out}) == 0);
    const RunConfig echoed = load_config(out + "/config.json");
    CHECK(echoed.hmc.total_iters == 400);
    CHECK(echoed.hmc.burn_in == 250);
    CHECK(echoed.hmc.seed == 5);
    CHECK(echoed.knots == 3);
    CHECK(echoed.hmc.leapfrog_steps == 30);
}

TEST_CASE("exit codes") {
    set_warnings_enabled(false);
    const fs::path dir = fresh_dir("errors");
    CHECK(run({"fit", "--no-such-flag", "--out", (dir / "x").string()}) == 2);
    CHECK(run({}) == 2);
    CHECK(run({"fit", "--data", (dir / "missing.csv").string(), "--seed", "1", "--out",
               (dir / "x").string()}) == 1);
    CHECK(run({"simulate", "--scenario", "nope", "--seed", "1", "--out", (dir / "s.csv").string()}) == 2);
    if (!isatty(0)) {
        // Scripted runs must pass --seed.
        CHECK(run({"simulate", "--scenario", "arch1", "--out", (dir / "s.csv").string()}) == 2);
    }
    CHECK(run({"gradcheck", "--model", "igarch", "--n", "80", "--trials", "100"}) == 0);
    CHECK(run({"gradcheck", "--model", "arch", "--n", "40", "--trials", "10", "--seed", "3"}) == 0);
    CHECK(run({"selftest", "--level", "medium"}) == 2);
    set_warnings_enabled(true);
}

TEST_CASE("data errors name the row") {
    const fs::path dir = fresh_dir("prices");
    std::string csv = "date,close\n";
    for (int i = 0; i < 30; ++i) csv += std::to_string(i) + "," + (i == 4 ? "-1" : "10.5") + "\n";
    write_text_file((dir / "p.csv").string(), csv);
    CHECK(run({"fit", "--data", (dir / "p.csv").string(), "--seed", "1", "--out", (dir / "x").string()}) == 1);
}
