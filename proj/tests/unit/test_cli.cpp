#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTool = HYAK_SIM_PATH;
const std::string kSource = HYAK_SOURCE_DIR;

int run(const std::string& args, const fs::path& log = {}) {
    std::string cmd = kTool + " " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hyak-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int lines(const fs::path& p) {
    std::ifstream in(p);
    std::string l;
    int n = 0;
    while (std::getline(in, l)) ++n;
    return n;
}

}  // namespace

TEST_CASE("missing or malformed config exits 2 with a line-anchored message") {
    const fs::path dir = fresh("badcfg");
    CHECK(run("simulate --config /nonexistent.cfg --out-dir " + dir.string()) == 2);
    std::ofstream(dir / "bad.cfg") << "study.replicates = 3\nstudy.bogus = 1\n";
    CHECK(run("simulate --config " + (dir / "bad.cfg").string() + " --out-dir " + dir.string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("bad.cfg:2") != std::string::npos);
    CHECK(run("simulate --models I,VII --out-dir " + dir.string()) == 2);
    CHECK(run("frobnicate") == 2);
}

TEST_CASE("simulate with the shipped config: tables, manifest, schema") {
    const fs::path dir = fresh("sim");
    const auto start = std::chrono::steady_clock::now();
    REQUIRE(run("simulate --quiet --config " + kSource + "/config/default.cfg --replicates 5 --dump-truth "
                "--dump-samples --dump-fits --out-dir " + dir.string()) == 0);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 60.0);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seed"] == 20120928);
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["metadata"]["truth_mode"] == "regenerated");
    for (const auto& f : manifest["files"]) CHECK(fs::exists(dir / f.get<std::string>()));
    for (const char* f : {"table1.csv", "table2.csv", "schema.csv", "truth.csv", "samples.csv", "fits.csv",
                          "phat.csv", "cells.csv", "neighbors.csv", "villages.csv"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK(lines(dir / "table1.csv") == 9);
    CHECK(lines(dir / "truth.csv") == 1 + 5 * 80);
    CHECK(slurp(dir / "truth.csv").rfind("replicate,village,stratum,N,x1,x2,eps,S,p_true,Y", 0) == 0);
    CHECK(slurp(dir / "table1.csv").find("cluster,IV,") != std::string::npos);
}

TEST_CASE("model subset and byte-identical reruns") {
    const fs::path a = fresh("models-a");
    const fs::path b = fresh("models-b");
    REQUIRE(run("simulate --quiet --replicates 4 --models I,II --out-dir " + a.string()) == 0);
    REQUIRE(run("simulate --quiet --replicates 4 --models I,II --workers 2 --out-dir " + b.string()) == 0);
    const std::string t1 = slurp(a / "table1.csv");
    CHECK(lines(a / "table1.csv") == 5);
    CHECK(t1.find(",III,") == std::string::npos);
    for (const char* f : {"table1.csv", "table2.csv", "replicates.csv", "cells.csv", "neighbors.csv", "villages.csv"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("out-dir defaults to HYAK_SIM_OUT") {
    const fs::path dir = fresh("env");
    const std::string cmd = "HYAK_SIM_OUT=" + dir.string() + " " + kTool + " cost >/dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "cost.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("cost command") {
    const fs::path dir = fresh("cost");
    REQUIRE(run("cost --out-dir " + dir.string()) == 0);
    CHECK(lines(dir / "cost.csv") == 7);
    CHECK(slurp(dir / "cost.csv").find("5,1600000.00,2640000.00") != std::string::npos);

    REQUIRE(run("cost --json --out-dir " + dir.string(), dir / "full.json") == 0);
    REQUIRE(run("cost --json --hyak-census none --out-dir " + dir.string(), dir / "none.json") == 0);
    const double full = nlohmann::json::parse(slurp(dir / "full.json"))["crossover_year"];
    const double none = nlohmann::json::parse(slurp(dir / "none.json"))["crossover_year"];
    CHECK(none < full);

    REQUIRE(run("cost --horizon 0 --out-dir " + dir.string()) == 0);
    CHECK(lines(dir / "cost.csv") == 2);
    CHECK(run("cost --hyak-census partial --out-dir " + dir.string()) == 2);
}

TEST_CASE("validate command and fault injection") {
    const fs::path dir = fresh("validate");
    CHECK(run("validate", dir / "ok.txt") == 0);
    CHECK(run("validate --fault icar-unconstrained", dir / "fault.txt") == 1);
    CHECK(slurp(dir / "fault.txt").find("FAIL icar-sum-to-zero") != std::string::npos);
    CHECK(run("validate --json", dir / "report.json") == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["passed"] == true);
    CHECK(j["checks"].size() >= 5);
}

TEST_CASE("dump-geometry") {
    const fs::path dir = fresh("geometry");
    REQUIRE(run("dump-geometry --out-dir " + dir.string()) == 0);
    CHECK(slurp(dir / "cells.csv").rfind("village_id,vertex_index,x,y", 0) == 0);
    CHECK(slurp(dir / "neighbors.csv").rfind("village_id,neighbor_id", 0) == 0);
    CHECK(lines(dir / "villages.csv") == 21);
    CHECK(fs::exists(dir / "spatial_effects.csv"));
}
