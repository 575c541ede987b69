#include "doctest.h"

#include <fstream>
#include <sstream>

#include "hyak/config.hpp"

using namespace hyak;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text, "test.cfg");
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST_CASE("rendered configuration parses back to itself") {
    const RunConfig def = default_run_config();
    const std::string text = render_config(def);
    const RunConfig back = parse_config(text);
    CHECK(render_config(back) == text);
    CHECK(config_hash(back) == config_hash(def));
    CHECK(config_hash(def).size() == 16);
}

TEST_CASE("shipped default.cfg holds the default scenario") {
    const RunConfig shipped = load_config(HYAK_SOURCE_DIR "/config/default.cfg");
    CHECK(render_config(shipped) == render_config(default_run_config()));
    CHECK(shipped.study.replicates == 100);
    CHECK(shipped.study.params.sigma2_s == 0.48);
    CHECK(shipped.study.centroids.size() == 20);
    CHECK(shipped.cost.hdss_startup == 325000.0);
}

TEST_CASE("overrides and comments") {
    const RunConfig c = parse_config(
        "# comment\n"
        "study.replicates = 7   # trailing\n"
        "\n"
        "params.sigma2_s = 0.3\n"
        "params.baseline_risk = 0.1, 0.2, 0.3, 0.4\n"
        "study.models = I, III\n"
        "priors.convention = shape_scale\n"
        "priors.b = 2\n"
        "cost.hyak_census_scope = none\n");
    CHECK(c.study.replicates == 7);
    CHECK(c.study.params.sigma2_s == 0.3);
    CHECK(expit(c.study.params.gamma(3)) == doctest::Approx(0.4));
    CHECK(c.study.models == std::set<Model>{Model::naive, Model::covariates});
    CHECK(c.study.priors.rate() == 0.5);
    CHECK(c.cost.hyak_census_scope == CensusScope::none);
}

TEST_CASE("centroids from the config") {
    const RunConfig c = parse_config(
        "population.village_count = 6\n"
        "geometry.centroid.01 = 0, 0\n"
        "geometry.centroid.02 = 1.5, 0\n"
        "geometry.centroid.03 = 0.5, 2\n"
        "geometry.centroid.04 = 3, 1\n"
        "geometry.centroid.05 = 2, 3\n"
        "geometry.centroid.6 = 4, 4\n");
    REQUIRE(c.study.centroids.size() == 6);
    CHECK(c.study.centroids[1] == Point(1.5, 0.0));
    CHECK(error_line("population.village_count = 6\n"
                     "geometry.centroid.01 = 0, 0\n"
                     "geometry.centroid.03 = 0.5, 2\n") == 3);
    CHECK(error_line("geometry.centroid.01 = 0, 0\n"
                     "geometry.centroid.1 = 0.5, 2\n") == 2);
    CHECK(error_line("population.village_count = 7\n"
                     "geometry.centroid.01 = 0, 0\n") > 0);
}

TEST_CASE("malformed configuration errors carry the line number") {
    CHECK(error_line("study.replicates = 5\nstudy.replicatez = 3\n") == 2);
    CHECK(error_line("study.replicates = five\n") == 1);
    CHECK(error_line("\n\nno equals sign here\n") == 3);
    CHECK(error_line("study.seed = 1\nstudy.seed = 2\n") == 2);
    CHECK(error_line("params.baseline_risk = 0.1, 0.2\n") == 1);
    CHECK(error_line("params.baseline_risk = 0.1, 0.2, 1.3, 0.1\n") == 1);
    CHECK(error_line("study.models = I, V\n") == 1);
    CHECK(error_line("geometry.centroid.01 = 1\n") == 1);
    try {
        parse_config("x = 1\n", "bad.cfg");
        FAIL("accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:1") != std::string::npos);
    }
}

TEST_CASE("missing config file") {
    CHECK_THROWS_AS(load_config("/nonexistent/hyak.cfg"), ConfigError);
}
