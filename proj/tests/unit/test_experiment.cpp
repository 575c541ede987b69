#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyak/experiment.hpp"
#include "hyak/report_io.hpp"

using namespace hyak;

namespace {

StudyConfig quick(int replicates, std::set<Model> models = {Model::naive, Model::age_sex, Model::covariates}) {
    StudyConfig c;
    c.replicates = replicates;
    c.models = std::move(models);
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("study configuration validation") {
    StudyConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.cluster_per_stratum() == 260);
    c.hyak_budget = 999;
    CHECK_THROWS(c.validate());
    c = StudyConfig{};
    c.models.clear();
    CHECK_THROWS(c.validate());
    c = StudyConfig{};
    c.replicates = 0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("replicates are deterministic and record 4200 surveillance children") {
    const StudyConfig c = quick(1);
    const StudyContext ctx = prepare_study(c);
    CHECK(ctx.map.hdss_ids.size() == 3);
    const ReplicateRecord a = run_replicate(c, ctx, 3);
    const ReplicateRecord b = run_replicate(c, ctx, 3);
    CHECK(a.error.empty());
    CHECK(a.truth.Y == b.truth.Y);
    REQUIRE(a.designs.size() == 2);
    for (std::size_t d = 0; d < 2; ++d) {
        CHECK(a.designs[d].sample.y == b.designs[d].sample.y);
        for (std::size_t m = 0; m < a.designs[d].models.size(); ++m) {
            CHECK(a.designs[d].models[m].predicted_deaths == b.designs[d].models[m].predicted_deaths);
        }
    }
    const DesignOutcome* hyak = a.find(DesignKind::hyak);
    REQUIRE(hyak != nullptr);
    int enumerated = 0;
    for (const int i : ctx.map.hdss_ids) enumerated += hyak->sample.design.n.row(i).sum();
    CHECK(enumerated == 4200);
    CHECK(hyak->sample.design.total_sample() == 5200);
    CHECK(a.find(DesignKind::cluster)->sample.design.total_sample() == 5200);
    CHECK(run_replicate(c, ctx, 4).truth.Y != a.truth.Y);
}

TEST_CASE("model list does not perturb the sampling draws") {
    const StudyConfig a = quick(1, {Model::naive});
    const StudyConfig b = quick(1);
    const ReplicateRecord ra = run_replicate(a, prepare_study(a), 0);
    const ReplicateRecord rb = run_replicate(b, prepare_study(b), 0);
    CHECK(ra.designs[0].sample.y == rb.designs[0].sample.y);
    CHECK(ra.designs[1].sample.y == rb.designs[1].sample.y);
    CHECK(ra.designs[1].models.size() == 1);
}

TEST_CASE("only requested models appear") {
    const StudyReport r = run_study(quick(3, {Model::naive}));
    for (const auto& cell : r.cells) CHECK(cell.model == Model::naive);
    CHECK(r.cells.size() == 2);
}

TEST_CASE("one replicate gives zero variance") {
    const StudyReport r = run_study(quick(1));
    for (const auto& cell : r.cells) {
        REQUIRE(cell.metrics.has_value());
        CHECK(cell.metrics->var_sum == 0.0);
    }
}

TEST_CASE("worker count does not change results") {
    StudyConfig c = quick(12);
    const StudyReport one = run_study(c);
    c.workers = 3;
    const StudyReport three = run_study(c);
    REQUIRE(one.cells.size() == three.cells.size());
    for (std::size_t k = 0; k < one.cells.size(); ++k) {
        CHECK(one.cells[k].metrics->mse == three.cells[k].metrics->mse);
        CHECK(one.cells[k].metrics->deaths_captured == three.cells[k].metrics->deaths_captured);
    }
}

TEST_CASE("fixed truth reuses one realization") {
    StudyConfig c = quick(4);
    c.fixed_truth = true;
    const StudyReport r = run_study(c);
    for (const auto& rec : r.replicates) CHECK(rec.truth.Y == r.replicates[0].truth.Y);
    CHECK(r.replicates[0].designs[0].sample.y != r.replicates[1].designs[0].sample.y);
}

TEST_CASE("doubling the replicates moves mean deaths within Monte Carlo error") {
    const StudyReport small = run_study(quick(100, {Model::naive}));
    const StudyReport large = run_study(quick(200, {Model::naive}));
    for (const DesignKind d : {DesignKind::cluster, DesignKind::hyak}) {
        const auto a = small.observed_deaths(d);
        const auto b = large.observed_deaths(d);
        double mean = 0.0, sq = 0.0;
        for (const double v : b) mean += v;
        mean /= b.size();
        for (const double v : b) sq += (v - mean) * (v - mean);
        const double se = std::sqrt(sq / (b.size() - 1) / a.size());
        double mean_a = 0.0;
        for (const double v : a) mean_a += v;
        mean_a /= a.size();
        CHECK(std::abs(mean_a - mean) < 5.0 * se);
    }
}

TEST_CASE("the spatial model is not applicable to cluster samples") {
    CHECK_FALSE(model_applicable(DesignKind::cluster, Model::covariates_space));
    CHECK(model_applicable(DesignKind::hyak, Model::covariates_space));
    StudyConfig c = quick(1, {Model::naive, Model::covariates_space});
    c.mcmc.iterations = 1000;
    c.mcmc.burn_in = 500;
    c.mcmc.chains = 2;
    const StudyReport r = run_study(c);
    const ReportCell* cell = r.find(DesignKind::cluster, Model::covariates_space);
    REQUIRE(cell != nullptr);
    CHECK_FALSE(cell->metrics.has_value());
    CHECK(r.find(DesignKind::hyak, Model::covariates_space)->metrics.has_value());

    const auto dir = std::filesystem::temp_directory_path() / "hyak-unit-table1";
    std::filesystem::create_directories(dir);
    write_table1(dir / "table1.csv", r);
    write_table2(dir / "table2.csv", r);
    const std::string t1 = slurp(dir / "table1.csv");
    CHECK(t1.find("cluster,IV,") != std::string::npos);
    CHECK(t1.find("-na-,-na-,-na-") != std::string::npos);
    CHECK(slurp(dir / "table2.csv").find("difference,IV,") != std::string::npos);
}
