#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyak/config.hpp"
#include "hyak/cost.hpp"
#include "hyak/experiment.hpp"
#include "hyak/report_io.hpp"
#include "hyak/validation/checks.hpp"

namespace fs = std::filesystem;
using namespace hyak;

namespace {

constexpr int kExitConfig = 2;

struct Common {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

RunConfig load(const Common& c) {
    return c.config_path.empty() ? default_run_config() : load_config(c.config_path);
}

fs::path prepare_out_dir(const Common& c) {
    fs::path dir = c.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("HYAK_SIM_OUT");
        dir = env && *env ? env : "hyak-run";
    }
    fs::create_directories(dir);
    return dir;
}

std::set<Model> parse_models(const std::string& text) {
    std::set<Model> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto m = parse_model(item);
        if (!m) throw std::invalid_argument("unknown model '" + item + "' (use I, II, III, IV)");
        out.insert(*m);
    }
    if (out.empty()) throw std::invalid_argument("--models is empty");
    return out;
}

void finish(const fs::path& dir, ManifestInfo info, const RunConfig& config) {
    write_schema(dir / "schema.csv");
    info.files.emplace_back("schema.csv");
    {
        std::ofstream out(dir / "config.cfg");
        out << render_config(config);
    }
    info.files.emplace_back("config.cfg");
    info.config_hash = config_hash(config);
    info.finished_utc = utc_timestamp();
    info.files.emplace_back("manifest.json");
    write_manifest(dir / "manifest.json", info);
}

struct SimulateArgs {
    Common common;
    std::optional<int> replicates;
    std::optional<int> workers;
    std::string models;
    bool fixed_truth = false;
    bool dump_truth = false;
    bool dump_samples = false;
    bool dump_fits = false;
    bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a) {
    RunConfig config = load(a.common);
    if (a.common.seed) config.study.seed = *a.common.seed;
    if (a.replicates) config.study.replicates = *a.replicates;
    if (a.workers) config.study.workers = *a.workers;
    if (!a.models.empty()) config.study.models = parse_models(a.models);
    if (a.fixed_truth) config.study.fixed_truth = true;
    config.study.validate();
    const fs::path dir = prepare_out_dir(a.common);

    ManifestInfo info;
    info.command = "simulate";
    info.seed = config.study.seed;
    info.started_utc = utc_timestamp();

    info.metadata = {
        {"truth_mode", config.study.fixed_truth ? "fixed" : "regenerated"},
        {"decomposition", config.study.fixed_truth ? "bias and variance of predictions about the fixed truth"
                                                   : "bias and variance of prediction error about each replicate's truth"},
        {"bias_column", "sqrt of the summed squared cell bias (inferred convention); bias_sq_sum also reported"},
        {"replicates", std::to_string(config.study.replicates)},
    };
    const StudyReport report = run_study(config.study, [&](int done, int total) {
        if (!a.quiet) std::cerr << "\rreplicate " << done << "/" << total << std::flush;
    });
    if (!a.quiet) std::cerr << '\n';

    write_table1(dir / "table1.csv", report);
    write_table2(dir / "table2.csv", report);
    write_replicates(dir / "replicates.csv", report);
    info.files = {"table1.csv", "table2.csv", "replicates.csv"};
    const StudyContext context = prepare_study(config.study);
    for (const auto& f : write_geometry(dir, context)) info.files.push_back(f);
    if (!report.replicates.empty()) {
        write_spatial_effects(dir / "spatial_effects.csv", report.replicates.front().truth);
        info.files.emplace_back("spatial_effects.csv");
    }
    if (a.dump_truth) {
        write_truth(dir / "truth.csv", report);
        info.files.emplace_back("truth.csv");
    }
    if (a.dump_samples) {
        write_samples(dir / "samples.csv", report);
        info.files.emplace_back("samples.csv");
    }
    if (a.dump_fits) {
        write_fits(dir / "fits.csv", dir / "phat.csv", report);
        info.files.emplace_back("fits.csv");
        info.files.emplace_back("phat.csv");
    }

    for (const auto& rec : report.replicates) {
        if (!rec.error.empty()) info.warnings.push_back("replicate " + std::to_string(rec.index + 1) + ": " + rec.error);
    }
    for (const auto& cell : report.cells) {
        const std::string where = std::string(design_name(cell.design)) + " model " + std::string(model_numeral(cell.model));
        if (cell.failures > 0) info.warnings.push_back(where + ": " + std::to_string(cell.failures) + " failed fits");
        if (cell.nonconverged > 0) {
            info.warnings.push_back(where + ": " + std::to_string(cell.nonconverged) + " fits flagged as not converged");
        }
    }
    finish(dir, info, config);

    std::cout << "simulate: " << config.study.replicates << " replicates in " << report.seconds << " s, mean true deaths "
              << report.mean_true_deaths << ", outputs in " << dir.string() << '\n';
    for (const auto& w : info.warnings) std::cout << "warning: " << w << '\n';
    return 0;
}

struct CostArgs {
    Common common;
    std::string census;
    std::optional<int> horizon;
    bool json = false;
};

int cmd_cost(const CostArgs& a) {
    RunConfig config = load(a.common);
    if (!a.census.empty()) {
        const auto scope = parse_census_scope(a.census);
        if (!scope) throw std::invalid_argument("--hyak-census must be none, non_hdss or full");
        config.cost.hyak_census_scope = *scope;
    }
    if (a.horizon) config.cost.horizon_years = *a.horizon;
    config.cost.validate();
    const fs::path dir = prepare_out_dir(a.common);

    ManifestInfo info;
    info.command = "cost";
    info.seed = config.study.seed;
    info.started_utc = utc_timestamp();
    write_cost(dir / "cost.csv", config.cost);
    info.files = {"cost.csv"};
    finish(dir, info, config);

    const auto hyak = cumulative_cost(config.cost, CostSystem::hyak);
    const auto dhs = cumulative_cost(config.cost, CostSystem::dhs_like);
    const auto crossover = crossover_year(config.cost);
    if (a.json) {
        nlohmann::json j;
        j["hyak_census_scope"] = std::string(census_scope_name(config.cost.hyak_census_scope));
        j["horizon_years"] = config.cost.horizon_years;
        j["hyak_cumulative"] = hyak;
        j["dhs_cumulative"] = dhs;
        j["crossover_year"] = crossover ? nlohmann::json(*crossover) : nlohmann::json(nullptr);
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "year-" << config.cost.horizon_years << " cumulative: hyak " << hyak.back() << ", dhs_like "
                  << dhs.back() << '\n';
        if (crossover) {
            std::cout << "crossover_year " << *crossover << '\n';
        } else {
            std::cout << "no crossover within the horizon\n";
        }
    }
    return 0;
}

struct ValidateArgs {
    bool json = false;
    std::string fault;
};

int cmd_validate(const ValidateArgs& a) {
    validation::Fault fault = validation::Fault::none;
    if (a.fault == "icar-unconstrained") {
        fault = validation::Fault::icar_unconstrained;
    } else if (!a.fault.empty()) {
        throw std::invalid_argument("unknown fault '" + a.fault + "'");
    }
    const auto results = validation::run_builtin_suite(fault);
    bool ok = true;
    for (const auto& r : results) ok = ok && r.passed;
    if (a.json) {
        nlohmann::json j;
        j["passed"] = ok;
        j["checks"] = nlohmann::json::array();
        for (const auto& r : results) j["checks"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
        std::cout << j.dump(2) << '\n';
    } else {
        for (const auto& r : results) std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    }
    return ok ? 0 : 1;
}

int cmd_dump_geometry(const Common& c) {
    RunConfig config = load(c);
    if (c.seed) config.study.seed = *c.seed;
    const fs::path dir = prepare_out_dir(c);
    ManifestInfo info;
    info.command = "dump-geometry";
    info.seed = config.study.seed;
    info.started_utc = utc_timestamp();
    const StudyContext context = prepare_study(config.study);
    info.files = write_geometry(dir, context);
    Rng rng = make_rng(config.study.seed, 0, "truth");
    write_spatial_effects(dir / "spatial_effects.csv",
                          generate_population(rng, config.study.params, context.icar, context.x, context.N));
    info.files.emplace_back("spatial_effects.csv");
    finish(dir, info, config);
    std::cout << "dump-geometry: " << context.map.village_count() << " villages written to " << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation lab for survey designs and small-area child mortality estimators"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    auto add_common = [](CLI::App* sub, Common& c, bool with_seed) {
        sub->add_option("--config", c.config_path, "config file (built-in defaults when omitted)");
        sub->add_option("--out-dir", c.out_dir, "run directory (default $HYAK_SIM_OUT or ./hyak-run)");
        if (with_seed) sub->add_option("--seed", c.seed, "study seed override");
    };

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run the replicated design comparison");
    add_common(simulate, sim.common, true);
    simulate->add_option("--replicates", sim.replicates, "number of replicates S")->check(CLI::PositiveNumber);
    simulate->add_option("--workers", sim.workers, "replicate worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--models", sim.models, "comma-separated subset of I,II,III,IV");
    simulate->add_flag("--fixed-truth", sim.fixed_truth, "reuse one truth realization for all replicates");
    simulate->add_flag("--dump-truth", sim.dump_truth, "write truth.csv");
    simulate->add_flag("--dump-samples", sim.dump_samples, "write samples.csv");
    simulate->add_flag("--dump-fits", sim.dump_fits, "write fits.csv and phat.csv");
    simulate->add_flag("--quiet", sim.quiet, "no progress on stderr");

    CostArgs cost_args;
    auto* cost = app.add_subcommand("cost", "cumulative cost of hyak against a DHS-like system");
    add_common(cost, cost_args.common, false);
    cost->add_option("--hyak-census", cost_args.census, "census paid by hyak: none, non_hdss, full");
    cost->add_option("--horizon", cost_args.horizon, "years")->check(CLI::NonNegativeNumber);
    cost->add_flag("--json", cost_args.json, "print the summary as JSON");

    ValidateArgs val;
    auto* validate = app.add_subcommand("validate", "run the built-in oracle checks");
    validate->add_flag("--json", val.json, "machine-readable report");
    validate->add_option("--fault", val.fault, "inject a known defect (icar-unconstrained)");

    Common geo;
    auto* geometry = app.add_subcommand("dump-geometry", "write cells, neighbours and villages");
    add_common(geometry, geo, true);

    Common printed;
    auto* print_config = app.add_subcommand("print-config", "print the effective configuration");
    print_config->add_option("--config", printed.config_path, "config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*cost) return cmd_cost(cost_args);
        if (*validate) return cmd_validate(val);
        if (*geometry) return cmd_dump_geometry(geo);
        if (*print_config) {
            std::cout << render_config(load(printed));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
