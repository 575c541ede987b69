#pragma once

// End-to-end study: geometry and covariates once, then S replicates of
// truth -> both designs -> all requested models, aggregated into metrics.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyak/estimators.hpp"
#include "hyak/geometry.hpp"
#include "hyak/metrics.hpp"
#include "hyak/sampling.hpp"
#include "hyak/synth.hpp"

namespace hyak {

struct StudyConfig {
    std::uint64_t seed = 20120928;
    int replicates = 100;
    int workers = 1;
    int village_count = 20;
    int children_per_cell = 350;
    int total_sample = 5200;
    int hyak_budget = 1000;
    int cluster_villages = 5;
    int hdss_villages = 3;
    MortalityParams params = MortalityParams::defaults();
    PriorSpec priors;
    McmcOptions mcmc;
    /// Reuse one truth realization (eps, S, Y) for every replicate.
    bool fixed_truth = false;
    std::set<Model> models{kAllModels.begin(), kAllModels.end()};
    /// Explicit centroids; empty means generate_layout(layout_seed).
    std::vector<Point> centroids;
    std::uint64_t layout_seed = kDefaultLayoutSeed;
    double box_padding = 0.15;

    /// Children per stratum in each cluster-sampled village.
    int cluster_per_stratum() const { return total_sample / (cluster_villages * kStrata); }
    void validate() const;
};

/// Replicate-invariant pieces of a study.
struct StudyContext {
    VillageMap map;
    Eigen::MatrixXd x;
    CountMatrix N;
    IcarSampler icar;
    std::optional<PopulationFrame> fixed_truth;
};

StudyContext prepare_study(const StudyConfig& config);

struct ModelOutcome {
    Model model = Model::naive;
    bool ok = false;
    std::string error;
    CellMatrix predicted_deaths;
    FitResult fit;
};

struct DesignOutcome {
    DesignKind kind = DesignKind::cluster;
    SampleData sample;
    std::vector<ModelOutcome> models;

    const ModelOutcome* find(Model model) const;
};

struct ReplicateRecord {
    int index = 0;
    PopulationFrame truth;
    std::optional<FitResult> hdss_fit;
    std::vector<DesignOutcome> designs;  // cluster then hyak
    std::string error;                   // non-empty when a design could not be drawn

    const DesignOutcome* find(DesignKind kind) const;
};

/// Deterministic in (config.seed, index): streams are keyed by purpose, so
/// the set of models fitted never changes the sampling draws.
ReplicateRecord run_replicate(const StudyConfig& config, const StudyContext& context, int index);

struct ReportCell {
    DesignKind design = DesignKind::cluster;
    Model model = Model::naive;
    /// Empty when the model cannot be fitted under the design ("-na-").
    std::optional<MetricsReport> metrics;
    int failures = 0;
    int nonconverged = 0;
};

struct StudyReport {
    StudyConfig config;
    std::vector<ReportCell> cells;
    std::vector<ReplicateRecord> replicates;
    double mean_true_deaths = 0.0;
    double seconds = 0.0;

    const ReportCell* find(DesignKind design, Model model) const;
    /// Observed deaths per replicate for one design (replicate order).
    std::vector<double> observed_deaths(DesignKind design) const;
};

using ProgressFn = std::function<void(int done, int total)>;

StudyReport run_study(const StudyConfig& config, const ProgressFn& progress = {});

/// Model IV needs data from every village, which a cluster design never has.
bool model_applicable(DesignKind design, Model model);

}  // namespace hyak
