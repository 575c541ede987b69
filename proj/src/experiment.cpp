#include "hyak/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace hyak {

void StudyConfig::validate() const {
    if (replicates < 1 || workers < 1 || village_count < 2 || children_per_cell < 1 ||
        total_sample < 1 || hyak_budget < 0 || cluster_villages < 1 || hdss_villages != 3) {
        throw std::invalid_argument(
            "study counts must be positive (and exactly 3 surveillance villages)");
    }
    if (cluster_villages > village_count) {
        throw std::invalid_argument("more cluster villages than villages");
    }
    if (total_sample % (cluster_villages * kStrata) != 0) {
        throw std::invalid_argument("total_sample must split evenly over cluster villages and strata");
    }
    if (cluster_per_stratum() > children_per_cell) {
        throw std::invalid_argument("cluster allocation exceeds children per stratum");
    }
    if (hdss_villages * kStrata * children_per_cell + hyak_budget != total_sample) {
        throw std::invalid_argument(
            "total_sample must equal the enumerated surveillance population plus hyak_budget");
    }
    if (!centroids.empty() && static_cast<int>(centroids.size()) != village_count) {
        throw std::invalid_argument("number of centroids differs from village_count");
    }
    if (models.empty()) throw std::invalid_argument("no models requested");
    params.validate();
    priors.validate();
}

bool model_applicable(DesignKind design, Model model) {
    return !(design == DesignKind::cluster && model == Model::covariates_space);
}

StudyContext prepare_study(const StudyConfig& config) {
    config.validate();
    const std::vector<Point> centroids =
        config.centroids.empty() ? generate_layout(config.layout_seed, config.village_count)
                                 : config.centroids;
    VillageMap map = build_neighbor_graph(centroids, padded_bounding_box(centroids, config.box_padding));

    Rng covariate_rng = make_rng(config.seed, 0, "covariates");
    Eigen::MatrixXd x = gen_covariates(covariate_rng, config.village_count,
                                       static_cast<int>(config.params.beta.size()));
    Rng hdss_rng = make_rng(config.seed, 0, "hdss");
    map.hdss_ids = select_hdss_villages(x, hdss_rng);
    std::sort(map.hdss_ids.begin(), map.hdss_ids.end());

    CountMatrix N = CountMatrix::Constant(config.village_count, kStrata, config.children_per_cell);
    IcarSampler icar(map.neighbors);

    std::optional<PopulationFrame> fixed;
    if (config.fixed_truth) {
        Rng truth_rng = make_rng(config.seed, 0, "fixed-truth");
        fixed = generate_population(truth_rng, config.params, icar, x, N);
    }
    return StudyContext{std::move(map), std::move(x), std::move(N), std::move(icar), std::move(fixed)};
}

const DesignOutcome* ReplicateRecord::find(DesignKind kind) const {
    for (const auto& d : designs) {
        if (d.kind == kind) return &d;
    }
    return nullptr;
}

const ModelOutcome* DesignOutcome::find(Model model) const {
    for (const auto& m : models) {
        if (m.model == model) return &m;
    }
    return nullptr;
}

namespace {

FitResult fit_model(Model model, const SampleData& sample, const StudyConfig& config,
                    const StudyContext& context, std::uint64_t mcmc_seed) {
    switch (model) {
        case Model::naive: return fit_naive(sample);
        case Model::age_sex: return fit_age_sex(sample);
        case Model::covariates: return fit_logistic_mle(sample, context.x);
        case Model::covariates_space: {
            McmcOptions options = config.mcmc;
            options.seed = mcmc_seed;
            return fit_spatial_bayes(sample, context.x, context.map, config.priors, options);
        }
    }
    throw std::logic_error("unknown model");
}

void fit_all(DesignOutcome& outcome, const StudyConfig& config, const StudyContext& context,
             int index) {
    for (const Model model : config.models) {
        if (!model_applicable(outcome.kind, model)) continue;
        ModelOutcome result;
        result.model = model;
        try {
            const std::string tag = "mcmc-" + std::string(design_name(outcome.kind));
            result.fit = fit_model(model, outcome.sample, config, context,
                                   stream_seed(config.seed, static_cast<std::uint64_t>(index), tag));
            result.predicted_deaths = predict_deaths(outcome.sample, context.N, result.fit.p_hat);
            result.ok = true;
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        outcome.models.push_back(std::move(result));
    }
}

}  // namespace

ReplicateRecord run_replicate(const StudyConfig& config, const StudyContext& context, int index) {
    const auto rep = static_cast<std::uint64_t>(index);
    ReplicateRecord record;
    record.index = index;
    if (context.fixed_truth) {
        record.truth = *context.fixed_truth;
    } else {
        Rng truth_rng = make_rng(config.seed, rep, "truth");
        record.truth = generate_population(truth_rng, config.params, context.icar, context.x, context.N);
    }
    const CountMatrix& Y = record.truth.Y;

    try {
        DesignOutcome cluster;
        cluster.kind = DesignKind::cluster;
        Rng design_rng = make_rng(config.seed, rep, "cluster-design");
        const SampleDesign design = cluster_sample(
            design_rng, context.N, {config.cluster_villages, config.cluster_per_stratum()});
        Rng outcome_rng = make_rng(config.seed, rep, "cluster-outcomes");
        cluster.sample = draw_sample_outcomes(outcome_rng, design, context.N, Y);
        fit_all(cluster, config, context, index);
        record.designs.push_back(std::move(cluster));

        DesignOutcome hyak;
        hyak.kind = DesignKind::hyak;
        const SampleData surveillance = census_of(context.map.hdss_ids, context.N, Y);
        record.hdss_fit = fit_logistic_mle(surveillance, context.x);
        const SampleDesign informed =
            hyak_design(context.N, context.map.hdss_ids, *record.hdss_fit, config.hyak_budget);
        Rng hyak_rng = make_rng(config.seed, rep, "hyak-outcomes");
        hyak.sample = draw_sample_outcomes(hyak_rng, informed, context.N, Y);
        fit_all(hyak, config, context, index);
        record.designs.push_back(std::move(hyak));
    } catch (const std::exception& e) {
        record.error = e.what();
    }
    return record;
}

const ReportCell* StudyReport::find(DesignKind design, Model model) const {
    for (const auto& c : cells) {
        if (c.design == design && c.model == model) return &c;
    }
    return nullptr;
}

std::vector<double> StudyReport::observed_deaths(DesignKind design) const {
    std::vector<double> out;
    for (const auto& r : replicates) {
        if (const auto* d = r.find(design)) out.push_back(d->sample.observed_deaths());
    }
    return out;
}

StudyReport run_study(const StudyConfig& config, const ProgressFn& progress) {
    const auto started = std::chrono::steady_clock::now();
    const StudyContext context = prepare_study(config);

    StudyReport report;
    report.config = config;
    report.replicates.resize(static_cast<std::size_t>(config.replicates));

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (int i = next++; i < config.replicates; i = next++) {
            report.replicates[i] = run_replicate(config, context, i);
            const int finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, config.replicates);
            }
        }
    };
    const int threads = std::min(config.workers, config.replicates);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double total_deaths = 0.0;
    for (const auto& r : report.replicates) total_deaths += r.truth.total_deaths();
    report.mean_true_deaths = total_deaths / config.replicates;

    for (const DesignKind design : {DesignKind::cluster, DesignKind::hyak}) {
        const std::vector<double> deaths = report.observed_deaths(design);
        double mean_deaths = 0.0;
        for (const double d : deaths) mean_deaths += d;
        if (!deaths.empty()) mean_deaths /= static_cast<double>(deaths.size());

        for (const Model model : config.models) {
            ReportCell cell;
            cell.design = design;
            cell.model = model;
            if (model_applicable(design, model)) {
                std::vector<CellMatrix> predictions;
                std::vector<CellMatrix> truths;
                for (const auto& r : report.replicates) {
                    const DesignOutcome* d = r.find(design);
                    const ModelOutcome* m = d ? d->find(model) : nullptr;
                    if (m == nullptr || !m->ok) {
                        ++cell.failures;
                        continue;
                    }
                    if (!m->fit.diagnostics.converged) ++cell.nonconverged;
                    predictions.push_back(m->predicted_deaths);
                    truths.push_back(r.truth.Y.cast<double>());
                }
                if (!predictions.empty()) {
                    cell.metrics = mse_decomposition(predictions, truths);
                    cell.metrics->deaths_captured = mean_deaths;
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace hyak
