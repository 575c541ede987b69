#include "hyak/report_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace hyak {

namespace {

std::string fixed(double value, int decimals) {
    if (std::isnan(value)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string prob(double v) { return fixed(v, 6); }
std::string metric(double v) { return fixed(v, 4); }
std::string money(double v) { return fixed(v, 2); }

class CsvWriter {
public:
    CsvWriter(const fs::path& path, std::initializer_list<std::string_view> header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        row(header);
    }

    template <typename Range>
    void row(const Range& fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) out_ << ',';
            out_ << f;
            first = false;
        }
        out_ << '\n';
    }

    void row(std::initializer_list<std::string_view> fields) { row<std::initializer_list<std::string_view>>(fields); }

    void row(std::initializer_list<std::string> fields) { row<std::initializer_list<std::string>>(fields); }

private:
    std::ofstream out_;
};

std::string id(Eigen::Index zero_based) { return std::to_string(zero_based + 1); }

}  // namespace

void write_table1(const fs::path& path, const StudyReport& report) {
    CsvWriter csv(path, {"sampling", "model", "deaths", "bias", "variance", "mse", "bias_sq_sum",
                         "replicates", "failures", "nonconverged"});
    for (const auto& cell : report.cells) {
        const std::string design(design_name(cell.design));
        const std::string model(model_numeral(cell.model));
        if (!cell.metrics) {
            // deaths are a property of the design, so they are still reported
            const auto deaths = report.observed_deaths(cell.design);
            double mean = 0.0;
            for (const double d : deaths) mean += d;
            mean = deaths.empty() ? std::nan("") : mean / static_cast<double>(deaths.size());
            csv.row({design, model, metric(mean), std::string("-na-"), std::string("-na-"), std::string("-na-"),
                     std::string("-na-"), std::string("0"), std::to_string(cell.failures),
                     std::to_string(cell.nonconverged)});
            continue;
        }
        const MetricsReport& m = *cell.metrics;
        csv.row({design, model, metric(m.deaths_captured), metric(m.bias_rms), metric(m.var_sum),
                 metric(m.mse), metric(m.bias_sq_sum), std::to_string(m.replicates),
                 std::to_string(cell.failures), std::to_string(cell.nonconverged)});
    }
}

void write_table2(const fs::path& path, const StudyReport& report) {
    CsvWriter csv(path, {"comparison", "model", "deaths", "bias", "variance", "mse"});
    std::vector<std::vector<std::string>> diffs;
    std::vector<std::vector<std::string>> props;
    for (const Model model : report.config.models) {
        const ReportCell* a = report.find(DesignKind::cluster, model);
        const ReportCell* b = report.find(DesignKind::hyak, model);
        const std::string numeral(model_numeral(model));
        std::vector<std::string> d{"difference", numeral};
        std::vector<std::string> p{"proportional", numeral};
        if (a && b && a->metrics && b->metrics) {
            const Comparison cmp = comparison_table(*a->metrics, *b->metrics);
            for (std::size_t k = 0; k < cmp.difference.size(); ++k) {
                d.push_back(metric(cmp.difference[k]));
                p.push_back(cmp.proportional[k] ? metric(*cmp.proportional[k]) : "undefined");
            }
        } else {
            // the deaths comparison only needs both designs
            const auto da = report.observed_deaths(DesignKind::cluster);
            const auto db = report.observed_deaths(DesignKind::hyak);
            double ma = 0.0;
            double mb = 0.0;
            for (const double v : da) ma += v;
            for (const double v : db) mb += v;
            ma /= std::max<std::size_t>(1, da.size());
            mb /= std::max<std::size_t>(1, db.size());
            d.push_back(metric(mb - ma));
            p.push_back(ma != 0.0 ? metric((mb - ma) / ma) : "undefined");
            for (int k = 0; k < 3; ++k) {
                d.emplace_back("-na-");
                p.emplace_back("-na-");
            }
        }
        diffs.push_back(std::move(d));
        props.push_back(std::move(p));
    }
    for (const auto& r : diffs) csv.row(r);
    for (const auto& r : props) csv.row(r);
}

void write_replicates(const fs::path& path, const StudyReport& report) {
    CsvWriter csv(path, {"replicate", "design", "model", "observed_deaths", "sampled_children",
                         "true_deaths", "predicted_deaths", "squared_error", "ok", "converged", "note"});
    for (const auto& rec : report.replicates) {
        const CellMatrix truth = rec.truth.Y.cast<double>();
        for (const auto& design : rec.designs) {
            for (const auto& m : design.models) {
                const std::string note = m.ok ? m.fit.diagnostics.note : m.error;
                std::string quoted = "\"";
                for (const char ch : note) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                quoted += '"';
                csv.row({std::to_string(rec.index + 1), std::string(design_name(design.kind)),
                         std::string(model_numeral(m.model)), std::to_string(design.sample.observed_deaths()),
                         std::to_string(design.sample.design.total_sample()), std::to_string(rec.truth.total_deaths()),
                         m.ok ? metric(m.predicted_deaths.sum()) : std::string("NA"),
                         m.ok ? metric((m.predicted_deaths - truth).squaredNorm()) : std::string("NA"),
                         std::string(m.ok ? "true" : "false"),
                         std::string(m.ok && m.fit.diagnostics.converged ? "true" : "false"), quoted});
            }
        }
    }
}

void write_truth(const fs::path& path, const StudyReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const Eigen::Index covariates = report.replicates.empty() ? 0 : report.replicates.front().truth.x.cols();
    out << "replicate,village,stratum,N";
    for (Eigen::Index c = 0; c < covariates; ++c) out << ",x" << c + 1;
    out << ",eps,S,p_true,Y\n";
    for (const auto& rec : report.replicates) {
        const PopulationFrame& t = rec.truth;
        for (Eigen::Index i = 0; i < t.N.rows(); ++i) {
            for (int j = 0; j < kStrata; ++j) {
                out << rec.index + 1 << ',' << id(i) << ',' << j + 1 << ',' << t.N(i, j);
                for (Eigen::Index c = 0; c < covariates; ++c) out << ',' << prob(t.x(i, c));
                out << ',' << prob(t.eps(i)) << ',' << prob(t.S(i)) << ',' << prob(t.p_true(i, j)) << ','
                    << t.Y(i, j) << '\n';
            }
        }
    }
}

void write_samples(const fs::path& path, const StudyReport& report) {
    CsvWriter csv(path, {"replicate", "design", "village", "stratum", "n", "y"});
    for (const auto& rec : report.replicates) {
        for (const auto& design : rec.designs) {
            const auto& s = design.sample;
            for (Eigen::Index i = 0; i < s.y.rows(); ++i) {
                for (int j = 0; j < kStrata; ++j) {
                    csv.row({std::to_string(rec.index + 1), std::string(design_name(design.kind)), id(i),
                             std::to_string(j + 1), std::to_string(s.design.n(i, j)), std::to_string(s.y(i, j))});
                }
            }
        }
    }
}

void write_fits(const fs::path& path, const fs::path& phat_path, const StudyReport& report) {
    CsvWriter csv(path, {"replicate", "design", "model", "parameter", "estimate", "sd", "diagnostics"});
    CsvWriter phat(phat_path, {"replicate", "design", "model", "village", "stratum", "p_hat", "p_true"});
    for (const auto& rec : report.replicates) {
        for (const auto& design : rec.designs) {
            for (const auto& m : design.models) {
                if (!m.ok) continue;
                const FitResult& f = m.fit;
                const std::string r = std::to_string(rec.index + 1);
                const std::string d(design_name(design.kind));
                const std::string model(model_numeral(m.model));
                char diag[160];
                std::snprintf(diag, sizeof diag, "converged=%d;iterations=%d;max_rhat=%.4f;min_ess=%.1f",
                              f.diagnostics.converged ? 1 : 0, f.diagnostics.iterations, f.diagnostics.max_rhat,
                              f.diagnostics.min_ess);
                auto param = [&](const std::string& name, double est, double sd) {
                    csv.row({r, d, model, name, prob(est), prob(sd), std::string(diag)});
                };
                for (Eigen::Index c = 0; c < f.beta.size(); ++c) {
                    param("beta" + std::to_string(c + 1), f.beta(c), f.beta_sd(c));
                }
                if (m.model == Model::covariates || m.model == Model::covariates_space) {
                    for (int j = 0; j < kStrata; ++j) param("gamma" + std::to_string(j + 1), f.gamma(j), f.gamma_sd(j));
                } else {
                    for (int j = 0; j < kStrata; ++j) {
                        param("p" + std::to_string(j + 1), f.p_hat(0, j), std::nan(""));
                    }
                }
                if (f.sigma2_eps) param("sigma2_eps", f.sigma2_eps->mean, f.sigma2_eps->sd);
                if (f.sigma2_s) param("sigma2_s", f.sigma2_s->mean, f.sigma2_s->sd);
                for (Eigen::Index i = 0; i < f.p_hat.rows(); ++i) {
                    for (int j = 0; j < kStrata; ++j) {
                        phat.row({r, d, model, id(i), std::to_string(j + 1), prob(f.p_hat(i, j)),
                                  prob(rec.truth.p_true(i, j))});
                    }
                }
            }
        }
    }
}

std::vector<fs::path> write_geometry(const fs::path& dir, const StudyContext& context) {
    const VillageMap& map = context.map;
    {
        CsvWriter csv(dir / "cells.csv", {"village_id", "vertex_index", "x", "y"});
        for (std::size_t i = 0; i < map.cells.size(); ++i) {
            for (std::size_t k = 0; k < map.cells[i].size(); ++k) {
                csv.row({id(static_cast<Eigen::Index>(i)), std::to_string(k + 1), prob(map.cells[i][k].x()),
                         prob(map.cells[i][k].y())});
            }
        }
    }
    {
        CsvWriter csv(dir / "neighbors.csv", {"village_id", "neighbor_id"});
        for (std::size_t i = 0; i < map.neighbors.size(); ++i) {
            for (const int j : map.neighbors[i]) csv.row({id(static_cast<Eigen::Index>(i)), id(j)});
        }
    }
    {
        std::ofstream out(dir / "villages.csv");
        out << "village_id,x,y,hdss";
        for (Eigen::Index c = 0; c < context.x.cols(); ++c) out << ",x" << c + 1;
        out << '\n';
        for (int i = 0; i < map.village_count(); ++i) {
            out << id(i) << ',' << prob(map.centroids[i].x()) << ',' << prob(map.centroids[i].y()) << ','
                << (map.is_hdss(i) ? 1 : 0);
            for (Eigen::Index c = 0; c < context.x.cols(); ++c) out << ',' << prob(context.x(i, c));
            out << '\n';
        }
    }
    return {"cells.csv", "neighbors.csv", "villages.csv"};
}

void write_spatial_effects(const fs::path& path, const PopulationFrame& truth) {
    CsvWriter csv(path, {"village_id", "eps", "S", "p1", "p2", "p3", "p4"});
    for (Eigen::Index i = 0; i < truth.N.rows(); ++i) {
        csv.row({id(i), prob(truth.eps(i)), prob(truth.S(i)), prob(truth.p_true(i, 0)), prob(truth.p_true(i, 1)),
                 prob(truth.p_true(i, 2)), prob(truth.p_true(i, 3))});
    }
}

void write_cost(const fs::path& path, const CostParams& params) {
    const auto hyak = cumulative_cost(params, CostSystem::hyak);
    const auto dhs = cumulative_cost(params, CostSystem::dhs_like);
    CsvWriter csv(path, {"year", "hyak_cumulative", "dhs_cumulative"});
    for (std::size_t t = 0; t < hyak.size(); ++t) csv.row({std::to_string(t), money(hyak[t]), money(dhs[t])});
}

void write_schema(const fs::path& path) {
    CsvWriter csv(path, {"file", "column", "type", "decimals", "description"});
    const std::vector<std::array<std::string_view, 5>> rows = {
        {"table1.csv", "sampling", "string", "", "cluster or hyak"},
        {"table1.csv", "model", "string", "", "I naive; II age_sex; III covariates; IV covariates_space"},
        {"table1.csv", "deaths", "real", "4", "mean observed deaths in the sample"},
        {"table1.csv", "bias", "real", "4", "sqrt of the summed squared cell bias; -na- when not fitted"},
        {"table1.csv", "variance", "real", "4", "summed cell variance of prediction error"},
        {"table1.csv", "mse", "real", "4", "bias_sq_sum + variance"},
        {"table1.csv", "bias_sq_sum", "real", "4", "summed squared cell bias"},
        {"table1.csv", "replicates", "integer", "", "replicates entering the metrics"},
        {"table1.csv", "failures", "integer", "", "replicates where the fit raised an error"},
        {"table1.csv", "nonconverged", "integer", "", "fits flagged as not converged"},
        {"table2.csv", "comparison", "string", "", "difference (hyak - cluster) or proportional ((hyak - cluster) / cluster)"},
        {"table2.csv", "model", "string", "", "model numeral"},
        {"table2.csv", "deaths|bias|variance|mse", "real", "4", "compared metric; undefined on zero baseline"},
        {"replicates.csv", "replicate", "integer", "", "1-based replicate index"},
        {"replicates.csv", "predicted_deaths", "real", "4", "sum of predicted cell deaths"},
        {"replicates.csv", "squared_error", "real", "4", "sum over cells of (prediction - truth)^2"},
        {"truth.csv", "village|stratum", "integer", "", "1-based; strata: young girls, young boys, older girls, older boys"},
        {"truth.csv", "x1..xk|eps|S|p_true", "real", "6", "covariates, effects and true risk"},
        {"truth.csv", "N|Y", "integer", "", "children and true deaths"},
        {"samples.csv", "n|y", "integer", "", "sampled children and observed deaths"},
        {"fits.csv", "parameter", "string", "", "beta*, gamma*, p* or variance component"},
        {"fits.csv", "estimate|sd", "real", "6", "point estimate (posterior mean for IV) and standard error / posterior sd"},
        {"fits.csv", "diagnostics", "string", "", "semicolon-separated key=value pairs"},
        {"phat.csv", "p_hat|p_true", "real", "6", "fitted and true cell risk"},
        {"cells.csv", "x|y", "real", "6", "clipped Voronoi cell vertices, counterclockwise"},
        {"neighbors.csv", "village_id|neighbor_id", "integer", "", "one row per direction of each shared edge"},
        {"villages.csv", "x|y|x1..xk", "real", "6", "centroid and covariates; hdss is 0/1"},
        {"spatial_effects.csv", "eps|S|p1..p4", "real", "6", "effects and risks of one truth realization"},
        {"cost.csv", "year", "integer", "", "years since start"},
        {"cost.csv", "hyak_cumulative|dhs_cumulative", "real", "2", "cumulative spend in currency units"},
    };
    for (const auto& r : rows) csv.row(r);
}

void write_manifest(const fs::path& path, const ManifestInfo& info) {
    nlohmann::json j;
    j["tool"] = "hyak-sim";
    j["version"] = kToolVersion;
    j["command"] = info.command;
    j["config_hash"] = info.config_hash;
    j["seed"] = info.seed;
    j["started_utc"] = info.started_utc;
    j["finished_utc"] = info.finished_utc;
    j["warnings"] = info.warnings;
    j["metadata"] = nlohmann::json::object();
    for (const auto& [key, value] : info.metadata) j["metadata"][key] = value;
    std::vector<std::string> files;
    for (const auto& f : info.files) files.push_back(f.generic_string());
    j["files"] = files;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace hyak
