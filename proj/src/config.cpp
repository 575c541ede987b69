#include "hyak/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace hyak {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Thrown by value parsers; rethrown with the line number attached.
struct BadValue {
    std::string message;
};

double to_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw BadValue{"expected a number, got '" + std::string(s) + "'"};
    }
    return v;
}

template <typename Int>
Int to_integer(std::string_view s) {
    Int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw BadValue{"expected an integer, got '" + std::string(s) + "'"};
    }
    return v;
}

bool to_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw BadValue{"expected true/false, got '" + std::string(s) + "'"};
}

std::vector<double> to_doubles(std::string_view s) {
    std::vector<double> out;
    for (const auto part : split(s, ',')) out.push_back(to_double(part));
    return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"study.seed", [](RunConfig& c, std::string_view v) { c.study.seed = to_integer<std::uint64_t>(v); }},
        {"study.replicates", [](RunConfig& c, std::string_view v) { c.study.replicates = to_integer<int>(v); }},
        {"study.workers", [](RunConfig& c, std::string_view v) { c.study.workers = to_integer<int>(v); }},
        {"study.fixed_truth", [](RunConfig& c, std::string_view v) { c.study.fixed_truth = to_bool(v); }},
        {"study.models",
         [](RunConfig& c, std::string_view v) {
             c.study.models.clear();
             for (const auto part : split(v, ',')) {
                 const auto model = parse_model(part);
                 if (!model) throw BadValue{"unknown model '" + std::string(part) + "'"};
                 c.study.models.insert(*model);
             }
         }},
        {"population.village_count",
         [](RunConfig& c, std::string_view v) { c.study.village_count = to_integer<int>(v); }},
        {"population.children_per_cell",
         [](RunConfig& c, std::string_view v) { c.study.children_per_cell = to_integer<int>(v); }},
        {"design.total_sample", [](RunConfig& c, std::string_view v) { c.study.total_sample = to_integer<int>(v); }},
        {"design.hyak_budget", [](RunConfig& c, std::string_view v) { c.study.hyak_budget = to_integer<int>(v); }},
        {"design.cluster_villages",
         [](RunConfig& c, std::string_view v) { c.study.cluster_villages = to_integer<int>(v); }},
        {"params.baseline_risk",
         [](RunConfig& c, std::string_view v) {
             const auto risks = to_doubles(v);
             if (risks.size() != kStrata) throw BadValue{"expected 4 stratum risks"};
             for (int j = 0; j < kStrata; ++j) {
                 if (!(risks[j] > 0.0 && risks[j] < 1.0)) throw BadValue{"risks must lie in (0, 1)"};
                 c.study.params.gamma(j) = logit(risks[j]);
             }
         }},
        {"params.beta",
         [](RunConfig& c, std::string_view v) {
             const auto beta = to_doubles(v);
             c.study.params.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
         }},
        {"params.sigma2_eps", [](RunConfig& c, std::string_view v) { c.study.params.sigma2_eps = to_double(v); }},
        {"params.sigma2_s", [](RunConfig& c, std::string_view v) { c.study.params.sigma2_s = to_double(v); }},
        {"priors.shape", [](RunConfig& c, std::string_view v) { c.study.priors.shape = to_double(v); }},
        {"priors.b", [](RunConfig& c, std::string_view v) { c.study.priors.second = to_double(v); }},
        {"priors.convention",
         [](RunConfig& c, std::string_view v) {
             if (v == "shape_rate") c.study.priors.convention = GammaConvention::shape_rate;
             else if (v == "shape_scale") c.study.priors.convention = GammaConvention::shape_scale;
             else throw BadValue{"expected shape_rate or shape_scale"};
         }},
        {"mcmc.chains", [](RunConfig& c, std::string_view v) { c.study.mcmc.chains = to_integer<int>(v); }},
        {"mcmc.iterations", [](RunConfig& c, std::string_view v) { c.study.mcmc.iterations = to_integer<int>(v); }},
        {"mcmc.burn_in", [](RunConfig& c, std::string_view v) { c.study.mcmc.burn_in = to_integer<int>(v); }},
        {"mcmc.thin", [](RunConfig& c, std::string_view v) { c.study.mcmc.thin = to_integer<int>(v); }},
        {"mcmc.rhat_threshold", [](RunConfig& c, std::string_view v) { c.study.mcmc.rhat_threshold = to_double(v); }},
        {"mcmc.parallel_chains", [](RunConfig& c, std::string_view v) { c.study.mcmc.parallel_chains = to_bool(v); }},
        {"geometry.layout_seed",
         [](RunConfig& c, std::string_view v) { c.study.layout_seed = to_integer<std::uint64_t>(v); }},
        {"geometry.padding", [](RunConfig& c, std::string_view v) { c.study.box_padding = to_double(v); }},
        {"cost.census_cost_per_person",
         [](RunConfig& c, std::string_view v) { c.cost.census_cost_per_person = to_double(v); }},
        {"cost.survey_cost_per_person",
         [](RunConfig& c, std::string_view v) { c.cost.survey_cost_per_person = to_double(v); }},
        {"cost.hdss_visit_cost", [](RunConfig& c, std::string_view v) { c.cost.hdss_visit_cost = to_double(v); }},
        {"cost.hdss_startup", [](RunConfig& c, std::string_view v) { c.cost.hdss_startup = to_double(v); }},
        {"cost.rounds_per_year", [](RunConfig& c, std::string_view v) { c.cost.rounds_per_year = to_integer<int>(v); }},
        {"cost.horizon_years", [](RunConfig& c, std::string_view v) { c.cost.horizon_years = to_integer<int>(v); }},
        {"cost.population", [](RunConfig& c, std::string_view v) { c.cost.population = to_integer<int>(v); }},
        {"cost.dhs_sample_per_round",
         [](RunConfig& c, std::string_view v) { c.cost.dhs_sample_per_round = to_integer<int>(v); }},
        {"cost.hdss_population", [](RunConfig& c, std::string_view v) { c.cost.hdss_population = to_integer<int>(v); }},
        {"cost.informed_sample_per_round",
         [](RunConfig& c, std::string_view v) { c.cost.informed_sample_per_round = to_integer<int>(v); }},
        {"cost.hyak_census_scope",
         [](RunConfig& c, std::string_view v) {
             const auto scope = parse_census_scope(v);
             if (!scope) throw BadValue{"expected none, non_hdss or full"};
             c.cost.hyak_census_scope = *scope;
         }},
    };
    return table;
}

constexpr std::string_view kCentroidPrefix = "geometry.centroid.";

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig config;
    std::map<int, Point> centroids;
    std::map<int, int> centroid_lines;
    std::map<std::string, int, std::less<>> seen;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line_no, "missing key");
        if (value.empty()) throw ConfigError(source, line_no, "missing value for '" + std::string(key) + "'");
        if (const auto prev = seen.find(key); prev != seen.end()) {
            throw ConfigError(source, line_no,
                              "duplicate key '" + std::string(key) + "' (first set on line " +
                                  std::to_string(prev->second) + ")");
        }
        seen.emplace(std::string(key), line_no);

        try {
            if (key.starts_with(kCentroidPrefix)) {
                const int index = to_integer<int>(key.substr(kCentroidPrefix.size()));
                const auto xy = to_doubles(value);
                if (xy.size() != 2) throw BadValue{"expected 'x, y'"};
                if (index < 1) throw BadValue{"centroid numbering starts at 1"};
                if (centroids.count(index)) throw BadValue{"centroid " + std::to_string(index) + " given twice"};
                centroids[index] = Point(xy[0], xy[1]);
                centroid_lines[index] = line_no;
                continue;
            }
            const auto it = setters().find(key);
            if (it == setters().end()) throw BadValue{"unknown key '" + std::string(key) + "'"};
            it->second(config, value);
        } catch (const BadValue& bad) {
            throw ConfigError(source, line_no, bad.message);
        }
    }

    if (!centroids.empty()) {
        int expected = 1;
        for (const auto& [index, point] : centroids) {
            if (index != expected++) {
                throw ConfigError(source, centroid_lines.at(index),
                                  "centroids must be numbered 1..n without gaps");
            }
            config.study.centroids.push_back(point);
        }
    }
    try {
        config.study.validate();
        config.cost.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source, line_no, e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

std::string render_config(const RunConfig& config) {
    const StudyConfig& s = config.study;
    const CostParams& c = config.cost;
    std::ostringstream out;
    auto join = [](const auto& values) {
        std::string text;
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(values.size()); ++k) {
            if (k > 0) text += ", ";
            text += format_double(values(k));
        }
        return text;
    };

    out << "# study\n";
    out << "study.seed = " << s.seed << "\n";
    out << "study.replicates = " << s.replicates << "\n";
    out << "study.workers = " << s.workers << "\n";
    out << "study.fixed_truth = " << (s.fixed_truth ? "true" : "false") << "\n";
    std::string models;
    for (const Model m : s.models) {
        if (!models.empty()) models += ",";
        models += model_numeral(m);
    }
    out << "study.models = " << models << "\n\n";

    out << "# population and designs\n";
    out << "population.village_count = " << s.village_count << "\n";
    out << "population.children_per_cell = " << s.children_per_cell << "\n";
    out << "design.total_sample = " << s.total_sample << "\n";
    out << "design.hyak_budget = " << s.hyak_budget << "\n";
    out << "design.cluster_villages = " << s.cluster_villages << "\n\n";

    out << "# data-generating model; risks are expit(gamma_j) for young girls,\n"
           "# young boys, older girls, older boys\n";
    Eigen::Vector4d risks;
    for (int j = 0; j < kStrata; ++j) risks(j) = std::round(expit(s.params.gamma(j)) * 1e12) / 1e12;
    out << "params.baseline_risk = " << join(risks) << "\n";
    out << "params.beta = " << join(s.params.beta) << "\n";
    out << "params.sigma2_eps = " << format_double(s.params.sigma2_eps) << "\n";
    out << "params.sigma2_s = " << format_double(s.params.sigma2_s) << "\n\n";

    out << "# Gamma(shape, b) priors on both random-effect precisions\n";
    out << "priors.shape = " << format_double(s.priors.shape) << "\n";
    out << "priors.b = " << format_double(s.priors.second) << "\n";
    out << "priors.convention = "
        << (s.priors.convention == GammaConvention::shape_rate ? "shape_rate" : "shape_scale") << "\n\n";

    out << "mcmc.chains = " << s.mcmc.chains << "\n";
    out << "mcmc.iterations = " << s.mcmc.iterations << "\n";
    out << "mcmc.burn_in = " << s.mcmc.burn_in << "\n";
    out << "mcmc.thin = " << s.mcmc.thin << "\n";
    out << "mcmc.rhat_threshold = " << format_double(s.mcmc.rhat_threshold) << "\n";
    out << "mcmc.parallel_chains = " << (s.mcmc.parallel_chains ? "true" : "false") << "\n\n";

    out << "# village centroids (map units); the box is their extent padded on each side\n";
    out << "geometry.layout_seed = " << s.layout_seed << "\n";
    out << "geometry.padding = " << format_double(s.box_padding) << "\n";
    for (std::size_t i = 0; i < s.centroids.size(); ++i) {
        char key[32];
        std::snprintf(key, sizeof key, "%02zu", i + 1);
        out << kCentroidPrefix << key << " = " << format_double(s.centroids[i].x()) << ", "
            << format_double(s.centroids[i].y()) << "\n";
    }
    out << "\n# cost model (currency units)\n";
    out << "cost.census_cost_per_person = " << format_double(c.census_cost_per_person) << "\n";
    out << "cost.survey_cost_per_person = " << format_double(c.survey_cost_per_person) << "\n";
    out << "cost.hdss_visit_cost = " << format_double(c.hdss_visit_cost) << "\n";
    out << "cost.hdss_startup = " << format_double(c.hdss_startup) << "\n";
    out << "cost.rounds_per_year = " << c.rounds_per_year << "\n";
    out << "cost.horizon_years = " << c.horizon_years << "\n";
    out << "cost.population = " << c.population << "\n";
    out << "cost.dhs_sample_per_round = " << c.dhs_sample_per_round << "\n";
    out << "cost.hdss_population = " << c.hdss_population << "\n";
    out << "cost.informed_sample_per_round = " << c.informed_sample_per_round << "\n";
    out << "cost.hyak_census_scope = " << census_scope_name(c.hyak_census_scope) << "\n";
    return out.str();
}

RunConfig default_run_config() {
    RunConfig config;
    config.study.centroids = generate_layout(config.study.layout_seed, config.study.village_count);
    return config;
}

std::string config_hash(const RunConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(render_config(config))));
    return buf;
}

}  // namespace hyak
