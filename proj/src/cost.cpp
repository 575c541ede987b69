#include "hyak/cost.hpp"

#include <stdexcept>

namespace hyak {

std::string_view census_scope_name(CensusScope scope) {
    switch (scope) {
        case CensusScope::none: return "none";
        case CensusScope::non_hdss: return "non_hdss";
        case CensusScope::full: return "full";
    }
    return "?";
}

std::optional<CensusScope> parse_census_scope(std::string_view text) {
    for (const auto scope : {CensusScope::none, CensusScope::non_hdss, CensusScope::full}) {
        if (text == census_scope_name(scope)) return scope;
    }
    return std::nullopt;
}

void CostParams::validate() const {
    if (census_cost_per_person < 0 || survey_cost_per_person < 0 || hdss_visit_cost < 0 ||
        hdss_startup < 0 || horizon_years < 0 || population < 0 || dhs_sample_per_round < 0 ||
        hdss_population < 0 || informed_sample_per_round < 0) {
        throw std::invalid_argument("cost parameters must be nonnegative");
    }
    if (rounds_per_year < 1) throw std::invalid_argument("rounds_per_year must be >= 1");
    if (hdss_population > population) {
        throw std::invalid_argument("hdss_population exceeds population");
    }
}

std::vector<double> cumulative_cost(const CostParams& params, CostSystem system) {
    params.validate();
    double initial = 0.0;
    double yearly = 0.0;
    if (system == CostSystem::dhs_like) {
        initial = params.population * params.census_cost_per_person;
        yearly = params.rounds_per_year * params.dhs_sample_per_round * params.survey_cost_per_person;
    } else {
        double census_people = 0.0;
        switch (params.hyak_census_scope) {
            case CensusScope::none: break;
            case CensusScope::non_hdss: census_people = params.population - params.hdss_population; break;
            case CensusScope::full: census_people = params.population; break;
        }
        initial = params.hdss_startup + census_people * params.census_cost_per_person;
        yearly = params.rounds_per_year *
                 (params.hdss_population * params.hdss_visit_cost +
                  params.informed_sample_per_round * params.survey_cost_per_person);
    }
    std::vector<double> series(static_cast<std::size_t>(params.horizon_years) + 1);
    for (std::size_t t = 0; t < series.size(); ++t) series[t] = initial + yearly * static_cast<double>(t);
    return series;
}

std::optional<double> crossover_year(const CostParams& params) {
    const auto hyak = cumulative_cost(params, CostSystem::hyak);
    const auto dhs = cumulative_cost(params, CostSystem::dhs_like);
    if (hyak[0] <= dhs[0]) return 0.0;
    for (std::size_t t = 1; t < hyak.size(); ++t) {
        const double gap_now = hyak[t] - dhs[t];
        if (gap_now <= 0.0) {
            const double gap_before = hyak[t - 1] - dhs[t - 1];
            return static_cast<double>(t - 1) + gap_before / (gap_before - gap_now);
        }
    }
    return std::nullopt;
}

}  // namespace hyak
