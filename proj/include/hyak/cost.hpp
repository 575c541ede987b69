#pragma once

// Multi-year cumulative cost of a Hyak system against a DHS-like survey system.

#include <optional>
#include <string_view>
#include <vector>

namespace hyak {

/// What Hyak pays for the initial sampling-frame census.
enum class CensusScope { none, non_hdss, full };

std::string_view census_scope_name(CensusScope scope);
std::optional<CensusScope> parse_census_scope(std::string_view text);

struct CostParams {
    double census_cost_per_person = 20.0;
    double survey_cost_per_person = 40.0;
    double hdss_visit_cost = 7.50;
    double hdss_startup = 325000.0;
    int rounds_per_year = 2;
    int horizon_years = 5;
    int population = 28000;
    int dhs_sample_per_round = 5200;
    int hdss_population = 4200;
    int informed_sample_per_round = 1000;
    CensusScope hyak_census_scope = CensusScope::full;

    void validate() const;
};

enum class CostSystem { hyak, dhs_like };

/// Cumulative spend at the end of years 0..horizon (horizon + 1 entries).
std::vector<double> cumulative_cost(const CostParams& params, CostSystem system);

/// Smallest t in [0, horizon] with hyak cumulative <= dhs_like cumulative,
/// interpolating linearly between yearly points. Empty when Hyak stays more
/// expensive over the whole horizon.
std::optional<double> crossover_year(const CostParams& params);

}  // namespace hyak
