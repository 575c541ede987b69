#pragma once

// CSV and manifest emission. Every CSV starts with a header row. Villages
// and strata are numbered from 1. Fixed decimals per column kind:
//   probabilities and effects  6
//   deaths and error metrics   4
//   coordinates                6
//   currency                   2

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hyak/config.hpp"
#include "hyak/cost.hpp"
#include "hyak/experiment.hpp"

namespace hyak {

namespace fs = std::filesystem;

void write_table1(const fs::path& path, const StudyReport& report);
void write_table2(const fs::path& path, const StudyReport& report);
/// One row per (replicate, design, model): totals, squared error, diagnostics.
void write_replicates(const fs::path& path, const StudyReport& report);
void write_truth(const fs::path& path, const StudyReport& report);
void write_samples(const fs::path& path, const StudyReport& report);
/// Parameter summaries per fit, plus per-cell fitted probabilities next to
/// the true ones in `phat_path`.
void write_fits(const fs::path& path, const fs::path& phat_path, const StudyReport& report);

/// cells.csv (village_id, vertex_index, x, y), neighbors.csv
/// (village_id, neighbor_id), villages.csv (village_id, x, y, hdss, x1, x2, ...).
std::vector<fs::path> write_geometry(const fs::path& dir, const StudyContext& context);

/// One row per village with the effects of a single truth realization.
void write_spatial_effects(const fs::path& path, const PopulationFrame& truth);

void write_cost(const fs::path& path, const CostParams& params);

/// Column documentation for every CSV this tool can emit.
void write_schema(const fs::path& path);

struct ManifestInfo {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string started_utc;
    std::string finished_utc;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<fs::path> files;  // relative to the run directory
};

void write_manifest(const fs::path& path, const ManifestInfo& info);

std::string utc_timestamp();

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace hyak
