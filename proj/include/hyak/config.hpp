#pragma once

// Flat `key = value` configuration files with dotted keys, e.g.
//
//   study.replicates = 100
//   params.sigma2_s = 0.48
//   geometry.centroid.07 = 12.5, 3.25
//
// '#' starts a comment. Unknown keys and malformed values are errors that
// carry the offending line number.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hyak/cost.hpp"
#include "hyak/experiment.hpp"

namespace hyak {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

struct RunConfig {
    StudyConfig study;
    CostParams cost;
};

RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Serialises every key; parse_config(render_config(c)) reproduces c.
std::string render_config(const RunConfig& config);

/// Paper scenario with the default layout written out explicitly.
RunConfig default_run_config();

/// Stable 64-bit FNV-1a hash of render_config(config), as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace hyak
