#pragma once

// Named pass/fail checks pairing production code with the oracles.

#include <cstdint>
#include <string>
#include <vector>

#include "hyak/synth.hpp"

namespace hyak::validation {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// `trials` random point sets of 5-30 points: shared-edge adjacency equals
/// brute-force Delaunay adjacency.
CheckResult check_geometry_oracle(int trials, std::uint64_t seed);

/// `draws` ICAR draws on the default 20-village graph. Returns the
/// sum-to-zero check (1e-10 per draw) and the entrywise covariance check
/// (every entry within `z_limit` Monte Carlo standard errors of sigma2 * Q^+).
std::vector<CheckResult> check_icar(int draws, std::uint64_t seed,
                                    IcarConstraint constraint = IcarConstraint::sum_to_zero,
                                    double z_limit = 3.0);

/// Two-sided normal quantile that keeps the family-wise error of `tests`
/// simultaneous z-tests at `alpha` (Bonferroni).
double bonferroni_z(double alpha, int tests);

/// IRLS against derivative-free maximisation on random 4-village instances,
/// coefficients within 1e-4.
CheckResult check_mle_oracle(int instances, std::uint64_t seed);

/// mse == bias_sq_sum + var_sum == direct MSE to relative 1e-10.
CheckResult check_decomposition_identity(int sets, std::uint64_t seed);

/// Predictions from a full census reproduce the truth exactly.
CheckResult check_census_identity(std::uint64_t seed);

enum class Fault { none, icar_unconstrained };

/// Reduced-size suite run by `hyak-sim validate`.
std::vector<CheckResult> run_builtin_suite(Fault fault = Fault::none);

}  // namespace hyak::validation
