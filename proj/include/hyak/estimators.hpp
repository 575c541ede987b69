#pragma once

// Analysis models fitted to survey data. Every fit returns fitted
// probabilities for all villages, sampled or not.

#include <cstdint>

#include "hyak/fit_result.hpp"
#include "hyak/geometry.hpp"
#include "hyak/sampling.hpp"

namespace hyak {

/// Model I: a single empirical risk y/n applied to every cell.
FitResult fit_naive(const SampleData& sample);

/// Model II: one empirical risk per stratum.
FitResult fit_age_sex(const SampleData& sample);

struct IrlsOptions {
    int max_iterations = 100;
    double score_tolerance = 1e-8;
    double relative_loglik_tolerance = 1e-10;
    /// Quadratic penalty weight of the fallback fit used after separation or
    /// non-convergence.
    double fallback_ridge = 1e-4;
    /// |linear predictor| beyond this on a sampled cell is treated as
    /// separation.
    double separation_eta = 20.0;
};

/// Model III: logit p_ij = x_i . beta + gamma_j by Newton / IRLS on the
/// grouped binomial likelihood of the sampled cells.
FitResult fit_logistic_mle(const SampleData& sample, const Eigen::MatrixXd& x,
                           const IrlsOptions& options = {});

/// Grouped binomial log-likelihood (without the constant binomial
/// coefficients) of logit p_ij = x_i . beta + gamma_j over sampled cells.
double logistic_log_likelihood(const SampleData& sample, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& beta, const Eigen::Vector4d& gamma);

enum class GammaConvention { shape_rate, shape_scale };

struct PriorSpec {
    double shape = 5.0;
    /// Rate under shape_rate, scale under shape_scale.
    double second = 1.0;
    GammaConvention convention = GammaConvention::shape_rate;

    double rate() const { return convention == GammaConvention::shape_rate ? second : 1.0 / second; }
    void validate() const;
};

struct McmcOptions {
    int chains = 4;
    int iterations = 20000;
    int burn_in = 10000;
    int thin = 5;
    std::uint64_t seed = 1;
    double rhat_threshold = 1.1;
    /// Run chains on separate threads; results do not depend on this.
    bool parallel_chains = false;
};

/// Model IV: logit p_ij = x_i . beta + gamma_j + eps_i + S_i with flat priors on
/// (beta, gamma), eps_i ~ N(0, 1/tau_eps), S ~ ICAR(1/tau_s) on the map's
/// neighbour graph and Gamma priors on both precisions. Metropolis-within-Gibbs;
/// p_hat is the posterior mean of the cell probability.
FitResult fit_spatial_bayes(const SampleData& sample, const Eigen::MatrixXd& x,
                            const VillageMap& map, const PriorSpec& priors = {},
                            const McmcOptions& options = {});

/// Split-chain potential scale reduction for equally long chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace hyak
