#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "hyak/types.hpp"

namespace hyak {

/// Analysis models I-IV.
enum class Model { naive, age_sex, covariates, covariates_space };

inline constexpr std::array<Model, 4> kAllModels{Model::naive, Model::age_sex, Model::covariates,
                                                 Model::covariates_space};

std::string_view model_numeral(Model model);  // "I" .. "IV"
std::string_view model_name(Model model);     // "naive", "age_sex", ...
std::optional<Model> parse_model(std::string_view text);

struct PosteriorSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

struct FitDiagnostics {
    bool converged = true;
    /// An empirical estimate sits on 0 or 1 (models I-II).
    bool boundary = false;
    /// Complete or quasi-complete separation detected (model III); the
    /// reported coefficients then come from the ridge-penalised fallback.
    bool separation = false;
    int iterations = 0;
    double max_rhat = 0.0;
    double min_ess = 0.0;
    std::string note;
};

struct FitResult {
    Model model = Model::naive;
    CellMatrix p_hat;
    /// Covariate coefficients; NaN marks a coefficient excluded by the
    /// zero-variance-covariate guard. Empty for models I-II.
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_sd;
    /// Stratum intercepts (logit scale), NaN for models I-II.
    Eigen::Vector4d gamma = Eigen::Vector4d::Constant(std::numeric_limits<double>::quiet_NaN());
    Eigen::Vector4d gamma_sd = Eigen::Vector4d::Constant(std::numeric_limits<double>::quiet_NaN());
    /// Posterior means of the village effects (model IV only).
    Eigen::VectorXd eps_mean;
    Eigen::VectorXd spatial_mean;
    std::optional<PosteriorSummary> sigma2_eps;
    std::optional<PosteriorSummary> sigma2_s;
    std::optional<PosteriorSummary> precision_eps;
    double log_likelihood = std::numeric_limits<double>::quiet_NaN();
    FitDiagnostics diagnostics;
};

}  // namespace hyak
