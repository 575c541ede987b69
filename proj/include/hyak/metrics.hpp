#pragma once

// Predicted death counts and their bias / variance / MSE decomposition.

#include <array>
#include <optional>
#include <span>

#include "hyak/sampling.hpp"
#include "hyak/types.hpp"

namespace hyak {

/// Yhat_ij = y_ij + (N_ij - n_ij) * p_hat_ij.
CellMatrix predict_deaths(const SampleData& sample, const CountMatrix& N, const CellMatrix& p_hat);

struct MetricsReport {
    /// Mean observed deaths of the design that produced the predictions.
    double deaths_captured = 0.0;
    /// sum_ij Bias_ij^2, Bias_ij = mean_s (Yhat_ij^(s) - Y_ij^(s)).
    double bias_sq_sum = 0.0;
    /// sqrt(bias_sq_sum); the headline "Bias" figure.
    double bias_rms = 0.0;
    /// sum_ij of the (1/S) variance of Yhat_ij^(s) - Y_ij^(s) over replicates.
    double var_sum = 0.0;
    /// bias_sq_sum + var_sum.
    double mse = 0.0;
    int replicates = 0;
    CellMatrix mean_prediction;
    CellMatrix mean_truth;
};

/// Decomposes the replicate-averaged squared error summed over cells. With a
/// fixed truth this is the usual squared bias plus variance of the
/// predictions; with regenerated truth both are taken about the
/// per-replicate truth.
MetricsReport mse_decomposition(std::span<const CellMatrix> predictions,
                                std::span<const CellMatrix> truths);

inline constexpr std::array<const char*, 4> kComparedMetrics{"deaths", "bias", "variance", "mse"};

struct Comparison {
    /// b - a for deaths, bias_rms, var_sum, mse.
    std::array<double, 4> difference{};
    /// (b - a) / a; empty where a is zero.
    std::array<std::optional<double>, 4> proportional{};
};

Comparison comparison_table(const MetricsReport& a, const MetricsReport& b);

}  // namespace hyak
