#include "hyak/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hyak {

CellMatrix predict_deaths(const SampleData& sample, const CountMatrix& N, const CellMatrix& p_hat) {
    if (p_hat.rows() != N.rows() || sample.y.rows() != N.rows()) {
        throw std::invalid_argument("predict_deaths: dimension mismatch");
    }
    const CellMatrix unsampled = (N - sample.design.n).cast<double>();
    return sample.y.cast<double>() + unsampled.cwiseProduct(p_hat);
}

MetricsReport mse_decomposition(std::span<const CellMatrix> predictions,
                                std::span<const CellMatrix> truths) {
    if (predictions.empty()) throw std::invalid_argument("mse_decomposition: no replicates");
    if (predictions.size() != truths.size()) {
        throw std::invalid_argument("mse_decomposition: prediction and truth counts differ");
    }
    const Eigen::Index rows = predictions.front().rows();
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        if (predictions[s].rows() != rows || truths[s].rows() != rows) {
            throw std::invalid_argument("mse_decomposition: dimension mismatch");
        }
    }
    const double S = static_cast<double>(predictions.size());

    MetricsReport report;
    report.replicates = static_cast<int>(predictions.size());
    report.mean_prediction = CellMatrix::Zero(rows, kStrata);
    report.mean_truth = CellMatrix::Zero(rows, kStrata);
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        report.mean_prediction += predictions[s];
        report.mean_truth += truths[s];
    }
    report.mean_prediction /= S;
    report.mean_truth /= S;

    const CellMatrix bias = report.mean_prediction - report.mean_truth;
    CellMatrix spread = CellMatrix::Zero(rows, kStrata);
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        spread += (predictions[s] - truths[s] - bias).array().square().matrix();
    }
    report.bias_sq_sum = bias.squaredNorm();
    report.bias_rms = std::sqrt(report.bias_sq_sum);
    report.var_sum = spread.sum() / S;
    report.mse = report.bias_sq_sum + report.var_sum;
    return report;
}

Comparison comparison_table(const MetricsReport& a, const MetricsReport& b) {
    const std::array<double, 4> base{a.deaths_captured, a.bias_rms, a.var_sum, a.mse};
    const std::array<double, 4> other{b.deaths_captured, b.bias_rms, b.var_sum, b.mse};
    Comparison out;
    for (std::size_t k = 0; k < base.size(); ++k) {
        out.difference[k] = other[k] - base[k];
        if (base[k] != 0.0) out.proportional[k] = out.difference[k] / base[k];
    }
    return out;
}

}  // namespace hyak
