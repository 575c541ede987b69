#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace hyak {

/// Sex x age-band cells per village.
inline constexpr int kStrata = 4;

/// village x stratum integer counts (children, deaths, allocations).
using CountMatrix = Eigen::Matrix<int, Eigen::Dynamic, kStrata>;

/// village x stratum real values (probabilities, predicted deaths).
using CellMatrix = Eigen::Matrix<double, Eigen::Dynamic, kStrata>;

using Point = Eigen::Vector2d;

inline double expit(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + exp(eta)) without overflow
inline double softplus(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

}  // namespace hyak
