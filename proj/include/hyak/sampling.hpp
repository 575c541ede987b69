#pragma once

// Survey designs: one-stage cluster sampling and HDSS-informed sampling.

#include <span>
#include <string_view>
#include <vector>

#include "hyak/fit_result.hpp"
#include "hyak/rng.hpp"
#include "hyak/types.hpp"

namespace hyak {

enum class DesignKind { cluster, hyak };

std::string_view design_name(DesignKind kind);

struct SampleDesign {
    DesignKind kind = DesignKind::cluster;
    CountMatrix n;
    /// Fully enumerated villages (hyak only), sorted ascending.
    std::vector<int> hdss_ids;

    int total_sample() const { return n.sum(); }
};

struct SampleData {
    SampleDesign design;
    CountMatrix y;

    int observed_deaths() const { return y.sum(); }
};

struct ClusterOptions {
    int villages = 5;
    int per_stratum = 260;
};

/// Picks `villages` villages uniformly without replacement and allocates
/// `per_stratum` children to every stratum of each.
SampleDesign cluster_sample(Rng& rng, const CountMatrix& N, const ClusterOptions& options = {});

/// Three surveillance villages: the one maximising x1*x2, the one maximising
/// (1-x1)*(1-x2), then a uniform draw from the rest. Returned in that order.
std::vector<int> select_hdss_villages(const Eigen::MatrixXd& x, Rng& rng);

/// Integer allocation of `budget` proportional to `predicted` by largest
/// remainder. Cells whose quota would exceed `capacity` are capped and the
/// excess is redistributed over the uncapped cells by the same rule.
CountMatrix informed_allocation(const CellMatrix& predicted, const CountMatrix& capacity, int budget);

/// Full enumeration of `hdss_ids` plus an informed allocation of `budget`
/// over the remaining villages, driven by N_ij * p_hat_ij from `hdss_fit`.
SampleDesign hyak_design(const CountMatrix& N, std::span<const int> hdss_ids,
                         const FitResult& hdss_fit, int budget = 1000);

/// y_ij ~ Hypergeometric(N_ij, Y_ij, n_ij) independently per cell.
SampleData draw_sample_outcomes(Rng& rng, const SampleDesign& design, const CountMatrix& N,
                                const CountMatrix& Y);

/// Census of the given villages (n = N there, 0 elsewhere); used to fit the
/// HDSS-only model that drives informed allocation.
SampleData census_of(std::span<const int> villages, const CountMatrix& N, const CountMatrix& Y);

}  // namespace hyak
