#pragma once

// Synthetic truth: covariates, unstructured and ICAR spatial effects, true
// stratum risks and true death counts.

#include <array>
#include <string_view>
#include <vector>

#include "hyak/geometry.hpp"
#include "hyak/rng.hpp"
#include "hyak/types.hpp"

namespace hyak {

enum class Sex { female, male };
enum class AgeBand { under_one, one_to_four };

struct Stratum {
    int index;  // 0-based column in every village x stratum matrix
    Sex sex;
    AgeBand age_band;
    std::string_view label;
};

inline constexpr std::array<Stratum, kStrata> kStrataTable{{
    {0, Sex::female, AgeBand::under_one, "young girls"},
    {1, Sex::male, AgeBand::under_one, "young boys"},
    {2, Sex::female, AgeBand::one_to_four, "older girls"},
    {3, Sex::male, AgeBand::one_to_four, "older boys"},
}};

struct MortalityParams {
    Eigen::Vector4d gamma;   // stratum intercepts, logit scale
    Eigen::VectorXd beta;    // covariate log-odds coefficients
    double sigma2_eps = 0.22;
    double sigma2_s = 0.48;

    /// Baseline risks 0.050, 0.117, 0.032, 0.071; beta = (-1.1, 0.7).
    static MortalityParams defaults();
    void validate() const;
};

struct PopulationFrame {
    CountMatrix N;
    Eigen::MatrixXd x;  // village x covariate, values in [0, 1]
    Eigen::VectorXd eps;
    Eigen::VectorXd S;  // sums to zero
    CellMatrix p_true;
    CountMatrix Y;

    int village_count() const { return static_cast<int>(N.rows()); }
    int total_deaths() const { return Y.sum(); }
};

/// village_count x covariate_count independent uniform(0,1) draws.
Eigen::MatrixXd gen_covariates(Rng& rng, int village_count, int covariate_count = 2);

/// Q with diagonal n_i (neighbour count) and -1 for each neighbour pair.
Eigen::MatrixXd icar_structure(const std::vector<std::vector<int>>& neighbors);

/// How draws treat the constant direction of Q. `unconstrained` exists only
/// for fault injection in the validation harness.
enum class IcarConstraint { sum_to_zero, unconstrained };

/// Draws from the intrinsic CAR law with precision Q / sigma2_s restricted to
/// the sum-to-zero subspace, via a one-off eigendecomposition of Q.
class IcarSampler {
public:
    explicit IcarSampler(const std::vector<std::vector<int>>& neighbors,
                         IcarConstraint constraint = IcarConstraint::sum_to_zero);

    Eigen::VectorXd draw(Rng& rng, double sigma2_s) const;

    int size() const { return static_cast<int>(structure_.rows()); }
    const Eigen::MatrixXd& structure() const { return structure_; }
    /// Moore-Penrose inverse of Q.
    Eigen::MatrixXd pseudo_inverse() const;

private:
    Eigen::MatrixXd structure_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::VectorXd eigenvalues_;
    int null_dimension_ = 0;
    IcarConstraint constraint_;
};

Eigen::VectorXd sample_icar(Rng& rng, const VillageMap& map, double sigma2_s);

/// p_ij = expit(x_i . beta + gamma_j + eps_i + S_i).
CellMatrix compute_true_probs(const MortalityParams& params, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& eps, const Eigen::VectorXd& S);

/// Y_ij ~ Binomial(N_ij, p_ij), independent across cells.
CountMatrix draw_deaths(Rng& rng, const CellMatrix& p, const CountMatrix& N);

/// Draws eps, S, p_true and Y for one realization on fixed covariates.
PopulationFrame generate_population(Rng& rng, const MortalityParams& params,
                                    const IcarSampler& icar, const Eigen::MatrixXd& x,
                                    const CountMatrix& N);

}  // namespace hyak
