#include "hyak/synth.hpp"

#include <stdexcept>

namespace hyak {

MortalityParams MortalityParams::defaults() {
    MortalityParams params;
    params.gamma << logit(0.050), logit(0.117), logit(0.032), logit(0.071);
    params.beta = Eigen::Vector2d(-1.1, 0.7);
    params.sigma2_eps = 0.22;
    params.sigma2_s = 0.48;
    return params;
}

void MortalityParams::validate() const {
    if (!(sigma2_eps > 0.0) || !(sigma2_s > 0.0)) {
        throw std::invalid_argument("random-effect variances must be positive");
    }
    if (!gamma.allFinite() || !beta.allFinite()) {
        throw std::invalid_argument("mortality coefficients must be finite");
    }
}

Eigen::MatrixXd gen_covariates(Rng& rng, int village_count, int covariate_count) {
    if (village_count < 1) throw std::invalid_argument("village_count must be >= 1");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd x(village_count, covariate_count);
    // row-major fill so the draw order is village by village
    for (int i = 0; i < village_count; ++i) {
        for (int c = 0; c < covariate_count; ++c) x(i, c) = unit(rng);
    }
    return x;
}

Eigen::MatrixXd icar_structure(const std::vector<std::vector<int>>& neighbors) {
    const auto n = static_cast<Eigen::Index>(neighbors.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        q(i, i) = static_cast<double>(neighbors[i].size());
        for (const int j : neighbors[i]) q(i, j) = -1.0;
    }
    return q;
}

IcarSampler::IcarSampler(const std::vector<std::vector<int>>& neighbors, IcarConstraint constraint)
    : structure_(icar_structure(neighbors)), constraint_(constraint) {
    if (neighbors.size() < 2) {
        throw GeometryError(GeometryError::Kind::too_few_points, "ICAR needs at least 2 areas");
    }
    if (!graph_is_connected(neighbors)) {
        throw GeometryError(GeometryError::Kind::disconnected,
                            "ICAR requires a connected neighbour graph");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(structure_);
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
    const double tol = 1e-9 * eigenvalues_.maxCoeff();
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
        if (eigenvalues_(k) <= tol) ++null_dimension_;
    }
    if (null_dimension_ != 1) {
        throw GeometryError(GeometryError::Kind::disconnected,
                            "ICAR structure has null space of dimension " +
                                std::to_string(null_dimension_));
    }
}

Eigen::VectorXd IcarSampler::draw(Rng& rng, double sigma2_s) const {
    if (!(sigma2_s > 0.0)) throw std::invalid_argument("sigma2_s must be positive");
    Eigen::VectorXd coef(eigenvalues_.size());
    for (Eigen::Index k = 0; k < coef.size(); ++k) {
        if (k < null_dimension_) {
            // eigenvalues are ascending, so the null direction comes first
            coef(k) = constraint_ == IcarConstraint::unconstrained ? standard_normal(rng) : 0.0;
        } else {
            coef(k) = std::sqrt(sigma2_s / eigenvalues_(k)) * standard_normal(rng);
        }
    }
    Eigen::VectorXd s = eigenvectors_ * coef;
    if (constraint_ == IcarConstraint::sum_to_zero) {
        s.array() -= s.mean();
    }
    return s;
}

Eigen::MatrixXd IcarSampler::pseudo_inverse() const {
    const Eigen::Index n = eigenvalues_.size();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = null_dimension_; k < n; ++k) inv(k) = 1.0 / eigenvalues_(k);
    return eigenvectors_ * inv.asDiagonal() * eigenvectors_.transpose();
}

Eigen::VectorXd sample_icar(Rng& rng, const VillageMap& map, double sigma2_s) {
    return IcarSampler(map.neighbors).draw(rng, sigma2_s);
}

CellMatrix compute_true_probs(const MortalityParams& params, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& eps, const Eigen::VectorXd& S) {
    const Eigen::Index n = x.rows();
    if (x.cols() != params.beta.size() || eps.size() != n || S.size() != n) {
        throw std::invalid_argument("compute_true_probs: inconsistent dimensions");
    }
    const Eigen::VectorXd village_effect = x * params.beta + eps + S;
    CellMatrix p(n, kStrata);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < kStrata; ++j) p(i, j) = expit(village_effect(i) + params.gamma(j));
    }
    return p;
}

CountMatrix draw_deaths(Rng& rng, const CellMatrix& p, const CountMatrix& N) {
    if (p.rows() != N.rows()) throw std::invalid_argument("draw_deaths: dimension mismatch");
    CountMatrix y(N.rows(), kStrata);
    for (Eigen::Index i = 0; i < N.rows(); ++i) {
        for (int j = 0; j < kStrata; ++j) y(i, j) = draw_binomial(rng, N(i, j), p(i, j));
    }
    return y;
}

PopulationFrame generate_population(Rng& rng, const MortalityParams& params,
                                    const IcarSampler& icar, const Eigen::MatrixXd& x,
                                    const CountMatrix& N) {
    params.validate();
    PopulationFrame frame;
    frame.N = N;
    frame.x = x;
    const Eigen::Index n = x.rows();
    frame.eps.resize(n);
    const double sd_eps = std::sqrt(params.sigma2_eps);
    for (Eigen::Index i = 0; i < n; ++i) frame.eps(i) = sd_eps * standard_normal(rng);
    frame.S = icar.draw(rng, params.sigma2_s);
    frame.p_true = compute_true_probs(params, x, frame.eps, frame.S);
    frame.Y = draw_deaths(rng, frame.p_true, N);
    return frame;
}

}  // namespace hyak
