#include "hyak/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyak {

std::string_view model_numeral(Model model) {
    switch (model) {
        case Model::naive: return "I";
        case Model::age_sex: return "II";
        case Model::covariates: return "III";
        case Model::covariates_space: return "IV";
    }
    return "?";
}

std::string_view model_name(Model model) {
    switch (model) {
        case Model::naive: return "naive";
        case Model::age_sex: return "age_sex";
        case Model::covariates: return "covariates";
        case Model::covariates_space: return "covariates_space";
    }
    return "?";
}

std::optional<Model> parse_model(std::string_view text) {
    for (const Model m : kAllModels) {
        if (text == model_numeral(m) || text == model_name(m)) return m;
    }
    return std::nullopt;
}

void PriorSpec::validate() const {
    if (!(shape > 0.0) || !(second > 0.0)) {
        throw std::invalid_argument("Gamma prior parameters must be positive");
    }
}

FitResult fit_naive(const SampleData& sample) {
    const long n = sample.design.n.cast<long>().sum();
    if (n <= 0) throw std::invalid_argument("fit_naive: no children sampled");
    const long y = sample.y.cast<long>().sum();
    const double p = static_cast<double>(y) / static_cast<double>(n);

    FitResult fit;
    fit.model = Model::naive;
    fit.p_hat = CellMatrix::Constant(sample.design.n.rows(), kStrata, p);
    fit.diagnostics.boundary = y == 0 || y == n;
    if (fit.diagnostics.boundary) fit.diagnostics.note = "empirical risk on the boundary";
    return fit;
}

FitResult fit_age_sex(const SampleData& sample) {
    FitResult fit;
    fit.model = Model::age_sex;
    fit.p_hat.resize(sample.design.n.rows(), kStrata);
    for (int j = 0; j < kStrata; ++j) {
        const long n = sample.design.n.col(j).cast<long>().sum();
        if (n <= 0) {
            throw std::invalid_argument("fit_age_sex: stratum " + std::to_string(j + 1) +
                                        " has no sampled children");
        }
        const long y = sample.y.col(j).cast<long>().sum();
        fit.p_hat.col(j).setConstant(static_cast<double>(y) / static_cast<double>(n));
        if (y == 0 || y == n) fit.diagnostics.boundary = true;
    }
    if (fit.diagnostics.boundary) fit.diagnostics.note = "empirical risk on the boundary";
    return fit;
}

double logistic_log_likelihood(const SampleData& sample, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& beta, const Eigen::Vector4d& gamma) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < sample.design.n.rows(); ++i) {
        double xb = 0.0;
        for (Eigen::Index c = 0; c < beta.size(); ++c) {
            if (std::isfinite(beta(c))) xb += x(i, c) * beta(c);
        }
        for (int j = 0; j < kStrata; ++j) {
            const int n = sample.design.n(i, j);
            if (n == 0) continue;
            const double eta = xb + gamma(j);
            ll += sample.y(i, j) * eta - n * softplus(eta);
        }
    }
    return ll;
}

namespace {

// Grouped-binomial design restricted to sampled cells.
struct GroupedData {
    Eigen::MatrixXd design;  // [stratum dummies | active covariates]
    Eigen::VectorXd y;
    Eigen::VectorXd n;
    std::vector<int> active_covariates;
};

GroupedData group_cells(const SampleData& sample, const Eigen::MatrixXd& x) {
    const Eigen::Index villages = sample.design.n.rows();
    if (x.rows() != villages) throw std::invalid_argument("fit_logistic_mle: covariate rows mismatch");
    for (int j = 0; j < kStrata; ++j) {
        if (sample.design.n.col(j).sum() <= 0) {
            throw std::invalid_argument("fit_logistic_mle: stratum " + std::to_string(j + 1) +
                                        " has no sampled children");
        }
    }
    std::vector<std::pair<Eigen::Index, int>> cells;
    for (Eigen::Index i = 0; i < villages; ++i) {
        for (int j = 0; j < kStrata; ++j) {
            if (sample.design.n(i, j) > 0) cells.emplace_back(i, j);
        }
    }
    const auto rows = static_cast<Eigen::Index>(cells.size());

    // Covariates enter only while they add rank beyond the stratum intercepts
    // and previously accepted covariates; constant or collinear ones are dropped.
    Eigen::MatrixXd current = Eigen::MatrixXd::Zero(rows, kStrata);
    for (Eigen::Index r = 0; r < rows; ++r) current(r, cells[r].second) = 1.0;
    GroupedData data;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Eigen::MatrixXd candidate(rows, current.cols() + 1);
        candidate.leftCols(current.cols()) = current;
        for (Eigen::Index r = 0; r < rows; ++r) candidate(r, current.cols()) = x(cells[r].first, c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(candidate);
        qr.setThreshold(1e-10);
        if (qr.rank() == candidate.cols()) {
            current = std::move(candidate);
            data.active_covariates.push_back(static_cast<int>(c));
        }
    }
    data.design = std::move(current);
    data.y.resize(rows);
    data.n.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        data.y(r) = sample.y(cells[r].first, cells[r].second);
        data.n(r) = sample.design.n(cells[r].first, cells[r].second);
    }
    return data;
}

struct NewtonOutcome {
    Eigen::VectorXd theta;
    Eigen::MatrixXd information;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

double penalised_loglik(const GroupedData& d, const Eigen::VectorXd& theta, double ridge) {
    const Eigen::VectorXd eta = d.design * theta;
    double ll = 0.0;
    for (Eigen::Index r = 0; r < eta.size(); ++r) ll += d.y(r) * eta(r) - d.n(r) * softplus(eta(r));
    return ll - ridge * theta.squaredNorm();
}

NewtonOutcome newton(const GroupedData& d, Eigen::VectorXd theta, double ridge,
                     const IrlsOptions& options) {
    NewtonOutcome out;
    const Eigen::Index k = theta.size();
    double objective = penalised_loglik(d, theta, ridge);
    Eigen::MatrixXd info(k, k);
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Eigen::VectorXd eta = d.design * theta;
        Eigen::VectorXd resid(eta.size());
        Eigen::VectorXd weight(eta.size());
        for (Eigen::Index r = 0; r < eta.size(); ++r) {
            const double p = expit(eta(r));
            resid(r) = d.y(r) - d.n(r) * p;
            weight(r) = d.n(r) * p * (1.0 - p);
        }
        const Eigen::VectorXd score = d.design.transpose() * resid - 2.0 * ridge * theta;
        info = d.design.transpose() * weight.asDiagonal() * d.design;
        info.diagonal().array() += 2.0 * ridge;
        out.iterations = it;
        if (score.cwiseAbs().maxCoeff() < options.score_tolerance) {
            out.converged = true;
            break;
        }
        const Eigen::VectorXd step = info.ldlt().solve(score);
        if (!step.allFinite()) break;

        double scale = 1.0;
        Eigen::VectorXd next = theta + step;
        double next_objective = penalised_loglik(d, next, ridge);
        while (next_objective < objective && scale > 1e-6) {
            scale *= 0.5;
            next = theta + scale * step;
            next_objective = penalised_loglik(d, next, ridge);
        }
        const double change = std::abs(next_objective - objective);
        theta = next;
        const bool stalled = change <= options.relative_loglik_tolerance * std::max(1.0, std::abs(objective));
        objective = next_objective;
        if (stalled) {
            out.converged = true;
            break;
        }
    }
    out.theta = std::move(theta);
    out.information = std::move(info);
    out.objective = objective;
    return out;
}

}  // namespace

FitResult fit_logistic_mle(const SampleData& sample, const Eigen::MatrixXd& x,
                           const IrlsOptions& options) {
    const GroupedData d = group_cells(sample, x);
    const auto k = d.design.cols();

    Eigen::VectorXd start = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < kStrata; ++j) {
        double y = 0.0;
        double n = 0.0;
        for (Eigen::Index r = 0; r < d.y.size(); ++r) {
            if (d.design(r, j) == 1.0) {
                y += d.y(r);
                n += d.n(r);
            }
        }
        const double p = std::clamp(y / n, 0.5 / n, 1.0 - 0.5 / n);
        start(j) = logit(p);
    }

    NewtonOutcome result = newton(d, start, 0.0, options);
    const Eigen::VectorXd eta = d.design * result.theta;
    const bool separated = !result.theta.allFinite() ||
                           (eta.array().abs() > options.separation_eta).any();

    FitResult fit;
    fit.model = Model::covariates;
    fit.diagnostics.iterations = result.iterations;
    if (!result.converged || separated) {
        fit.diagnostics.converged = false;
        fit.diagnostics.separation = separated;
        fit.diagnostics.note = separated ? "separation; ridge-penalised fallback used"
                                         : "IRLS did not converge; ridge-penalised fallback used";
        result = newton(d, start, options.fallback_ridge, options);
        fit.diagnostics.iterations += result.iterations;
    }

    const Eigen::VectorXd sd = result.information.ldlt()
                                   .solve(Eigen::MatrixXd::Identity(k, k))
                                   .diagonal()
                                   .cwiseSqrt();
    fit.gamma = result.theta.head(kStrata);
    fit.gamma_sd = sd.head(kStrata);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.beta = Eigen::VectorXd::Constant(x.cols(), nan);
    fit.beta_sd = Eigen::VectorXd::Constant(x.cols(), nan);
    for (std::size_t a = 0; a < d.active_covariates.size(); ++a) {
        fit.beta(d.active_covariates[a]) = result.theta(kStrata + a);
        fit.beta_sd(d.active_covariates[a]) = sd(kStrata + a);
    }
    if (d.active_covariates.size() < static_cast<std::size_t>(x.cols())) {
        if (!fit.diagnostics.note.empty()) fit.diagnostics.note += "; ";
        fit.diagnostics.note += "covariates without variation among sampled villages excluded";
    }

    fit.p_hat.resize(x.rows(), kStrata);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double xb = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (std::isfinite(fit.beta(c))) xb += x(i, c) * fit.beta(c);
        }
        for (int j = 0; j < kStrata; ++j) fit.p_hat(i, j) = expit(xb + fit.gamma(j));
    }
    fit.log_likelihood = logistic_log_likelihood(sample, x, fit.beta, fit.gamma);
    return fit;
}

}  // namespace hyak
