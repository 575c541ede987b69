// Model IV: binomial GLMM with unstructured and intrinsic CAR village effects,
// fitted by Metropolis-within-Gibbs.
//
// Per iteration, in order:
//   eps_i   random-walk Metropolis, one village at a time
//   S_i     random-walk Metropolis against the ICAR conditional
//           N(mean of neighbours, 1 / (tau_s * n_i)); then S is recentred and
//           its mean moved into gamma, which leaves every linear predictor intact
//   (beta, gamma)  joint random-walk Metropolis, flat prior
//   tau_eps, tau_s conjugate Gamma draws
// Step sizes adapt during burn-in only, so the kept draws form a valid chain.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "hyak/estimators.hpp"
#include "hyak/rng.hpp"

namespace hyak {

namespace {

constexpr int kAdaptBatch = 50;

struct ModelData {
    int villages = 0;
    Eigen::MatrixXd x;  // active covariates only
    CountMatrix n;
    CountMatrix y;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::pair<int, int>> edges;  // i < j
    double prior_shape = 5.0;
    double prior_rate = 1.0;
    Eigen::VectorXd theta0;  // [beta_active, gamma]
    Eigen::MatrixXd proposal_cov;
};

struct ChainOutput {
    // traces[k] holds kept draws of tracked quantity k:
    // beta_active..., gamma_1..4, sigma2_eps, sigma2_s, tau_eps
    std::vector<std::vector<double>> traces;
    CellMatrix p_sum;
    Eigen::VectorXd eps_sum;
    Eigen::VectorXd s_sum;
    long kept = 0;
};

class Chain {
public:
    Chain(const ModelData& data, const McmcOptions& options, int index)
        : d_(data), opt_(options), rng_(make_rng(options.seed, static_cast<std::uint64_t>(index), "mcmc-chain")) {}

    ChainOutput run();

private:
    double village_ll(int i, double u) const {
        double ll = 0.0;
        for (int j = 0; j < kStrata; ++j) {
            const int n = d_.n(i, j);
            if (n == 0) continue;
            const double eta = u + gamma_(j);
            ll += d_.y(i, j) * eta - n * softplus(eta);
        }
        return ll;
    }

    void initialise();
    void update_eps();
    void update_spatial();
    void update_fixed();
    void update_precisions();
    void adapt(int iteration);
    void record(ChainOutput& out) const;

    const ModelData& d_;
    const McmcOptions& opt_;
    Rng rng_;

    int p_ = 0;
    Eigen::VectorXd beta_;
    Eigen::Vector4d gamma_;
    Eigen::VectorXd xb_;
    Eigen::VectorXd eps_;
    Eigen::VectorXd s_;
    Eigen::VectorXd ll_;  // per-village log-likelihood cache
    double tau_eps_ = 1.0;
    double tau_s_ = 1.0;

    Eigen::VectorXd log_step_eps_;
    Eigen::VectorXd log_step_s_;
    Eigen::VectorXi accept_eps_;
    Eigen::VectorXi accept_s_;
    int accept_block_ = 0;
    double log_block_scale_ = 0.0;
    Eigen::MatrixXd block_chol_;
    std::vector<Eigen::VectorXd> block_history_;
};

void Chain::initialise() {
    p_ = static_cast<int>(d_.x.cols());
    const int v = d_.villages;
    Eigen::VectorXd theta = d_.theta0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) += 0.1 * standard_normal(rng_);
    beta_ = theta.head(p_);
    gamma_ = theta.tail(kStrata);
    xb_ = d_.x * beta_;
    eps_ = Eigen::VectorXd::Zero(v);
    s_ = Eigen::VectorXd::Zero(v);
    std::gamma_distribution<double> prior(d_.prior_shape, 1.0 / d_.prior_rate);
    tau_eps_ = prior(rng_);
    tau_s_ = prior(rng_);
    ll_.resize(v);
    for (int i = 0; i < v; ++i) ll_(i) = village_ll(i, xb_(i));

    log_step_eps_ = Eigen::VectorXd::Constant(v, std::log(0.5));
    log_step_s_ = Eigen::VectorXd::Constant(v, std::log(0.5));
    accept_eps_ = Eigen::VectorXi::Zero(v);
    accept_s_ = Eigen::VectorXi::Zero(v);
    const double dim = static_cast<double>(theta.size());
    log_block_scale_ = std::log(2.38 * 2.38 / dim);
    block_chol_ = d_.proposal_cov.llt().matrixL();
}

void Chain::update_eps() {
    for (int i = 0; i < d_.villages; ++i) {
        const double proposal = eps_(i) + std::exp(log_step_eps_(i)) * standard_normal(rng_);
        const double ll_new = village_ll(i, xb_(i) + proposal + s_(i));
        const double log_ratio =
            ll_new - ll_(i) - 0.5 * tau_eps_ * (proposal * proposal - eps_(i) * eps_(i));
        if (std::log(uniform01(rng_)) < log_ratio) {
            eps_(i) = proposal;
            ll_(i) = ll_new;
            ++accept_eps_(i);
        }
    }
}

void Chain::update_spatial() {
    for (int i = 0; i < d_.villages; ++i) {
        const auto& nb = d_.neighbors[i];
        double mean = 0.0;
        for (const int j : nb) mean += s_(j);
        mean /= static_cast<double>(nb.size());
        const double precision = tau_s_ * static_cast<double>(nb.size());
        const double proposal = s_(i) + std::exp(log_step_s_(i)) * standard_normal(rng_);
        const double ll_new = village_ll(i, xb_(i) + eps_(i) + proposal);
        const double log_ratio = ll_new - ll_(i) -
                                 0.5 * precision *
                                     ((proposal - mean) * (proposal - mean) - (s_(i) - mean) * (s_(i) - mean));
        if (std::log(uniform01(rng_)) < log_ratio) {
            s_(i) = proposal;
            ll_(i) = ll_new;
            ++accept_s_(i);
        }
    }
    const double centre = s_.mean();
    s_.array() -= centre;
    gamma_.array() += centre;
}

void Chain::update_fixed() {
    const Eigen::Index dim = p_ + kStrata;
    Eigen::VectorXd z(dim);
    for (Eigen::Index k = 0; k < dim; ++k) z(k) = standard_normal(rng_);
    const Eigen::VectorXd step = std::exp(0.5 * log_block_scale_) * (block_chol_ * z);

    const Eigen::VectorXd beta_old = beta_;
    const Eigen::Vector4d gamma_old = gamma_;
    beta_ += step.head(p_);
    gamma_ += step.tail(kStrata);
    const Eigen::VectorXd xb_new = d_.x * beta_;
    Eigen::VectorXd ll_new(d_.villages);
    for (int i = 0; i < d_.villages; ++i) ll_new(i) = village_ll(i, xb_new(i) + eps_(i) + s_(i));
    if (std::log(uniform01(rng_)) < ll_new.sum() - ll_.sum()) {
        xb_ = xb_new;
        ll_ = ll_new;
        ++accept_block_;
    } else {
        beta_ = beta_old;
        gamma_ = gamma_old;
    }
}

void Chain::update_precisions() {
    const double v = d_.villages;
    std::gamma_distribution<double> eps_draw(d_.prior_shape + 0.5 * v,
                                             1.0 / (d_.prior_rate + 0.5 * eps_.squaredNorm()));
    tau_eps_ = eps_draw(rng_);

    double quad = 0.0;
    for (const auto& [i, j] : d_.edges) quad += (s_(i) - s_(j)) * (s_(i) - s_(j));
    // rank of Q is villages - 1 on a connected graph
    std::gamma_distribution<double> s_draw(d_.prior_shape + 0.5 * (v - 1.0),
                                           1.0 / (d_.prior_rate + 0.5 * quad));
    tau_s_ = s_draw(rng_);
}

void Chain::adapt(int iteration) {
    const int batch = (iteration + 1) / kAdaptBatch;
    const double delta = std::min(0.5, 3.0 / std::sqrt(static_cast<double>(batch)));
    auto tune = [&](double& log_step, int& accepted, double target) {
        const double rate = static_cast<double>(accepted) / kAdaptBatch;
        log_step += rate > target ? delta : -delta;
        accepted = 0;
    };
    for (int i = 0; i < d_.villages; ++i) {
        tune(log_step_eps_(i), accept_eps_(i), 0.44);
        tune(log_step_s_(i), accept_s_(i), 0.44);
    }
    tune(log_block_scale_, accept_block_, 0.234);
}

void Chain::record(ChainOutput& out) const {
    std::size_t k = 0;
    for (int c = 0; c < p_; ++c) out.traces[k++].push_back(beta_(c));
    for (int j = 0; j < kStrata; ++j) out.traces[k++].push_back(gamma_(j));
    out.traces[k++].push_back(1.0 / tau_eps_);
    out.traces[k++].push_back(1.0 / tau_s_);
    out.traces[k++].push_back(tau_eps_);

    for (int i = 0; i < d_.villages; ++i) {
        const double u = xb_(i) + eps_(i) + s_(i);
        for (int j = 0; j < kStrata; ++j) out.p_sum(i, j) += expit(u + gamma_(j));
    }
    out.eps_sum += eps_;
    out.s_sum += s_;
}

ChainOutput Chain::run() {
    initialise();
    ChainOutput out;
    out.traces.resize(static_cast<std::size_t>(p_ + kStrata + 3));
    out.p_sum = CellMatrix::Zero(d_.villages, kStrata);
    out.eps_sum = Eigen::VectorXd::Zero(d_.villages);
    out.s_sum = Eigen::VectorXd::Zero(d_.villages);

    const int burn = opt_.burn_in;
    const int window_start = burn / 4;
    const int window_end = burn / 2;
    const Eigen::Index dim = p_ + kStrata;

    for (int it = 0; it < opt_.iterations; ++it) {
        update_eps();
        update_spatial();
        update_fixed();
        update_precisions();

        if (it < burn) {
            if ((it + 1) % kAdaptBatch == 0) adapt(it);
            if (it >= window_start && it < window_end) {
                Eigen::VectorXd theta(dim);
                theta << beta_, gamma_;
                block_history_.push_back(std::move(theta));
            }
            if (it + 1 == window_end && block_history_.size() > static_cast<std::size_t>(4 * dim)) {
                // replace the initial proposal shape by the empirical one
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
                for (const auto& t : block_history_) mean += t;
                mean /= static_cast<double>(block_history_.size());
                Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
                for (const auto& t : block_history_) cov += (t - mean) * (t - mean).transpose();
                cov /= static_cast<double>(block_history_.size() - 1);
                cov.diagonal().array() += 1e-8;
                Eigen::LLT<Eigen::MatrixXd> llt(cov);
                if (llt.info() == Eigen::Success) {
                    block_chol_ = llt.matrixL();
                    log_block_scale_ = std::log(2.38 * 2.38 / static_cast<double>(dim));
                }
                block_history_.clear();
                block_history_.shrink_to_fit();
            }
        } else if ((it - burn) % opt_.thin == 0) {
            record(out);
            ++out.kept;
        }
    }
    return out;
}

PosteriorSummary summarise(std::vector<double> draws) {
    PosteriorSummary s;
    const double n = static_cast<double>(draws.size());
    s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double ss = 0.0;
    for (const double v : draws) ss += (v - s.mean) * (v - s.mean);
    s.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    auto quantile = [&](double q) {
        const auto k = static_cast<std::size_t>(std::floor(q * (n - 1.0)));
        std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k), draws.end());
        return draws[k];
    };
    s.q025 = quantile(0.025);
    s.q975 = quantile(0.975);
    return s;
}

// Effective sample size from the chain-averaged autocorrelation, truncated at
// the first non-positive pair sum.
double effective_size(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    if (n < 4) return static_cast<double>(m * n);
    std::vector<double> means(m);
    double var = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = std::accumulate(chains[c].begin(), chains[c].end(), 0.0) / n;
        for (const double v : chains[c]) var += (v - means[c]) * (v - means[c]);
    }
    var /= static_cast<double>(m * n);
    if (!(var > 0.0)) return static_cast<double>(m * n);
    auto rho = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            for (std::size_t t = 0; t + lag < n; ++t) {
                acc += (chains[c][t] - means[c]) * (chains[c][t + lag] - means[c]);
            }
        }
        return acc / (static_cast<double>(m * n) * var);
    };
    double tau = 1.0;
    for (std::size_t lag = 1; lag + 1 < n; lag += 2) {
        const double pair = rho(lag) + rho(lag + 1);
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return static_cast<double>(m * n) / tau;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        if (half < 2) return std::numeric_limits<double>::quiet_NaN();
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(halves.front().size());
    std::vector<double> means;
    double within = 0.0;
    for (const auto& h : halves) {
        const double mu = std::accumulate(h.begin(), h.end(), 0.0) / n;
        double ss = 0.0;
        for (const double v : h) ss += (v - mu) * (v - mu);
        within += ss / (n - 1.0);
        means.push_back(mu);
    }
    within /= m;
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double between = 0.0;
    for (const double mu : means) between += (mu - grand) * (mu - grand);
    between *= n / (m - 1.0);
    if (!(within > 0.0)) return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double pooled = (n - 1.0) / n * within + between / n;
    return std::sqrt(pooled / within);
}

FitResult fit_spatial_bayes(const SampleData& sample, const Eigen::MatrixXd& x,
                            const VillageMap& map, const PriorSpec& priors,
                            const McmcOptions& options) {
    priors.validate();
    const int villages = static_cast<int>(sample.design.n.rows());
    if (map.village_count() != villages || x.rows() != villages) {
        throw std::invalid_argument("fit_spatial_bayes: map, covariates and sample disagree in size");
    }
    if (villages < 2 || !graph_is_connected(map.neighbors)) {
        throw GeometryError(GeometryError::Kind::disconnected,
                            "fit_spatial_bayes: neighbour graph must be connected");
    }
    if (options.chains < 1 || options.thin < 1 || options.burn_in < 0 ||
        options.iterations <= options.burn_in) {
        throw std::invalid_argument("fit_spatial_bayes: invalid chain settings");
    }

    ModelData d;
    d.villages = villages;
    d.n = sample.design.n;
    d.y = sample.y;
    d.neighbors = map.neighbors;
    for (int i = 0; i < villages; ++i) {
        for (const int j : map.neighbors[i]) {
            if (i < j) d.edges.emplace_back(i, j);
        }
    }
    d.prior_shape = priors.shape;
    d.prior_rate = priors.rate();

    // Start from the model III fit; without one, start at zero with a unit-scale
    // proposal.
    std::vector<int> active;
    Eigen::VectorXd start_beta;
    Eigen::Vector4d start_gamma = Eigen::Vector4d::Zero();
    Eigen::VectorXd start_sd;
    try {
        const FitResult mle = fit_logistic_mle(sample, x);
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (std::isfinite(mle.beta(c))) active.push_back(static_cast<int>(c));
        }
        start_beta.resize(static_cast<Eigen::Index>(active.size()));
        start_sd.resize(static_cast<Eigen::Index>(active.size()) + kStrata);
        for (std::size_t a = 0; a < active.size(); ++a) {
            start_beta(a) = mle.beta(active[a]);
            start_sd(a) = mle.beta_sd(active[a]);
        }
        start_gamma = mle.gamma;
        start_sd.tail(kStrata) = mle.gamma_sd;
        if (!start_sd.allFinite()) start_sd.setConstant(0.1);
    } catch (const std::invalid_argument&) {
        active.resize(static_cast<std::size_t>(x.cols()));
        std::iota(active.begin(), active.end(), 0);
        start_beta = Eigen::VectorXd::Zero(x.cols());
        start_sd = Eigen::VectorXd::Constant(x.cols() + kStrata, 0.1);
    }
    const auto p = static_cast<Eigen::Index>(active.size());
    d.x.resize(villages, p);
    for (Eigen::Index a = 0; a < p; ++a) d.x.col(a) = x.col(active[a]);
    d.theta0.resize(p + kStrata);
    d.theta0 << start_beta, start_gamma;
    d.proposal_cov = start_sd.array().square().matrix().asDiagonal();

    std::vector<ChainOutput> outputs(static_cast<std::size_t>(options.chains));
    if (options.parallel_chains && options.chains > 1) {
        std::vector<std::thread> workers;
        for (int c = 0; c < options.chains; ++c) {
            workers.emplace_back([&, c] { outputs[c] = Chain(d, options, c).run(); });
        }
        for (auto& w : workers) w.join();
    } else {
        for (int c = 0; c < options.chains; ++c) outputs[c] = Chain(d, options, c).run();
    }

    FitResult fit;
    fit.model = Model::covariates_space;
    long kept = 0;
    fit.p_hat = CellMatrix::Zero(villages, kStrata);
    fit.eps_mean = Eigen::VectorXd::Zero(villages);
    fit.spatial_mean = Eigen::VectorXd::Zero(villages);
    for (const auto& out : outputs) {
        fit.p_hat += out.p_sum;
        fit.eps_mean += out.eps_sum;
        fit.spatial_mean += out.s_sum;
        kept += out.kept;
    }
    fit.p_hat /= static_cast<double>(kept);
    fit.eps_mean /= static_cast<double>(kept);
    fit.spatial_mean /= static_cast<double>(kept);

    auto gather = [&](std::size_t k) {
        std::vector<std::vector<double>> per_chain;
        for (const auto& out : outputs) per_chain.push_back(out.traces[k]);
        return per_chain;
    };
    auto pooled = [](const std::vector<std::vector<double>>& chains) {
        std::vector<double> all;
        for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
        return all;
    };

    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.beta = Eigen::VectorXd::Constant(x.cols(), nan);
    fit.beta_sd = Eigen::VectorXd::Constant(x.cols(), nan);
    double max_rhat = 0.0;
    double min_ess = std::numeric_limits<double>::infinity();
    // tracked quantities except tau_eps enter the convergence check
    const std::size_t checked = static_cast<std::size_t>(p + kStrata + 2);
    for (std::size_t k = 0; k < checked; ++k) {
        const auto chains = gather(k);
        const double rhat = split_rhat(chains);
        max_rhat = std::max(max_rhat, std::isfinite(rhat) ? rhat : std::numeric_limits<double>::infinity());
        min_ess = std::min(min_ess, effective_size(chains));
        const PosteriorSummary s = summarise(pooled(chains));
        if (k < static_cast<std::size_t>(p)) {
            fit.beta(active[k]) = s.mean;
            fit.beta_sd(active[k]) = s.sd;
        } else if (k < static_cast<std::size_t>(p + kStrata)) {
            fit.gamma(static_cast<Eigen::Index>(k) - p) = s.mean;
            fit.gamma_sd(static_cast<Eigen::Index>(k) - p) = s.sd;
        } else if (k == static_cast<std::size_t>(p + kStrata)) {
            fit.sigma2_eps = s;
        } else {
            fit.sigma2_s = s;
        }
    }
    fit.precision_eps = summarise(pooled(gather(checked)));

    fit.diagnostics.iterations = options.iterations;
    fit.diagnostics.max_rhat = max_rhat;
    fit.diagnostics.min_ess = min_ess;
    fit.diagnostics.converged = max_rhat <= options.rhat_threshold;
    if (!fit.diagnostics.converged) {
        fit.diagnostics.note = "split R-hat above threshold; consider longer chains";
    }
    return fit;
}

}  // namespace hyak
