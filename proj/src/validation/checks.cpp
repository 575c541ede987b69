#include "hyak/validation/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hyak/estimators.hpp"
#include "hyak/experiment.hpp"
#include "hyak/geometry.hpp"
#include "hyak/metrics.hpp"
#include "hyak/validation/oracles.hpp"

namespace hyak::validation {

namespace {

Box enclosing_box(std::span<const Point> sites) {
    std::vector<Point> all(sites.begin(), sites.end());
    const auto centres = oracle::delaunay_circumcentres(sites);
    all.insert(all.end(), centres.begin(), centres.end());
    Box box{all[0].x(), all[0].y(), all[0].x(), all[0].y()};
    for (const auto& p : all) {
        box.xmin = std::min(box.xmin, p.x());
        box.xmax = std::max(box.xmax, p.x());
        box.ymin = std::min(box.ymin, p.y());
        box.ymax = std::max(box.ymax, p.y());
    }
    const double margin = 0.1 * std::max(box.width(), box.height()) + 1.0;
    box.xmin -= margin;
    box.ymin -= margin;
    box.xmax += margin;
    box.ymax += margin;
    return box;
}

VillageMap default_graph() {
    const auto centroids = generate_layout(kDefaultLayoutSeed, 20);
    return build_neighbor_graph(centroids, padded_bounding_box(centroids));
}

}  // namespace

CheckResult check_geometry_oracle(int trials, std::uint64_t seed) {
    CheckResult r{"geometry-oracle", true, ""};
    int mismatches = 0;
    int edges = 0;
    double worst_area = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t), "geometry-oracle");
        const int count = 5 + static_cast<int>(rng() % 26);
        std::vector<Point> sites;
        for (int k = 0; k < count; ++k) sites.emplace_back(10.0 * uniform01(rng), 10.0 * uniform01(rng));
        const Box box = enclosing_box(sites);

        const VillageMap map = build_neighbor_graph(sites, box);
        const auto delaunay = oracle::delaunay_adjacency(sites);
        if (map.neighbors != delaunay) ++mismatches;
        for (const auto& row : delaunay) edges += static_cast<int>(row.size());

        for (int i = 0; i < count; ++i) {
            const double a = polygon_area(oracle::voronoi_cell_by_vertex_enumeration(sites, box, i));
            worst_area = std::max(worst_area, std::abs(polygon_area(map.cells[i]) - a) / box.area());
        }
    }
    r.passed = mismatches == 0 && worst_area < 1e-8;
    std::ostringstream os;
    os << trials << " point sets, " << edges / 2 << " Delaunay edges, " << mismatches
       << " adjacency mismatches, max cell-area difference " << worst_area << " of box";
    r.detail = os.str();
    return r;
}

double bonferroni_z(double alpha, int tests) {
    const double target = alpha / tests;
    double lo = 0.0;
    double hi = 40.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (std::erfc(mid / std::sqrt(2.0)) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<CheckResult> check_icar(int draws, std::uint64_t seed, IcarConstraint constraint, double z_limit) {
    const VillageMap map = default_graph();
    const IcarSampler sampler(map.neighbors, constraint);
    const double sigma2 = 0.48;
    const Eigen::MatrixXd expected = sigma2 * oracle::icar_pseudo_inverse(icar_structure(map.neighbors));
    const auto n = expected.rows();

    Rng rng = make_rng(seed, 0, "icar-check");
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
    double worst_sum = 0.0;
    for (int m = 0; m < draws; ++m) {
        const Eigen::VectorXd s = sampler.draw(rng, sigma2);
        worst_sum = std::max(worst_sum, std::abs(s.sum()));
        second.selfadjointView<Eigen::Lower>().rankUpdate(s);
    }
    second = Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>()) / static_cast<double>(draws);

    // The mean is zero by construction, so E[S S'] is the covariance and the
    // Gaussian fourth-moment identity gives the standard error of each entry.
    int outside = 0;
    int entries = 0;
    double worst_z = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const double se = std::sqrt((expected(a, a) * expected(b, b) + expected(a, b) * expected(a, b)) / draws);
            const double z = std::abs(second(a, b) - expected(a, b)) / se;
            worst_z = std::max(worst_z, z);
            outside += z > z_limit;
            ++entries;
        }
    }

    CheckResult sum{"icar-sum-to-zero", worst_sum <= 1e-10, ""};
    std::ostringstream os;
    os << draws << " draws, max |sum S| = " << worst_sum;
    sum.detail = os.str();

    CheckResult cov{"icar-covariance", outside == 0, ""};
    std::ostringstream oc;
    oc << entries << " entries, " << outside << " beyond " << z_limit << " s.e., max |z| = " << worst_z;
    cov.detail = oc.str();
    return {sum, cov};
}

CheckResult check_mle_oracle(int instances, std::uint64_t seed) {
    CheckResult r{"mle-oracle", true, ""};
    double worst = 0.0;
    int nonconverged = 0;
    for (int t = 0; t < instances; ++t) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t), "mle-oracle");
        Eigen::MatrixXd x(4, 2);
        SampleData sample;
        for (;;) {
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform01(rng);
            const Eigen::Vector2d beta(-1.5 + 3.0 * uniform01(rng), -1.5 + 3.0 * uniform01(rng));
            Eigen::Vector4d gamma;
            for (int j = 0; j < kStrata; ++j) gamma(j) = logit(0.03 + 0.25 * uniform01(rng));
            sample.design.n = CountMatrix(4, kStrata);
            sample.y = CountMatrix(4, kStrata);
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < kStrata; ++j) {
                    const int n = 50 + static_cast<int>(rng() % 251);
                    sample.design.n(i, j) = n;
                    sample.y(i, j) = draw_binomial(rng, n, expit(x.row(i).dot(beta) + gamma(j)));
                }
            }
            if ((sample.y.colwise().sum().array() > 0).all()) break;
        }

        const FitResult fit = fit_logistic_mle(sample, x);
        if (!fit.diagnostics.converged) ++nonconverged;
        const oracle::LogisticOptimum ref = oracle::maximise_logistic_likelihood(sample, x);
        worst = std::max({worst, (fit.beta - ref.beta).cwiseAbs().maxCoeff(),
                          (fit.gamma - ref.gamma).cwiseAbs().maxCoeff()});
    }
    r.passed = worst <= 1e-4 && nonconverged == 0 && std::isfinite(worst);
    std::ostringstream os;
    os << instances << " instances, max coefficient difference " << worst << ", " << nonconverged
       << " IRLS fallbacks";
    r.detail = os.str();
    return r;
}

CheckResult check_decomposition_identity(int sets, std::uint64_t seed) {
    CheckResult r{"decomposition-identity", true, ""};
    double worst_sum = 0.0;
    double worst_direct = 0.0;
    for (int t = 0; t < sets; ++t) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t), "decomposition");
        const int replicates = 1 + static_cast<int>(rng() % 40);
        const int villages = 1 + static_cast<int>(rng() % 25);
        const double shift = 20.0 * (uniform01(rng) - 0.5);
        const double spread = 0.1 + 10.0 * uniform01(rng);
        std::vector<CellMatrix> predictions;
        std::vector<CellMatrix> truths;
        for (int s = 0; s < replicates; ++s) {
            CellMatrix truth(villages, kStrata);
            CellMatrix pred(villages, kStrata);
            for (Eigen::Index k = 0; k < truth.size(); ++k) {
                truth(k) = std::floor(60.0 * uniform01(rng));
                pred(k) = truth(k) + shift + spread * standard_normal(rng);
            }
            truths.push_back(truth);
            predictions.push_back(pred);
        }
        const MetricsReport m = mse_decomposition(predictions, truths);
        const double direct = oracle::direct_mse(predictions, truths);
        worst_sum = std::max(worst_sum, std::abs(m.mse - (m.bias_sq_sum + m.var_sum)) / std::max(1e-300, m.mse));
        worst_direct = std::max(worst_direct, std::abs(m.mse - direct) / std::max(1e-300, direct));
    }
    r.passed = worst_sum <= 1e-10 && worst_direct <= 1e-10;
    std::ostringstream os;
    os << sets << " sets, max relative |mse - (bias^2 + var)| " << worst_sum << ", max relative |mse - direct| "
       << worst_direct;
    r.detail = os.str();
    return r;
}

CheckResult check_census_identity(std::uint64_t seed) {
    CheckResult r{"census-identity", true, ""};
    StudyConfig config;
    config.seed = seed;
    const StudyContext context = prepare_study(config);
    std::vector<int> all(static_cast<std::size_t>(config.village_count));
    for (int i = 0; i < config.village_count; ++i) all[static_cast<std::size_t>(i)] = i;

    int cells = 0;
    int mismatches = 0;
    for (int rep = 0; rep < 5; ++rep) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(rep), "census-identity");
        const PopulationFrame truth = generate_population(rng, config.params, context.icar, context.x, context.N);
        const SampleData census = census_of(all, context.N, truth.Y);
        std::vector<CellMatrix> fits{fit_naive(census).p_hat, fit_age_sex(census).p_hat,
                                     fit_logistic_mle(census, context.x).p_hat};
        CellMatrix arbitrary(context.N.rows(), kStrata);
        for (Eigen::Index k = 0; k < arbitrary.size(); ++k) arbitrary(k) = uniform01(rng);
        fits.push_back(arbitrary);
        for (const auto& p_hat : fits) {
            const CellMatrix predicted = predict_deaths(census, context.N, p_hat);
            for (Eigen::Index k = 0; k < predicted.size(); ++k) {
                ++cells;
                mismatches += predicted(k) != static_cast<double>(truth.Y(k));
            }
        }
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(cells) + " cells, " + std::to_string(mismatches) + " differ from the truth";
    return r;
}

std::vector<CheckResult> run_builtin_suite(Fault fault) {
    const std::uint64_t seed = 7;
    std::vector<CheckResult> out;
    out.push_back(check_census_identity(seed));
    out.push_back(check_decomposition_identity(1000, seed));
    out.push_back(check_geometry_oracle(50, seed));
    const auto constraint =
        fault == Fault::icar_unconstrained ? IcarConstraint::unconstrained : IcarConstraint::sum_to_zero;
    const int entries = 20 * 21 / 2;
    for (auto& c : check_icar(20000, seed, constraint, bonferroni_z(0.01, entries))) out.push_back(std::move(c));
    out.push_back(check_mle_oracle(20, seed));
    return out;
}

}  // namespace hyak::validation
