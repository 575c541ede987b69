#include "doctest.h"

#include <algorithm>

#include "hyak/metrics.hpp"
#include "hyak/validation/checks.hpp"
#include "hyak/validation/oracles.hpp"

using namespace hyak;

namespace {

std::vector<CellMatrix> random_sets(Rng& rng, int reps, int villages, double lo, double hi) {
    std::vector<CellMatrix> out;
    for (int s = 0; s < reps; ++s) {
        CellMatrix m(villages, kStrata);
        for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = lo + (hi - lo) * uniform01(rng);
        out.push_back(m);
    }
    return out;
}

MetricsReport report_with(double deaths, double bias_rms, double var_sum, double mse) {
    MetricsReport r;
    r.deaths_captured = deaths;
    r.bias_rms = bias_rms;
    r.var_sum = var_sum;
    r.mse = mse;
    return r;
}

}  // namespace

TEST_CASE("predicted deaths") {
    SampleData s;
    s.design.n = CountMatrix::Zero(2, kStrata);
    s.y = CountMatrix::Zero(2, kStrata);
    s.design.n(0, 0) = 100;
    s.y(0, 0) = 10;
    s.design.n(1, 3) = 350;
    s.y(1, 3) = 17;
    const CountMatrix N = CountMatrix::Constant(2, kStrata, 350);
    CellMatrix p = CellMatrix::Constant(2, kStrata, 0.1);
    p(0, 0) = 0.08;
    const CellMatrix Yhat = predict_deaths(s, N, p);
    CHECK(Yhat(0, 0) == doctest::Approx(30.0));
    CHECK(Yhat(0, 1) == doctest::Approx(35.0));
    CHECK(Yhat(1, 3) == 17.0);
}

TEST_CASE("perfect predictions have zero error; one replicate has zero variance") {
    Rng rng = make_rng(1, 0, "metrics");
    const auto truth = random_sets(rng, 5, 20, 0, 40);
    const MetricsReport perfect = mse_decomposition(truth, truth);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.var_sum == 0.0);
    CHECK(perfect.bias_sq_sum == 0.0);

    const auto pred = random_sets(rng, 1, 20, 0, 40);
    const std::vector<CellMatrix> one_truth{truth[0]};
    const MetricsReport single = mse_decomposition(pred, one_truth);
    CHECK(single.var_sum == 0.0);
    CHECK(single.mse == single.bias_sq_sum);
    CHECK(single.replicates == 1);
    CHECK_THROWS(mse_decomposition(std::vector<CellMatrix>{}, std::vector<CellMatrix>{}));
    CHECK_THROWS(mse_decomposition(pred, truth));
}

TEST_CASE("decomposition agrees with the direct mean squared error") {
    Rng rng = make_rng(2, 0, "metrics");
    for (int t = 0; t < 20; ++t) {
        const auto truth = random_sets(rng, 13, 20, 0, 40);
        const auto pred = random_sets(rng, 13, 20, 5, 50);
        const MetricsReport m = mse_decomposition(pred, truth);
        CHECK(m.mse == doctest::Approx(oracle::direct_mse(pred, truth)).epsilon(1e-12));
        CHECK(m.mse == doctest::Approx(m.bias_sq_sum + m.var_sum).epsilon(1e-12));
        CHECK(m.bias_rms == doctest::Approx(std::sqrt(m.bias_sq_sum)));
        CHECK(m.var_sum >= 0.0);
    }
    const auto r = validation::check_decomposition_identity(200, 3);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("fixed truth reduces to squared bias plus variance of the predictions") {
    Rng rng = make_rng(3, 0, "metrics");
    const auto one = random_sets(rng, 1, 4, 0, 40);
    const std::vector<CellMatrix> truth(6, one[0]);
    const auto pred = random_sets(rng, 6, 4, 0, 40);
    const MetricsReport m = mse_decomposition(pred, truth);
    double bias_sq = 0.0;
    double var = 0.0;
    for (Eigen::Index k = 0; k < one[0].size(); ++k) {
        double mean = 0.0;
        for (const auto& p : pred) mean += p(k);
        mean /= 6.0;
        bias_sq += (mean - one[0](k)) * (mean - one[0](k));
        for (const auto& p : pred) var += (p(k) - mean) * (p(k) - mean) / 6.0;
    }
    CHECK(m.bias_sq_sum == doctest::Approx(bias_sq).epsilon(1e-12));
    CHECK(m.var_sum == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("a constant shift changes only the bias") {
    Rng rng = make_rng(4, 0, "metrics");
    const auto truth = random_sets(rng, 9, 20, 0, 40);
    const auto pred = random_sets(rng, 9, 20, 0, 40);
    const double c = 2.5;
    std::vector<CellMatrix> shifted;
    for (const auto& p : pred) shifted.push_back(p.array() + c);
    const MetricsReport a = mse_decomposition(pred, truth);
    const MetricsReport b = mse_decomposition(shifted, truth);
    double expected = 0.0;
    for (Eigen::Index k = 0; k < a.mean_prediction.size(); ++k) {
        const double bias = a.mean_prediction(k) - a.mean_truth(k);
        expected += 2.0 * c * bias + c * c;
    }
    CHECK(b.bias_sq_sum - a.bias_sq_sum == doctest::Approx(expected).epsilon(1e-9));
    CHECK(b.var_sum == doctest::Approx(a.var_sum).epsilon(1e-12));
}

TEST_CASE("metrics do not depend on replicate order") {
    Rng rng = make_rng(5, 0, "metrics");
    auto truth = random_sets(rng, 11, 20, 0, 40);
    auto pred = random_sets(rng, 11, 20, 0, 40);
    const MetricsReport a = mse_decomposition(pred, truth);
    std::reverse(truth.begin(), truth.end());
    std::reverse(pred.begin(), pred.end());
    const MetricsReport b = mse_decomposition(pred, truth);
    CHECK(b.mse == doctest::Approx(a.mse).epsilon(1e-12));
    CHECK(b.var_sum == doctest::Approx(a.var_sum).epsilon(1e-12));
}

TEST_CASE("published table arithmetic") {
    // cluster / model I row: MSE 1918, variance 353
    const double bias_sq = 1918.0 - 353.0;
    CHECK(bias_sq == 1565.0);
    CHECK(std::round(std::sqrt(bias_sq)) == 40.0);
    CHECK(40.0 * 40.0 + 353.0 != doctest::Approx(1918.0).epsilon(0.01));

    const Comparison deaths = comparison_table(report_with(473, 40, 353, 1918), report_with(549, 0, 86, 1855));
    CHECK(deaths.difference[0] == 76.0);
    CHECK(*deaths.proportional[0] == doctest::Approx(0.1607).epsilon(1e-3));
    CHECK(deaths.difference[2] == -267.0);
    CHECK(std::round(*deaths.proportional[2] * 100.0) == -76.0);
}

TEST_CASE("comparison of identical reports and of a zero baseline") {
    const MetricsReport r = report_with(10, 2, 3, 7);
    const Comparison same = comparison_table(r, r);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(same.difference[k] == 0.0);
        CHECK(*same.proportional[k] == 0.0);
    }
    const Comparison zero = comparison_table(report_with(0, 0, 0, 0), r);
    for (std::size_t k = 0; k < 4; ++k) CHECK_FALSE(zero.proportional[k].has_value());
}
