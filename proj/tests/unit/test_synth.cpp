#include "doctest.h"

#include "hyak/geometry.hpp"
#include "hyak/synth.hpp"
#include "hyak/validation/oracles.hpp"

using namespace hyak;

namespace {

VillageMap default_map() {
    const auto pts = generate_layout(kDefaultLayoutSeed, 20);
    return build_neighbor_graph(pts, padded_bounding_box(pts));
}

}  // namespace

TEST_CASE("stratum table order") {
    CHECK(kStrataTable[0].label == "young girls");
    CHECK(kStrataTable[1].label == "young boys");
    CHECK(kStrataTable[2].label == "older girls");
    CHECK(kStrataTable[3].label == "older boys");
    CHECK(kStrataTable[1].sex == Sex::male);
    CHECK(kStrataTable[2].age_band == AgeBand::one_to_four);
}

TEST_CASE("true risks at zero covariates and effects are the baseline risks") {
    const MortalityParams params = MortalityParams::defaults();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
    x(1, 0) = 1.0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    const CellMatrix p = compute_true_probs(params, x, zero, zero);
    CHECK(p(0, 0) == doctest::Approx(0.050).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.117).epsilon(1e-12));
    CHECK(p(0, 2) == doctest::Approx(0.032).epsilon(1e-12));
    CHECK(p(0, 3) == doctest::Approx(0.071).epsilon(1e-12));
    const double odds = 0.05 / 0.95 * std::exp(-1.1);
    CHECK(p(1, 0) == doctest::Approx(odds / (1.0 + odds)).epsilon(1e-12));
    CHECK(std::abs(p(1, 0) - 0.0172) < 5e-5);
}

TEST_CASE("unstructured odds range") {
    const double half = 1.96 * std::sqrt(MortalityParams::defaults().sigma2_eps);
    CHECK(std::round(std::exp(-half) * 100.0) / 100.0 == doctest::Approx(0.40));
    CHECK(std::round(std::exp(half) * 100.0) / 100.0 == doctest::Approx(2.51));
}

TEST_CASE("parameter validation") {
    MortalityParams p = MortalityParams::defaults();
    CHECK_NOTHROW(p.validate());
    p.sigma2_s = 0.0;
    CHECK_THROWS(p.validate());
    p = MortalityParams::defaults();
    p.beta(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS(p.validate());
}

TEST_CASE("covariates: range, determinism, moments") {
    Rng a = make_rng(1, 0, "covariates");
    Rng b = make_rng(1, 0, "covariates");
    const Eigen::MatrixXd xa = gen_covariates(a, 20);
    CHECK(xa == gen_covariates(b, 20));
    CHECK(xa.minCoeff() >= 0.0);
    CHECK(xa.maxCoeff() <= 1.0);
    Rng c = make_rng(2, 0, "covariates");
    const Eigen::MatrixXd big = gen_covariates(c, 100000);
    CHECK(std::abs(big.col(0).mean() - 0.5) < 0.005);
    CHECK(std::abs(big.col(1).mean() - 0.5) < 0.005);
}

TEST_CASE("ICAR draws sum to zero and collapse with the variance") {
    const VillageMap map = default_map();
    const IcarSampler sampler(map.neighbors);
    Rng rng = make_rng(3, 0, "icar");
    for (int k = 0; k < 100; ++k) CHECK(std::abs(sampler.draw(rng, 0.48).sum()) < 1e-10);
    CHECK(sampler.draw(rng, 1e-12).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS(sampler.draw(rng, 0.0));
    CHECK(std::abs(sample_icar(rng, map, 0.48).sum()) < 1e-10);
}

TEST_CASE("ICAR structure and pseudo-inverse agree with the rank-one-shift route") {
    const VillageMap map = default_map();
    const Eigen::MatrixXd Q = icar_structure(map.neighbors);
    for (int i = 0; i < 20; ++i) {
        CHECK(Q(i, i) == map.degree(i));
        CHECK(std::abs(Q.row(i).sum()) < 1e-12);
    }
    const IcarSampler sampler(map.neighbors);
    const Eigen::MatrixXd pinv = sampler.pseudo_inverse();
    CHECK((pinv - oracle::icar_pseudo_inverse(Q)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((Q * pinv * Q - Q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ICAR path graph pseudo-inverse by hand") {
    // Q = [[1,-1,0],[-1,2,-1],[0,-1,1]]; Q^+ has rows (5,-1,-4)/9, (-1,2,-1)/9, (-4,-1,5)/9
    const IcarSampler sampler({{1}, {0, 2}, {1}});
    Eigen::Matrix3d expected;
    expected << 5, -1, -4, -1, 2, -1, -4, -1, 5;
    expected /= 9.0;
    CHECK((sampler.pseudo_inverse() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("disconnected neighbour graph is rejected by the ICAR sampler") {
    CHECK_THROWS_AS(IcarSampler({{1}, {0}, {3}, {2}}), GeometryError);
}

TEST_CASE("binomial deaths: edge cases and moments") {
    Rng rng = make_rng(4, 0, "deaths");
    CountMatrix N = CountMatrix::Constant(1, kStrata, 350);
    CellMatrix p(1, kStrata);
    p << 0.0, 1.0, 0.1, 0.5;
    const CountMatrix Y = draw_deaths(rng, p, N);
    CHECK(Y(0, 0) == 0);
    CHECK(Y(0, 1) == 350);

    double sum = 0.0;
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) sum += draw_binomial(rng, 350, 0.1);
    const double se = std::sqrt(350 * 0.1 * 0.9 / draws);
    CHECK(std::abs(sum / draws - 35.0) < 3.0 * se);
}

TEST_CASE("population frame invariants and determinism") {
    const VillageMap map = default_map();
    const IcarSampler icar(map.neighbors);
    Rng cov = make_rng(8, 0, "covariates");
    const Eigen::MatrixXd x = gen_covariates(cov, 20);
    const CountMatrix N = CountMatrix::Constant(20, kStrata, 350);
    Rng a = make_rng(8, 1, "truth");
    Rng b = make_rng(8, 1, "truth");
    const PopulationFrame f = generate_population(a, MortalityParams::defaults(), icar, x, N);
    const PopulationFrame g = generate_population(b, MortalityParams::defaults(), icar, x, N);
    CHECK(f.Y == g.Y);
    CHECK(f.S == g.S);
    CHECK(std::abs(f.S.sum()) < 1e-10);
    CHECK(f.N.sum() == 28000);
    CHECK((f.Y.array() >= 0).all());
    CHECK((f.Y.array() <= f.N.array()).all());
    CHECK((f.p_true.array() > 0.0).all());
    CHECK((f.p_true.array() < 1.0).all());
}

TEST_CASE("expected total deaths under the default parameters") {
    const VillageMap map = default_map();
    const IcarSampler icar(map.neighbors);
    Rng cov = make_rng(20120928, 0, "covariates");
    const Eigen::MatrixXd x = gen_covariates(cov, 20);
    const CountMatrix N = CountMatrix::Constant(20, kStrata, 350);
    double total = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_rng(20120928, r, "truth");
        total += generate_population(rng, MortalityParams::defaults(), icar, x, N).total_deaths();
    }
    const double mean = total / reps;
    CHECK(mean >= 1800.0);
    CHECK(mean <= 3400.0);
}
