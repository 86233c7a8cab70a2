#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <vector>

#include "fracfield/domains.hpp"
#include "fracfield/errors.hpp"
#include "fracfield/kernels.hpp"
#include "fracfield/simulate.hpp"
#include "fracfield/spectrum.hpp"
#include "oracles.hpp"

using namespace fracfield;

namespace {

simulate::SimulationPlan make_plan(double beta, double alpha, double gamma, int K, int M, int reps,
                                   std::uint64_t seed) {
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(1.0), K);
    spectrum::FracParams p;
    p.beta = beta;
    p.alpha = alpha;
    p.gamma = gamma;
    simulate::SimulationPlan plan;
    plan.trunc = spectrum::build_truncation(sys, p, K);
    plan.time_grid = mlf::TimeGrid::uniform_grid(1.0, M);
    plan.space_points = {{0.3}, {0.5}, {0.7}};
    plan.replicates = reps;
    plan.master_seed = seed;
    return plan;
}

}  // namespace

TEST_CASE("seed derivation separates replicate and mode streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 64; ++r)
        for (std::uint64_t k = 0; k < 64; ++k) seen.insert(simulate::derive_seed(42, r, k));
    CHECK(seen.size() == 64 * 64);
    CHECK(simulate::derive_seed(42, 3, 5) == simulate::derive_seed(42, 3, 5));
    CHECK(simulate::derive_seed(42, 3, 5) != simulate::derive_seed(43, 3, 5));
}

TEST_CASE("sampling is deterministic in the master seed") {
    auto plan = make_plan(0.4, 3.0, 1.0, 6, 9, 4, 777);
    const auto a = simulate::sample_ensemble(plan);
    const auto b = simulate::sample_ensemble(plan);
    CHECK(a.raw() == b.raw());
    plan.master_seed = 778;
    const auto c = simulate::sample_ensemble(plan);
    CHECK(a.raw() != c.raw());
    CHECK(a.replicates() == 4);
    CHECK(a.time_points() == 9);
    CHECK(a.space_points() == 3);
    CHECK(a.times.front() == 0.0);
    for (int r = 0; r < 4; ++r)
        for (int j = 0; j < 3; ++j) CHECK(a.at(r, 0, j) == 0.0);
}

TEST_CASE("thread count does not change the sample") {
    auto plan = make_plan(0.4, 3.0, 1.0, 6, 9, 8, 123);
    setenv("FRACFIELD_THREADS", "1", 1);
    const auto a = simulate::sample_ensemble(plan);
    setenv("FRACFIELD_THREADS", "5", 1);
    const auto b = simulate::sample_ensemble(plan);
    unsetenv("FRACFIELD_THREADS");
    CHECK(a.raw() == b.raw());
}

TEST_CASE("Monte Carlo covariance matches the semi-analytic kernel") {
    auto plan = make_plan(0.4, 3.0, 1.0, 8, 17, 4000, 20240817);
    const auto ens = simulate::sample_ensemble(plan);

    std::vector<simulate::EstimateTarget> targets;
    // variance at (t=1, x=0.5), covariance (t=1, s=0.5) and a cross-point pair
    targets.push_back({simulate::EstimateTarget::Kind::covariance, 16, 1, 16, 1});
    targets.push_back({simulate::EstimateTarget::Kind::covariance, 16, 1, 8, 1});
    targets.push_back({simulate::EstimateTarget::Kind::covariance, 16, 0, 12, 2});
    const auto est = simulate::ensemble_estimate(ens, targets);
    REQUIRE(est.size() == 3);

    const auto& tr = plan.trunc;
    const double exact0 = kernels::covariance(tr, 1.0, 1.0, {0.5}, {0.5});
    const double exact1 = kernels::covariance(tr, 1.0, 0.5, {0.5}, {0.5});
    const double exact2 = kernels::covariance(tr, 1.0, 0.75, {0.3}, {0.7});
    CHECK(std::abs(est[0].value - exact0) < 4.0 * est[0].std_error);
    CHECK(std::abs(est[1].value - exact1) < 4.0 * est[1].std_error);
    CHECK(std::abs(est[2].value - exact2) < 4.0 * est[2].std_error);
    for (const auto& e : est) CHECK(e.std_error > 0.0);
}

TEST_CASE("mean and increment estimates behave") {
    auto plan = make_plan(0.4, 3.0, 1.0, 6, 9, 2000, 5150);
    const auto ens = simulate::sample_ensemble(plan);
    std::vector<simulate::EstimateTarget> targets;
    targets.push_back({simulate::EstimateTarget::Kind::mean, 8, 1, 0, 0});
    targets.push_back({simulate::EstimateTarget::Kind::increment, 8, 1, 4, 0});
    const auto est = simulate::ensemble_estimate(ens, targets);
    CHECK(std::abs(est[0].value) < 4.0 * est[0].std_error);

    // increment target against the hand-rolled average
    double acc = 0.0;
    for (int r = 0; r < ens.replicates(); ++r) {
        const double d = ens.at(r, 8, 1) - ens.at(r, 4, 1);
        acc += d * d;
    }
    acc /= ens.replicates();
    CHECK(est[1].value == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("beta = 1 sampling reproduces the OU law") {
    auto plan = make_plan(1.0, 2.0, 0.0, 1, 9, 4000, 99);
    const auto ens = simulate::sample_ensemble(plan);
    const double lam = plan.trunc.lambda(0);
    const double phi2 = plan.trunc.phi(0, {0.5}) * plan.trunc.phi(0, {0.5});
    std::vector<simulate::EstimateTarget> targets;
    targets.push_back({simulate::EstimateTarget::Kind::covariance, 8, 1, 8, 1});
    targets.push_back({simulate::EstimateTarget::Kind::covariance, 8, 1, 4, 1});
    const auto est = simulate::ensemble_estimate(ens, targets);
    CHECK(std::abs(est[0].value - phi2 * oracles::ou_variance(lam, 1.0)) < 4.0 * est[0].std_error);
    CHECK(std::abs(est[1].value - phi2 * oracles::ou_mode_cov(lam, 1.0, 0.5)) <
          4.0 * est[1].std_error);
}

TEST_CASE("riemann sampling approaches the exact law under refinement") {
    // left-endpoint sums miss the kernel's singular layer, so the bias decays
    // slowly; assert the monotone ladder, not a fixed order
    std::vector<double> gaps;
    double exact = 0.0;
    for (int M : {17, 65, 257}) {
        auto plan = make_plan(0.4, 3.0, 1.0, 4, M, 3000, 314159);
        plan.method = simulate::SimulationPlan::Method::riemann;
        const auto ens = simulate::riemann_sample(plan);
        double acc = 0.0;
        for (int r = 0; r < ens.replicates(); ++r) acc += ens.at(r, M - 1, 1) * ens.at(r, M - 1, 1);
        acc /= ens.replicates();
        exact = kernels::covariance(plan.trunc, 1.0, 1.0, {0.5}, {0.5});
        gaps.push_back(std::abs(acc - exact));
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
    CHECK(gaps[2] < 0.5 * gaps[0]);
    CHECK(gaps[2] < 0.25 * exact);
}

TEST_CASE("plans validate their geometry") {
    auto plan = make_plan(0.4, 3.0, 1.0, 4, 9, 2, 1);
    plan.replicates = 0;
    CHECK_THROWS_AS(plan.validate(), invalid_input);
    plan = make_plan(0.4, 3.0, 1.0, 4, 9, 2, 1);
    plan.space_points.clear();
    CHECK_THROWS_AS(plan.validate(), invalid_input);
    plan = make_plan(0.4, 3.0, 1.0, 4, 9, 2, 1);
    plan.space_points.push_back({1.5});
    CHECK_THROWS_AS(plan.validate(), invalid_input);
    plan = make_plan(0.4, 3.0, 1.0, 4, 9, 2, 1);
    plan.time_grid.points[0] = 0.1;
    CHECK_THROWS_AS(plan.validate(), invalid_input);
    plan = make_plan(0.4, 3.0, 1.0, 4, 9, 2, 1);
    plan.method = simulate::SimulationPlan::Method::riemann;
    CHECK_THROWS_AS(simulate::sample_ensemble(plan), invalid_input);
}

TEST_CASE("binary serialization round-trips bit-exactly") {
    auto plan = make_plan(0.4, 3.0, 1.0, 5, 9, 6, 2718);
    const auto ens = simulate::sample_ensemble(plan);
    const std::string path = "/tmp/fracfield_test_ensemble.bin";
    simulate::write_binary(ens, path);
    const auto back = simulate::read_binary(path);
    std::remove(path.c_str());
    CHECK(back.raw() == ens.raw());
    CHECK(back.times == ens.times);
    CHECK(back.points == ens.points);
    CHECK(back.master_seed == ens.master_seed);

    const std::string csv = simulate::to_csv(ens);
    CHECK(csv.rfind("replicate,t,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          1 + ens.replicates() * ens.time_points() * ens.space_points());
}
