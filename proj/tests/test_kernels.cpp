#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracfield/domains.hpp"
#include "fracfield/errors.hpp"
#include "fracfield/kernels.hpp"
#include "fracfield/mlf.hpp"
#include "fracfield/spectrum.hpp"
#include "oracles.hpp"

using namespace fracfield;

namespace {

spectrum::SpectralTruncation make_interval_trunc(double beta, double alpha, double gamma, int K,
                                                 int K_raw = 0) {
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(1.0),
                                          K_raw > 0 ? K_raw : K);
    spectrum::FracParams p;
    p.beta = beta;
    p.alpha = alpha;
    p.gamma = gamma;
    return spectrum::build_truncation(sys, p, K);
}

// independent check of the mode time integral: dense uniform trapezoid over
// the same integrand built directly on eval_mlf
double trapezoid_time_integral(double lambda, double beta, double t, double s, int n) {
    const double m = std::min(t, s);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        const double u = m * i / (n - 1.0);
        xs[i] = u;
        ys[i] = mlf::eval_mlf(beta, lambda * std::pow(t - u, beta)) *
                mlf::eval_mlf(beta, lambda * std::pow(s - u, beta));
    }
    return oracles::trapezoid(xs, ys);
}

}  // namespace

TEST_CASE("mode time integral reproduces the exponential closed form at beta = 1") {
    CHECK(kernels::mode_time_integral(1.0, 1.0, 1.0, 1.0).value ==
          doctest::Approx(0.43233235838169365).epsilon(1e-9));
    for (double lam : {0.5, 2.0, 17.0}) {
        for (auto [t, s] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.5, 1.4}, {2.0, 2.3}}) {
            const double got = kernels::mode_time_integral(lam, 1.0, t, s).value;
            const double ref = oracles::ou_time_integral(lam, std::min(t, s), std::max(t, s));
            INFO("lambda=", lam, " t=", t, " s=", s);
            CHECK(std::abs(got - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("mode time integral agrees with a dense independent quadrature") {
    for (double beta : {0.4, 0.7}) {
        for (double lam : {1.0, 25.0}) {
            const double got = kernels::mode_time_integral(lam, beta, 1.0, 0.8).value;
            const double ref = trapezoid_time_integral(lam, beta, 1.0, 0.8, 20001);
            INFO("beta=", beta, " lambda=", lam);
            CHECK(got == doctest::Approx(ref).epsilon(2e-4));
        }
    }
}

TEST_CASE("mode time integral validates inputs and reports its error") {
    CHECK_THROWS_AS(kernels::mode_time_integral(-1.0, 0.5, 1.0, 1.0), invalid_input);
    CHECK_THROWS_AS(kernels::mode_time_integral(1.0, 0.0, 1.0, 1.0), invalid_input);
    CHECK_THROWS_AS(kernels::mode_time_integral(1.0, 0.5, -1.0, 1.0), invalid_input);
    const auto r = kernels::mode_time_integral(3.0, 0.5, 1.0, 1.0);
    CHECK(r.error_estimate >= 0.0);
    CHECK(r.error_estimate < 1e-6 * r.value + 1e-10);
    CHECK(kernels::mode_time_integral(5.0, 0.5, 0.0, 1.0).value == 0.0);
}

TEST_CASE("cached kernel matches the direct evaluator") {
    for (double beta : {0.3, 0.45, 0.8}) {
        for (double v = 1e-10; v < 1e7; v *= 3.7) {
            const double got = kernels::mlf_cached(beta, v);
            const double ref = mlf::eval_mlf(beta, v);
            INFO("beta=", beta, " v=", v);
            CHECK(std::abs(got - ref) <= 1e-9 * std::max(std::abs(ref), 1e-6));
        }
    }
}

TEST_CASE("covariance is symmetric, positive on the diagonal, and zero at time zero") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 8);
    const std::vector<double> x{0.3}, y{0.62};
    const double cxy = kernels::covariance(trunc, 1.0, 0.8, x, y);
    CHECK(cxy == doctest::Approx(kernels::covariance(trunc, 0.8, 1.0, y, x)).epsilon(1e-12));
    const double cxx = kernels::covariance(trunc, 1.0, 1.0, x, x);
    const double cyy = kernels::covariance(trunc, 0.8, 0.8, y, y);
    CHECK(cxx > 0.0);
    CHECK(cyy > 0.0);
    // Cauchy-Schwarz for the Gaussian field
    CHECK(std::abs(cxy) <= std::sqrt(cxx * cyy) * (1.0 + 1e-8));
    CHECK(kernels::covariance(trunc, 0.0, 1.0, x, y) == 0.0);
    CHECK_THROWS_AS(kernels::covariance(trunc, 1.0, 1.0, x, {1.7}), invalid_input);
}

TEST_CASE("inadmissible parameters are rejected across the kernel surface") {
    auto trunc = make_interval_trunc(0.5, 1.0, 0.0, 8);  // p(alpha+gamma) = n
    const std::vector<double> x{0.5};
    CHECK_THROWS_AS(kernels::covariance(trunc, 1.0, 1.0, x, x), invalid_input);
    CHECK_THROWS_AS(kernels::temporal_variogram(trunc, x, 1.0, {0.9}), invalid_input);
}

TEST_CASE("green kernel is causal and matches the direct mode sum") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 8);
    const std::vector<double> x{0.3}, y{0.62};
    CHECK(kernels::green_kernel(trunc, 0.5, 0.9, x, y) == 0.0);
    const double t = 1.0, s = 0.75;
    double direct = 0.0;
    for (int k = 0; k < trunc.K(); ++k)
        direct += mlf::eval_mlf(trunc.params().beta,
                                trunc.lambda(k) * std::pow(t - s, trunc.params().beta)) *
                  trunc.phi(k, x) * trunc.phi(k, y);
    CHECK(kernels::green_kernel(trunc, t, s, x, y) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("temporal variogram matches the covariance combination") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 12, 16);
    const std::vector<double> x{0.31};
    const double t = 1.0;
    const std::vector<double> s_list{0.99, 0.95, 0.9, 0.8};
    const auto curve = kernels::temporal_variogram(trunc, x, t, s_list);
    REQUIRE(curve.lags.size() == 4);
    for (std::size_t i = 1; i < curve.lags.size(); ++i) CHECK(curve.lags[i] > curve.lags[i - 1]);
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        const double s = t - curve.lags[i];
        const double combo = kernels::covariance(trunc, t, t, x, x) +
                             kernels::covariance(trunc, s, s, x, x) -
                             2.0 * kernels::covariance(trunc, t, s, x, x);
        INFO("lag=", curve.lags[i]);
        CHECK(curve.values[i] > 0.0);
        CHECK(curve.values[i] == doctest::Approx(combo).epsilon(5e-4));
        CHECK(curve.trunc_errors[i] >= 0.0);
    }
    CHECK_THROWS_AS(kernels::temporal_variogram(trunc, x, 1.0, {1.0}), invalid_input);
    CHECK_THROWS_AS(kernels::temporal_variogram(trunc, x, 1.0, {0.0}), invalid_input);
}

TEST_CASE("spatial variogram matches the covariance combination") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 12, 16);
    const std::vector<double> x{0.4};
    const double t = 1.0;
    const std::vector<std::vector<double>> ys{{0.41}, {0.45}, {0.55}};
    const auto curve = kernels::spatial_variogram(trunc, t, x, ys);
    REQUIRE(curve.lags.size() == 3);
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        const std::vector<double> y{x[0] + curve.lags[i]};
        const double combo = kernels::covariance(trunc, t, t, x, x) +
                             kernels::covariance(trunc, t, t, y, y) -
                             2.0 * kernels::covariance(trunc, t, t, x, y);
        CHECK(curve.values[i] == doctest::Approx(combo).epsilon(5e-4));
    }
    // same point contributes an exactly-zero increment
    const auto zero = kernels::spatial_variogram(trunc, t, x, {{0.4}});
    CHECK(zero.lags[0] == 0.0);
    CHECK(zero.values[0] == 0.0);
    CHECK_THROWS_AS(kernels::spatial_variogram(trunc, t, x, {{1.4}}), invalid_input);
}

TEST_CASE("space-time variogram reduces to its marginals") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 10, 16);
    const std::vector<double> x{0.37};
    const double t = 1.0;

    const std::vector<double> s_list{0.98, 0.9};
    const auto tc = kernels::temporal_variogram(trunc, x, t, s_list);
    std::vector<std::pair<double, std::vector<double>>> sy;
    for (double s : s_list) sy.emplace_back(s, x);
    const auto stc = kernels::spatiotemporal_variogram(trunc, t, x, sy);
    REQUIRE(stc.values.size() == tc.values.size());
    for (std::size_t i = 0; i < tc.values.size(); ++i)
        CHECK(std::abs(stc.values[i] - tc.values[i]) <= 1e-12 * std::max(1.0, tc.values[i]));

    const std::vector<std::vector<double>> ys{{0.45}, {0.6}};
    const auto sc = kernels::spatial_variogram(trunc, t, x, ys);
    std::vector<std::pair<double, std::vector<double>>> sy2;
    for (const auto& y : ys) sy2.emplace_back(t, y);
    const auto stc2 = kernels::spatiotemporal_variogram(trunc, t, x, sy2);
    REQUIRE(stc2.values.size() == sc.values.size());
    for (std::size_t i = 0; i < sc.values.size(); ++i)
        CHECK(std::abs(stc2.values[i] - sc.values[i]) <= 1e-12 * std::max(1.0, sc.values[i]));

    // mixed lags agree with the covariance combination
    const auto mixed = kernels::spatiotemporal_variogram(trunc, t, x, {{0.93, {0.52}}});
    const double combo = kernels::covariance(trunc, t, t, x, x) +
                         kernels::covariance(trunc, 0.93, 0.93, {0.52}, {0.52}) -
                         2.0 * kernels::covariance(trunc, t, 0.93, x, {0.52});
    CHECK(mixed.values[0] == doctest::Approx(combo).epsilon(1e-8));
}

TEST_CASE("truncation tail bound dominates the observed truncation error") {
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(1.0), 64);
    spectrum::FracParams p;
    p.beta = 0.4;
    p.alpha = 3.0;
    p.gamma = 1.0;
    auto small = spectrum::build_truncation(sys, p, 8);
    auto big = spectrum::build_truncation(sys, p, 64);
    const double bound = kernels::covariance_tail_bound(small, 1.0, 1.0);
    CHECK(bound > 0.0);
    double worst = 0.0;
    for (double xv : {0.21, 0.5, 0.83}) {
        const std::vector<double> x{xv};
        worst = std::max(worst, std::abs(kernels::covariance(big, 1.0, 1.0, x, x) -
                                         kernels::covariance(small, 1.0, 1.0, x, x)));
    }
    CHECK(worst <= bound);
    // the bound tightens as K grows
    auto mid = spectrum::build_truncation(sys, p, 16);
    CHECK(kernels::covariance_tail_bound(mid, 1.0, 1.0) < bound);
}

TEST_CASE("variogram CSV has the documented shape") {
    auto trunc = make_interval_trunc(0.4, 3.0, 1.0, 6);
    const auto curve = kernels::temporal_variogram(trunc, {0.5}, 1.0, {0.9, 0.8});
    const std::string csv = kernels::to_csv(curve);
    CHECK(csv.rfind("kind,anchor_t,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("temporal") != std::string::npos);
}
