#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracfield/domains.hpp"
#include "fracfield/errors.hpp"
#include "oracles.hpp"

using namespace fracfield;

namespace {

constexpr double kPi = 3.14159265358979323846;

// product-domain L2 inner product by nested trapezoid rules
double inner_1d(const domains::EigenSystem& sys, int a, int b, double L, int n) {
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = L * i / (n - 1.0);
        ys[i] = sys.eval(a, {xs[i]}) * sys.eval(b, {xs[i]});
    }
    return oracles::trapezoid(xs, ys);
}

double inner_radial(const domains::EigenSystem& sys, int a, int b, double r0, double r1, int nr,
                    int nt) {
    std::vector<double> rs(nr), inner(nr);
    for (int i = 0; i < nr; ++i) {
        const double r = r0 + (r1 - r0) * i / (nr - 1.0);
        rs[i] = r;
        std::vector<double> ts(nt), ys(nt);
        for (int j = 0; j < nt; ++j) {
            const double th = 2.0 * kPi * j / (nt - 1.0);
            ts[j] = th;
            ys[j] = sys.eval(a, {r * std::cos(th), r * std::sin(th)}) *
                    sys.eval(b, {r * std::cos(th), r * std::sin(th)});
        }
        inner[i] = oracles::trapezoid(ts, ys) * r;
    }
    return oracles::trapezoid(rs, inner);
}

}  // namespace

TEST_CASE("interval eigenpairs are the exact sine system") {
    const double L = 2.5;
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(L), 12);
    REQUIRE(sys.count() == 12);
    for (int k = 0; k < 12; ++k) {
        const double expected = kPi * kPi * (k + 1) * (k + 1) / (L * L);
        CHECK(sys.gamma(k) == doctest::Approx(expected).epsilon(1e-13));
        const double x = 0.3 * L;
        const double phi = std::sqrt(2.0 / L) * std::sin((k + 1) * kPi * x / L);
        CHECK(sys.eval(k, {x}) == doctest::Approx(phi).epsilon(1e-13));
    }
}

TEST_CASE("unit square spectrum is the two-index sine tensor") {
    auto sys = domains::build_eigensystem(domains::DomainSpec::rectangle({1.0, 1.0}), 10);
    // gamma = pi^2 (k1^2 + k2^2): 2, 5, 5, 8, 10, 10, 13, 13, 17, 17
    const std::vector<double> sums = {2, 5, 5, 8, 10, 10, 13, 13, 17, 17};
    for (int k = 0; k < 10; ++k)
        CHECK(sys.gamma(k) == doctest::Approx(kPi * kPi * sums[k]).epsilon(1e-12));
    // the degenerate pair orders lexicographically by index
    CHECK(sys.modes()[1].index == std::vector<int>{1, 2});
    CHECK(sys.modes()[2].index == std::vector<int>{2, 1});
    const double x = 0.37, y = 0.81;
    CHECK(sys.eval(1, {x, y}) ==
          doctest::Approx(2.0 * std::sin(kPi * x) * std::sin(2.0 * kPi * y)).epsilon(1e-12));
}

TEST_CASE("three-dimensional boxes work and higher dimensions are rejected") {
    auto sys = domains::build_eigensystem(domains::DomainSpec::rectangle({1.0, 2.0, 3.0}), 5);
    CHECK(sys.gamma(0) ==
          doctest::Approx(kPi * kPi * (1.0 + 0.25 + 1.0 / 9.0)).epsilon(1e-12));
    CHECK_THROWS_AS(domains::DomainSpec::rectangle({1.0, 1.0, 1.0, 1.0}).validate(),
                    invalid_input);
}

TEST_CASE("eigenvalues ascend with deterministic tie-breaking") {
    for (auto spec : {domains::DomainSpec::rectangle({1.0, 1.0}),
                      domains::DomainSpec::disk(1.0),
                      domains::DomainSpec::annulus(0.5, 1.3)}) {
        auto sys = domains::build_eigensystem(spec, 30);
        REQUIRE(sys.count() == 30);
        for (int k = 1; k < 30; ++k) {
            CHECK(sys.gamma(k) >= sys.gamma(k - 1) * (1.0 - 1e-12));
            if (std::abs(sys.gamma(k) - sys.gamma(k - 1)) < 1e-9 * sys.gamma(k))
                CHECK(sys.modes()[k - 1].index < sys.modes()[k].index);
        }
        auto again = domains::build_eigensystem(spec, 30);
        for (int k = 0; k < 30; ++k) CHECK(sys.gamma(k) == again.gamma(k));
    }
}

TEST_CASE("disk ground state uses the first zero of J0") {
    const double j01 = 2.404825557695773;
    const double R = 1.7;
    auto sys = domains::build_eigensystem(domains::DomainSpec::disk(R), 6);
    CHECK(sys.gamma(0) == doctest::Approx(j01 * j01 / (R * R)).epsilon(1e-11));
    // first excited level is the l = 1 doublet at the first zero of J1
    const double j11 = 3.831705970207512;
    CHECK(sys.gamma(1) == doctest::Approx(j11 * j11 / (R * R)).epsilon(1e-11));
    CHECK(sys.gamma(2) == doctest::Approx(j11 * j11 / (R * R)).epsilon(1e-11));
}

TEST_CASE("bessel roots match frozen references and the defining equations") {
    CHECK(domains::bessel_root(0, 1, domains::RootKind::first_kind) ==
          doctest::Approx(2.404825557695773).epsilon(1e-12));
    CHECK(domains::bessel_root(1, 1, domains::RootKind::first_kind) ==
          doctest::Approx(3.831705970207512).epsilon(1e-12));
    for (int order : {0, 1, 2, 5}) {
        for (int r = 1; r <= 8; ++r) {
            const double z = domains::bessel_root(order, r, domains::RootKind::first_kind);
            CHECK(std::abs(domains::bessel_j(order, z)) < 1e-10);
        }
    }
    const double k1 = domains::bessel_root(0, 1, domains::RootKind::annulus_cross_product, 1.0, 2.0);
    CHECK(k1 == doctest::Approx(3.123030919596).epsilon(1e-9));
    const double cross = domains::bessel_j(0, k1 * 1.0) * domains::bessel_y(0, k1 * 2.0) -
                         domains::bessel_j(0, k1 * 2.0) * domains::bessel_y(0, k1 * 1.0);
    CHECK(std::abs(cross) < 1e-10);
    CHECK_THROWS_AS(domains::bessel_root(51, 1, domains::RootKind::first_kind), invalid_input);
    CHECK_THROWS_AS(domains::bessel_root(0, 20000, domains::RootKind::first_kind), invalid_input);
}

TEST_CASE("cylinder function wrappers agree with the multiprecision reference") {
    for (int order : {0, 1, 3, 7}) {
        for (double x : {0.5, 2.0, 7.3, 21.0}) {
            CHECK(domains::bessel_j(order, x) ==
                  doctest::Approx(oracles::bessel_j_ref(order, x)).epsilon(1e-12));
            CHECK(domains::bessel_y(order, x) ==
                  doctest::Approx(oracles::bessel_y_ref(order, x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("modes are L2-normalized and orthogonal") {
    SUBCASE("interval") {
        const double L = 1.0;
        auto sys = domains::build_eigensystem(domains::DomainSpec::interval(L), 6);
        for (int k = 0; k < 6; ++k)
            CHECK(inner_1d(sys, k, k, L, 4001) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(inner_1d(sys, 0, 3, L, 4001)) < 1e-8);
    }
    SUBCASE("disk") {
        auto sys = domains::build_eigensystem(domains::DomainSpec::disk(1.2), 8);
        for (int k = 0; k < 8; ++k)
            CHECK(inner_radial(sys, k, k, 0.0, 1.2, 801, 401) == doctest::Approx(1.0).epsilon(2e-4));
        CHECK(std::abs(inner_radial(sys, 0, 5, 0.0, 1.2, 801, 401)) < 1e-4);
    }
    SUBCASE("annulus") {
        auto sys = domains::build_eigensystem(domains::DomainSpec::annulus(1.0, 2.0), 8);
        for (int k = 0; k < 8; ++k)
            CHECK(inner_radial(sys, k, k, 1.0, 2.0, 801, 401) == doctest::Approx(1.0).epsilon(2e-4));
        CHECK(std::abs(inner_radial(sys, 1, 6, 1.0, 2.0, 801, 401)) < 1e-4);
    }
}

TEST_CASE("eigenfunctions vanish on the boundary") {
    auto interval = domains::build_eigensystem(domains::DomainSpec::interval(1.0), 4);
    CHECK(std::abs(interval.eval(2, {0.0})) < 1e-12);
    CHECK(std::abs(interval.eval(2, {1.0})) < 1e-12);
    auto disk = domains::build_eigensystem(domains::DomainSpec::disk(1.0), 4);
    CHECK(std::abs(disk.eval(0, {1.0, 0.0})) < 1e-10);
    auto ann = domains::build_eigensystem(domains::DomainSpec::annulus(1.0, 2.0), 4);
    CHECK(std::abs(ann.eval(0, {1.0, 0.0})) < 1e-10);
    CHECK(std::abs(ann.eval(0, {0.0, 2.0})) < 1e-10);
}

TEST_CASE("evaluation outside the domain is rejected") {
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(1.0), 3);
    CHECK_THROWS_AS(sys.eval(0, {1.5}), invalid_input);
    CHECK_THROWS_AS(sys.eval(0, {0.2, 0.3}), invalid_input);
    auto disk = domains::build_eigensystem(domains::DomainSpec::disk(1.0), 3);
    CHECK_THROWS_AS(disk.eval(0, {1.2, 0.4}), invalid_input);
}

TEST_CASE("domain geometry helpers") {
    auto rect = domains::DomainSpec::rectangle({2.0, 3.0});
    CHECK(rect.dimension() == 2);
    CHECK(rect.volume() == doctest::Approx(6.0));
    CHECK(rect.diameter() == doctest::Approx(std::sqrt(13.0)));
    CHECK(rect.contains({1.0, 2.9}));
    CHECK(!rect.contains({1.0, 3.1}));

    auto ann = domains::DomainSpec::annulus(1.0, 2.0);
    CHECK(ann.volume() == doctest::Approx(kPi * 3.0));
    CHECK(ann.diameter() == doctest::Approx(4.0));
    CHECK(ann.contains({1.5, 0.0}));
    CHECK(!ann.contains({0.5, 0.0}));

    CHECK_THROWS_AS(domains::DomainSpec::interval(-1.0).validate(), invalid_input);
    CHECK_THROWS_AS(domains::DomainSpec::annulus(2.0, 1.0).validate(), invalid_input);
    CHECK_THROWS_AS(domains::DomainSpec::disk(0.0).validate(), invalid_input);
}

TEST_CASE("gradient sup constants bracket the analytic values") {
    // interval mode k: sup |phi'| = sqrt(2) (k+1) pi on the unit interval
    auto sys = domains::build_eigensystem(domains::DomainSpec::interval(1.0), 5);
    for (int k = 0; k < 5; ++k) {
        const auto h = domains::mode_holder_constant(sys, k);
        const double exact = std::sqrt(2.0) * (k + 1) * kPi;
        CHECK(h.lipschitz_constant >= exact * 0.99);
        CHECK(h.lipschitz_constant <= exact * 1.08);
        CHECK(h.upsilon == 1.0);
        CHECK(h.mode == k);
    }
    // unit square ground state: sup |grad| = 2 pi, attained mid-edge
    auto sq = domains::build_eigensystem(domains::DomainSpec::rectangle({1.0, 1.0}), 1);
    const auto h = domains::mode_holder_constant(sq, 0);
    CHECK(h.lipschitz_constant >= 2.0 * kPi * 0.95);
    CHECK(h.lipschitz_constant <= 2.0 * kPi * 1.10);
}

TEST_CASE("JSON cache round-trips bit-exactly") {
    for (auto spec : {domains::DomainSpec::interval(1.3), domains::DomainSpec::disk(0.9),
                      domains::DomainSpec::annulus(0.4, 1.1)}) {
        auto sys = domains::build_eigensystem(spec, 12);
        auto back = domains::eigensystem_from_json(domains::to_json(sys));
        REQUIRE(back.count() == sys.count());
        std::vector<double> pt;
        switch (spec.kind) {
            case domains::DomainSpec::Kind::interval: pt = {0.71 * spec.lengths[0]}; break;
            default: pt = {0.5 * (spec.inner_radius + spec.radius) + 0.2, 0.1}; break;
        }
        if (!spec.contains(pt)) pt = {0.75, 0.1};
        for (int k = 0; k < sys.count(); ++k) {
            CHECK(back.gamma(k) == sys.gamma(k));
            CHECK(back.eval(k, pt) == sys.eval(k, pt));
        }
    }
}
