#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "levyq/error.hpp"
#include "levyq/quadrature.hpp"
#include "levyq/renewal.hpp"

using namespace levyq;
using Catch::Matchers::WithinAbs;

namespace {

Errc error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::internal;
}

const LevyModel cramer_queue = make_mm1(1.0, 2.0);
const LevyModel drift_queue = make_mm1(2.0, 1.0);

double at(const RenewalFunction& f, double y) {
    const auto& g = f.grid();
    const auto it = std::find(g.begin(), g.end(), y);
    REQUIRE(it != g.end());
    return f.values()[static_cast<std::size_t>(it - g.begin())];
}

double se_at(const RenewalFunction& f, double y) {
    const auto& g = f.grid();
    const auto it = std::find(g.begin(), g.end(), y);
    REQUIRE(it != g.end());
    return f.standard_errors()[static_cast<std::size_t>(it - g.begin())];
}

}  // namespace

TEST_CASE("closed-form dual renewal functions", "[renewal]") {
    const auto a = V_hat(cramer_queue, classify_regime(cramer_queue));
    const auto b = V_hat(drift_queue, classify_regime(drift_queue));
    for (double y : {0.0, 0.3, 1.0, 5.0}) {
        CHECK_THAT(a(y), WithinAbs(y, 1e-15));
        CHECK_THAT(b(y), WithinAbs(1.0 - std::exp(-y), 1e-12));
    }
    CHECK(a(0.0) == 0.0);
    CHECK(b(0.0) == 0.0);
    LevyModel two_sided{-1.0, JumpComponent{1.0, Exponential{2.0}}, JumpComponent{1.0, Exponential{2.0}}, 0.0};
    CHECK(error_of([&] { V_hat(two_sided, classify_regime(two_sided)); }) == Errc::wrong_model_class);
}

TEST_CASE("tilted convolution V_hat_gamma", "[renewal]") {
    CHECK_THAT(V_hat_gamma(cramer_queue, 1.0), WithinAbs(std::exp(1.0) - 1.0, 1e-12));
    CHECK(V_hat_gamma(cramer_queue, 0.0) == 0.0);
    CHECK_THAT(V_hat_gamma(cramer_queue, 2.0), WithinAbs(std::exp(2.0) - 1.0, 1e-12));
    CHECK(error_of([] { V_hat_gamma(drift_queue, 1.0); }) == Errc::wrong_regime);
}

TEST_CASE("tilted convolution of a tabulated function is exact for piecewise-linear data", "[renewal]") {
    // V(y) = y on a coarse grid: the exact convolution (e^{gz}-1)/g must be reproduced.
    std::vector<double> grid{0.0, 0.5, 1.3, 2.0, 4.0};
    std::vector<double> values(grid);
    const auto f = RenewalFunction::tabulated(grid, values, std::vector<double>(grid.size(), 0.0), RegimeKind::cramer);
    for (double z : {0.2, 1.0, 3.7, 5.0}) CHECK_THAT(f.gamma_convolution(0.8, z), WithinAbs(std::expm1(0.8 * z) / 0.8, 1e-12));
}

TEST_CASE("Vigon's identity", "[renewal]") {
    const auto ra = classify_regime(cramer_queue);
    const auto rb = classify_regime(drift_queue);
    CHECK_THAT(vigon_nu_H_bar(cramer_queue, ra, 1.0), WithinAbs(0.5 * std::exp(-2.0), 1e-10));
    CHECK_THAT(vigon_nu_H_bar(drift_queue, rb, 1.0), WithinAbs(std::exp(-1.0), 1e-10));
    CHECK(vigon_nu_H_bar(cramer_queue, ra, 500.0) < 1e-300);
    // non-increasing and bounded by nu_bar(a) V_hat(inf) under positive drift
    double prev = vigon_nu_H_bar(drift_queue, rb, 0.05);
    for (double a = 0.1; a < 6.0; a += 0.25) {
        const double v = vigon_nu_H_bar(drift_queue, rb, a);
        CHECK(v <= prev + 1e-15);
        CHECK(v <= nu_bar(drift_queue, a) * 1.0 + 1e-15);
        prev = v;
    }
}

TEST_CASE("Laplace check of the positive-drift renewal function", "[renewal]") {
    const auto f = V_hat(drift_queue, classify_regime(drift_queue));
    for (double theta : {0.5, 1.0, 2.0}) {
        QuadratureOptions opts;
        opts.abs_tol = 1e-12;
        const double lhs = integrate_tail([&](double y) { return theta * std::exp(-theta * y) * f(y); }, 0.0, opts).value;
        CHECK_THAT(lhs, WithinAbs(1.0 / (theta + 1.0), 1e-8));
    }
}

TEST_CASE("ascending renewal function of the M/M/1 queue", "[renewal]") {
    CHECK_THAT(V_mm1(cramer_queue, 0.0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(V_mm1(cramer_queue, 1.0), WithinAbs(2.0 - std::exp(-1.0), 1e-14));
    CHECK_THAT(V_mm1(cramer_queue, 60.0), WithinAbs(2.0, 1e-14));
    CHECK(error_of([] { V_mm1(make_mg1(1.0, Erlang{2, 4.0}), 1.0); }) == Errc::wrong_model_class);
    CHECK(error_of([] { V_mm1(drift_queue, 1.0); }) == Errc::wrong_regime);
}

TEST_CASE("Monte Carlo renewal estimate against the closed forms", "[renewal][mc]") {
    const std::vector<double> ys{0.5, 1.0, 2.0};
    const auto b = estimate_V_hat_mc(drift_queue, ys, 100000, 17);
    const auto a = estimate_V_hat_mc(cramer_queue, ys, 100000, 17);
    for (double y : ys) {
        CHECK(std::abs(at(b, y) - (1.0 - std::exp(-y))) <= 3.0 * se_at(b, y));
        CHECK(std::abs(at(a, y) - y) <= 3.0 * se_at(a, y));
    }
    CHECK(at(a, 0.0) == 0.0);
    CHECK(at(b, 0.0) == 0.0);
    CHECK(b.provenance() == RenewalProvenance::mc_estimate);
    CHECK_FALSE(b.unstable());
    // calibration: phi'(0) = 1 and phi(0) = 1/2 for the two queues
    REQUIRE(b.normalizer());
    REQUIRE(a.normalizer());
    CHECK_THAT(*b.normalizer(), WithinAbs(1.0, 0.02));
    CHECK_THAT(*a.normalizer(), WithinAbs(0.5, 0.02));
}

TEST_CASE("Monte Carlo renewal estimates are monotone and thread-independent", "[renewal][mc]") {
    LevyModel two_sided{-0.5, JumpComponent{1.0, Exponential{1.0}}, JumpComponent{0.8, Erlang{2, 3.0}}, 0.0};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RenewalMcOptions one;
        one.threads = 1;
        RenewalMcOptions four;
        four.threads = 4;
        const auto f = estimate_V_hat_mc(two_sided, {}, 20000, seed, one);
        const auto g = estimate_V_hat_mc(two_sided, {}, 20000, seed, four);
        CHECK(f.values() == g.values());
        CHECK(f.standard_errors() == g.standard_errors());
        for (std::size_t i = 1; i < f.values().size(); ++i) CHECK(f.values()[i] >= f.values()[i - 1]);
    }
}

TEST_CASE("zero-drift renewal estimate counts the ladder point at 0", "[renewal][mc]") {
    LevyModel m{0.0, JumpComponent{1.0, Exponential{1.0}}, JumpComponent{1.0, Exponential{0.5}}, 0.0};
    const auto f = estimate_V_hat_mc(m, {}, 5000, 9);
    CHECK(f(0.0) == 1.0);
}

TEST_CASE("renewal estimate refuses a driftless mean", "[renewal][mc]") {
    LevyModel m{0.0, JumpComponent{1.0, Exponential{1.0}}, JumpComponent{1.0, Exponential{1.0}}, 0.0};
    CHECK(error_of([&] { estimate_V_hat_mc(m, {1.0}, 10, 1); }) == Errc::wrong_regime);
}

TEST_CASE("renewal functions serialise to CSV", "[renewal]") {
    const auto f = RenewalFunction::tabulated({0.0, 1.0}, {0.0, 0.5}, {0.0, 0.01}, RegimeKind::positive_drift);
    std::ostringstream out;
    f.write_csv(out);
    CHECK(out.str() == "y,value,se\r\n0,0,0\r\n1,0.5,0.01\r\n");
}
