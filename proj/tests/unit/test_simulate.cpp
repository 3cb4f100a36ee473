#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/simulate.hpp"
#include "levyq/stats.hpp"
#include "oracles.hpp"

using namespace levyq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

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

// Two-sample Kolmogorov-Smirnov statistic of weighted empirical CDFs.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("hand-traced workload paths", "[simulate]") {
    const std::vector<PathEvent> single{{1.0, 3.0}};
    const auto a = evolve_path(make_mm1(1.0, 2.0), single, 2.0);
    REQUIRE(a);
    CHECK_THAT(a->undershoot, WithinAbs(2.0, 1e-15));
    CHECK_THAT(a->overshoot, WithinAbs(1.0, 1e-15));
    CHECK(a->passage_time == 1.0);
    CHECK(a->weight == 1.0);

    const std::vector<PathEvent> short_path{{1.0, 1.0}};
    CHECK_FALSE(evolve_path(make_mm1(1.0, 2.0, 1.5), short_path, 2.0));

    const std::vector<PathEvent> two{{0.5, 1.0}, {0.7, 1.0}};
    const auto c = evolve_path(make_mm1(1.0, 2.0), two, 1.5);
    REQUIRE(c);
    CHECK_THAT(c->undershoot, WithinAbs(0.7, 1e-12));
    CHECK_THAT(c->overshoot, WithinAbs(0.3, 1e-12));
    CHECK(c->passage_time == 0.7);
    CHECK(c->cycles == 0);
}

TEST_CASE("busy periods and down-jumps in a traced path", "[simulate]") {
    LevyModel m{-1.0, JumpComponent{1.0, Exponential{1.0}}, JumpComponent{1.0, Exponential{1.0}}, 0.0};
    // up to 1, drains to 0 at t=2 (cycle 1), up to 1 at t=3, down-jump to 0 (cycle 2), then overflow
    const std::vector<PathEvent> events{{1.0, 1.0}, {3.0, 1.0}, {3.5, -2.0}, {4.0, 2.5}};
    const auto s = evolve_path(m, events, 2.0);
    REQUIRE(s);
    CHECK(s->cycles == 2);
    CHECK_THAT(s->undershoot, WithinAbs(2.0, 1e-15));
    CHECK_THAT(s->overshoot, WithinAbs(0.5, 1e-15));
}

TEST_CASE("unsorted event lists are rejected", "[simulate]") {
    const std::vector<PathEvent> events{{1.0, 0.5}, {1.0, 0.5}};
    CHECK(error_of([&] { evolve_path(cramer_queue, events, 2.0); }) == Errc::unsorted_events);
    const std::vector<PathEvent> backwards{{1.0, 0.5}, {0.5, 0.5}};
    CHECK(error_of([&] { evolve_path(cramer_queue, backwards, 2.0); }) == Errc::unsorted_events);
}

TEST_CASE("sampler contracts", "[simulate]") {
    CHECK(sample_overflow(drift_queue, 10.0, 0, 1).empty());
    const auto s = sample_overflow(drift_queue, 10.0, 1000, 7);
    REQUIRE(s.size() == 1000);
    for (const auto& x : s) {
        CHECK(x.undershoot > 0.0);
        CHECK(x.undershoot <= 10.0);
        CHECK(x.overshoot > 0.0);
        CHECK(x.passage_time > 0.0);
        CHECK(x.weight == 1.0);
    }
    CHECK(error_of([] { sample_overflow(drift_queue, 0.0, 1, 1); }) == Errc::invalid_parameter);
    CHECK(error_of([] { sample_overflow(make_mm1(1.0, 2.0, 3.0), 2.0, 1, 1); }) == Errc::invalid_parameter);
}

TEST_CASE("samples are identical for any thread count", "[simulate]") {
    for (const auto& m : {cramer_queue, drift_queue}) {
        SamplerOptions one;
        one.threads = 1;
        one.block_size = 64;
        SamplerOptions many;
        many.threads = 5;
        many.block_size = 64;
        CHECK(sample_overflow(m, 3.0, 2000, 99, one) == sample_overflow(m, 3.0, 2000, 99, many));
    }
    SamplerOptions one;
    one.threads = 1;
    SamplerOptions many;
    many.threads = 3;
    CHECK(sample_first_passage_tilted(cramer_queue, 5.0, 3000, 4, one) ==
          sample_first_passage_tilted(cramer_queue, 5.0, 3000, 4, many));
}

TEST_CASE("event budget turns a hopeless direct run into a timeout", "[simulate]") {
    // e^{gamma x} = e^{30} expected busy cycles per sample
    CHECK(error_of([] { sample_overflow(cramer_queue, 30.0, 10, 1); }) == Errc::timeout);
    SamplerOptions tiny;
    tiny.event_budget = 50;
    CHECK(error_of([&] { sample_overflow(drift_queue, 10.0, 100, 1, tiny); }) == Errc::timeout);
    std::vector<std::string> warnings;
    SamplerOptions watch;
    watch.on_warning = [&](const std::string& w) { warnings.push_back(w); };
    sample_overflow(cramer_queue, 9.5, 2, 1, watch);
    CHECK(warnings.size() == 1);
}

TEST_CASE("exponential overshoots are memoryless", "[simulate]") {
    for (const auto& [m, mu] : {std::pair{cramer_queue, 2.0}, std::pair{drift_queue, 1.0}}) {
        const auto s = sample_overflow(m, 4.0, 20000, 3);
        std::vector<double> probes{0.1, 0.5, 1.0, 2.0};
        // one-sample KS at the 1% level: sup |F_n - F| <= 1.63 / sqrt(n)
        std::vector<double> over;
        for (const auto& x : s) over.push_back(x.overshoot);
        std::sort(over.begin(), over.end());
        double d = 0.0;
        for (std::size_t i = 0; i < over.size(); ++i) {
            const double f = 1.0 - std::exp(-mu * over[i]);
            d = std::max({d, std::abs(f - static_cast<double>(i) / over.size()),
                          std::abs(f - static_cast<double>(i + 1) / over.size())});
        }
        CHECK(d < 1.63 / std::sqrt(static_cast<double>(over.size())));
    }
}

TEST_CASE("overflow laws barely depend on the initial workload", "[simulate]") {
    // A limit statement, checked at finite x with a doubled KS tolerance.
    const double x = 6.0;
    const std::size_t n = 20000;
    const auto a = sample_overflow(make_mm1(1.0, 2.0, 0.0), x, n, 5);
    const auto b = sample_overflow(make_mm1(1.0, 2.0, 0.3 * x), x, n, 6);
    std::vector<double> ua, ub, va, vb;
    for (const auto& s : a) {
        ua.push_back(s.undershoot);
        va.push_back(s.overshoot);
    }
    for (const auto& s : b) {
        ub.push_back(s.undershoot);
        vb.push_back(s.overshoot);
    }
    const double tol = 2.0 * 3.0 * dkw_epsilon(static_cast<double>(n), 0.01);
    CHECK(ks_distance(ua, ub) < tol);
    CHECK(ks_distance(va, vb) < tol);
}

TEST_CASE("Cramer tilt of exponential queues", "[simulate]") {
    const auto t = tilt(cramer_queue);
    REQUIRE(t.up);
    CHECK_THAT(t.up->rate, WithinAbs(2.0, 1e-12));
    REQUIRE(t.up->dist.get_if<Exponential>());
    CHECK_THAT(t.up->dist.get_if<Exponential>()->rate, WithinAbs(1.0, 1e-12));
    CHECK(t.drift == -1.0);
    const auto h = tilt(make_mm1(0.5, 1.0));
    CHECK_THAT(h.up->rate, WithinAbs(1.0, 1e-12));
    CHECK_THAT(h.up->dist.get_if<Exponential>()->rate, WithinAbs(0.5, 1e-12));
    CHECK(classify_regime(t).is_positive_drift());
    CHECK(error_of([] { tilt(drift_queue); }) == Errc::wrong_regime);
    LevyModel two_sided{-0.2, JumpComponent{1.0, Erlang{2, 3.0}}, JumpComponent{1.0, Exponential{2.0}}, 0.0};
    const auto tt = tilt(two_sided);
    CHECK(classify_regime(tt).is_positive_drift());
    CHECK_THAT(kappa(tt, 0.3), WithinAbs(kappa(two_sided, 0.3 + cramer_gamma(two_sided)), 1e-10));
}

TEST_CASE("tilted sampler is the plain sampler of the tilted model, reweighted", "[simulate]") {
    const auto tilted = sample_first_passage_tilted(cramer_queue, 3.0, 500, 8);
    const auto plain = sample_first_passage(tilt(cramer_queue), 3.0, 500, 8);
    REQUIRE(tilted.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(tilted[i].undershoot == plain[i].undershoot);
        CHECK(tilted[i].overshoot == plain[i].overshoot);
        CHECK(tilted[i].weight == std::exp(-plain[i].overshoot));
        CHECK(tilted[i].weight <= 1.0);
    }
}

TEST_CASE("importance-sampled ruin probabilities", "[simulate]") {
    for (double x : {4.0, 12.0}) {
        const auto r = estimate_ruin_is(cramer_queue, x, 200000, 21);
        CHECK(std::abs(r.estimate - oracle::mm1_ruin(1.0, 2.0, x)) <= 3.0 * r.standard_error);
        CHECK(r.standard_error / r.estimate < 0.01);  // bounded relative error
    }
    CHECK(error_of([] { estimate_ruin_is(drift_queue, 1.0, 10, 1); }) == Errc::wrong_regime);
}

TEST_CASE("weighted tilted CCDF at (1, 1)", "[simulate]") {
    const auto s = sample_first_passage_tilted(cramer_queue, 8.0, 200000, 2);
    const EmpiricalCCDF emp(s);
    // delta-method standard error of the self-normalised estimator
    const double est = emp(1.0, 1.0);
    double num = 0.0, sw = 0.0;
    for (const auto& x : s) {
        const double r = (x.undershoot > 1.0 && x.overshoot > 1.0 ? 1.0 : 0.0) - est;
        num += x.weight * x.weight * r * r;
        sw += x.weight;
    }
    const double se = std::sqrt(num) / sw;
    CHECK(std::abs(est - oracle::mm1_12(1.0, 1.0)) <= 3.0 * se);
}

TEST_CASE("two-sided and heavy-tailed models simulate", "[simulate]") {
    LevyModel two_sided{-0.5, JumpComponent{1.0, Exponential{1.0}}, JumpComponent{0.5, Deterministic{0.5}}, 0.0};
    const auto s = sample_overflow(two_sided, 3.0, 2000, 1);
    for (const auto& x : s) {
        CHECK(x.undershoot > 0.0);
        CHECK(x.overshoot > 0.0);
    }
    const auto p = sample_overflow(make_mg1(1.0, Pareto{1.0, 2.5}), 5.0, 2000, 1);
    CHECK(p.size() == 2000);
}
