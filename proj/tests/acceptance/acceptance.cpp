// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/limitlaw.hpp"
#include "levyq/renewal.hpp"
#include "levyq/simulate.hpp"
#include "levyq/spectral.hpp"
#include "levyq/stats.hpp"
#include "oracles.hpp"

using namespace levyq;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double time_limit_s;  // 0: none
    std::function<Outcome()> check;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

Grid unit_grid() { return Grid::uniform(4.0, 4.0, 17); }

template <class Law, class Ref>
double max_abs_diff(const Law& law, const Ref& ref, const Grid& g) {
    double worst = 0.0;
    for (double u : g.us) {
        for (double v : g.vs) worst = std::max(worst, std::abs(law(u, v) - ref(u, v)));
    }
    return worst;
}

Outcome closed_form(double lambda, double mu, double (*ref)(double, double)) {
    const auto law = psi_inf(make_mm1(lambda, mu));
    const double d = max_abs_diff(law, ref, unit_grid());
    return {d <= 1e-8, "max |diff| = " + fmt(d)};
}

Outcome route_consistency() {
    std::mt19937_64 gen(2024);
    const auto g = Grid::uniform(3.0, 3.0, 7);
    double worst = 0.0;
    double worst_oracle = 0.0;
    for (bool cramer : {true, false}) {
        for (int k = 0; k < 10; ++k) {
            const auto q = oracle::random_hyper_queue(gen, cramer);
            const auto m = q.model();
            const auto a = psi_inf(m);
            const auto b = psi_inf_closed(m);
            const auto c = mg1_law(m);
            for (double u : g.us) {
                for (double v : g.vs) {
                    const double x = a(u, v), y = b(u, v), z = c(u, v);
                    worst = std::max({worst, std::abs(x - y), std::abs(x - z), std::abs(y - z)});
                    worst_oracle = std::max(worst_oracle, std::abs(x - q.limit_ccdf(u, v)));
                }
            }
        }
    }
    return {worst <= 1e-6 && worst_oracle <= 1e-6,
            "max pairwise = " + fmt(worst) + ", vs closed-form oracle = " + fmt(worst_oracle)};
}

Outcome marginal_identity() {
    std::mt19937_64 gen(77);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto m = oracle::random_hyper_queue(gen, true).model();
        const auto law = psi_inf(m);
        for (double v : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            worst = std::max(worst, std::abs(law(0.0, v) - marginal_overshoot_ccdf(m, v)));
        }
    }
    return {worst <= 1e-8, "max |diff| = " + fmt(worst)};
}

Outcome plain_mc_posdrift() {
    const auto m = make_mm1(2.0, 1.0);
    const auto law = psi_inf(m);
    int passes = 0;
    double worst = 0.0;
    double band = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = sample_overflow(m, 10.0, 1'000'000, seed);
        const auto r = compare(EmpiricalCCDF(s), law, unit_grid(), {0.01, 0.002});
        passes += r.pass ? 1 : 0;
        worst = std::max(worst, r.sup_distance);
        band = r.band();
    }
    return {passes >= 8,
            std::to_string(passes) + "/10 seeds pass, worst sup = " + fmt(worst) + ", band = " + fmt(band)};
}

Outcome direct_mc_cramer() {
    const auto m = make_mm1(1.0, 2.0);
    const auto s = sample_overflow(m, 6.0, 200'000, 6);
    const auto r = compare(EmpiricalCCDF(s), psi_inf(m), unit_grid(), {0.01, 0.01});
    return {r.pass, "sup = " + fmt(r.sup_distance) + ", band = " + fmt(r.band())};
}

Outcome importance_sampling() {
    const auto m = make_mm1(1.0, 2.0);
    bool ok = true;
    std::ostringstream detail;
    for (double x : {4.0, 8.0, 12.0}) {
        const auto e = estimate_ruin_is(m, x, 1'000'000, 100 + static_cast<std::uint64_t>(x));
        const double exact = 0.5 * std::exp(-x);
        const double z = std::abs(e.estimate - exact) / e.standard_error;
        ok = ok && z <= 3.0;
        detail << "x=" << x << ": " << fmt(z) << " SE; ";
    }
    return {ok, detail.str()};
}

Outcome finite_level() {
    const auto m = make_mm1(1.0, 2.0);
    double worst_mass = 0.0;
    for (double x : {1.0, 2.0, 4.0, 8.0}) {
        worst_mass = std::max(worst_mass, std::abs(phi_x_finite_mm1(m, x, 0.0, 0.0) - 0.5 * std::exp(-x)));
    }
    const auto limit = phi_sharp_inf(m);
    const double x = 12.0;
    double worst_rel = 0.0;
    for (double u : {0.0, 1.0}) {
        for (double v : {0.0, 1.0}) {
            const double scaled = std::exp(x) * phi_x_finite_mm1(m, x, u, v) / 0.5;
            worst_rel = std::max(worst_rel, std::abs(scaled / limit(u, v) - 1.0));
        }
    }
    return {worst_mass <= 1e-9 && worst_rel <= 0.02,
            "mass error = " + fmt(worst_mass) + ", relative gap at x=12 = " + fmt(worst_rel)};
}

Outcome tilt_correctness() {
    const auto t = tilt(make_mm1(1.0, 2.0));
    const auto* jobs = t.up->dist.get_if<Exponential>();
    const bool rates = jobs != nullptr && !t.down && std::abs(t.up->rate - 2.0) <= 1e-12 &&
                       std::abs(jobs->rate - 1.0) <= 1e-12 && t.drift == -1.0;
    const auto m = make_mm1(1.0, 2.0);
    const auto s = sample_first_passage_tilted(m, 8.0, 1'000'000, 9);
    const auto r = compare(EmpiricalCCDF(s), phi_sharp_inf(m).law, unit_grid(), {0.01, 0.0});
    return {rates && r.pass, std::string(rates ? "rates exact" : "rates differ") + ", sup = " +
                                 fmt(r.sup_distance) + ", DKW band = " + fmt(r.band()) +
                                 ", n_eff = " + fmt(r.n_effective)};
}

Outcome mc_renewal() {
    const std::vector<double> ys{0.5, 1.0, 2.0};
    const auto f = estimate_V_hat_mc(make_mm1(2.0, 1.0), ys, 1'000'000, 10);
    bool ok = true;
    std::ostringstream detail;
    for (double y : ys) {
        const auto& g = f.grid();
        const auto i = static_cast<std::size_t>(std::find(g.begin(), g.end(), y) - g.begin());
        if (i == g.size()) return {false, "grid point missing"};
        const double z = std::abs(f.values()[i] - (1.0 - std::exp(-y))) / f.standard_errors()[i];
        ok = ok && z <= 3.0;
        detail << "y=" << y << ": " << fmt(z) << " SE; ";
    }
    return {ok, detail.str()};
}

Outcome heavy_tail() {
    const auto m = make_mg1(1.0, Pareto{1.0, 2.5});  // mean job 5/3, drift -1
    if (!classify_regime(m).is_positive_drift()) return {false, "model not in the positive-drift regime"};
    const auto s = sample_overflow(m, 50.0, 1'000'000, 11);
    const auto r = compare(EmpiricalCCDF(s), psi_inf(m), Grid::for_model(m), {0.01, 0.01});
    return {r.pass, "sup = " + fmt(r.sup_distance) + ", band = " + fmt(r.band())};
}

Outcome property_suites() {
    const std::vector<JumpDistribution> zoo{Exponential{1.5}, HyperExponential{{0.3, 0.7}, {0.8, 4.0}},
                                            Erlang{3, 2.0}, Deterministic{0.7}, Pareto{1.0, 2.5}};
    int checks = 0;
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        ++checks;
        if (!ok) failures.push_back(what);
    };
    for (const auto& jobs : zoo) {
        for (double load : {0.6, 1.8}) {
            const auto m = make_mg1(load / jobs.mean(), jobs);
            const auto regime = classify_regime(m);
            if (regime.kind == RegimeKind::neither) continue;  // heavy tails have no Cramer root
            const auto name = std::string(to_string(regime.kind)) + " load " + fmt(load) + " mean " +
                              fmt(jobs.mean());
            const auto law = psi_inf(m);
            const auto g = Grid::for_model(m);
            const auto values = law_on_grid(law, g);
            const std::size_t nv = g.vs.size();
            bool monotone = true;
            bool bounded = true;
            for (std::size_t i = 0; i < g.us.size(); ++i) {
                for (std::size_t j = 0; j < nv; ++j) {
                    const double here = values[i * nv + j];
                    bounded = bounded && here >= 0.0 && here <= 1.0 + 1e-12;
                    if (i > 0) monotone = monotone && here <= values[(i - 1) * nv + j] + 1e-12;
                    if (j > 0) monotone = monotone && here <= values[i * nv + j - 1] + 1e-12;
                }
            }
            expect(monotone, "monotonicity " + name);
            expect(bounded, "bounds " + name);
            expect(std::abs(law(0.0, 0.0) - 1.0) <= 1e-6, "normalization " + name);

            const double x = 3.0 * jobs.mean();
            SamplerOptions one;
            one.threads = 1;
            one.block_size = 128;
            SamplerOptions many = one;
            many.threads = 4;
            const auto a = sample_overflow(m, x, 2000, 5, one);
            const auto b = sample_overflow(m, x, 2000, 5, many);
            expect(a == b, "thread determinism " + name);
            bool positive = true;
            for (const auto& s : a) {
                positive = positive && s.undershoot > 0.0 && s.overshoot > 0.0 && s.passage_time > 0.0 &&
                           s.weight > 0.0;
            }
            expect(positive, "sample positivity " + name);
        }
    }
    std::string detail = std::to_string(checks - static_cast<int>(failures.size())) + "/" +
                         std::to_string(checks) + " checks";
    for (const auto& f : failures) detail += "; failed: " + f;
    return {failures.empty(), detail};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"AC1", "M/M/1(1,2) limit law matches its closed form", 1.0,
         [] { return closed_form(1.0, 2.0, oracle::mm1_12); }},
        {"AC2", "M/M/1(2,1) limit law matches its closed form", 1.0,
         [] { return closed_form(2.0, 1.0, oracle::mm1_21); }},
        {"AC3", "renewal, closed-kernel and density routes agree", 30.0, route_consistency},
        {"AC4", "Psi(0, v) equals the marginal overshoot law", 10.0, marginal_identity},
        {"AC5", "plain Monte Carlo vs positive-drift limit, 10 seeds", 120.0, plain_mc_posdrift},
        {"AC6", "direct Monte Carlo vs Cramer limit at x=6", 300.0, direct_mc_cramer},
        {"AC7", "importance-sampled overflow probability", 60.0, importance_sampling},
        {"AC8", "finite-level first-passage law", 5.0, finite_level},
        {"AC9", "Cramer tilt and tilted sampler", 60.0, tilt_correctness},
        {"AC10", "Monte Carlo renewal function", 120.0, mc_renewal},
        {"AC11", "Pareto jobs, positive drift, x=50", 300.0, heavy_tail},
        {"AC12", "property suites over the job-size zoo", 0.0, property_suites},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.time_limit_s) + " s limit";
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %s %s (%s) %.2fs\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
