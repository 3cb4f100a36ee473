#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "levyq/error.hpp"
#include "levyq/format.hpp"
#include "levyq/io.hpp"
#include "levyq/limitlaw.hpp"
#include "levyq/model.hpp"
#include "levyq/renewal.hpp"
#include "levyq/simulate.hpp"
#include "levyq/spectral.hpp"
#include "levyq/stats.hpp"

namespace levyq::cli {

enum ExitCode : int { pass = 0, fail_verdict = 1, config_error = 2, math_error = 3, budget_error = 4 };

inline int exit_code(Errc code) {
    switch (code) {
        case Errc::timeout: return budget_error;
        case Errc::no_root:
        case Errc::domain_error:
        case Errc::not_negative_drift:
        case Errc::no_density:
        case Errc::no_convergence:
        case Errc::integral_diverges:
        case Errc::wrong_model_class:
        case Errc::internal: return math_error;
        default: return config_error;
    }
}

struct Flags {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

/// Parsed configuration file; sections are validated when a command uses them.
struct RunConfig {
    Json raw;
    std::filesystem::path dir;
    LevyModel model;

    const Json& section(std::string_view name) const {
        static const Json empty = Json::object();
        const auto it = raw.find(name);
        if (it == raw.end()) return empty;
        if (!it->is_object()) fail(Errc::invalid_parameter, "\"" + std::string(name) + "\" must be an object");
        return *it;
    }
};

inline RunConfig load_config(const std::string& path) {
    if (path.empty()) fail(Errc::invalid_parameter, "--config is required");
    RunConfig cfg;
    cfg.raw = parse_json_text(read_text_file(path), path);
    detail::require_object(cfg.raw, "config");
    detail::reject_unknown_keys(cfg.raw, {"model", "limit", "simulate", "compare", "converge"}, "config");
    cfg.dir = std::filesystem::path(path).parent_path();
    const auto it = cfg.raw.find("model");
    if (it == cfg.raw.end()) fail(Errc::invalid_parameter, "config needs a \"model\"");
    if (it->is_string()) {
        cfg.model = load_model((cfg.dir / it->get<std::string>()).string());
    } else {
        cfg.model = parse_model(*it);
    }
    return cfg;
}

namespace detail {

inline double number_or(const Json& j, std::string_view key, double fallback, std::string_view what) {
    return j.contains(key) ? levyq::detail::number_at(j, key, what) : fallback;
}

inline std::uint64_t count_or(const Json& j, std::string_view key, std::uint64_t fallback, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    if (it->is_number_float()) {
        const double d = it->get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    fail(Errc::invalid_parameter, std::string(what) + "." + std::string(key) + " must be a non-negative integer");
}

inline QuadratureOptions tolerances(const RunConfig& cfg) {
    const auto& limit = cfg.section("limit");
    QuadratureOptions q;
    if (const auto it = limit.find("tolerances"); it != limit.end()) {
        levyq::detail::require_object(*it, "limit.tolerances");
        levyq::detail::reject_unknown_keys(*it, {"abs", "rel"}, "limit.tolerances");
        q.abs_tol = number_or(*it, "abs", q.abs_tol, "limit.tolerances");
        q.rel_tol = number_or(*it, "rel", q.rel_tol, "limit.tolerances");
        if (!(q.abs_tol > 0.0) || !(q.rel_tol > 0.0)) fail(Errc::invalid_parameter, "tolerances must be positive");
    }
    return q;
}

inline Grid grid(const RunConfig& cfg) {
    const auto& limit = cfg.section("limit");
    levyq::detail::reject_unknown_keys(limit, {"grid", "tolerances", "renewal_paths"}, "limit");
    const auto it = limit.find("grid");
    if (it == limit.end()) return Grid::for_model(cfg.model);
    levyq::detail::require_object(*it, "limit.grid");
    Grid g;
    if (it->contains("u") || it->contains("v")) {
        levyq::detail::reject_unknown_keys(*it, {"u", "v"}, "limit.grid");
        g.us = levyq::detail::numbers_at(*it, "u", "limit.grid");
        g.vs = levyq::detail::numbers_at(*it, "v", "limit.grid");
    } else {
        levyq::detail::reject_unknown_keys(*it, {"u_max", "v_max", "points"}, "limit.grid");
        const double q = 4.0 * cfg.model.up->dist.mean();
        g = Grid::uniform(number_or(*it, "u_max", q, "limit.grid"), number_or(*it, "v_max", q, "limit.grid"),
                          count_or(*it, "points", 17, "limit.grid"));
    }
    g.check();
    return g;
}

struct SimulateSection {
    double x = 0.0;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    SamplerKind sampler = SamplerKind::plain;
    std::uint64_t event_budget = SamplerOptions{}.event_budget;
};

inline SimulateSection simulate_section(const RunConfig& cfg, const Flags& flags, bool need_x) {
    const auto& s = cfg.section("simulate");
    levyq::detail::reject_unknown_keys(s, {"x", "n", "seed", "sampler", "event_budget"}, "simulate");
    SimulateSection out;
    if (s.contains("x")) {
        out.x = levyq::detail::number_at(s, "x", "simulate");
        if (!(out.x > 0.0) || !std::isfinite(out.x)) fail(Errc::invalid_parameter, "simulate.x must be positive");
    } else if (need_x) {
        fail(Errc::invalid_parameter, "simulate.x is required");
    }
    out.n = count_or(s, "n", out.n, "simulate");
    out.seed = flags.seed ? *flags.seed : count_or(s, "seed", out.seed, "simulate");
    out.event_budget = count_or(s, "event_budget", out.event_budget, "simulate");
    if (const auto it = s.find("sampler"); it != s.end()) {
        if (*it == "plain") {
            out.sampler = SamplerKind::plain;
        } else if (*it == "tilted") {
            out.sampler = SamplerKind::tilted;
        } else {
            fail(Errc::invalid_parameter, "simulate.sampler must be \"plain\" or \"tilted\"");
        }
    }
    if (out.sampler == SamplerKind::tilted && !classify_regime(cfg.model).is_cramer()) {
        fail(Errc::invalid_parameter, "the tilted sampler needs a model in the Cramer regime");
    }
    return out;
}

/// The limit law the samples of `sampler` converge to. Two-sided models get
/// a Monte Carlo renewal function (seeded by `seed`).
inline LimitLawEvaluator limit_law(const RunConfig& cfg, SamplerKind sampler, std::uint64_t seed, unsigned threads) {
    const auto regime = classify_regime(cfg.model);
    levyq::detail::require_limit_regime(regime);
    const auto opts = tolerances(cfg);
    const bool tilted = sampler == SamplerKind::tilted;
    if (spectrally_positive(cfg.model)) {
        return tilted ? phi_sharp_inf(cfg.model, opts).law : psi_inf(cfg.model, opts);
    }
    const auto paths = count_or(cfg.section("limit"), "renewal_paths", 200000, "limit");
    RenewalMcOptions mc;
    mc.threads = threads;
    const auto vhat = estimate_V_hat_mc(cfg.model, {}, paths, seed, mc);
    return tilted ? psi_inf(cfg.model, vhat, opts, LawProvenance::lemma_iii, LawProvenance::lemma_iii)
                  : psi_inf(cfg.model, vhat, opts);
}

inline std::vector<OvershootSample> run_sampler(const RunConfig& cfg, const SimulateSection& s, unsigned threads,
                                                std::ostream& err) {
    SamplerOptions opts;
    opts.threads = threads;
    opts.event_budget = s.event_budget;
    opts.on_warning = [&err](const std::string& msg) { err << "warning: " << msg << '\n'; };
    if (s.sampler == SamplerKind::tilted) return sample_first_passage_tilted(cfg.model, s.x, s.n, s.seed, opts);
    return sample_overflow(cfg.model, s.x, s.n, s.seed, opts);
}

inline void write_samples_csv(std::ostream& out, std::span<const OvershootSample> samples) {
    out << "undershoot,overshoot,passage_time,weight\r\n";
    for (const auto& s : samples) {
        out << format_double(s.undershoot) << ',' << format_double(s.overshoot) << ','
            << format_double(s.passage_time) << ',' << format_double(s.weight) << "\r\n";
    }
}

inline std::vector<OvershootSample> read_samples_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    auto strip = [](std::string& l) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    };
    if (!std::getline(in, line)) fail(Errc::empty_input, "empty samples file " + path);
    strip(line);
    if (line != "undershoot,overshoot,passage_time,weight") {
        fail(Errc::invalid_parameter, "unexpected samples header in " + path);
    }
    std::vector<OvershootSample> out;
    while (std::getline(in, line)) {
        strip(line);
        if (line.empty()) continue;
        double f[4];
        std::size_t start = 0;
        for (int k = 0; k < 4; ++k) {
            const auto end = k < 3 ? line.find(',', start) : line.size();
            if (end == std::string::npos || !parse_double(std::string_view(line).substr(start, end - start), f[k])) {
                fail(Errc::invalid_parameter, "malformed samples row: " + line);
            }
            start = end + 1;
        }
        out.push_back({f[0], f[1], f[2], f[3], 0});
    }
    return out;
}

inline double weighted_quantile(std::vector<std::pair<double, double>> values, double q) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (const auto& [x, w] : values) total += w;
    double acc = 0.0;
    for (const auto& [x, w] : values) {
        acc += w;
        if (acc >= q * total) return x;
    }
    return values.back().first;
}

inline nlohmann::ordered_json summary(std::span<const OvershootSample> samples) {
    nlohmann::ordered_json j;
    if (samples.empty()) return j;
    double total = 0.0;
    double mu = 0.0;
    double mv = 0.0;
    double mt = 0.0;
    double mc = 0.0;
    std::vector<std::pair<double, double>> us;
    std::vector<std::pair<double, double>> vs;
    for (const auto& s : samples) {
        total += s.weight;
        mu += s.weight * s.undershoot;
        mv += s.weight * s.overshoot;
        mt += s.weight * s.passage_time;
        mc += static_cast<double>(s.cycles);
        us.emplace_back(s.undershoot, s.weight);
        vs.emplace_back(s.overshoot, s.weight);
    }
    j["mean"] = {{"undershoot", mu / total}, {"overshoot", mv / total}, {"passage_time", mt / total}};
    nlohmann::ordered_json qs;
    for (double q : {0.1, 0.5, 0.9, 0.99}) {
        qs[format_double(q)] = {{"undershoot", weighted_quantile(us, q)}, {"overshoot", weighted_quantile(vs, q)}};
    }
    j["quantiles"] = qs;
    j["mean_cycles"] = mc / static_cast<double>(samples.size());
    return j;
}

inline std::ofstream open_output(const Flags& flags, const std::string& name) {
    std::filesystem::create_directories(flags.out);
    const auto path = std::filesystem::path(flags.out) / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(Errc::invalid_parameter, "cannot write " + path.string());
    return file;
}

inline int analyze(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
    const auto& model = cfg.model;
    const auto regime = classify_regime(model);
    if (regime.kind == RegimeKind::neither) {
        fail(Errc::no_root, "no Cramér root and E[X(1)] <= 0: neither limit theorem applies");
    }
    nlohmann::ordered_json j;
    nlohmann::ordered_json provenance;
    j["regime"] = to_string(regime.kind);
    j["mean"] = mean_increment(model);
    provenance["mean"] = "drift + rate_up * mean_up - rate_down * mean_down";
    if (regime.is_cramer()) {
        j["gamma"] = regime.gamma;
        provenance["gamma"] = "positive root of kappa";
    }
    if (spectrally_positive(model)) {
        const auto c = ladder_constants(model, regime);
        j["phi0"] = c.phi0;
        j["phi_hat_prime0"] = c.phi_hat_prime0;
        provenance["phi0"] = "psi'(0) in the unit-drift gauge of the dual ladder";
        if (c.C_gamma) {
            j["C_gamma"] = *c.C_gamma;
            j["phi_prime_at_minus_gamma"] = *c.phi_prime_at_minus_gamma;
            provenance["C_gamma"] = "phi(0) / (gamma phi'(-gamma)), derivative " + c.derivative_method;
        }
        if (c.Phi0) {
            j["Phi0"] = *c.Phi0;
            j["phi_prime0"] = *c.phi_prime0;
            provenance["Phi0"] = "largest root of psi";
            provenance["phi_prime0"] = "E[X(1)] / Phi(0)";
        }
        if (queue_form(model)) {
            j["rstar"] = rstar(model, regime);
            provenance["rstar"] = "root of the M/G/1 characteristic equation";
        }
        if (c.C_gamma) {
            nlohmann::ordered_json curve = nlohmann::ordered_json::array();
            for (int k = 0; k <= 10; ++k) {
                const double x = k / regime.gamma;
                curve.push_back({{"x", x}, {"value", *c.C_gamma * std::exp(-regime.gamma * x)}});
            }
            j["cramer_estimate"] = curve;
            provenance["cramer_estimate"] = "C_gamma e^{-gamma x}";
        }
    } else {
        j["ladder_constants"] = "closed forms need up-jumps only; limit laws use the Monte Carlo renewal estimate";
    }
    j["provenance"] = provenance;
    const auto text = j.dump(2);
    out << text << '\n';
    open_output(flags, "analysis.json") << text << '\n';
    return pass;
}

inline int limit(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
    const auto g = grid(cfg);
    const auto seed = simulate_section(cfg, flags, false).seed;
    const auto law = limit_law(cfg, SamplerKind::plain, seed, flags.threads);
    auto file = open_output(flags, "limit.csv");
    file << "u,v,ccdf,density,provenance\r\n";
    for (double u : g.us) {
        for (double v : g.vs) {
            const auto d = law.density(u, v);
            file << format_double(u) << ',' << format_double(v) << ',' << format_double(law(u, v)) << ','
                 << (d ? format_double(*d) : std::string()) << ',' << to_string(law.provenance()) << "\r\n";
        }
    }
    out << "wrote " << g.size() << " rows to " << (std::filesystem::path(flags.out) / "limit.csv").string() << '\n';
    return pass;
}

inline int simulate(const RunConfig& cfg, const Flags& flags, std::ostream& out, std::ostream& err) {
    const auto s = simulate_section(cfg, flags, true);
    const auto samples = run_sampler(cfg, s, flags.threads, err);
    {
        auto file = open_output(flags, "samples.csv");
        write_samples_csv(file, samples);
    }
    nlohmann::ordered_json j;
    j["x"] = s.x;
    j["n"] = s.n;
    j["seed"] = s.seed;
    j["sampler"] = s.sampler == SamplerKind::tilted ? "tilted" : "plain";
    j["summary"] = summary(samples);
    if (s.sampler == SamplerKind::tilted && !samples.empty()) {
        const double gamma = classify_regime(cfg.model).gamma;
        const auto r = ruin_estimate_from(samples, gamma, s.x);
        j["ruin_estimate"] = {{"estimate", r.estimate},
                              {"standard_error", r.standard_error},
                              {"C_gamma_estimate", std::exp(gamma * s.x) * r.estimate},
                              {"C_gamma_standard_error", std::exp(gamma * s.x) * r.standard_error}};
        j["passage_time_measure"] = "tilted";
    }
    const auto text = j.dump(2);
    open_output(flags, "summary.json") << text << '\n';
    out << text << '\n';
    return pass;
}

inline int compare(const RunConfig& cfg, const Flags& flags, std::ostream& out, std::ostream& err) {
    const auto& c = cfg.section("compare");
    levyq::detail::reject_unknown_keys(c, {"delta", "bias_allowance", "samples"}, "compare");
    CompareOptions opts;
    opts.delta = number_or(c, "delta", opts.delta, "compare");
    opts.bias_allowance = number_or(c, "bias_allowance", opts.bias_allowance, "compare");
    if (!(opts.delta > 0.0 && opts.delta < 1.0)) fail(Errc::invalid_parameter, "compare.delta must be in (0, 1)");
    const bool from_file = c.contains("samples");
    const auto s = simulate_section(cfg, flags, !from_file);
    std::vector<OvershootSample> samples;
    if (from_file) {
        if (!c.at("samples").is_string()) fail(Errc::invalid_parameter, "compare.samples must be a path");
        samples = read_samples_csv((cfg.dir / c.at("samples").get<std::string>()).string());
    } else {
        samples = run_sampler(cfg, s, flags.threads, err);
    }
    const auto g = grid(cfg);
    const auto law = limit_law(cfg, s.sampler, s.seed, flags.threads);
    const auto report = levyq::compare(EmpiricalCCDF(samples), law, g, opts);
    auto j = to_json(report);
    j["law"] = to_string(law.provenance());
    j["run"] = {{"seed", s.seed},
                {"n", samples.size()},
                {"x", s.x},
                {"sampler", s.sampler == SamplerKind::tilted ? "tilted" : "plain"},
                {"samples", from_file ? c.at("samples").get<std::string>() : std::string("inline")},
                {"model", to_json(cfg.model)}};
    open_output(flags, "report.json") << j.dump(2) << '\n';
    {
        auto file = open_output(flags, "residuals.csv");
        write_residuals_csv(file, report);
    }
    out << (report.pass ? "PASS" : "FAIL") << " sup_distance=" << format_double(report.sup_distance)
        << " band=" << format_double(report.band()) << '\n';
    return report.pass ? pass : fail_verdict;
}

inline int converge(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
    const auto& c = cfg.section("converge");
    levyq::detail::reject_unknown_keys(c, {"x_list", "n"}, "converge");
    const auto xs = levyq::detail::numbers_at(c, "x_list", "converge");
    const auto s = simulate_section(cfg, flags, false);
    ConvergenceOptions opts;
    opts.sampler = s.sampler;
    opts.grid = grid(cfg);
    opts.sampler_options.threads = flags.threads;
    opts.sampler_options.event_budget = s.event_budget;
    const auto n = count_or(c, "n", s.n, "converge");
    const auto rows = convergence_study(cfg.model, xs, n, s.seed, opts);
    auto file = open_output(flags, "convergence.csv");
    file << "x,sup_distance,dkw_epsilon,n_effective\r\n";
    for (const auto& r : rows) {
        const auto line = format_double(r.x) + ',' + format_double(r.sup_distance) + ',' +
                          format_double(r.dkw_epsilon) + ',' + format_double(r.n_effective);
        file << line << "\r\n";
        out << line << '\n';
    }
    return pass;
}

}  // namespace detail

/// Runs the command line `args` (without the program name); returns the exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Under- and overshoot laws of Levy-driven queues at buffer overflow"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags;
    app.add_option("--config", flags.config, "JSON run configuration")->required();
    app.add_option("--out", flags.out, "Output directory");
    app.add_option("--seed", flags.seed, "Override simulate.seed");
    app.add_option("--threads", flags.threads, "Worker threads (0: hardware parallelism)");
    auto* analyze = app.add_subcommand("analyze", "Regime and ladder constants as JSON");
    auto* limit = app.add_subcommand("limit", "Tabulate the limit law on the grid");
    auto* simulate = app.add_subcommand("simulate", "Sample overflow under- and overshoots");
    auto* compare = app.add_subcommand("compare", "Compare samples with the limit law");
    auto* converge = app.add_subcommand("converge", "Distance to the limit law over a list of levels");

    std::vector<std::string> argv_storage{"levyq"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return config_error;
    }

    try {
        const auto cfg = load_config(flags.config);
        if (analyze->parsed()) return detail::analyze(cfg, flags, out);
        if (limit->parsed()) return detail::limit(cfg, flags, out);
        if (simulate->parsed()) return detail::simulate(cfg, flags, out, err);
        if (compare->parsed()) return detail::compare(cfg, flags, out, err);
        if (converge->parsed()) return detail::converge(cfg, flags, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "error [invalid_parameter]: " << e.what() << '\n';
        return config_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error [invalid_parameter]: " << e.what() << '\n';
        return config_error;
    }
    return config_error;
}

}  // namespace levyq::cli
