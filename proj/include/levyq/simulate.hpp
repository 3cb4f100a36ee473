#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/events.hpp"
#include "levyq/model.hpp"
#include "levyq/parallel.hpp"
#include "levyq/rng.hpp"
#include "levyq/spectral.hpp"

namespace levyq {

/// Under- and overshoot at the first passage over a level x.
///
/// For the reflected workload: undershoot = x - Y(tau-), overshoot = Y(tau) - x.
/// For the free process: k(x) and K(x) at T(x). `weight` is the likelihood
/// ratio of importance-sampled draws (1 for plain Monte Carlo); passage times
/// of tilted draws are in the tilted measure's clock.
struct OvershootSample {
    double undershoot = 0.0;
    double overshoot = 0.0;
    double passage_time = 0.0;
    double weight = 1.0;
    std::uint64_t cycles = 0;  // busy periods completed before the overflow

    bool operator==(const OvershootSample&) const = default;
};

struct SamplerOptions {
    unsigned threads = 0;
    // Total jump events one call may simulate.
    std::uint64_t event_budget = 1'000'000'000;
    std::size_t block_size = 4096;
    std::function<void(const std::string&)> on_warning;
};

namespace detail {

/// Workload reflected at zero, moved event by event.
class ReflectedWorkload {
public:
    ReflectedWorkload(double drift, double start) : drift_(drift), level_(start) {}

    double level() const noexcept { return level_; }
    std::uint64_t cycles() const noexcept { return cycles_; }

    void advance(double dt) {
        if (level_ <= 0.0) return;
        level_ += drift_ * dt;
        if (level_ <= 0.0) {
            level_ = 0.0;
            ++cycles_;
        }
    }

    /// Applies a jump; returns the sample when it carries the workload above x.
    std::optional<OvershootSample> jump(double size, double x, double time) {
        const double before = level_;
        const double after = before + size;
        if (size > 0.0 && after > x) {
            return OvershootSample{x - before, after - x, time, 1.0, cycles_};
        }
        if (after <= 0.0) {
            if (before > 0.0) ++cycles_;
            level_ = 0.0;
        } else {
            level_ = after;
        }
        return std::nullopt;
    }

private:
    double drift_;
    double level_;
    std::uint64_t cycles_ = 0;
};

inline double expected_events_per_sample(const LevyModel& model, const Regime& regime, double x) {
    const EventGenerator events(model);
    const double mean = mean_increment(model);
    if (regime.is_positive_drift()) return 1.0 + events.total_rate() * x / mean;
    if (regime.is_cramer()) {
        const double per_cycle = 1.0 + events.total_rate() * model.up->dist.mean() / std::abs(mean);
        return std::exp(regime.gamma * x) * per_cycle;
    }
    return 0.0;  // no estimate for the null-drift case; the runtime cap still applies
}

template <class Simulate>
std::vector<OvershootSample> run_replications(std::size_t n, const SamplerOptions& opts, Simulate&& simulate) {
    std::vector<OvershootSample> out(n);
    const std::size_t block = std::max<std::size_t>(1, opts.block_size);
    const std::size_t n_blocks = (n + block - 1) / block;
    std::vector<std::uint64_t> block_events(n_blocks, 0);
    parallel_for_blocks(n_blocks, opts.threads, [&](std::size_t b) {
        std::uint64_t used = 0;
        const std::size_t end = std::min(n, (b + 1) * block);
        for (std::size_t r = b * block; r < end; ++r) {
            out[r] = simulate(r, used);
            if (used > opts.event_budget) {
                fail(Errc::timeout, "event budget of " + std::to_string(opts.event_budget) +
                                        " exhausted; use the tilted sampler for rare overflows");
            }
        }
        block_events[b] = used;
    });
    std::uint64_t total = 0;
    for (auto used : block_events) total += used;
    if (total > opts.event_budget) {
        fail(Errc::timeout, "event budget of " + std::to_string(opts.event_budget) +
                                " exhausted; use the tilted sampler for rare overflows");
    }
    return out;
}

inline void check_level(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(Errc::invalid_parameter, "level x must be positive and finite");
}

}  // namespace detail

/// Deterministic evolution of the reflected workload along a given list of
/// jumps; nullopt when the list ends before the workload exceeds x.
inline std::optional<OvershootSample> evolve_path(const LevyModel& model, std::span<const PathEvent> events,
                                                  double x) {
    detail::check_level(x);
    if (model.u0 > x) fail(Errc::invalid_parameter, "initial workload already exceeds the level");
    detail::ReflectedWorkload workload(model.drift, model.u0);
    double now = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (!(e.time >= 0.0) || (i > 0 && !(e.time > events[i - 1].time))) {
            fail(Errc::unsorted_events, "event times must be non-negative and strictly increasing");
        }
        workload.advance(e.time - now);
        now = e.time;
        if (auto hit = workload.jump(e.jump, x, now)) return hit;
    }
    return std::nullopt;
}

/// n independent overflow samples of the reflected workload started at u0.
/// Replication r uses the Philox stream (seed, r), so the output is the same
/// for any thread count.
inline std::vector<OvershootSample> sample_overflow(const LevyModel& model, double x, std::size_t n,
                                                    std::uint64_t seed, const SamplerOptions& opts = {}) {
    validate(model);
    detail::check_level(x);
    if (model.u0 > x) fail(Errc::invalid_parameter, "initial workload already exceeds the level");
    if (n == 0) return {};
    const auto regime = classify_regime(model);
    const double expected = detail::expected_events_per_sample(model, regime, x);
    if (regime.is_cramer() && std::exp(regime.gamma * x) > 1e4 && opts.on_warning) {
        opts.on_warning("direct sampling of a rare overflow: about e^{gamma x} = " +
                        std::to_string(std::exp(regime.gamma * x)) + " busy cycles per sample");
    }
    if (expected * static_cast<double>(n) > static_cast<double>(opts.event_budget)) {
        fail(Errc::timeout, "expected " + std::to_string(expected * static_cast<double>(n)) +
                                " events exceed the budget of " + std::to_string(opts.event_budget) +
                                "; use the tilted sampler");
    }
    const EventGenerator events(model);
    return detail::run_replications(n, opts, [&](std::size_t r, std::uint64_t& used) {
        PhiloxStream rng(seed, r);
        detail::ReflectedWorkload workload(model.drift, model.u0);
        double now = 0.0;
        while (true) {
            if (++used > opts.event_budget) fail(Errc::timeout, "event budget exhausted inside one sample");
            const double dt = events.gap(rng);
            now += dt;
            workload.advance(dt);
            if (auto hit = workload.jump(events.jump(rng), x, now)) return *hit;
        }
    });
}

/// Exponentially tilted (Cramer) model: jump measure e^{gamma y} nu(dy), same drift.
inline LevyModel tilt(const LevyModel& model) {
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "the Cramer tilt needs the Cramer regime");
    const double gamma = regime.gamma;
    LevyModel out = model;
    {
        auto law = model.up->dist.tilted(gamma);
        if (!law) fail(Errc::unsupported_model, "tilted up-jump law leaves the supported families");
        out.up = JumpComponent{model.up->rate * model.up->dist.mgf(gamma), *law};
    }
    if (model.down) {
        auto law = model.down->dist.tilted(-gamma);
        if (!law) fail(Errc::unsupported_model, "tilted down-jump law leaves the supported families");
        out.down = JumpComponent{model.down->rate * model.down->dist.mgf(-gamma), *law};
    }
    return out;
}

/// n first passages of the free process X (from 0) over x, with weight 1.
/// Needs positive drift so that T(x) < inf almost surely.
inline std::vector<OvershootSample> sample_first_passage(const LevyModel& model, double x, std::size_t n,
                                                         std::uint64_t seed, const SamplerOptions& opts = {}) {
    validate(model);
    detail::check_level(x);
    const auto regime = classify_regime(model);
    if (!regime.is_positive_drift()) {
        fail(Errc::wrong_regime, "plain first-passage sampling of X needs positive drift");
    }
    if (n == 0) return {};
    const double expected = detail::expected_events_per_sample(model, regime, x);
    if (expected * static_cast<double>(n) > static_cast<double>(opts.event_budget)) {
        fail(Errc::timeout, "expected event count exceeds the budget");
    }
    const EventGenerator events(model);
    return detail::run_replications(n, opts, [&](std::size_t r, std::uint64_t& used) {
        PhiloxStream rng(seed, r);
        double level = 0.0;
        double now = 0.0;
        while (true) {
            if (++used > opts.event_budget) fail(Errc::timeout, "event budget exhausted inside one sample");
            const double dt = events.gap(rng);
            now += dt;
            level += model.drift * dt;
            const double size = events.jump(rng);
            if (size > 0.0 && level + size > x) {
                return OvershootSample{x - level, level + size - x, now, 1.0, 0};
            }
            level += size;
        }
    });
}

/// First passages of X over x under the Cramer measure, each weighted by
/// e^{-gamma K(x)}. The weighted CCDF estimates the conditional law given
/// T(x) < inf, and e^{-gamma x} times the mean weight estimates P(T(x) < inf).
inline std::vector<OvershootSample> sample_first_passage_tilted(const LevyModel& model, double x, std::size_t n,
                                                                std::uint64_t seed,
                                                                const SamplerOptions& opts = {}) {
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "tilted sampling needs the Cramer regime");
    auto samples = sample_first_passage(tilt(model), x, n, seed, opts);
    for (auto& s : samples) s.weight = std::exp(-regime.gamma * s.overshoot);
    return samples;
}

struct RuinEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::size_t n = 0;
};

inline RuinEstimate ruin_estimate_from(std::span<const OvershootSample> samples, double gamma, double x) {
    if (samples.empty()) fail(Errc::empty_input, "no samples");
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& s : samples) {
        sum += s.weight;
        sq += s.weight * s.weight;
    }
    const double mean = sum / n;
    const double var = samples.size() > 1 ? std::max(0.0, (sq / n - mean * mean) * n / (n - 1.0)) : 0.0;
    const double scale = std::exp(-gamma * x);
    return {scale * mean, scale * std::sqrt(var / n), samples.size()};
}

/// Importance-sampled P(T(x) < inf) with its standard error.
inline RuinEstimate estimate_ruin_is(const LevyModel& model, double x, std::size_t n, std::uint64_t seed,
                                     const SamplerOptions& opts = {}) {
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "importance sampling needs the Cramer regime");
    const auto samples = sample_first_passage_tilted(model, x, n, seed, opts);
    return ruin_estimate_from(samples, regime.gamma, x);
}

}  // namespace levyq
