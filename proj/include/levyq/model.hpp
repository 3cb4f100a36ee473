#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "levyq/error.hpp"
#include "levyq/jump_distribution.hpp"

namespace levyq {

/// One side of the compound Poisson part: jumps arrive at `rate` with sizes
/// drawn from `dist`.
struct JumpComponent {
    double rate;
    JumpDistribution dist;
};

/// Finite-activity Levy process X(t) = u0 + drift * t + (up jumps) - (down jumps).
///
/// The reflected workload of the queue is Y = X - min(inf X, 0). The classical
/// M/G/1 net input has drift -1 and up-jumps only.
struct LevyModel {
    double drift = -1.0;
    std::optional<JumpComponent> up;
    std::optional<JumpComponent> down;
    double u0 = 0.0;
};

inline LevyModel make_mg1(double arrival_rate, JumpDistribution jobs, double u0 = 0.0) {
    return LevyModel{-1.0, JumpComponent{arrival_rate, std::move(jobs)}, std::nullopt, u0};
}

inline LevyModel make_mm1(double arrival_rate, double service_rate, double u0 = 0.0) {
    return make_mg1(arrival_rate, Exponential{service_rate}, u0);
}

/// Checks every model invariant and returns the model unchanged.
///
/// Beyond finiteness and positivity of parameters: up-jumps must exist,
/// the drift must be non-positive (so the workload crosses any level by a
/// jump, never by creeping), a zero drift needs down-jumps (otherwise X is a
/// subordinator), and a zero drift with only lattice jump laws is rejected
/// as lattice.
inline LevyModel validate(const LevyModel& model) {
    if (!std::isfinite(model.drift)) fail(Errc::invalid_parameter, "drift must be finite");
    if (!(model.u0 >= 0.0) || !std::isfinite(model.u0)) {
        fail(Errc::invalid_parameter, "u0 must be a non-negative finite number");
    }
    if (!model.up) {
        fail(Errc::empty_model, "the model needs up-jumps to ever exceed a buffer level");
    }
    for (const auto* side : {&model.up, &model.down}) {
        if (!*side) continue;
        detail::require_positive((*side)->rate, "jump rate");
        (*side)->dist.validate();
    }
    if (model.drift > 0.0) {
        fail(Errc::unsupported_model,
             "positive drift coefficient lets the workload creep over the level");
    }
    if (model.drift == 0.0) {
        const bool up_lattice = model.up->dist.lattice();
        const bool down_lattice = !model.down || model.down->dist.lattice();
        if (up_lattice && down_lattice) {
            fail(Errc::lattice_model, "zero drift with lattice jump laws");
        }
        if (!model.down) {
            fail(Errc::unsupported_model, "zero drift with up-jumps only is a subordinator");
        }
    }
    return model;
}

inline bool spectrally_positive(const LevyModel& model) { return !model.down.has_value(); }

/// Queue form of the classical M/G/1 net input: drift -1, up-jumps only.
inline bool queue_form(const LevyModel& model) {
    return spectrally_positive(model) && model.up && model.drift == -1.0;
}

/// E[X(1) - X(0)].
inline double mean_increment(const LevyModel& model) {
    double m = model.drift;
    if (model.up) m += model.up->rate * model.up->dist.mean();
    if (model.down) m -= model.down->rate * model.down->dist.mean();
    return m;
}

/// Largest s with E[e^{s X(1)}] finite (open bound).
inline double kappa_upper_bound(const LevyModel& model) {
    return model.up ? model.up->dist.mgf_bound() : kInf;
}

/// Smallest s with E[e^{s X(1)}] finite (open bound).
inline double kappa_lower_bound(const LevyModel& model) {
    return model.down ? -model.down->dist.mgf_bound() : -kInf;
}

/// Cumulant kappa(s) = log E[e^{s X(1)}] = s*drift + l+(M+(s)-1) + l-(M-(-s)-1).
inline double kappa(const LevyModel& model, double s) {
    double value = s * model.drift;
    if (model.up) value += model.up->rate * (model.up->dist.mgf(s) - 1.0);
    if (model.down) value += model.down->rate * (model.down->dist.mgf(-s) - 1.0);
    return value;
}

inline double kappa_prime(const LevyModel& model, double s) {
    double value = model.drift;
    if (model.up) value += model.up->rate * model.up->dist.mgf_derivative(s);
    if (model.down) value -= model.down->rate * model.down->dist.mgf_derivative(-s);
    return value;
}

/// Laplace exponent psi(theta) = log E[e^{-theta X(1)}]; psi(0) = 0 exactly.
inline double psi(const LevyModel& model, double theta) {
    if (theta == 0.0) return 0.0;
    return kappa(model, -theta);
}

inline double psi_prime(const LevyModel& model, double theta) { return -kappa_prime(model, -theta); }

/// Tail of the Levy measure, nu((a, inf)) for a > 0.
inline double nu_bar(const LevyModel& model, double a) {
    if (!(a > 0.0)) fail(Errc::invalid_parameter, "nu_bar needs a > 0");
    return model.up ? model.up->rate * model.up->dist.tail(a) : 0.0;
}

/// nu_bar extended by its right limit at 0: the total up-jump rate.
inline double nu_bar_closed(const LevyModel& model, double a) {
    if (!model.up) return 0.0;
    return model.up->rate * model.up->dist.tail(a);
}

/// Positions where nu_bar has a kink or a jump.
inline std::vector<double> nu_bar_breakpoints(const LevyModel& model) {
    return model.up ? model.up->dist.breakpoints() : std::vector<double>{};
}

enum class RegimeKind { cramer, positive_drift, neither };

constexpr std::string_view to_string(RegimeKind kind) noexcept {
    switch (kind) {
        case RegimeKind::cramer: return "cramer";
        case RegimeKind::positive_drift: return "positive_drift";
        case RegimeKind::neither: return "neither";
    }
    return "neither";
}

/// Which limit theorem applies: Cramer carries gamma, PositiveDrift carries E[X(1)].
struct Regime {
    RegimeKind kind = RegimeKind::neither;
    double gamma = std::nan("");
    double mean = std::nan("");

    static Regime cramer(double gamma) { return {RegimeKind::cramer, gamma, std::nan("")}; }
    static Regime positive_drift(double mean) {
        return {RegimeKind::positive_drift, std::nan(""), mean};
    }
    static Regime neither() { return {}; }

    bool is_cramer() const { return kind == RegimeKind::cramer; }
    bool is_positive_drift() const { return kind == RegimeKind::positive_drift; }
};

}  // namespace levyq
