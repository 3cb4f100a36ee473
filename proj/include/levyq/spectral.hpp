#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "levyq/error.hpp"
#include "levyq/model.hpp"
#include "levyq/roots.hpp"

namespace levyq {

/// Cramer coefficient: the unique gamma > 0 with E[e^{gamma X(1)}] = 1.
inline double cramer_gamma(const LevyModel& model, const RootOptions& opts = {}) {
    if (!(mean_increment(model) < 0.0)) {
        fail(Errc::not_negative_drift, "Cramer coefficient needs E[X(1)] < 0");
    }
    auto root = convex_positive_root([&](double s) { return kappa(model, s); },
                                     [&](double s) { return kappa_prime(model, s); },
                                     kappa_upper_bound(model), opts);
    if (!root) fail(Errc::no_root, "no Cramér root: E[e^{sX(1)}] stays below 1 on its domain");
    if (std::abs(kappa(model, *root)) > 1e-10) {
        fail(Errc::no_root, "no Cramér root: polishing stalled at |kappa| = " +
                                std::to_string(std::abs(kappa(model, *root))));
    }
    return *root;
}

inline Regime classify_regime(const LevyModel& model) {
    const double mean = mean_increment(model);
    if (mean > 0.0) return Regime::positive_drift(mean);
    if (mean < 0.0) {
        try {
            return Regime::cramer(cramer_gamma(model));
        } catch (const Error& e) {
            if (e.code() != Errc::no_root) throw;
        }
    }
    return Regime::neither();
}

/// Largest root Phi(0) of psi(theta) = 0 for a spectrally positive model with
/// positive mean.
inline double Phi0(const LevyModel& model, const RootOptions& opts = {}) {
    if (!spectrally_positive(model)) fail(Errc::wrong_model_class, "Phi(0) needs up-jumps only");
    if (!(mean_increment(model) > 0.0)) fail(Errc::wrong_regime, "Phi(0) needs E[X(1)] > 0");
    auto root = convex_positive_root([&](double t) { return psi(model, t); },
                                     [&](double t) { return psi_prime(model, t); }, kInf, opts);
    if (!root) fail(Errc::no_root, "psi has no positive root");
    return *root;
}

/// Root r* of the M/G/1 characteristic equation l*E[e^{sU}] - l - s = 0:
/// the largest one (= gamma) in the Cramer regime, the smallest (= -Phi(0))
/// under positive drift.
inline double rstar(const LevyModel& model, const Regime& regime) {
    if (!queue_form(model)) {
        fail(Errc::wrong_model_class, "r* is defined for the M/G/1 queue form (drift -1, up-jumps only)");
    }
    switch (regime.kind) {
        case RegimeKind::cramer: return std::isnan(regime.gamma) ? cramer_gamma(model) : regime.gamma;
        case RegimeKind::positive_drift: return -Phi0(model);
        case RegimeKind::neither: break;
    }
    fail(Errc::no_root, "no Cramér root: the characteristic equation has only the root 0");
}

struct LadderConstants {
    std::optional<double> gamma;
    double phi0 = 0.0;                    // killing rate of the ascending ladder height
    std::optional<double> phi_prime0;     // E[H(1)], positive drift
    double phi_hat_prime0 = 1.0;          // dual ladder drift in the unit-drift gauge
    std::optional<double> Phi0;           // largest root of psi
    std::optional<double> C_gamma;        // Cramer constant
    std::optional<double> phi_prime_at_minus_gamma;
    std::string derivative_method;        // how phi'(-gamma) was obtained
};

namespace detail {

// phi(theta) = psi(theta) / theta under the unit-drift gauge of the dual ladder.
inline double ladder_exponent(const LevyModel& model, double theta) { return psi(model, theta) / theta; }

inline double richardson_derivative(const LevyModel& model, double at, double h) {
    auto central = [&](double step) {
        return (ladder_exponent(model, at + step) - ladder_exponent(model, at - step)) / (2.0 * step);
    };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

}  // namespace detail

/// Ladder constants of a spectrally positive model, in the gauge where the
/// dual ascending ladder is a unit drift (phi_hat'(0) = 1). The factorisation
/// -psi(-theta) = phi(theta) phi_hat(-theta) then gives phi(theta) = psi(theta)/theta.
inline LadderConstants ladder_constants(const LevyModel& model, const Regime& regime) {
    if (!spectrally_positive(model)) {
        fail(Errc::wrong_model_class,
             "closed-form ladder constants need up-jumps only; use the Monte Carlo renewal estimate");
    }
    LadderConstants out;
    out.phi_hat_prime0 = 1.0;
    if (regime.is_cramer()) {
        const double gamma = regime.gamma;
        out.gamma = gamma;
        out.phi0 = psi_prime(model, 0.0) / out.phi_hat_prime0;
        const auto& law = model.up->dist.law();
        double derivative;
        if (std::holds_alternative<Exponential>(law) || std::holds_alternative<HyperExponential>(law)) {
            // psi(-gamma) = 0, so phi'(-gamma) = -psi'(-gamma)/gamma.
            derivative = -psi_prime(model, -gamma) / gamma;
            out.derivative_method = "analytic";
        } else {
            derivative = detail::richardson_derivative(model, -gamma, 1e-5 * gamma);
            out.derivative_method = "richardson";
        }
        out.phi_prime_at_minus_gamma = derivative;
        out.C_gamma = out.phi0 / (gamma * derivative);
        if (!(*out.C_gamma > 0.0)) fail(Errc::internal, "non-positive Cramer constant");
    } else if (regime.is_positive_drift()) {
        const double root = Phi0(model);
        out.Phi0 = root;
        out.phi0 = 0.0;
        out.phi_prime0 = -psi_prime(model, 0.0) / root;
    } else {
        fail(Errc::wrong_regime, "ladder constants need the Cramer or positive-drift regime");
    }
    return out;
}

}  // namespace levyq
