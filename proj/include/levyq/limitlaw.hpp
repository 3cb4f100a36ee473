#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/model.hpp"
#include "levyq/quadrature.hpp"
#include "levyq/renewal.hpp"
#include "levyq/spectral.hpp"

namespace levyq {

enum class LawProvenance { thm1, thm2, remark_i, remark_ii, mg1, lemma_ii, lemma_iii };

constexpr std::string_view to_string(LawProvenance p) noexcept {
    switch (p) {
        case LawProvenance::thm1: return "thm1";
        case LawProvenance::thm2: return "thm2";
        case LawProvenance::remark_i: return "remark_i";
        case LawProvenance::remark_ii: return "remark_ii";
        case LawProvenance::mg1: return "mg1";
        case LawProvenance::lemma_ii: return "lemma_ii";
        case LawProvenance::lemma_iii: return "lemma_iii";
    }
    return "thm1";
}

/// Joint complementary distribution function (u, v) -> P(under > u, over > v)
/// of a limit law, with an optional joint density.
class LimitLawEvaluator {
public:
    using Surface = std::function<double(double, double)>;

    // Raw quadrature values outside [-kSlack, 1 + kSlack] signal a bug, not noise.
    static constexpr double kSlack = 1e-6;

    LimitLawEvaluator(Surface ccdf, std::optional<Surface> density, LawProvenance provenance)
        : ccdf_(std::move(ccdf)), density_(std::move(density)), provenance_(provenance) {}

    double ccdf(double u, double v) const {
        check_point(u, v);
        const double raw = ccdf_(u, v);
        if (!(raw >= -kSlack && raw <= 1.0 + kSlack)) {
            fail(Errc::internal, "limit law CCDF evaluated to " + std::to_string(raw) + " at (" +
                                     std::to_string(u) + ", " + std::to_string(v) + ")");
        }
        return std::clamp(raw, 0.0, 1.0);
    }
    double operator()(double u, double v) const { return ccdf(u, v); }

    bool has_density() const noexcept { return density_.has_value(); }
    std::optional<double> density(double u, double v) const {
        check_point(u, v);
        if (!density_) return std::nullopt;
        return (*density_)(u, v);
    }

    LawProvenance provenance() const noexcept { return provenance_; }

private:
    static void check_point(double u, double v) {
        if (!(u >= 0.0) || !(v >= 0.0)) fail(Errc::invalid_parameter, "limit laws are defined for u, v >= 0");
    }

    Surface ccdf_;
    std::optional<Surface> density_;
    LawProvenance provenance_;
};

/// Limit law of the under- and overshoot of the free process X; the mass
/// is 1 for the conditional (Cramer) and the positive-drift limits.
struct FirstPassageLaw {
    LimitLawEvaluator law;
    double defective_mass = 1.0;

    double ccdf(double u, double v) const { return law.ccdf(u, v); }
    double operator()(double u, double v) const { return law.ccdf(u, v); }
};

namespace detail {

// int_u^inf nu_bar(v + z) weight(z) dz.
template <class Weight>
double tail_kernel_integral(const LevyModel& model, double u, double v, Weight&& weight,
                            const QuadratureOptions& opts) {
    std::vector<double> breaks;
    for (double b : nu_bar_breakpoints(model)) breaks.push_back(b - v);
    QuadratureOptions local = opts;
    local.initial_width = model.up->dist.mean();
    return integrate_tail(
               [&](double z) {
                   const double tail = nu_bar_closed(model, v + z);
                   return tail == 0.0 ? 0.0 : tail * weight(z);
               },
               u, local, breaks)
        .value;
}

inline std::optional<LimitLawEvaluator::Surface> kernel_density(const LevyModel& model, double factor,
                                                                std::function<double(double)> weight) {
    if (!model.up->dist.has_density()) return std::nullopt;
    return [model, factor, weight = std::move(weight)](double u, double v) {
        return factor * weight(u) * model.up->rate * *model.up->dist.density(u + v);
    };
}

inline void require_limit_regime(const Regime& regime) {
    if (regime.kind == RegimeKind::neither) {
        fail(Errc::wrong_regime, "limit laws exist in the Cramer and positive-drift regimes only");
    }
}

}  // namespace detail

/// Psi_inf through the renewal-function route: positive drift
/// (1/phi'(0)) int_u^inf nu_bar(v+z) V_hat(z) dz, Cramer
/// (gamma/phi(0)) int_u^inf nu_bar(v+z) V_hat_gamma(z) dz.
///
/// `vhat` may be closed-form or a calibrated Monte Carlo estimate; the ladder
/// constant then comes from its normalizer.
inline LimitLawEvaluator psi_inf(const LevyModel& model, const RenewalFunction& vhat,
                                 const QuadratureOptions& opts = {},
                                 LawProvenance cramer_tag = LawProvenance::thm2,
                                 LawProvenance drift_tag = LawProvenance::thm1) {
    const auto regime = classify_regime(model);
    detail::require_limit_regime(regime);
    double constant;
    if (vhat.normalizer()) {
        constant = *vhat.normalizer();
    } else if (vhat.closed_form()) {
        const auto c = ladder_constants(model, regime);
        constant = regime.is_cramer() ? c.phi0 : *c.phi_prime0;
    } else {
        fail(Errc::invalid_parameter, "Monte Carlo renewal estimate was not calibrated");
    }
    if (regime.is_cramer()) {
        const double gamma = regime.gamma;
        const double factor = gamma / constant;
        auto weight = [vhat, gamma](double z) { return vhat.gamma_convolution(gamma, z); };
        return LimitLawEvaluator(
            [model, factor, weight, opts](double u, double v) {
                return factor * detail::tail_kernel_integral(model, u, v, weight, opts);
            },
            detail::kernel_density(model, factor, weight), cramer_tag);
    }
    const double factor = 1.0 / constant;
    auto weight = [vhat](double z) { return vhat(z); };
    return LimitLawEvaluator(
        [model, factor, weight, opts](double u, double v) {
            return factor * detail::tail_kernel_integral(model, u, v, weight, opts);
        },
        detail::kernel_density(model, factor, weight), drift_tag);
}

/// Psi_inf of a spectrally positive model with closed-form renewal objects.
inline LimitLawEvaluator psi_inf(const LevyModel& model, const QuadratureOptions& opts = {}) {
    const auto regime = classify_regime(model);
    detail::require_limit_regime(regime);
    return psi_inf(model, V_hat(model, regime), opts);
}

/// Psi_inf through the spectrally positive closed kernels, written directly in
/// psi'(0): Cramer (1/psi'(0)) int_u^inf (e^{gamma z} - 1) nu_bar(v+z) dz,
/// positive drift -(1/psi'(0)) int_u^inf nu_bar(v+y) (1 - e^{-Phi(0) y}) dy.
inline LimitLawEvaluator psi_inf_closed(const LevyModel& model, const QuadratureOptions& opts = {}) {
    if (!spectrally_positive(model)) fail(Errc::wrong_model_class, "closed kernels need up-jumps only");
    const auto regime = classify_regime(model);
    detail::require_limit_regime(regime);
    const double slope = psi_prime(model, 0.0);
    if (regime.is_cramer()) {
        const double gamma = regime.gamma;
        const double factor = 1.0 / slope;
        auto weight = [gamma](double z) { return std::expm1(gamma * z); };
        return LimitLawEvaluator(
            [model, factor, weight, opts](double u, double v) {
                return factor * detail::tail_kernel_integral(model, u, v, weight, opts);
            },
            detail::kernel_density(model, factor, weight), LawProvenance::remark_i);
    }
    const double root = Phi0(model);
    const double factor = -1.0 / slope;
    auto weight = [root](double y) { return -std::expm1(-root * y); };
    return LimitLawEvaluator(
        [model, factor, weight, opts](double u, double v) {
            return factor * detail::tail_kernel_integral(model, u, v, weight, opts);
        },
        detail::kernel_density(model, factor, weight), LawProvenance::remark_ii);
}

/// Joint density of the M/G/1 limit, (lambda/(lambda m - 1)) (1 - e^{r* u}) f(v + u).
inline double mg1_density(const LevyModel& model, double u, double v) {
    if (!queue_form(model)) fail(Errc::wrong_model_class, "M/G/1 density needs the queue form");
    if (!model.up->dist.has_density()) {
        fail(Errc::no_density, "job-size law has an atom; use the CCDF evaluators");
    }
    if (!(u >= 0.0) || !(v >= 0.0)) fail(Errc::invalid_parameter, "density needs u, v >= 0");
    const auto regime = classify_regime(model);
    detail::require_limit_regime(regime);
    const double r = rstar(model, regime);
    const double lambda = model.up->rate;
    const double m = model.up->dist.mean();
    return lambda / (lambda * m - 1.0) * (-std::expm1(r * u)) * *model.up->dist.density(v + u);
}

/// M/G/1 limit law whose CCDF is the numerical double integral of
/// mg1_density over [u, inf) x [v, inf).
inline LimitLawEvaluator mg1_law(const LevyModel& model, const QuadratureOptions& opts = {}) {
    if (!queue_form(model)) fail(Errc::wrong_model_class, "M/G/1 law needs the queue form");
    if (!model.up->dist.has_density()) {
        fail(Errc::no_density, "job-size law has an atom; use the CCDF evaluators");
    }
    const auto regime = classify_regime(model);
    detail::require_limit_regime(regime);
    const double r = rstar(model, regime);
    const double lambda = model.up->rate;
    const double prefactor = lambda / (lambda * model.up->dist.mean() - 1.0);
    auto density = [model, r, prefactor](double u, double v) {
        return prefactor * (-std::expm1(r * u)) * *model.up->dist.density(v + u);
    };
    auto ccdf = [model, density, opts](double u, double v) {
        const auto breaks = model.up->dist.breakpoints();
        QuadratureOptions inner = opts;
        inner.abs_tol = opts.abs_tol * 1e-2;
        inner.initial_width = model.up->dist.mean();
        QuadratureOptions outer = opts;
        outer.initial_width = model.up->dist.mean();
        std::vector<double> outer_breaks;
        for (double b : breaks) outer_breaks.push_back(b - v);
        return integrate_tail(
                   [&](double z) {
                       std::vector<double> inner_breaks;
                       for (double b : breaks) inner_breaks.push_back(b - z);
                       return integrate_tail([&](double w) { return density(z, w); }, v, inner, inner_breaks)
                           .value;
                   },
                   u, outer, outer_breaks)
            .value;
    };
    return LimitLawEvaluator(ccdf, LimitLawEvaluator::Surface(density), LawProvenance::mg1);
}

/// Marginal overshoot tail from the ladder-height Levy measure:
/// P[Z > v] = (gamma/phi(0)) e^{-gamma v} int_v^inf e^{gamma z} nu_bar_H(z) dz,
/// with nu_bar_H from Vigon's identity.
inline double marginal_overshoot_ccdf(const LevyModel& model, double v, const QuadratureOptions& opts = {}) {
    if (!(v >= 0.0)) fail(Errc::invalid_parameter, "marginal overshoot needs v >= 0");
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "marginal overshoot law is the Cramer-regime formula");
    const auto constants = ladder_constants(model, regime);
    const auto vhat = V_hat(model, regime);
    const double gamma = regime.gamma;
    QuadratureOptions outer = opts;
    outer.initial_width = model.up->dist.mean();
    std::vector<double> breaks;
    for (double b : nu_bar_breakpoints(model)) breaks.push_back(b - v);
    // Substituting z = v + s keeps e^{gamma s} free of overflow. The inner
    // tolerance shrinks with e^{-gamma s} so its error is not amplified.
    const double integral =
        integrate_tail(
            [&](double s) {
                if (nu_bar_closed(model, v + s) == 0.0) return 0.0;
                QuadratureOptions inner = opts;
                inner.abs_tol = opts.abs_tol * 1e-2 * std::exp(-gamma * s);
                return std::exp(gamma * s) * vigon_nu_H_bar(model, vhat, v + s, inner);
            },
            0.0, outer, breaks)
            .value;
    return std::clamp(gamma / constants.phi0 * integral, 0.0, 1.0);
}

/// Conditional limit of the free process's under- and overshoot given
/// T(x) < inf, in the Cramer regime. Same kernel as Psi_inf there.
inline FirstPassageLaw phi_sharp_inf(const LevyModel& model, const QuadratureOptions& opts = {}) {
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "conditional first-passage limit needs the Cramer regime");
    return {psi_inf(model, V_hat(model, regime), opts, LawProvenance::lemma_iii, LawProvenance::lemma_iii), 1.0};
}

/// Limit of the free process's under- and overshoot under positive drift.
inline FirstPassageLaw phi_inf_posdrift(const LevyModel& model, const QuadratureOptions& opts = {}) {
    const auto regime = classify_regime(model);
    if (!regime.is_positive_drift()) {
        fail(Errc::wrong_regime, "first-passage limit of X needs positive drift");
    }
    return {psi_inf(model, V_hat(model, regime), opts, LawProvenance::lemma_ii, LawProvenance::lemma_ii), 1.0};
}

/// Exact defective law Phi_x(u, v) = P(k(x) > u, K(x) > v, T(x) < inf) of a
/// stable M/M/1 input at finite level x, as int_[0,x] F_bar(x - z) V(dz) with
/// F_bar(z) = int_0^inf nu_bar(v + z + y) 1{z + y > u} dy.
inline double phi_x_finite_mm1(const LevyModel& model, double x, double u, double v) {
    const auto renewal = mm1_renewal(model);
    if (!(x > 0.0)) fail(Errc::invalid_parameter, "level x must be positive");
    if (!(u >= 0.0) || !(v >= 0.0)) fail(Errc::invalid_parameter, "u, v must be >= 0");
    if (u > x) fail(Errc::invalid_parameter, "undershoot threshold u cannot exceed the level x");
    const double lambda = renewal.lambda;
    const double mu = renewal.mu;
    // nu_bar(a) = lambda e^{-mu a} integrates in y to (lambda/mu) e^{-mu (v + max(z, u))}.
    auto f_bar = [=](double z) { return lambda / mu * std::exp(-mu * (v + std::max(z, u))); };
    QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    const double breaks[] = {x - u};
    const double continuous =
        integrate([&](double z) { return f_bar(x - z) * renewal.density(z); }, 0.0, x, opts, breaks).value;
    return renewal.atom() * f_bar(x) + continuous;
}

}  // namespace levyq
