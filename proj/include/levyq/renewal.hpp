#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/events.hpp"
#include "levyq/format.hpp"
#include "levyq/model.hpp"
#include "levyq/parallel.hpp"
#include "levyq/quadrature.hpp"
#include "levyq/rng.hpp"
#include "levyq/spectral.hpp"

namespace levyq {

enum class RenewalProvenance { closed_form_cramer, closed_form_posdrift, mc_estimate };

constexpr std::string_view to_string(RenewalProvenance p) noexcept {
    switch (p) {
        case RenewalProvenance::closed_form_cramer: return "closed_form_cramer";
        case RenewalProvenance::closed_form_posdrift: return "closed_form_posdrift";
        case RenewalProvenance::mc_estimate: return "mc_estimate";
    }
    return "mc_estimate";
}

/// Renewal function V_hat of the dual process -X, either in closed form
/// (spectrally positive models) or tabulated from a Monte Carlo estimate.
///
/// Tabulated functions interpolate linearly between grid points. Past the
/// last point they continue with the secant slope over the upper half of the
/// grid in the Cramer regime (V_hat grows linearly there) and stay flat under
/// positive drift (V_hat converges).
class RenewalFunction {
public:
    static RenewalFunction cramer_closed(double phi_hat_prime0 = 1.0) {
        RenewalFunction f;
        f.provenance_ = RenewalProvenance::closed_form_cramer;
        f.regime_ = RegimeKind::cramer;
        f.scale_ = phi_hat_prime0;
        return f;
    }

    static RenewalFunction posdrift_closed(double Phi0, double phi_hat_prime0 = 1.0) {
        RenewalFunction f;
        f.provenance_ = RenewalProvenance::closed_form_posdrift;
        f.regime_ = RegimeKind::positive_drift;
        f.scale_ = phi_hat_prime0;
        f.Phi0_ = Phi0;
        return f;
    }

    static RenewalFunction tabulated(std::vector<double> grid, std::vector<double> values,
                                     std::vector<double> standard_errors, RegimeKind regime) {
        if (grid.size() < 2 || grid.size() != values.size() || grid.size() != standard_errors.size()) {
            fail(Errc::invalid_parameter, "tabulated renewal function needs matching grids of size >= 2");
        }
        RenewalFunction f;
        f.provenance_ = RenewalProvenance::mc_estimate;
        f.regime_ = regime;
        f.grid_ = std::move(grid);
        f.values_ = std::move(values);
        f.se_ = std::move(standard_errors);
        if (regime == RegimeKind::cramer) {
            const double y_max = f.grid_.back();
            const double mid = f.interpolate(0.5 * y_max);
            f.tail_slope_ = std::max(0.0, (f.values_.back() - mid) / (0.5 * y_max));
        }
        return f;
    }

    RenewalProvenance provenance() const noexcept { return provenance_; }
    RegimeKind regime() const noexcept { return regime_; }
    bool closed_form() const noexcept { return provenance_ != RenewalProvenance::mc_estimate; }

    /// V_hat(y) for y >= 0.
    double operator()(double y) const {
        if (y < 0.0) return 0.0;
        switch (provenance_) {
            case RenewalProvenance::closed_form_cramer: return y / scale_;
            case RenewalProvenance::closed_form_posdrift: return -std::expm1(-Phi0_ * y) / (Phi0_ * scale_);
            case RenewalProvenance::mc_estimate: break;
        }
        if (y >= grid_.back()) return values_.back() + tail_slope_ * (y - grid_.back());
        return interpolate(y);
    }

    /// Density of the renewal measure V_hat(dy) (closed forms only; no atoms).
    std::optional<double> density(double y) const {
        switch (provenance_) {
            case RenewalProvenance::closed_form_cramer: return 1.0 / scale_;
            case RenewalProvenance::closed_form_posdrift: return std::exp(-Phi0_ * y) / scale_;
            case RenewalProvenance::mc_estimate: break;
        }
        return std::nullopt;
    }

    /// V_hat_gamma(z) = int_[0,z] e^{gamma (z-y)} V_hat(dy).
    double gamma_convolution(double gamma, double z) const {
        if (regime_ != RegimeKind::cramer) {
            fail(Errc::wrong_regime, "V_hat_gamma is defined in the Cramer regime");
        }
        if (z <= 0.0) return z < 0.0 ? 0.0 : (*this)(0.0);
        if (provenance_ == RenewalProvenance::closed_form_cramer) return std::expm1(gamma * z) / (gamma * scale_);
        // Integration by parts: V_hat(z) + gamma int_0^z e^{gamma(z-y)} V_hat(y) dy, exact for
        // the piecewise-linear interpolant.
        double integral = 0.0;
        auto segment = [&](double y0, double y1, double v0, double slope) {
            const double length = y1 - y0;
            const double decay = std::exp(-gamma * length);
            const double base = std::exp(gamma * (z - y0));
            integral += base * (v0 * (1.0 - decay) / gamma +
                                slope * (1.0 - decay * (1.0 + gamma * length)) / (gamma * gamma));
        };
        for (std::size_t i = 0; i + 1 < grid_.size() && grid_[i] < z; ++i) {
            const double y1 = std::min(grid_[i + 1], z);
            const double slope = (values_[i + 1] - values_[i]) / (grid_[i + 1] - grid_[i]);
            segment(grid_[i], y1, values_[i], slope);
        }
        if (z > grid_.back()) segment(grid_.back(), z, values_.back(), tail_slope_);
        return (*this)(z) + gamma * integral;
    }

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& standard_errors() const noexcept { return se_; }

    /// Ladder constant fixed by total mass one of the downstream limit law:
    /// phi'(0) under positive drift, phi(0) in the Cramer regime.
    std::optional<double> normalizer() const noexcept { return normalizer_; }
    void set_normalizer(double value) { normalizer_ = value; }

    /// True when some grid point has a relative standard error above 10%.
    bool unstable() const noexcept { return unstable_; }
    void set_unstable(bool flag) { unstable_ = flag; }

    void write_csv(std::ostream& out) const {
        out << "y,value,se\r\n";
        if (closed_form()) return;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            out << format_double(grid_[i]) << ',' << format_double(values_[i]) << ','
                << format_double(se_[i]) << "\r\n";
        }
    }

private:
    RenewalFunction() = default;

    double interpolate(double y) const {
        const auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
        if (it == grid_.begin()) return values_.front();
        if (it == grid_.end()) return values_.back();
        const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
        const double t = (y - grid_[i]) / (grid_[i + 1] - grid_[i]);
        return values_[i] + t * (values_[i + 1] - values_[i]);
    }

    RenewalProvenance provenance_ = RenewalProvenance::closed_form_cramer;
    RegimeKind regime_ = RegimeKind::cramer;
    double scale_ = 1.0;
    double Phi0_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> se_;
    double tail_slope_ = 0.0;
    std::optional<double> normalizer_;
    bool unstable_ = false;
};

/// Closed-form V_hat of a spectrally positive model.
inline RenewalFunction V_hat(const LevyModel& model, const Regime& regime) {
    if (!spectrally_positive(model)) {
        fail(Errc::wrong_model_class, "closed-form V_hat needs up-jumps only; use estimate_V_hat_mc");
    }
    const auto constants = ladder_constants(model, regime);
    if (regime.is_cramer()) return RenewalFunction::cramer_closed(constants.phi_hat_prime0);
    return RenewalFunction::posdrift_closed(*constants.Phi0, constants.phi_hat_prime0);
}

/// V_hat_gamma(z) for a spectrally positive model in the Cramer regime.
inline double V_hat_gamma(const LevyModel& model, double z) {
    const auto regime = classify_regime(model);
    if (!regime.is_cramer()) fail(Errc::wrong_regime, "V_hat_gamma needs the Cramer regime");
    return V_hat(model, regime).gamma_convolution(regime.gamma, z);
}

/// Vigon's identity: tail of the ascending ladder-height Levy measure,
/// nu_bar_H(a) = int_[0,inf) nu_bar(a + y) V_hat(dy).
inline double vigon_nu_H_bar(const LevyModel& model, const RenewalFunction& vhat, double a,
                             const QuadratureOptions& opts = {}) {
    if (!(a > 0.0)) fail(Errc::invalid_parameter, "vigon_nu_H_bar needs a > 0");
    if (!vhat.closed_form()) {
        fail(Errc::wrong_model_class, "Vigon's identity is evaluated against closed-form V_hat only");
    }
    std::vector<double> breaks;
    for (double b : nu_bar_breakpoints(model)) breaks.push_back(b - a);
    QuadratureOptions local = opts;
    local.initial_width = model.up->dist.mean();
    const auto result = integrate_tail(
        [&](double y) {
            const double tail = nu_bar_closed(model, a + y);
            return tail == 0.0 ? 0.0 : tail * *vhat.density(y);
        },
        0.0, local, breaks);
    if (!std::isfinite(result.value)) fail(Errc::integral_diverges, "Vigon integral diverged");
    return result.value;
}

inline double vigon_nu_H_bar(const LevyModel& model, const Regime& regime, double a,
                             const QuadratureOptions& opts = {}) {
    return vigon_nu_H_bar(model, V_hat(model, regime), a, opts);
}

/// Renewal function of the ascending ladder height of a stable M/M/1 input,
/// V(y) = (mu - lambda e^{-gamma y}) / gamma: an atom of mass 1 at 0 plus the
/// density lambda e^{-gamma y}.
struct MM1Renewal {
    double lambda;
    double mu;
    double gamma;

    double operator()(double y) const { return y < 0.0 ? 0.0 : (mu - lambda * std::exp(-gamma * y)) / gamma; }
    double atom() const { return 1.0; }
    double density(double y) const { return lambda * std::exp(-gamma * y); }
};

inline MM1Renewal mm1_renewal(const LevyModel& model) {
    if (!queue_form(model) || !model.up->dist.is<Exponential>()) {
        fail(Errc::wrong_model_class, "V for M/M/1 needs exponential jobs in queue form");
    }
    const double lambda = model.up->rate;
    const double mu = model.up->dist.get_if<Exponential>()->rate;
    if (!(lambda < mu)) fail(Errc::wrong_regime, "V for M/M/1 needs a stable queue (lambda < mu)");
    return {lambda, mu, mu - lambda};
}

inline double V_mm1(const LevyModel& model, double y) { return mm1_renewal(model)(y); }

struct RenewalMcOptions {
    unsigned threads = 0;
    // Append the default geometric grid so the estimate can feed the limit laws,
    // and calibrate the ladder constant by total mass one.
    bool calibrate = true;
    std::uint64_t event_budget_per_path = 100'000'000;
    std::size_t block_size = 1024;
};

/// Geometric grid 0 plus 256 points from 1e-3 up to a level where the
/// integrands of the limit laws are negligible.
inline std::vector<double> default_renewal_grid(const LevyModel& model, const Regime& regime) {
    const double scale = model.up->dist.mean();
    const double rate = model.up->rate;
    double y_max = scale;
    const double cap = 200.0 * scale;
    while (y_max < cap) {
        double weight = nu_bar_closed(model, y_max) * (1.0 + y_max);
        if (regime.is_cramer()) weight *= std::exp(regime.gamma * y_max);
        if (weight < 1e-12 * rate) break;
        y_max *= 1.25;
    }
    y_max = std::min(y_max, cap);
    std::vector<double> grid{0.0};
    const double lo = 1e-3 * scale;
    const double ratio = std::pow(y_max / lo, 1.0 / 255.0);
    double y = lo;
    for (int i = 0; i < 256; ++i) {
        grid.push_back(i == 255 ? y_max : y);
        y *= ratio;
    }
    return grid;
}

namespace detail {

// Descending ladder structure of one path of X started at 0, as the measure
// of ladder levels (depths below 0) it produces in [0, y] at every grid point.
// With a negative drift the infimum creeps and ladder levels form intervals
// (Lebesgue measure, unit-drift gauge); with zero drift ladder levels are the
// points 0, and the depths of strict new minima reached by down-jumps
// (counting gauge).
class LadderPath {
public:
    LadderPath(const LevyModel& model, double depth_limit, double escape_height,
               std::uint64_t event_budget)
        : model_(model), events_(model), depth_limit_(depth_limit), escape_height_(escape_height),
          budget_(event_budget) {}

    void run(PhiloxStream& rng, std::span<const double> grid, std::span<double> cumulative) {
        pieces_.clear();
        const bool creeping = model_.drift < 0.0;
        if (!creeping) pieces_.push_back({0.0, 0.0});
        double x = 0.0;
        double minimum = 0.0;
        std::uint64_t events = 0;
        while (-minimum < depth_limit_) {
            if (++events > budget_) fail(Errc::timeout, "ladder-height path exceeded its event budget");
            const double before = x + model_.drift * events_.gap(rng);
            if (before < minimum) {
                pieces_.push_back({-minimum, std::min(-before, depth_limit_)});
                minimum = before;
                if (-minimum >= depth_limit_) break;
            }
            x = before + events_.jump(rng);
            if (x < minimum) {
                minimum = x;
                if (!creeping && -minimum <= depth_limit_) pieces_.push_back({-minimum, -minimum});
            }
            if (x - minimum > escape_height_) break;
        }
        // pieces_ are disjoint and ordered by depth.
        std::size_t p = 0;
        double accumulated = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double y = grid[g];
            while (p < pieces_.size() && pieces_[p].hi <= y) {
                accumulated += piece_mass(pieces_[p], pieces_[p].hi);
                ++p;
            }
            double partial = 0.0;
            if (p < pieces_.size() && pieces_[p].lo <= y) partial = piece_mass(pieces_[p], y);
            cumulative[g] = accumulated + partial;
        }
    }

private:
    struct Piece {
        double lo;
        double hi;
    };

    static double piece_mass(const Piece& piece, double upto) {
        if (piece.hi == piece.lo) return upto >= piece.lo ? 1.0 : 0.0;
        return std::min(piece.hi, upto) - piece.lo;
    }

    const LevyModel& model_;
    EventGenerator events_;
    double depth_limit_;
    double escape_height_;
    std::uint64_t budget_;
    std::vector<Piece> pieces_;
};

}  // namespace detail

/// Monte Carlo estimate of V_hat for any model with E[X(1)] != 0.
///
/// Each path of X from 0 records its descending ladder levels (see
/// detail::LadderPath); the estimate at y is the mean over paths of the ladder
/// mass in [0, y], with its standard error. Under positive drift a path stops
/// once it rises far enough above its minimum that a later descent below it
/// has probability below 1e-8. With `calibrate`, the ladder constant that
/// makes the limit law a probability law is stored as the normalizer.
inline RenewalFunction estimate_V_hat_mc(const LevyModel& model, std::vector<double> y_grid,
                                         std::size_t n_paths, std::uint64_t seed,
                                         const RenewalMcOptions& opts = {}) {
    validate(model);
    const auto regime = classify_regime(model);
    const double mean = mean_increment(model);
    if (mean == 0.0) fail(Errc::wrong_regime, "renewal estimate needs E[X(1)] != 0");
    if (n_paths == 0) fail(Errc::invalid_parameter, "renewal estimate needs at least one path");
    for (double y : y_grid) {
        if (!(y >= 0.0) || !std::isfinite(y)) fail(Errc::invalid_parameter, "grid points must be >= 0");
    }
    if (opts.calibrate) {
        if (regime.kind == RegimeKind::neither) {
            fail(Errc::wrong_regime, "calibration needs the Cramer or positive-drift regime");
        }
        auto extra = default_renewal_grid(model, regime);
        y_grid.insert(y_grid.end(), extra.begin(), extra.end());
    }
    y_grid.push_back(0.0);
    std::sort(y_grid.begin(), y_grid.end());
    y_grid.erase(std::unique(y_grid.begin(), y_grid.end()), y_grid.end());
    if (y_grid.size() < 2) y_grid.push_back(model.up->dist.mean());
    const double depth_limit = y_grid.back();

    double escape = kInf;
    if (mean > 0.0) {
        // Positive root of psi: a descent by h below the current minimum has probability ~ e^{-root h}.
        const double bound = model.down ? model.down->dist.mgf_bound() : kInf;
        std::optional<double> root;
        try {
            root = convex_positive_root([&](double t) { return psi(model, t); },
                                        [&](double t) { return psi_prime(model, t); }, bound);
        } catch (const Error&) {
            root.reset();
        }
        escape = root ? std::max(depth_limit, std::log(1e8) / *root) : std::max(depth_limit, 1e3 * model.up->dist.mean());
    }

    const std::size_t g = y_grid.size();
    const std::size_t block = std::max<std::size_t>(1, opts.block_size);
    const std::size_t n_blocks = (n_paths + block - 1) / block;
    std::vector<double> sums(n_blocks * g, 0.0);
    std::vector<double> squares(n_blocks * g, 0.0);
    parallel_for_blocks(n_blocks, opts.threads, [&](std::size_t b) {
        detail::LadderPath path(model, depth_limit, escape, opts.event_budget_per_path);
        std::vector<double> cumulative(g);
        double* s = sums.data() + b * g;
        double* q = squares.data() + b * g;
        const std::size_t end = std::min(n_paths, (b + 1) * block);
        for (std::size_t r = b * block; r < end; ++r) {
            PhiloxStream rng(seed, r);
            path.run(rng, y_grid, cumulative);
            for (std::size_t j = 0; j < g; ++j) {
                s[j] += cumulative[j];
                q[j] += cumulative[j] * cumulative[j];
            }
        }
    });

    std::vector<double> values(g, 0.0);
    std::vector<double> se(g, 0.0);
    std::vector<double> total_sq(g, 0.0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        for (std::size_t j = 0; j < g; ++j) {
            values[j] += sums[b * g + j];
            total_sq[j] += squares[b * g + j];
        }
    }
    const double n = static_cast<double>(n_paths);
    bool unstable = false;
    for (std::size_t j = 0; j < g; ++j) {
        const double m = values[j] / n;
        const double var = n > 1.0 ? std::max(0.0, (total_sq[j] / n - m * m) * n / (n - 1.0)) : 0.0;
        values[j] = m;
        se[j] = std::sqrt(var / n);
        if (m > 0.0 && se[j] > 0.1 * m) unstable = true;
    }

    auto result = RenewalFunction::tabulated(y_grid, std::move(values), std::move(se),
                                             regime.kind == RegimeKind::cramer ? RegimeKind::cramer
                                                                               : RegimeKind::positive_drift);
    result.set_unstable(unstable);
    if (opts.calibrate) {
        QuadratureOptions q;
        q.initial_width = model.up->dist.mean();
        std::vector<double> breaks = nu_bar_breakpoints(model);
        double mass;
        if (regime.is_cramer()) {
            mass = regime.gamma *
                   integrate_tail(
                       [&](double z) {
                           const double tail = nu_bar_closed(model, z);
                           return tail == 0.0 ? 0.0 : tail * result.gamma_convolution(regime.gamma, z);
                       },
                       0.0, q, breaks)
                       .value;
        } else {
            mass = integrate_tail(
                       [&](double z) {
                           const double tail = nu_bar_closed(model, z);
                           return tail == 0.0 ? 0.0 : tail * result(z);
                       },
                       0.0, q, breaks)
                       .value;
        }
        if (!(mass > 0.0)) fail(Errc::internal, "renewal calibration produced a non-positive mass");
        result.set_normalizer(mass);
    }
    return result;
}

}  // namespace levyq
