#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "levyq/error.hpp"
#include "levyq/quadrature.hpp"
#include "levyq/rng.hpp"

namespace levyq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {
inline void require_positive(double value, std::string_view what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        fail(Errc::invalid_parameter, std::string(what) + " must be a positive finite number");
    }
}
}  // namespace detail

// Each law exposes the same member set; JumpDistribution dispatches over them.
// mgf(s) is only called inside the open domain s < mgf_bound() (or at s = 0).

struct Exponential {
    double rate;

    static constexpr std::string_view kind = "exponential";
    void validate() const { detail::require_positive(rate, "exponential rate"); }
    double mean() const { return 1.0 / rate; }
    double tail(double a) const { return a <= 0.0 ? 1.0 : std::exp(-rate * a); }
    std::optional<double> density(double a) const {
        return a < 0.0 ? 0.0 : rate * std::exp(-rate * a);
    }
    double mgf(double s) const { return rate / (rate - s); }
    double mgf_derivative(double s) const { return rate / ((rate - s) * (rate - s)); }
    double mgf_bound() const { return rate; }
    bool lattice() const { return false; }
    double sample(PhiloxStream& rng) const { return rng.exponential() / rate; }
    std::optional<Exponential> tilted(double s) const { return Exponential{rate - s}; }
    std::vector<double> breakpoints() const { return {}; }
};

struct HyperExponential {
    std::vector<double> weights;
    std::vector<double> rates;

    static constexpr std::string_view kind = "hyperexponential";
    void validate() const {
        if (weights.empty() || weights.size() != rates.size()) {
            fail(Errc::invalid_parameter, "hyperexponential needs equally many weights and rates");
        }
        for (double w : weights) detail::require_positive(w, "hyperexponential weight");
        for (double r : rates) detail::require_positive(r, "hyperexponential rate");
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) {
            fail(Errc::invalid_parameter, "hyperexponential weights must sum to 1");
        }
    }
    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) m += weights[i] / rates[i];
        return m;
    }
    double tail(double a) const {
        if (a <= 0.0) return 1.0;
        double t = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) t += weights[i] * std::exp(-rates[i] * a);
        return t;
    }
    std::optional<double> density(double a) const {
        if (a < 0.0) return 0.0;
        double d = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) {
            d += weights[i] * rates[i] * std::exp(-rates[i] * a);
        }
        return d;
    }
    double mgf(double s) const {
        double m = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) m += weights[i] * rates[i] / (rates[i] - s);
        return m;
    }
    double mgf_derivative(double s) const {
        double m = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) {
            m += weights[i] * rates[i] / ((rates[i] - s) * (rates[i] - s));
        }
        return m;
    }
    double mgf_bound() const { return *std::min_element(rates.begin(), rates.end()); }
    bool lattice() const { return false; }
    double sample(PhiloxStream& rng) const {
        double u = rng.uniform();
        std::size_t i = 0;
        for (; i + 1 < weights.size(); ++i) {
            if (u < weights[i]) break;
            u -= weights[i];
        }
        return rng.exponential() / rates[i];
    }
    std::optional<HyperExponential> tilted(double s) const {
        HyperExponential out;
        double total = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) {
            out.weights.push_back(weights[i] * rates[i] / (rates[i] - s));
            out.rates.push_back(rates[i] - s);
            total += out.weights.back();
        }
        for (double& w : out.weights) w /= total;
        return out;
    }
    std::vector<double> breakpoints() const { return {}; }
};

struct Erlang {
    int shape;
    double rate;

    static constexpr std::string_view kind = "erlang";
    void validate() const {
        if (shape < 1) fail(Errc::invalid_parameter, "erlang shape must be a positive integer");
        detail::require_positive(rate, "erlang rate");
    }
    double mean() const { return shape / rate; }
    double tail(double a) const {
        if (a <= 0.0) return 1.0;
        const double x = rate * a;
        double term = 1.0;
        double sum = 1.0;
        for (int j = 1; j < shape; ++j) {
            term *= x / j;
            sum += term;
        }
        return std::exp(-x) * sum;
    }
    std::optional<double> density(double a) const {
        if (a < 0.0) return 0.0;
        if (a == 0.0) return shape == 1 ? rate : 0.0;
        const double x = rate * a;
        return rate * std::exp((shape - 1) * std::log(x) - x - std::lgamma(static_cast<double>(shape)));
    }
    double mgf(double s) const { return std::pow(rate / (rate - s), shape); }
    double mgf_derivative(double s) const {
        return shape * std::pow(rate, shape) / std::pow(rate - s, shape + 1);
    }
    double mgf_bound() const { return rate; }
    bool lattice() const { return false; }
    double sample(PhiloxStream& rng) const {
        double total = 0.0;
        for (int j = 0; j < shape; ++j) total += rng.exponential();
        return total / rate;
    }
    std::optional<Erlang> tilted(double s) const { return Erlang{shape, rate - s}; }
    std::vector<double> breakpoints() const { return {}; }
};

struct Deterministic {
    double size;

    static constexpr std::string_view kind = "deterministic";
    void validate() const { detail::require_positive(size, "deterministic size"); }
    double mean() const { return size; }
    // Right-continuous tail of the point mass: P(U > a).
    double tail(double a) const { return a < size ? 1.0 : 0.0; }
    std::optional<double> density(double) const { return std::nullopt; }
    double mgf(double s) const { return std::exp(s * size); }
    double mgf_derivative(double s) const { return size * std::exp(s * size); }
    double mgf_bound() const { return kInf; }
    bool lattice() const { return true; }
    double sample(PhiloxStream&) const { return size; }
    std::optional<Deterministic> tilted(double) const { return *this; }
    std::vector<double> breakpoints() const { return {size}; }
};

struct Pareto {
    double scale;
    double index;

    static constexpr std::string_view kind = "pareto";
    void validate() const {
        detail::require_positive(scale, "pareto scale");
        detail::require_positive(index, "pareto index");
        if (index <= 1.0) fail(Errc::infinite_mean, "pareto index must exceed 1 for a finite mean");
    }
    double mean() const { return index * scale / (index - 1.0); }
    double tail(double a) const { return a < scale ? 1.0 : std::pow(scale / a, index); }
    std::optional<double> density(double a) const {
        if (a < scale) return 0.0;
        return index / scale * std::pow(scale / a, index + 1.0);
    }
    // E[e^{sU}] for s <= 0, by quadrature of index * int_1^inf e^{s scale t} t^{-index-1} dt.
    double mgf(double s) const {
        if (s == 0.0) return 1.0;
        return index * moment_integral(s, -index - 1.0);
    }
    double mgf_derivative(double s) const {
        if (s == 0.0) return mean();
        return index * scale * moment_integral(s, -index);
    }
    double mgf_bound() const { return 0.0; }
    bool lattice() const { return false; }
    double sample(PhiloxStream& rng) const { return scale * std::pow(rng.uniform(), -1.0 / index); }
    std::optional<Pareto> tilted(double) const { return std::nullopt; }
    std::vector<double> breakpoints() const { return {scale}; }

private:
    double moment_integral(double s, double power) const {
        const double c = s * scale;
        QuadratureOptions opts;
        opts.abs_tol = 1e-16;
        opts.rel_tol = 1e-14;
        opts.initial_width = std::min(1.0, 1.0 / std::abs(c));
        return integrate_tail([&](double t) { return std::exp(c * t) * std::pow(t, power); }, 1.0, opts)
            .value;
    }
};

/// Law of the positive jump sizes of one side of the process.
class JumpDistribution {
public:
    using Law = std::variant<Exponential, HyperExponential, Erlang, Deterministic, Pareto>;

    JumpDistribution(Law law) : law_(std::move(law)) {}  // NOLINT(google-explicit-constructor)
    template <class T>
        requires std::is_constructible_v<Law, T> && (!std::is_same_v<std::decay_t<T>, Law>) &&
                 (!std::is_same_v<std::decay_t<T>, JumpDistribution>)
    JumpDistribution(T&& law) : law_(std::forward<T>(law)) {}  // NOLINT(google-explicit-constructor)

    const Law& law() const noexcept { return law_; }
    template <class T>
    bool is() const noexcept { return std::holds_alternative<T>(law_); }
    template <class T>
    const T* get_if() const noexcept { return std::get_if<T>(&law_); }

    std::string_view kind() const {
        return std::visit([](const auto& d) { return std::decay_t<decltype(d)>::kind; }, law_);
    }
    void validate() const { std::visit([](const auto& d) { d.validate(); }, law_); }
    double mean() const { return std::visit([](const auto& d) { return d.mean(); }, law_); }
    double tail(double a) const { return std::visit([a](const auto& d) { return d.tail(a); }, law_); }
    std::optional<double> density(double a) const {
        return std::visit([a](const auto& d) { return d.density(a); }, law_);
    }
    bool has_density() const { return !is<Deterministic>(); }
    bool lattice() const { return std::visit([](const auto& d) { return d.lattice(); }, law_); }

    /// Supremum of the moment generating function's domain (open at the bound,
    /// except that s = 0 is always admissible).
    double mgf_bound() const { return std::visit([](const auto& d) { return d.mgf_bound(); }, law_); }
    bool in_mgf_domain(double s) const { return s == 0.0 || s < mgf_bound(); }

    double mgf(double s) const {
        check_domain(s);
        return std::visit([s](const auto& d) { return d.mgf(s); }, law_);
    }
    double mgf_derivative(double s) const {
        check_domain(s);
        return std::visit([s](const auto& d) { return d.mgf_derivative(s); }, law_);
    }

    double sample(PhiloxStream& rng) const {
        return std::visit([&rng](const auto& d) { return d.sample(rng); }, law_);
    }

    /// Law of the exponentially tilted size e^{sU} F(dU) / E[e^{sU}], when it
    /// stays inside the supported families.
    std::optional<JumpDistribution> tilted(double s) const {
        check_domain(s);
        return std::visit(
            [s](const auto& d) -> std::optional<JumpDistribution> {
                auto t = d.tilted(s);
                if (!t) return std::nullopt;
                return JumpDistribution(*t);
            },
            law_);
    }

    std::vector<double> breakpoints() const {
        return std::visit([](const auto& d) { return d.breakpoints(); }, law_);
    }

private:
    void check_domain(double s) const {
        if (!in_mgf_domain(s)) {
            fail(Errc::domain_error, "moment generating function of the " + std::string(kind()) +
                                         " law diverges at s = " + std::to_string(s));
        }
    }

    Law law_;
};

}  // namespace levyq
