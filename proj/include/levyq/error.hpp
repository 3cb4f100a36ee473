#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levyq {

enum class Errc {
    invalid_parameter,
    empty_model,
    lattice_model,
    infinite_mean,
    unsupported_model,
    domain_error,
    no_root,
    not_negative_drift,
    wrong_regime,
    wrong_model_class,
    no_density,
    no_convergence,
    integral_diverges,
    unsorted_events,
    timeout,
    empty_input,
    internal,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_parameter: return "InvalidParameter";
        case Errc::empty_model: return "EmptyModel";
        case Errc::lattice_model: return "LatticeModel";
        case Errc::infinite_mean: return "InfiniteMean";
        case Errc::unsupported_model: return "UnsupportedModel";
        case Errc::domain_error: return "DomainError";
        case Errc::no_root: return "NoRoot";
        case Errc::not_negative_drift: return "NotNegativeDrift";
        case Errc::wrong_regime: return "WrongRegime";
        case Errc::wrong_model_class: return "WrongModelClass";
        case Errc::no_density: return "NoDensity";
        case Errc::no_convergence: return "NoConvergence";
        case Errc::integral_diverges: return "IntegralDiverges";
        case Errc::unsorted_events: return "UnsortedEvents";
        case Errc::timeout: return "Timeout";
        case Errc::empty_input: return "EmptyInput";
        case Errc::internal: return "InternalError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error code. Every failure raised by
/// the library is an `Error`; the CLI maps codes onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace levyq
