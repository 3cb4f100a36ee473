#pragma once

#include <cmath>
#include <limits>
#include <optional>

namespace levyq {

struct RootOptions {
    double bisection_tol = 1e-13;
    int newton_steps = 5;
    // Distance kept from a finite right end of the domain.
    double boundary_margin = 1e-9;
    // Bracket expansion gives up past this point when the domain is unbounded.
    double search_limit = 1e8;
};

/// Positive zero of a convex function with f(0) = 0 and f'(0) < 0.
///
/// The bracket grows by doubling from min(1e-3, boundary/2) until f turns
/// non-negative, then bisection narrows it to `bisection_tol` and at most
/// `newton_steps` safeguarded Newton steps polish the last digits. Returns
/// nullopt when f never re-crosses zero before `boundary`.
template <class F, class DF>
std::optional<double> convex_positive_root(F&& f, DF&& df, double boundary,
                                           const RootOptions& opts = {}) {
    const bool bounded = std::isfinite(boundary);
    const double cap = bounded ? boundary - opts.boundary_margin : opts.search_limit;
    if (!(cap > 0.0)) return std::nullopt;

    double hi = bounded ? std::min(1e-3, 0.5 * boundary) : 1e-3;
    double lo = 0.0;
    double f_hi = f(hi);
    if (!(f_hi < 0.0)) {
        // The root sits below the first probe: shrink toward zero.
        double probe = hi;
        while (true) {
            probe *= 0.5;
            if (probe < 1e-300) return std::nullopt;
            const double value = f(probe);
            if (value < 0.0) {
                lo = probe;
                break;
            }
            hi = probe;
            f_hi = value;
        }
    } else {
        while (f_hi < 0.0 || std::isnan(f_hi)) {
            if (hi >= cap) return std::nullopt;
            lo = hi;
            hi = std::min(2.0 * hi, cap);
            f_hi = f(hi);
        }
    }

    while (hi - lo > opts.bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    double best = 0.5 * (lo + hi);
    double f_best = f(best);
    for (int i = 0; i < opts.newton_steps && f_best != 0.0; ++i) {
        const double slope = df(best);
        if (!(slope != 0.0) || !std::isfinite(slope)) break;
        const double next = best - f_best / slope;
        if (!(next > 0.0) || next >= cap + opts.boundary_margin) break;
        const double f_next = f(next);
        if (!(std::abs(f_next) < std::abs(f_best))) break;
        best = next;
        f_best = f_next;
    }
    return best;
}

/// Plain bisection on a sign-changing bracket.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 400) {
    double f_lo = f(lo);
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace levyq
