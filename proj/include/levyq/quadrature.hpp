#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "levyq/error.hpp"

namespace levyq {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    // Width of the first panel of a semi-infinite integral; later panels double.
    double initial_width = 1.0;
    int max_doublings = 60;
    int max_subdivisions = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[j] * sum;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod)) {
        fail(Errc::no_convergence, "non-finite integrand on [" + std::to_string(a) + ", " +
                                       std::to_string(b) + "]");
    }
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration over [a, b]. Interior
/// breakpoints (kinks or jumps of the integrand) become initial segment edges.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                           std::span<const double> breakpoints = {}) {
    if (!(b > a)) return {};
    std::vector<double> edges{a};
    for (double p : breakpoints) {
        if (p > a && p < b) edges.push_back(p);
    }
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::priority_queue<detail::Segment> heap;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto seg = detail::gauss_kronrod15(f, edges[i], edges[i + 1]);
        total += seg.value;
        total_error += seg.error;
        heap.push(seg);
    }

    int subdivisions = 0;
    auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
    while (total_error > tolerance() && subdivisions < opts.max_subdivisions) {
        auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // interval at machine resolution
        heap.pop();
        auto left = detail::gauss_kronrod15(f, worst.a, mid);
        auto right = detail::gauss_kronrod15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }

    // Re-sum to shed the drift of the running totals.
    double value = 0.0;
    double error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    if (error > 100.0 * std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) {
        fail(Errc::no_convergence, "adaptive quadrature on [" + std::to_string(a) + ", " +
                                       std::to_string(b) + "] stalled at error " +
                                       std::to_string(error));
    }
    return {value, error};
}

/// Integral of an eventually monotone decaying kernel over [lower, inf).
///
/// Panels of doubling width are integrated one after another. Integration
/// stops once the latest panel contributes less than the tolerance and the
/// geometric extrapolation of the remaining panels (ratio of the last two
/// contributions) is also below it; that extrapolated tail is added to the
/// result. Two consecutive zero panels end the integration immediately.
template <class F>
QuadratureResult integrate_tail(F&& f, double lower, const QuadratureOptions& opts = {},
                                std::span<const double> breakpoints = {}) {
    if (std::isnan(lower)) fail(Errc::invalid_parameter, "lower bound is NaN");
    double a = lower;
    double width = opts.initial_width > 0.0 ? opts.initial_width : 1.0;
    double sum = 0.0;
    double error = 0.0;
    double previous = -1.0;
    for (int k = 0; k <= opts.max_doublings; ++k) {
        const double b = a + width;
        QuadratureOptions panel = opts;
        panel.abs_tol = std::ldexp(opts.abs_tol, -(std::min(k, 900) + 2));
        const auto piece = integrate(f, a, b, panel, breakpoints);
        sum += piece.value;
        error += piece.error;
        const double contribution = std::abs(piece.value);
        const double tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(sum));
        if (k >= 2) {
            if (contribution == 0.0 && previous == 0.0) return {sum, error};
            if (previous > 0.0 && contribution < previous && contribution < tol) {
                const double ratio = contribution / previous;
                const double tail = piece.value * ratio / (1.0 - ratio);
                if (std::abs(tail) < 0.5 * tol) {
                    return {sum + tail, error + std::abs(tail)};
                }
            }
        }
        previous = contribution;
        a = b;
        width *= 2.0;
    }
    fail(Errc::no_convergence, "semi-infinite integral from " + std::to_string(lower) +
                                   " did not settle after " + std::to_string(opts.max_doublings) +
                                   " panel doublings");
}

}  // namespace levyq
