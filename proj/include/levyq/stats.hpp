#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyq/error.hpp"
#include "levyq/format.hpp"
#include "levyq/limitlaw.hpp"
#include "levyq/model.hpp"
#include "levyq/simulate.hpp"

namespace levyq {

struct WeightedPoint {
    double u;
    double v;
    double w = 1.0;
};

/// Rectangular evaluation grid: every (us[i], vs[j]).
struct Grid {
    std::vector<double> us;
    std::vector<double> vs;

    static Grid uniform(double u_max, double v_max, std::size_t points) {
        if (points < 2) fail(Errc::invalid_parameter, "a grid needs at least two points per axis");
        if (!(u_max > 0.0) || !(v_max > 0.0)) fail(Errc::invalid_parameter, "grid bounds must be positive");
        Grid g;
        for (std::size_t i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(points - 1);
            g.us.push_back(t * u_max);
            g.vs.push_back(t * v_max);
        }
        return g;
    }

    /// 17 x 17 points on [0, 4 m]^2, with m the mean job size.
    static Grid for_model(const LevyModel& model) {
        const double q = 4.0 * model.up->dist.mean();
        return uniform(q, q, 17);
    }

    std::size_t size() const noexcept { return us.size() * vs.size(); }

    void check() const {
        if (us.empty() || vs.empty()) fail(Errc::empty_input, "empty grid");
        for (const auto* axis : {&us, &vs}) {
            for (std::size_t i = 0; i < axis->size(); ++i) {
                if (!((*axis)[i] >= 0.0) || !std::isfinite((*axis)[i])) {
                    fail(Errc::invalid_parameter, "grid coordinates must be finite and >= 0");
                }
                if (i > 0 && !((*axis)[i] > (*axis)[i - 1])) {
                    fail(Errc::invalid_parameter, "grid axes must be strictly increasing");
                }
            }
        }
    }
};

/// Self-normalised weighted estimate of P(under > u, over > v).
class EmpiricalCCDF {
public:
    explicit EmpiricalCCDF(std::vector<WeightedPoint> points) : points_(std::move(points)) {
        if (points_.empty()) fail(Errc::empty_input, "empirical CCDF of an empty sample");
        double sq = 0.0;
        for (const auto& p : points_) {
            if (!(p.w > 0.0) || !std::isfinite(p.w)) fail(Errc::invalid_parameter, "weights must be positive");
            total_ += p.w;
            sq += p.w * p.w;
        }
        n_effective_ = total_ * total_ / sq;
    }

    explicit EmpiricalCCDF(std::span<const OvershootSample> samples) : EmpiricalCCDF(to_points(samples)) {}

    /// Single query: a linear scan.
    double operator()(double u, double v) const {
        double mass = 0.0;
        for (const auto& p : points_) {
            if (p.u > u && p.v > v) mass += p.w;
        }
        return std::clamp(mass / total_, 0.0, 1.0);
    }

    /// Values on a whole grid, row-major in u: out[i * vs.size() + j].
    ///
    /// Each sample is binned by how many grid coordinates lie strictly below
    /// it on either axis; 2-D suffix sums then give every grid value at once.
    std::vector<double> on_grid(const Grid& grid) const {
        grid.check();
        const std::size_t nu = grid.us.size();
        const std::size_t nv = grid.vs.size();
        std::vector<double> cells((nu + 1) * (nv + 1), 0.0);
        auto cell = [&](std::size_t a, std::size_t b) -> double& { return cells[a * (nv + 1) + b]; };
        for (const auto& p : points_) {
            const auto a = static_cast<std::size_t>(std::lower_bound(grid.us.begin(), grid.us.end(), p.u) -
                                                    grid.us.begin());
            const auto b = static_cast<std::size_t>(std::lower_bound(grid.vs.begin(), grid.vs.end(), p.v) -
                                                    grid.vs.begin());
            cell(a, b) += p.w;
        }
        // suffix sums: S(a, b) = sum of cells with index >= (a, b)
        for (std::size_t a = nu + 1; a-- > 0;) {
            for (std::size_t b = nv + 1; b-- > 0;) {
                double s = cell(a, b);
                if (a < nu) s += cell(a + 1, b);
                if (b < nv) s += cell(a, b + 1);
                if (a < nu && b < nv) s -= cell(a + 1, b + 1);
                cell(a, b) = s;
            }
        }
        // grid point (i, j) counts samples with u > us[i], v > vs[j]: bins a > i, b > j
        std::vector<double> out(nu * nv);
        for (std::size_t i = 0; i < nu; ++i) {
            for (std::size_t j = 0; j < nv; ++j) {
                out[i * nv + j] = std::clamp(cell(i + 1, j + 1) / total_, 0.0, 1.0);
            }
        }
        return out;
    }

    double n_effective() const noexcept { return n_effective_; }
    double total_weight() const noexcept { return total_; }
    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<WeightedPoint>& points() const noexcept { return points_; }

private:
    static std::vector<WeightedPoint> to_points(std::span<const OvershootSample> samples) {
        std::vector<WeightedPoint> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back({s.undershoot, s.overshoot, s.weight});
        return out;
    }

    std::vector<WeightedPoint> points_;
    double total_ = 0.0;
    double n_effective_ = 0.0;
};

inline EmpiricalCCDF empirical_ccdf(std::span<const OvershootSample> samples) { return EmpiricalCCDF(samples); }

/// Dvoretzky-Kiefer-Wolfowitz half-width sqrt(ln(2/delta) / (2 n)).
inline double dkw_epsilon(double n_effective, double delta) {
    if (!(n_effective > 0.0)) fail(Errc::invalid_parameter, "DKW needs a positive sample size");
    if (!(delta > 0.0 && delta <= 1.0)) fail(Errc::invalid_parameter, "DKW needs delta in (0, 1]");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * n_effective));
}

template <class Law>
std::vector<double> law_on_grid(const Law& law, const Grid& grid) {
    grid.check();
    std::vector<double> out;
    out.reserve(grid.size());
    for (double u : grid.us) {
        for (double v : grid.vs) out.push_back(law(u, v));
    }
    return out;
}

template <class Law>
double sup_distance(const EmpiricalCCDF& emp, const Law& law, const Grid& grid) {
    const auto e = emp.on_grid(grid);
    const auto a = law_on_grid(law, grid);
    double sup = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) sup = std::max(sup, std::abs(e[k] - a[k]));
    return sup;
}

struct CompareOptions {
    double delta = 0.01;
    // Heuristic allowance for the finite-level bias; there is no known
    // finite-x error bound for the convergence to the limit.
    double bias_allowance = 0.002;
};

struct Residual {
    double u;
    double v;
    double empirical;
    double analytic;
    double residual;  // empirical - analytic
};

struct ComparisonReport {
    Grid grid;
    std::vector<Residual> residuals;
    double sup_distance = 0.0;
    double dkw_epsilon = 0.0;  // Bonferroni-combined over the u-lines of the grid
    double bias_allowance = 0.0;
    double delta = 0.0;
    double n_effective = 0.0;
    std::size_t n = 0;
    bool pass = false;

    double band() const noexcept { return dkw_epsilon + bias_allowance; }
};

/// Compares an empirical CCDF against a law on a grid. For each fixed u the
/// map v -> P(under > u, over > v) is a univariate CCDF, so DKW holds per
/// u-line; the band splits delta evenly over the lines.
template <class Law>
ComparisonReport compare(const EmpiricalCCDF& emp, const Law& law, const Grid& grid, const CompareOptions& opts = {}) {
    if (!(opts.bias_allowance >= 0.0)) fail(Errc::invalid_parameter, "bias allowance must be >= 0");
    const auto e = emp.on_grid(grid);
    const auto a = law_on_grid(law, grid);
    ComparisonReport r;
    r.grid = grid;
    r.delta = opts.delta;
    r.bias_allowance = opts.bias_allowance;
    r.n_effective = emp.n_effective();
    r.n = emp.size();
    r.dkw_epsilon = dkw_epsilon(emp.n_effective(), opts.delta / static_cast<double>(grid.us.size()));
    std::size_t k = 0;
    for (double u : grid.us) {
        for (double v : grid.vs) {
            const double d = e[k] - a[k];
            r.residuals.push_back({u, v, e[k], a[k], d});
            r.sup_distance = std::max(r.sup_distance, std::abs(d));
            ++k;
        }
    }
    r.pass = r.sup_distance <= r.band();
    return r;
}

inline nlohmann::ordered_json to_json(const ComparisonReport& r) {
    nlohmann::ordered_json j;
    j["verdict"] = r.pass ? "pass" : "fail";
    j["sup_distance"] = r.sup_distance;
    j["dkw_epsilon"] = r.dkw_epsilon;
    j["bias_allowance"] = r.bias_allowance;
    j["bias_allowance_note"] = "heuristic finite-level allowance; no finite-x error bound is known";
    j["band"] = r.band();
    j["delta"] = r.delta;
    j["n"] = r.n;
    j["n_effective"] = r.n_effective;
    j["grid"] = {{"u", r.grid.us}, {"v", r.grid.vs}};
    return j;
}

/// RFC-4180 CSV with CRLF line ends.
inline void write_residuals_csv(std::ostream& out, const ComparisonReport& r) {
    out << "u,v,empirical,analytic,residual\r\n";
    for (const auto& p : r.residuals) {
        out << format_double(p.u) << ',' << format_double(p.v) << ',' << format_double(p.empirical) << ','
            << format_double(p.analytic) << ',' << format_double(p.residual) << "\r\n";
    }
}

enum class SamplerKind { plain, tilted };

struct ConvergenceOptions {
    SamplerKind sampler = SamplerKind::plain;
    std::optional<Grid> grid;
    double delta = 0.01;
    SamplerOptions sampler_options;
};

struct ConvergenceRow {
    double x;
    double sup_distance;
    double dkw_epsilon;
    double n_effective;
};

/// Distance between the finite-level empirical law and its limit at each x.
/// The plain sampler follows the reflected workload and is compared with
/// Psi_inf; the tilted sampler follows the free process under the Cramer
/// measure and is compared with the conditional first-passage limit.
inline std::vector<ConvergenceRow> convergence_study(const LevyModel& model, std::span<const double> x_list,
                                                     std::size_t n, std::uint64_t seed,
                                                     const ConvergenceOptions& opts = {}) {
    validate(model);
    if (x_list.empty()) fail(Errc::empty_input, "empty level list");
    for (std::size_t i = 1; i < x_list.size(); ++i) {
        if (!(x_list[i] > x_list[i - 1])) fail(Errc::invalid_parameter, "levels must be strictly increasing");
    }
    if (n == 0) fail(Errc::invalid_parameter, "sample size must be positive");
    const Grid grid = opts.grid ? *opts.grid : Grid::for_model(model);
    const bool tilted = opts.sampler == SamplerKind::tilted;
    const auto law = tilted ? phi_sharp_inf(model).law : psi_inf(model);
    const auto analytic = law_on_grid(law, grid);
    std::vector<ConvergenceRow> rows;
    for (double x : x_list) {
        const auto samples = tilted ? sample_first_passage_tilted(model, x, n, seed, opts.sampler_options)
                                    : sample_overflow(model, x, n, seed, opts.sampler_options);
        const EmpiricalCCDF emp(samples);
        const auto e = emp.on_grid(grid);
        double sup = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) sup = std::max(sup, std::abs(e[k] - analytic[k]));
        rows.push_back({x, sup, dkw_epsilon(emp.n_effective(), opts.delta / static_cast<double>(grid.us.size())),
                        emp.n_effective()});
    }
    return rows;
}

}  // namespace levyq
