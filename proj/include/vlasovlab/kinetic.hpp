#pragma once

// Mesoscopic kinetic equations of the four models on a periodic grid,
// their spatially homogeneous reductions, and fixed points of the latter.

#include "vlasovlab/convolution.hpp"
#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"
#include "vlasovlab/models.hpp"
#include "vlasovlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vlasovlab {

struct KineticState {
    GridSpec grid;
    std::vector<double> plus;
    std::vector<double> minus;
    double time = 0.0;

    static KineticState constant(const GridSpec& grid, double rho_plus, double rho_minus)
    {
        return {grid, std::vector<double>(grid.cell_count(), rho_plus),
                std::vector<double>(grid.cell_count(), rho_minus), 0.0};
    }
};

/// Time derivatives of both fields.
struct FieldRates {
    std::vector<double> minus;
    std::vector<double> plus;
};

struct HomogeneousState {
    double plus = 0.0;
    double minus = 0.0;
    double time = 0.0;
};

struct HomogeneousRates {
    double minus = 0.0;
    double plus = 0.0;
};

/// Where the damping factor of the density-branching birth term is evaluated.
enum class BranchingFactor {
    at_offspring,  ///< (a+ * rho+)(x) e^{-(psi- * rho-)(x)}
    at_parent,     ///< (a+ * (rho+ e^{-psi- * rho-}))(x)
};

struct KineticOptions {
    BranchingFactor branching_factor = BranchingFactor::at_offspring;
    ConvolutionMethod method = ConvolutionMethod::automatic;
};

inline void require_kinetic_support(const ModelSpec& m)
{
    if (const auto* g = std::get_if<GlauberPair>(&m); g && g->s != 0.0)
        throw UnsupportedVariant("kinetic equations are implemented for glauber_pair with s = 0 only");
}

/// Right-hand side of the kinetic system for one model on one grid, with
/// all kernel convolutions prepared once.
class KineticSystem {
public:
    KineticSystem(const ModelSpec& model, const GridSpec& grid, KineticOptions opt = {})
        : model_(model), grid_(grid), opt_(opt)
    {
        require_kinetic_support(model);
        validate_model(model, &grid.domain);
        for (const Kernel& k : model_kernels(model)) conv_.emplace_back(k, grid, opt.method);
    }

    const GridSpec& grid() const noexcept { return grid_; }
    const ModelSpec& model() const noexcept { return model_; }

    FieldRates operator()(std::span<const double> rho_plus, std::span<const double> rho_minus) const
    {
        const std::size_t n = grid_.cell_count();
        if (rho_plus.size() != n || rho_minus.size() != n) throw UsageError("kinetic_rhs: field size does not match grid");
        FieldRates r{std::vector<double>(n), std::vector<double>(n)};
        auto conv = [&](std::size_t k, std::span<const double> f) { return conv_[k](f); };
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, BdlpPair>) {
                    // kernels: 0 compete_minus, 1 branch_minus, 2 compete_plus, 3 branch_plus, 4 cross_death, 5 cross_birth
                    const auto am = conv(0, rho_minus), ap = conv(1, rho_minus);
                    const auto bm = conv(2, rho_plus), bp = conv(3, rho_plus);
                    const auto fm = conv(4, rho_minus), fp = conv(5, rho_minus);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double rm = rho_minus[i], rp = rho_plus[i];
                        r.minus[i] = -v.m_minus * rm - rm * am[i] + ap[i] + v.z;
                        r.plus[i] = -(v.m_plus + fm[i]) * rp - rp * bm[i] + bp[i] + fp[i];
                    }
                } else if constexpr (std::is_same_v<T, GlauberPair>) {
                    // kernels: 0 psi_plus, 1 psi_minus, 2 phi_plus, 3 phi_minus
                    const auto psp = conv(0, rho_plus), psm = conv(1, rho_minus);
                    const auto php = conv(2, rho_plus), phm = conv(3, rho_minus);
                    for (std::size_t i = 0; i < n; ++i) {
                        r.minus[i] = -rho_minus[i] + v.z_minus * std::exp(-phm[i]) * std::exp(-psp[i]);
                        r.plus[i] = -rho_plus[i] + v.z_plus * std::exp(-php[i]) * std::exp(-psm[i]);
                    }
                } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                    // kernels: 0 a_minus, 1 a_plus, 2 phi, 3 b_plus, 4 psi
                    const auto am = conv(0, rho_plus), ap = conv(1, rho_plus);
                    const auto ph = conv(2, rho_minus), bp = conv(3, rho_minus), ps = conv(4, rho_minus);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double rp = rho_plus[i];
                        r.minus[i] = -rho_minus[i] + v.z_minus * std::exp(-ps[i]);
                        r.plus[i] = -(v.m_plus + ph[i]) * rp - rp * am[i] + ap[i] + bp[i];
                    }
                } else {
                    // kernels: 0 phi_plus, 1 phi_minus, 2 psi_minus, 3 a_plus
                    const auto php = conv(0, rho_plus), phm = conv(1, rho_minus), psm = conv(2, rho_minus);
                    std::vector<double> branching;
                    if (opt_.branching_factor == BranchingFactor::at_offspring) {
                        branching = conv(3, rho_plus);
                        for (std::size_t i = 0; i < n; ++i) branching[i] *= std::exp(-psm[i]);
                    } else {
                        std::vector<double> weighted(n);
                        for (std::size_t i = 0; i < n; ++i) weighted[i] = rho_plus[i] * std::exp(-psm[i]);
                        branching = conv(3, weighted);
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        r.minus[i] = -rho_minus[i] + v.z_minus * std::exp(-phm[i]);
                        r.plus[i] = -v.m_plus * rho_plus[i] * std::exp(php[i]) + branching[i];
                    }
                }
            },
            model_);
        return r;
    }

private:
    ModelSpec model_;
    GridSpec grid_;
    KineticOptions opt_;
    std::vector<PeriodicConvolver> conv_;
};

inline FieldRates kinetic_rhs(const ModelSpec& m, const KineticState& state, KineticOptions opt = {})
{
    return KineticSystem(m, state.grid, opt)(state.plus, state.minus);
}

struct KineticRun {
    std::vector<KineticState> outputs;
    std::size_t clipped = 0;  ///< cell values clipped from negative to zero
    std::size_t steps = 0;
};

/// Classical RK4 with fixed step dt from state0.time to t_end, recording the
/// state at each output time (t_end alone when `output_times` is empty).
inline KineticRun integrate(const ModelSpec& m, const KineticState& state0, double t_end, double dt,
                            std::vector<double> output_times = {}, KineticOptions opt = {})
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("integrate: dt must be positive");
    if (!(t_end >= state0.time) || !std::isfinite(t_end)) throw UsageError("integrate: t_end must be >= start time");
    if (output_times.empty()) output_times.push_back(t_end);
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (!(output_times[i] >= state0.time && output_times[i] <= t_end))
            throw UsageError("integrate: output times must lie in [start, t_end]");
        if (i > 0 && !(output_times[i] > output_times[i - 1]))
            throw UsageError("integrate: output times must be strictly increasing");
    }
    const KineticSystem sys(m, state0.grid, opt);
    const std::size_t n = state0.grid.cell_count();
    KineticRun run;
    KineticState s = state0;
    std::vector<double> yp(n), ym(n);

    auto step = [&](double h) {
        const FieldRates k1 = sys(s.plus, s.minus);
        for (std::size_t i = 0; i < n; ++i) {
            yp[i] = s.plus[i] + 0.5 * h * k1.plus[i];
            ym[i] = s.minus[i] + 0.5 * h * k1.minus[i];
        }
        const FieldRates k2 = sys(yp, ym);
        for (std::size_t i = 0; i < n; ++i) {
            yp[i] = s.plus[i] + 0.5 * h * k2.plus[i];
            ym[i] = s.minus[i] + 0.5 * h * k2.minus[i];
        }
        const FieldRates k3 = sys(yp, ym);
        for (std::size_t i = 0; i < n; ++i) {
            yp[i] = s.plus[i] + h * k3.plus[i];
            ym[i] = s.minus[i] + h * k3.minus[i];
        }
        const FieldRates k4 = sys(yp, ym);
        for (std::size_t i = 0; i < n; ++i) {
            s.plus[i] += h / 6.0 * (k1.plus[i] + 2.0 * k2.plus[i] + 2.0 * k3.plus[i] + k4.plus[i]);
            s.minus[i] += h / 6.0 * (k1.minus[i] + 2.0 * k2.minus[i] + 2.0 * k3.minus[i] + k4.minus[i]);
        }
        for (auto* f : {&s.plus, &s.minus})
            for (double& v : *f) {
                if (!std::isfinite(v))
                    throw SimulationError("integrate: non-finite density at t=" + std::to_string(s.time));
                if (v < 0.0) {
                    v = 0.0;
                    ++run.clipped;
                }
            }
        ++run.steps;
    };

    for (double target : output_times) {
        // fixed steps; a shorter final step lands exactly on the target
        while (target - s.time > 1e-12 * std::max(1.0, std::abs(target))) {
            const double remaining = target - s.time;
            const double h = remaining < dt * (1.0 + 1e-9) ? remaining : dt;
            step(h);
            s.time = h == remaining ? target : s.time + h;
        }
        s.time = target;
        run.outputs.push_back(s);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Homogeneous reduction: every convolution (k * rho) becomes mass(k) rho.

using MassFunction = std::function<double(const Kernel&)>;

inline MassFunction exact_masses(int dim)
{
    return [dim](const Kernel& k) { return kernel_mass(k, dim); };
}

inline MassFunction grid_masses(const GridSpec& grid)
{
    return [grid](const Kernel& k) { return grid_kernel_mass(k, grid); };
}

inline HomogeneousRates homogeneous_rhs(const ModelSpec& m, const HomogeneousState& h, const MassFunction& mass)
{
    require_kinetic_support(m);
    const double rp = h.plus;
    const double rm = h.minus;
    return std::visit(
        [&](const auto& v) -> HomogeneousRates {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                return {-v.m_minus * rm - mass(v.compete_minus) * rm * rm + mass(v.branch_minus) * rm + v.z,
                        -(v.m_plus + mass(v.cross_death) * rm) * rp - mass(v.compete_plus) * rp * rp +
                            mass(v.branch_plus) * rp + mass(v.cross_birth) * rm};
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                return {-rm + v.z_minus * std::exp(-mass(v.phi_minus) * rm - mass(v.psi_plus) * rp),
                        -rp + v.z_plus * std::exp(-mass(v.phi_plus) * rp - mass(v.psi_minus) * rm)};
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                return {-rm + v.z_minus * std::exp(-mass(v.psi) * rm),
                        -(v.m_plus + mass(v.phi) * rm) * rp - mass(v.a_minus) * rp * rp + mass(v.a_plus) * rp +
                            mass(v.b_plus) * rm};
            } else {
                return {-rm + v.z_minus * std::exp(-mass(v.phi_minus) * rm),
                        -v.m_plus * rp * std::exp(mass(v.phi_plus) * rp) +
                            mass(v.a_plus) * rp * std::exp(-mass(v.psi_minus) * rm)};
            }
        },
        m);
}

inline HomogeneousRates homogeneous_rhs(const ModelSpec& m, const HomogeneousState& h, int dim)
{
    return homogeneous_rhs(m, h, exact_masses(dim));
}

/// RK4 integration of the homogeneous system; returns the state at t_end.
inline HomogeneousState integrate_homogeneous(const ModelSpec& m, HomogeneousState h, double t_end, double dt,
                                              const MassFunction& mass)
{
    if (!(dt > 0.0)) throw UsageError("integrate_homogeneous: dt must be positive");
    auto f = [&](double p, double q) { return homogeneous_rhs(m, {p, q, 0.0}, mass); };
    while (t_end - h.time > 1e-12 * std::max(1.0, t_end)) {
        const double step = std::min(dt, t_end - h.time);
        const auto k1 = f(h.plus, h.minus);
        const auto k2 = f(h.plus + 0.5 * step * k1.plus, h.minus + 0.5 * step * k1.minus);
        const auto k3 = f(h.plus + 0.5 * step * k2.plus, h.minus + 0.5 * step * k2.minus);
        const auto k4 = f(h.plus + step * k3.plus, h.minus + step * k3.minus);
        h.plus = std::max(0.0, h.plus + step / 6.0 * (k1.plus + 2 * k2.plus + 2 * k3.plus + k4.plus));
        h.minus = std::max(0.0, h.minus + step / 6.0 * (k1.minus + 2 * k2.minus + 2 * k3.minus + k4.minus));
        h.time += step;
        if (!std::isfinite(h.plus) || !std::isfinite(h.minus))
            throw SimulationError("integrate_homogeneous: non-finite density");
    }
    h.time = t_end;
    return h;
}

namespace detail {

/// Root of f on [0, inf) reached from small positive data: 0 when f <= 0 just
/// above 0, otherwise the first + to - sign change. Shares an iteration budget.
template <class F>
std::optional<double> first_stable_root(F&& f, int& budget)
{
    constexpr double tiny = 1e-12;
    const double f0 = f(0.0);
    if (f0 < 0.0) return 0.0;
    if (f0 == 0.0 && f(tiny) <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = tiny;
    while (f(hi) > 0.0) {
        if (--budget <= 0 || hi > 1e12) return std::nullopt;
        lo = hi;
        hi *= 1.25;
    }
    for (int i = 0; i < 200; ++i) {
        if (--budget <= 0) return std::nullopt;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Non-negative zero of the homogeneous system, found by bracketing and
/// bisection (nested for the coupled Glauber pair); empty when none is found
/// within 10^4 function evaluations of the outer search.
inline std::optional<HomogeneousState> homogeneous_fixed_point(const ModelSpec& m, const MassFunction& mass)
{
    require_kinetic_support(m);
    int budget = 10'000;
    auto g = [&](double rp, double rm) { return homogeneous_rhs(m, {rp, rm, 0.0}, mass); };
    if (std::holds_alternative<GlauberPair>(m)) {
        int inner_budget = 1'000'000;
        bool inner_failed = false;
        auto minus_of = [&](double rp) {
            auto r = detail::first_stable_root([&](double rm) { return g(rp, rm).minus; }, inner_budget);
            if (!r) inner_failed = true;
            return r.value_or(0.0);
        };
        auto rp = detail::first_stable_root([&](double p) { return g(p, minus_of(p)).plus; }, budget);
        if (!rp || inner_failed) return std::nullopt;
        return HomogeneousState{*rp, minus_of(*rp), 0.0};
    }
    auto rm = detail::first_stable_root([&](double q) { return g(0.0, q).minus; }, budget);
    if (!rm) return std::nullopt;
    auto rp = detail::first_stable_root([&](double p) { return g(p, *rm).plus; }, budget);
    if (!rp) return std::nullopt;
    return HomogeneousState{*rp, *rm, 0.0};
}

inline std::optional<HomogeneousState> homogeneous_fixed_point(const ModelSpec& m, int dim = 1)
{
    return homogeneous_fixed_point(m, exact_masses(dim));
}

}  // namespace vlasovlab
