#pragma once

// Harmonic-analysis toolkit on finite two-species configurations: subset
// enumeration, the K-transform and its inverse, and the Lebesgue-Poisson
// exponential. Everything is an exact finite sum.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"

#include <bit>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

namespace vlasovlab {

/// Largest configuration accepted by the subset sums (2^20 terms).
inline constexpr std::size_t max_enumerated_points = 20;

template <class F>
concept ConfigurationFunction = std::invocable<const F&, const TwoSpeciesConfiguration&> &&
    std::convertible_to<std::invoke_result_t<const F&, const TwoSpeciesConfiguration&>, double>;

template <class F>
concept PointFunction = std::invocable<const F&, const Point&> &&
    std::convertible_to<std::invoke_result_t<const F&, const Point&>, double>;

namespace detail {

inline void require_enumerable(const TwoSpeciesConfiguration& eta, const char* what)
{
    if (eta.size() > max_enumerated_points)
        throw UsageError(std::string(what) + ": configuration has " + std::to_string(eta.size()) +
                         " points, limit is " + std::to_string(max_enumerated_points));
}

/// Subconfiguration selected by `mask`: low |eta+| bits pick plus points, the rest minus points.
inline void select_subset(const TwoSpeciesConfiguration& eta, std::uint32_t mask,
                          TwoSpeciesConfiguration& out)
{
    out.plus.clear();
    out.minus.clear();
    const std::size_t np = eta.plus.size();
    for (std::size_t i = 0; i < np; ++i)
        if (mask & (1u << i)) out.plus.push_back(eta.plus[i]);
    for (std::size_t i = 0; i < eta.minus.size(); ++i)
        if (mask & (1u << (np + i))) out.minus.push_back(eta.minus[i]);
}

/// Calls visit(xi, |eta \ xi|) for every subconfiguration xi of eta, in mask order.
template <class Visitor>
void for_each_subconfiguration(const TwoSpeciesConfiguration& eta, Visitor&& visit)
{
    const auto n = static_cast<std::uint32_t>(eta.size());
    const std::uint32_t count = 1u << n;
    TwoSpeciesConfiguration xi;
    xi.plus.reserve(eta.plus.size());
    xi.minus.reserve(eta.minus.size());
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        select_subset(eta, mask, xi);
        const auto removed = n - static_cast<std::uint32_t>(std::popcount(mask));
        visit(static_cast<const TwoSpeciesConfiguration&>(xi), removed);
    }
}

}  // namespace detail

/// All 2^{|eta+|} * 2^{|eta-|} subconfigurations, ordered by inclusion mask.
inline std::vector<TwoSpeciesConfiguration> enumerate_subconfigurations(const TwoSpeciesConfiguration& eta)
{
    detail::require_enumerable(eta, "enumerate_subconfigurations");
    std::vector<TwoSpeciesConfiguration> out;
    out.reserve(std::size_t{1} << eta.size());
    detail::for_each_subconfiguration(eta, [&](const TwoSpeciesConfiguration& xi, std::uint32_t) {
        out.push_back(xi);
    });
    return out;
}

/// e(f+, f-; eta) = prod_{x in eta+} f+(x) * prod_{x in eta-} f-(x); 1 on the empty configuration.
template <PointFunction FPlus, PointFunction FMinus>
double lp_exponential(const FPlus& f_plus, const FMinus& f_minus, const TwoSpeciesConfiguration& eta)
{
    double prod = 1.0;
    for (const Point& x : eta.plus) prod *= f_plus(x);
    for (const Point& x : eta.minus) prod *= f_minus(x);
    return prod;
}

/// (KG)(gamma) = sum over all xi subset of gamma of G(xi).
template <ConfigurationFunction G>
double k_transform(const G& g, const TwoSpeciesConfiguration& gamma)
{
    detail::require_enumerable(gamma, "k_transform");
    double sum = 0.0;
    detail::for_each_subconfiguration(gamma, [&](const TwoSpeciesConfiguration& xi, std::uint32_t) {
        sum += g(xi);
    });
    return sum;
}

/// (K^{-1}F)(eta) = sum over xi subset of eta of (-1)^{|eta \ xi|} F(xi).
template <ConfigurationFunction F>
double k_inverse(const F& f, const TwoSpeciesConfiguration& eta)
{
    detail::require_enumerable(eta, "k_inverse");
    double sum = 0.0;
    detail::for_each_subconfiguration(eta, [&](const TwoSpeciesConfiguration& xi, std::uint32_t removed) {
        const double v = f(xi);
        sum += (removed % 2 == 0) ? v : -v;
    });
    return sum;
}

}  // namespace vlasovlab
