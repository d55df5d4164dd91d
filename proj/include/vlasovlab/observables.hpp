#pragma once

// Empirical density fields and radial pair-correlation estimates from
// configuration snapshots.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace vlasovlab {

/// Regular M^dim grid over a torus; cell index = sum_a i_a M^a.
struct GridSpec {
    TorusDomain domain{1, 1.0};
    int cells_per_axis = 1;

    GridSpec() = default;
    GridSpec(const TorusDomain& dom, int m) : domain(dom), cells_per_axis(m)
    {
        if (m < 1) throw UsageError("grid must have at least one cell per axis");
    }

    std::size_t cell_count() const noexcept
    {
        std::size_t n = 1;
        for (int a = 0; a < domain.dim(); ++a) n *= static_cast<std::size_t>(cells_per_axis);
        return n;
    }
    double spacing() const noexcept { return domain.side_length() / cells_per_axis; }
    double cell_volume() const noexcept { return std::pow(spacing(), domain.dim()); }

    std::size_t cell_of(const Point& p) const noexcept
    {
        std::size_t idx = 0;
        std::size_t stride = 1;
        const double h = spacing();
        for (int a = 0; a < domain.dim(); ++a) {
            const int i = std::clamp(static_cast<int>(p.x[a] / h), 0, cells_per_axis - 1);
            idx += static_cast<std::size_t>(i) * stride;
            stride *= static_cast<std::size_t>(cells_per_axis);
        }
        return idx;
    }

    std::array<int, max_dim> cell_indices(std::size_t idx) const noexcept
    {
        std::array<int, max_dim> out{};
        for (int a = 0; a < domain.dim(); ++a) {
            out[a] = static_cast<int>(idx % static_cast<std::size_t>(cells_per_axis));
            idx /= static_cast<std::size_t>(cells_per_axis);
        }
        return out;
    }

    std::array<double, max_dim> cell_center(std::size_t idx) const noexcept
    {
        const auto ii = cell_indices(idx);
        std::array<double, max_dim> c{};
        for (int a = 0; a < domain.dim(); ++a) c[a] = (ii[a] + 0.5) * spacing();
        return c;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct DensityField {
    GridSpec grid;
    std::vector<double> plus;
    std::vector<double> minus;

    const std::vector<double>& of(Species s) const noexcept { return s == Species::plus ? plus : minus; }
    std::vector<double>& of(Species s) noexcept { return s == Species::plus ? plus : minus; }
};

/// Per-cell counts averaged over snapshots, divided by the cell volume.
inline DensityField estimate_density_field(std::span<const TwoSpeciesConfiguration> snapshots, int cells_per_axis,
                                           const TorusDomain& dom)
{
    DensityField f{GridSpec(dom, cells_per_axis), {}, {}};
    const std::size_t n = f.grid.cell_count();
    f.plus.assign(n, 0.0);
    f.minus.assign(n, 0.0);
    if (snapshots.empty()) return f;
    for (const auto& cfg : snapshots)
        for (Species s : {Species::plus, Species::minus})
            for (const Point& p : cfg.of(s)) f.of(s)[f.grid.cell_of(p)] += 1.0;
    const double norm = 1.0 / (static_cast<double>(snapshots.size()) * f.grid.cell_volume());
    for (auto* v : {&f.plus, &f.minus})
        for (double& x : *v) x *= norm;
    return f;
}

struct PairCorrelationBin {
    double r_lo = 0.0;
    double r_hi = 0.0;
    double r_mid = 0.0;
    double value = 0.0;
};

/// Radially averaged second-order factorial moment density between species
/// `first` and `second`: ordered pair counts per shell divided by
/// (snapshots * volume * shell volume). Same-species self pairs are excluded.
inline std::vector<PairCorrelationBin> estimate_pair_correlation(std::span<const TwoSpeciesConfiguration> snapshots,
                                                                 Species first, Species second,
                                                                 std::span<const double> edges, const TorusDomain& dom)
{
    if (edges.size() < 2) throw UsageError("estimate_pair_correlation: need at least two bin edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!(edges[i] >= 0.0)) throw UsageError("estimate_pair_correlation: bin edges must be >= 0");
        if (i > 0 && !(edges[i] > edges[i - 1]))
            throw UsageError("estimate_pair_correlation: bin edges must be increasing");
    }
    if (edges.back() > 0.5 * dom.side_length())
        throw UsageError("estimate_pair_correlation: bin edges must not exceed half the domain side");

    std::vector<double> counts(edges.size() - 1, 0.0);
    const double rmax = edges.back();
    for (const auto& cfg : snapshots) {
        const auto& a = cfg.of(first);
        const auto& b = cfg.of(second);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (first == second && i == j) continue;
                const double d = torus_distance(a[i], b[j], dom);
                if (d < edges.front() || d >= rmax) continue;
                const auto it = std::upper_bound(edges.begin(), edges.end(), d);
                counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
            }
    }
    std::vector<PairCorrelationBin> out;
    out.reserve(counts.size());
    const double denom_base = static_cast<double>(std::max<std::size_t>(snapshots.size(), 1)) * dom.volume();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double shell = ball_volume(edges[k + 1], dom.dim()) - ball_volume(edges[k], dom.dim());
        out.push_back({edges[k], edges[k + 1], 0.5 * (edges[k] + edges[k + 1]), counts[k] / (denom_base * shell)});
    }
    return out;
}

}  // namespace vlasovlab
