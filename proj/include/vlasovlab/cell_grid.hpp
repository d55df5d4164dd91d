#pragma once

#include "vlasovlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace vlasovlab {

/// Periodic cell list over particle indices. Cells have side >= the query
/// radius, so a query inspects the 3^dim surrounding cells. With fewer than
/// four cells per axis the grid degenerates to a single cell (brute force).
class CellGrid {
public:
    CellGrid(const TorusDomain& dom, double min_cell_side) : dom_(dom)
    {
        int per_axis = 1;
        if (min_cell_side > 0.0) {
            const double fit = std::floor(dom.side_length() / min_cell_side);
            const int cap = dom.dim() == 1 ? 4096 : dom.dim() == 2 ? 256 : 48;
            per_axis = static_cast<int>(std::min<double>(fit, cap));
            if (per_axis < 4) per_axis = 1;
        }
        per_axis_ = per_axis;
        cell_side_ = dom.side_length() / per_axis_;
        std::size_t n = 1;
        for (int a = 0; a < dom.dim(); ++a) n *= static_cast<std::size_t>(per_axis_);
        cells_.resize(n);
    }

    int cells_per_axis() const noexcept { return per_axis_; }
    bool brute_force() const noexcept { return per_axis_ == 1; }
    double cell_side() const noexcept { return cell_side_; }

    std::uint32_t cell_of(const Point& p) const noexcept
    {
        std::uint32_t idx = 0;
        std::uint32_t stride = 1;
        for (int a = 0; a < dom_.dim(); ++a) {
            int i = static_cast<int>(p.x[a] / cell_side_);
            i = std::clamp(i, 0, per_axis_ - 1);
            idx += static_cast<std::uint32_t>(i) * stride;
            stride *= static_cast<std::uint32_t>(per_axis_);
        }
        return idx;
    }

    /// Adds particle `id` at p; returns its cell.
    std::uint32_t insert(std::uint32_t id, const Point& p)
    {
        const std::uint32_t c = cell_of(p);
        cells_[c].push_back(id);
        return c;
    }

    void erase(std::uint32_t id, std::uint32_t cell)
    {
        auto& v = cells_[cell];
        auto it = std::find(v.begin(), v.end(), id);
        *it = v.back();
        v.pop_back();
    }

    /// Renames particle `from` to `to` within `cell` (after a swap-remove).
    void relabel(std::uint32_t from, std::uint32_t to, std::uint32_t cell)
    {
        auto& v = cells_[cell];
        *std::find(v.begin(), v.end(), from) = to;
    }

    void clear()
    {
        for (auto& c : cells_) c.clear();
    }

    template <class F>
    void for_each_all(F&& f) const
    {
        for (const auto& c : cells_)
            for (std::uint32_t id : c) f(id);
    }

    /// Calls f(id) for every particle in the cells surrounding p; covers all
    /// particles within cell_side() of p.
    template <class F>
    void for_each_candidate(const Point& p, F&& f) const
    {
        if (brute_force()) {
            for (std::uint32_t id : cells_[0]) f(id);
            return;
        }
        std::array<int, max_dim> base{};
        for (int a = 0; a < dom_.dim(); ++a)
            base[a] = std::clamp(static_cast<int>(p.x[a] / cell_side_), 0, per_axis_ - 1);
        const int dim = dom_.dim();
        const int span_y = dim >= 2 ? 1 : 0;
        const int span_z = dim >= 3 ? 1 : 0;
        for (int dz = -span_z; dz <= span_z; ++dz)
            for (int dy = -span_y; dy <= span_y; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::array<int, 3> d{dx, dy, dz};
                    std::uint32_t idx = 0;
                    std::uint32_t stride = 1;
                    for (int a = 0; a < dim; ++a) {
                        const int i = (base[a] + d[a] + per_axis_) % per_axis_;
                        idx += static_cast<std::uint32_t>(i) * stride;
                        stride *= static_cast<std::uint32_t>(per_axis_);
                    }
                    for (std::uint32_t id : cells_[idx]) f(id);
                }
    }

private:
    TorusDomain dom_;
    int per_axis_ = 1;
    double cell_side_ = 0.0;
    std::vector<std::vector<std::uint32_t>> cells_;
};

}  // namespace vlasovlab
