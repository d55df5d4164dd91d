#pragma once

// Circular convolution of a gridded field with a cell-sampled radial kernel:
//   (k * rho)_i = sum_j k(|x_i - x_j|) rho_j h^dim.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"
#include "vlasovlab/observables.hpp"

#include <fftw3.h>

#include <bit>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace vlasovlab {

enum class ConvolutionMethod { automatic, direct, fft };

namespace detail {

/// The FFTW planner is not thread-safe; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

using PlanHandle = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

}  // namespace detail

/// Nonzero entries of the cell-sampled kernel, as signed cell offsets.
struct KernelStencil {
    std::vector<std::array<int, max_dim>> offsets;
    std::vector<double> weights;  ///< kernel value times cell volume
};

inline KernelStencil sample_kernel(const Kernel& k, const GridSpec& grid)
{
    require_cutoff_fits(k, grid.domain, "convolve_periodic");
    KernelStencil st;
    if (k.vanishes()) return st;
    const int m = grid.cells_per_axis;
    const int dim = grid.domain.dim();
    const double h = grid.spacing();
    const double vol = grid.cell_volume();
    const std::size_t n = grid.cell_count();
    for (std::size_t idx = 0; idx < n; ++idx) {
        const auto ii = grid.cell_indices(idx);
        double d2 = 0.0;
        std::array<int, max_dim> off{};
        for (int a = 0; a < dim; ++a) {
            // minimum image of the offset
            int o = ii[a];
            if (o > m / 2) o -= m;
            off[a] = o;
            const double d = periodic_delta(o * h, 0.0, grid.domain.side_length());
            d2 += d * d;
        }
        const double v = k(std::sqrt(d2));
        if (v != 0.0) {
            st.offsets.push_back(off);
            st.weights.push_back(v * vol);
        }
    }
    return st;
}

/// Sum of the cell-sampled kernel times the cell volume (what a constant field of 1 convolves to).
inline double grid_kernel_mass(const Kernel& k, const GridSpec& grid)
{
    double s = 0.0;
    for (double w : sample_kernel(k, grid).weights) s += w;
    return s;
}

/// Reusable convolution with one kernel on one grid.
class PeriodicConvolver {
public:
    PeriodicConvolver(const Kernel& k, const GridSpec& grid, ConvolutionMethod method = ConvolutionMethod::automatic)
        : grid_(grid), stencil_(sample_kernel(k, grid))
    {
        const bool pow2 = std::has_single_bit(static_cast<unsigned>(grid.cells_per_axis));
        if (method == ConvolutionMethod::fft && !pow2)
            throw UsageError("convolve_periodic: fast transform requires a power-of-two grid");
        use_fft_ = !stencil_.weights.empty() &&
                   (method == ConvolutionMethod::fft || (method == ConvolutionMethod::automatic && pow2));
        if (use_fft_) prepare_fft();
    }

    bool uses_fft() const noexcept { return use_fft_; }
    bool vanishes() const noexcept { return stencil_.weights.empty(); }
    const GridSpec& grid() const noexcept { return grid_; }

    std::vector<double> operator()(std::span<const double> field) const
    {
        std::vector<double> out(grid_.cell_count(), 0.0);
        apply(field, out);
        return out;
    }

    void apply(std::span<const double> field, std::span<double> out) const
    {
        if (field.size() != grid_.cell_count() || out.size() != field.size())
            throw UsageError("convolve_periodic: field size does not match grid");
        if (stencil_.weights.empty()) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        if (use_fft_)
            apply_fft(field, out);
        else
            apply_direct(field, out);
    }

private:
    void apply_direct(std::span<const double> field, std::span<double> out) const
    {
        const int m = grid_.cells_per_axis;
        const int dim = grid_.domain.dim();
        const std::size_t n = grid_.cell_count();
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = grid_.cell_indices(i);
            double acc = 0.0;
            for (std::size_t s = 0; s < stencil_.weights.size(); ++s) {
                std::size_t j = 0;
                std::size_t stride = 1;
                for (int a = 0; a < dim; ++a) {
                    int c = (ii[a] - stencil_.offsets[s][a]) % m;
                    if (c < 0) c += m;
                    j += static_cast<std::size_t>(c) * stride;
                    stride *= static_cast<std::size_t>(m);
                }
                acc += stencil_.weights[s] * field[j];
            }
            out[i] = acc;
        }
    }

    std::array<int, max_dim> fftw_dims() const
    {
        std::array<int, max_dim> dims{};
        for (int a = 0; a < grid_.domain.dim(); ++a) dims[a] = grid_.cells_per_axis;
        return dims;
    }

    std::size_t spectrum_size() const
    {
        const auto m = static_cast<std::size_t>(grid_.cells_per_axis);
        return grid_.cell_count() / m * (m / 2 + 1);
    }

    void prepare_fft()
    {
        const std::size_t n = grid_.cell_count();
        const std::size_t ns = spectrum_size();
        real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
        spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ns)));
        const auto dims = fftw_dims();
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            forward_.reset(fftw_plan_dft_r2c(grid_.domain.dim(), dims.data(), real_.get(), spec_.get(), FFTW_ESTIMATE));
            backward_.reset(fftw_plan_dft_c2r(grid_.domain.dim(), dims.data(), spec_.get(), real_.get(), FFTW_ESTIMATE));
        }
        // kernel spectrum: place stencil weights at wrapped offsets
        std::fill(real_.get(), real_.get() + n, 0.0);
        const int m = grid_.cells_per_axis;
        for (std::size_t s = 0; s < stencil_.weights.size(); ++s) {
            std::size_t j = 0;
            std::size_t stride = 1;
            for (int a = 0; a < grid_.domain.dim(); ++a) {
                const int c = (stencil_.offsets[s][a] + m) % m;
                j += static_cast<std::size_t>(c) * stride;
                stride *= static_cast<std::size_t>(m);
            }
            real_.get()[j] += stencil_.weights[s];
        }
        fftw_execute(forward_.get());
        kernel_spectrum_.resize(ns);
        for (std::size_t i = 0; i < ns; ++i)
            kernel_spectrum_[i] = std::complex<double>(spec_.get()[i][0], spec_.get()[i][1]) / static_cast<double>(n);
    }

    void apply_fft(std::span<const double> field, std::span<double> out) const
    {
        const std::size_t n = grid_.cell_count();
        const std::size_t ns = spectrum_size();
        // scratch per call keeps the convolver usable from several threads
        std::unique_ptr<double, detail::FftwDeleter> re(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
        std::unique_ptr<fftw_complex, detail::FftwDeleter> sp(
            static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ns)));
        std::copy(field.begin(), field.end(), re.get());
        fftw_execute_dft_r2c(forward_.get(), re.get(), sp.get());
        for (std::size_t i = 0; i < ns; ++i) {
            const std::complex<double> v = std::complex<double>(sp.get()[i][0], sp.get()[i][1]) * kernel_spectrum_[i];
            sp.get()[i][0] = v.real();
            sp.get()[i][1] = v.imag();
        }
        fftw_execute_dft_c2r(backward_.get(), sp.get(), re.get());
        std::copy(re.get(), re.get() + n, out.begin());
    }

    GridSpec grid_;
    KernelStencil stencil_;
    bool use_fft_ = false;
    std::unique_ptr<double, detail::FftwDeleter> real_;
    std::unique_ptr<fftw_complex, detail::FftwDeleter> spec_;
    detail::PlanHandle forward_;
    detail::PlanHandle backward_;
    std::vector<std::complex<double>> kernel_spectrum_;
};

/// One-shot circular convolution; fast transform for power-of-two M, direct sum otherwise.
inline std::vector<double> convolve_periodic(std::span<const double> field, const Kernel& k, const GridSpec& grid,
                                             ConvolutionMethod method = ConvolutionMethod::automatic)
{
    return PeriodicConvolver(k, grid, method)(field);
}

}  // namespace vlasovlab
