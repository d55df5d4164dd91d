#pragma once

// Periodic domain, points, radial interaction kernels and the kernel
// functionals (mass, Mayer integral, relative energy) shared by every model.

#include "vlasovlab/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <compare>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace vlasovlab {

inline constexpr int max_dim = 3;

enum class Species { plus, minus };

inline constexpr Species other(Species s) noexcept
{
    return s == Species::plus ? Species::minus : Species::plus;
}

inline const char* to_string(Species s) noexcept
{
    return s == Species::plus ? "plus" : "minus";
}

/// Wraps a coordinate into [0, side).
inline double wrap_coordinate(double c, double side) noexcept
{
    double r = c - side * std::floor(c / side);
    // floor can leave r == side for tiny negative c
    if (r >= side) r = 0.0;
    return r;
}

struct Point {
    std::array<double, max_dim> x{};
    int dim = 1;

    double operator[](int axis) const noexcept { return x[static_cast<std::size_t>(axis)]; }

    friend bool operator==(const Point& a, const Point& b) noexcept
    {
        return a.dim == b.dim && a.x == b.x;
    }
    friend std::partial_ordering operator<=>(const Point& a, const Point& b) noexcept
    {
        if (auto c = a.dim <=> b.dim; c != 0) return c;
        return a.x <=> b.x;
    }
};

class TorusDomain {
public:
    TorusDomain(int dim, double side_length) : dim_(dim), side_(side_length)
    {
        if (dim < 1 || dim > max_dim)
            throw UsageError("TorusDomain: dim must be 1, 2 or 3, got " + std::to_string(dim));
        if (!(side_length > 0.0) || !std::isfinite(side_length))
            throw UsageError("TorusDomain: side length must be positive and finite");
    }

    int dim() const noexcept { return dim_; }
    double side_length() const noexcept { return side_; }
    double volume() const noexcept { return std::pow(side_, dim_); }

    /// Builds a point, reducing every coordinate modulo the side length.
    Point point(std::span<const double> coords) const
    {
        if (static_cast<int>(coords.size()) != dim_)
            throw UsageError("TorusDomain::point: expected " + std::to_string(dim_) + " coordinates");
        Point p;
        p.dim = dim_;
        for (int a = 0; a < dim_; ++a) p.x[a] = wrap_coordinate(coords[a], side_);
        return p;
    }
    Point point(std::initializer_list<double> coords) const
    {
        return point(std::span<const double>(coords.begin(), coords.size()));
    }

    /// Point translated by `offset` (dim entries used) and wrapped back onto the torus.
    Point shifted(const Point& p, const std::array<double, max_dim>& offset) const noexcept
    {
        Point q = p;
        for (int a = 0; a < dim_; ++a) q.x[a] = wrap_coordinate(p.x[a] + offset[a], side_);
        return q;
    }

    bool contains(const Point& p) const noexcept
    {
        if (p.dim != dim_) return false;
        for (int a = 0; a < dim_; ++a)
            if (!(p.x[a] >= 0.0 && p.x[a] < side_)) return false;
        return true;
    }

    friend bool operator==(const TorusDomain&, const TorusDomain&) = default;

private:
    int dim_;
    double side_;
};

/// Minimum-image displacement along one axis, in [-side/2, side/2].
inline double periodic_delta(double a, double b, double side) noexcept
{
    double d = a - b;
    d -= side * std::round(d / side);
    return d;
}

inline double torus_distance_squared(const Point& p, const Point& q, const TorusDomain& dom) noexcept
{
    double s = 0.0;
    for (int a = 0; a < dom.dim(); ++a) {
        const double d = periodic_delta(p.x[a], q.x[a], dom.side_length());
        s += d * d;
    }
    return s;
}

inline double torus_distance(const Point& p, const Point& q, const TorusDomain& dom)
{
    if (p.dim != dom.dim() || q.dim != dom.dim())
        throw UsageError("torus_distance: point dimension does not match domain");
    return std::sqrt(torus_distance_squared(p, q, dom));
}

/// Volume of a ball of radius r in dimension dim.
inline double ball_volume(double r, int dim)
{
    switch (dim) {
    case 1: return 2.0 * r;
    case 2: return std::numbers::pi * r * r;
    case 3: return 4.0 / 3.0 * std::numbers::pi * r * r * r;
    default: throw UsageError("ball_volume: dim must be 1, 2 or 3");
    }
}

/// Surface measure of the unit sphere, so that the radial measure is area * r^(dim-1) dr.
inline double unit_sphere_area(int dim)
{
    switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw UsageError("unit_sphere_area: dim must be 1, 2 or 3");
    }
}

enum class KernelShape { zero, tophat, truncated_gaussian };

/// Non-negative radial kernel with compact support.
class Kernel {
public:
    Kernel() = default;

    static Kernel zero() { return Kernel{}; }

    static Kernel tophat(double amplitude, double radius)
    {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw UsageError("tophat kernel: amplitude must be finite and >= 0");
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw UsageError("tophat kernel: radius must be finite and > 0");
        Kernel k;
        k.shape_ = KernelShape::tophat;
        k.amplitude_ = amplitude;
        k.radius_ = radius;
        return k;
    }

    static Kernel truncated_gaussian(double amplitude, double width, double cutoff)
    {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw UsageError("truncated_gaussian kernel: amplitude must be finite and >= 0");
        if (!(width > 0.0) || !std::isfinite(width))
            throw UsageError("truncated_gaussian kernel: width must be finite and > 0");
        if (!(cutoff > 0.0) || !std::isfinite(cutoff))
            throw UsageError("truncated_gaussian kernel: cutoff must be finite and > 0");
        Kernel k;
        k.shape_ = KernelShape::truncated_gaussian;
        k.amplitude_ = amplitude;
        k.width_ = width;
        k.radius_ = cutoff;
        return k;
    }

    KernelShape shape() const noexcept { return shape_; }
    double amplitude() const noexcept { return amplitude_; }
    /// Gaussian width sigma; meaningless for other shapes.
    double width() const noexcept { return width_; }
    /// Support radius; 0 for the zero kernel.
    double cutoff() const noexcept { return shape_ == KernelShape::zero ? 0.0 : radius_; }
    double sup() const noexcept { return shape_ == KernelShape::zero ? 0.0 : amplitude_; }

    /// True when the kernel vanishes identically.
    bool vanishes() const noexcept { return shape_ == KernelShape::zero || amplitude_ == 0.0; }

    /// Same shape, amplitude multiplied by `factor` (>= 0).
    Kernel scaled(double factor) const
    {
        if (!(factor >= 0.0)) throw UsageError("Kernel::scaled: factor must be >= 0");
        Kernel k = *this;
        k.amplitude_ *= factor;
        return k;
    }

    double operator()(double distance) const noexcept
    {
        switch (shape_) {
        case KernelShape::zero: return 0.0;
        case KernelShape::tophat: return distance <= radius_ ? amplitude_ : 0.0;
        case KernelShape::truncated_gaussian:
            if (distance > radius_) return 0.0;
            return amplitude_ * std::exp(-distance * distance / (2.0 * width_ * width_));
        }
        return 0.0;
    }

    friend bool operator==(const Kernel&, const Kernel&) = default;

private:
    KernelShape shape_ = KernelShape::zero;
    double amplitude_ = 0.0;
    double width_ = 0.0;
    double radius_ = 0.0;
};

inline double kernel_eval(const Kernel& k, double distance) noexcept { return k(distance); }

namespace detail {

/// Integral over R^dim of g(k(|u|)) for a radial kernel, where g(0) == 0.
template <class ValueMap>
double radial_integral(const Kernel& k, int dim, ValueMap g)
{
    if (k.vanishes()) return 0.0;
    const double area = unit_sphere_area(dim);
    const double cutoff = k.cutoff();
    auto integrand = [&](double r) {
        return g(k(r)) * area * std::pow(r, dim - 1);
    };
    double err = 0.0;
    // relative tolerance well below the 1e-10 absolute target for O(1) masses
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, cutoff, 15, 1e-14, &err);
}

}  // namespace detail

/// Kernel mass, the integral of k over R^dim.
inline double kernel_mass(const Kernel& k, int dim)
{
    if (dim < 1 || dim > max_dim) throw UsageError("kernel_mass: dim must be 1, 2 or 3");
    if (k.vanishes()) return 0.0;
    if (k.shape() == KernelShape::tophat) return k.amplitude() * ball_volume(k.cutoff(), dim);
    return detail::radial_integral(k, dim, [](double v) { return v; });
}

/// Mayer integral C(k) = integral of |e^{-k} - 1| = integral of (1 - e^{-k}) for k >= 0.
inline double mayer_integral(const Kernel& k, int dim)
{
    if (dim < 1 || dim > max_dim) throw UsageError("mayer_integral: dim must be 1, 2 or 3");
    if (k.vanishes()) return 0.0;
    if (k.shape() == KernelShape::tophat)
        return -std::expm1(-k.amplitude()) * ball_volume(k.cutoff(), dim);
    return detail::radial_integral(k, dim, [](double v) { return -std::expm1(-v); });
}

/// Mayer integral of the negated kernel, C(-k) = integral of (e^{k} - 1).
inline double mayer_integral_negated(const Kernel& k, int dim)
{
    if (dim < 1 || dim > max_dim) throw UsageError("mayer_integral_negated: dim must be 1, 2 or 3");
    if (k.vanishes()) return 0.0;
    if (k.shape() == KernelShape::tophat)
        return std::expm1(k.amplitude()) * ball_volume(k.cutoff(), dim);
    return detail::radial_integral(k, dim, [](double v) { return std::expm1(v); });
}

/// Throws unless the kernel support fits in half the torus side.
inline void require_cutoff_fits(const Kernel& k, const TorusDomain& dom, const char* what)
{
    if (k.cutoff() > 0.5 * dom.side_length())
        throw UsageError(std::string(what) + ": kernel cutoff exceeds half the domain side");
}

/// Relative energy E_k(x, pts): sum of k(|x - y|) over exactly the given points.
inline double relative_energy(const Point& x, std::span<const Point> pts, const Kernel& k,
                              const TorusDomain& dom)
{
    require_cutoff_fits(k, dom, "relative_energy");
    if (k.vanishes()) return 0.0;
    double e = 0.0;
    for (const Point& y : pts) e += k(torus_distance(x, y, dom));
    return e;
}

/// Finite two-species configuration (gamma+, gamma-); all stored points are distinct.
struct TwoSpeciesConfiguration {
    std::vector<Point> plus;
    std::vector<Point> minus;

    std::vector<Point>& of(Species s) noexcept { return s == Species::plus ? plus : minus; }
    const std::vector<Point>& of(Species s) const noexcept { return s == Species::plus ? plus : minus; }

    std::size_t size() const noexcept { return plus.size() + minus.size(); }
    bool empty() const noexcept { return plus.empty() && minus.empty(); }

    /// True when no two stored points (across both species) coincide.
    bool is_simple() const
    {
        std::vector<Point> all;
        all.reserve(size());
        all.insert(all.end(), plus.begin(), plus.end());
        all.insert(all.end(), minus.begin(), minus.end());
        std::sort(all.begin(), all.end());
        return std::adjacent_find(all.begin(), all.end()) == all.end();
    }

    /// Throws UsageError if points fall outside `dom` or coincide.
    void validate(const TorusDomain& dom) const
    {
        for (const auto* list : {&plus, &minus})
            for (const Point& p : *list)
                if (!dom.contains(p))
                    throw UsageError("configuration point outside domain or of wrong dimension");
        if (!is_simple()) throw UsageError("configuration contains coincident points");
    }

    friend bool operator==(const TwoSpeciesConfiguration&, const TwoSpeciesConfiguration&) = default;
};

}  // namespace vlasovlab
