#include "oracles.hpp"

#include "vlasovlab/convolution.hpp"
#include "vlasovlab/kinetic.hpp"
#include "vlasovlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace vlasovlab;

namespace {

const TorusDomain line(1, 10.0);

/// O(M^2) periodic convolution straight from the definition.
std::vector<double> direct_convolution(const std::vector<double>& f, const Kernel& k, const GridSpec& g)
{
    const std::size_t n = g.cell_count();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ci = g.cell_center(i);
        const Point xi = g.domain.point(std::vector<double>(ci.begin(), ci.begin() + g.domain.dim()));
        for (std::size_t j = 0; j < n; ++j) {
            const auto cj = g.cell_center(j);
            const Point xj = g.domain.point(std::vector<double>(cj.begin(), cj.begin() + g.domain.dim()));
            out[i] += k(oracle::image_distance(xi, xj, g.domain)) * g.cell_volume() * f[j];
        }
    }
    return out;
}

std::vector<double> random_field(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> f(n);
    for (double& x : f) x = u(rng);
    return f;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

KineticState sine_profile(const GridSpec& g, double base, double amp)
{
    KineticState s = KineticState::constant(g, base, base);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const double x = g.cell_center(i)[0];
        s.plus[i] = base + amp * std::sin(2 * M_PI * x / g.domain.side_length());
        s.minus[i] = base + amp * std::cos(4 * M_PI * x / g.domain.side_length());
    }
    return s;
}

/// Scalar root of a decreasing-through-zero function on [lo, hi].
template <class F>
double bisect(F f, double lo, double hi)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double positive_quadratic_root(double a, double b, double c)  // a x^2 + b x + c = 0, a > 0
{
    return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

std::vector<ModelSpec> all_presets()
{
    std::vector<ModelSpec> out;
    for (const Preset& p : default_presets()) out.push_back(p.model);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// convolution

TEST(Convolution, ZeroKernelGivesZero)
{
    std::mt19937_64 rng(1);
    const GridSpec g(line, 32);
    for (double v : convolve_periodic(random_field(32, rng), Kernel::zero(), g)) EXPECT_EQ(v, 0.0);
}

TEST(Convolution, ConstantFieldGivesGridMass)
{
    const GridSpec g(line, 64);
    const Kernel k = Kernel::truncated_gaussian(1.3, 0.7, 2.5);
    const double mass = grid_kernel_mass(k, g);
    double sum = 0.0;
    for (int j = -32; j < 32; ++j) sum += k(std::abs(j * g.spacing())) * g.spacing();
    EXPECT_NEAR(mass, sum, 1e-13);
    for (double v : convolve_periodic(std::vector<double>(64, 2.5), k, g)) EXPECT_NEAR(v, 2.5 * mass, 1e-12);
}

TEST(Convolution, ImpulseGivesSampledProfile)
{
    const GridSpec g(line, 64);
    const Kernel k = Kernel::tophat(2.0, 1.1);
    std::vector<double> f(64, 0.0);
    f[10] = 1.0 / g.spacing();
    const auto out = convolve_periodic(f, k, g, ConvolutionMethod::fft);
    for (std::size_t i = 0; i < 64; ++i) {
        const int off = std::abs(static_cast<int>(i) - 10);
        const double d = std::min(off, 64 - off) * g.spacing();
        EXPECT_NEAR(out[i], d <= 1.1 ? 2.0 : 0.0, 1e-12);
    }
}

TEST(Convolution, FftMatchesDirectDefinition)
{
    std::mt19937_64 rng(2);
    const Kernel k = Kernel::truncated_gaussian(0.8, 0.6, 2.0);
    for (int m : {16, 64, 256}) {
        const GridSpec g(line, m);
        const auto f = random_field(g.cell_count(), rng);
        const auto ref = direct_convolution(f, k, g);
        const auto fft = convolve_periodic(f, k, g, ConvolutionMethod::fft);
        const auto dir = convolve_periodic(f, k, g, ConvolutionMethod::direct);
        EXPECT_LE(max_diff(fft, ref), 1e-10 * max_abs(ref)) << m;
        EXPECT_LE(max_diff(dir, ref), 1e-12 * max_abs(ref)) << m;
    }
}

TEST(Convolution, TwoDimensionalFftMatchesDirect)
{
    std::mt19937_64 rng(3);
    const TorusDomain plane(2, 6.0);
    const GridSpec g(plane, 16);
    const Kernel k = Kernel::tophat(1.0, 1.3);
    const auto f = random_field(g.cell_count(), rng);
    const auto ref = direct_convolution(f, k, g);
    EXPECT_LE(max_diff(convolve_periodic(f, k, g, ConvolutionMethod::fft), ref), 1e-10 * max_abs(ref));
}

TEST(Convolution, ArgumentChecks)
{
    const GridSpec g(line, 12);
    EXPECT_THROW(PeriodicConvolver(Kernel::tophat(1, 1), g, ConvolutionMethod::fft), UsageError);
    EXPECT_FALSE(PeriodicConvolver(Kernel::tophat(1, 1), g).uses_fft());
    EXPECT_THROW(PeriodicConvolver(Kernel::tophat(1, 6.0), GridSpec(line, 16)), UsageError);
    EXPECT_THROW(convolve_periodic(std::vector<double>(5, 0.0), Kernel::tophat(1, 1), g), UsageError);
}

// ---------------------------------------------------------------------------
// kinetic_rhs

TEST(KineticRhs, ZeroDensityExamples)
{
    const GridSpec g(line, 16);
    const auto zero = KineticState::constant(g, 0.0, 0.0);
    const BdlpPair b = default_bdlp_pair();
    const auto rb = kinetic_rhs(b, zero);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_EQ(rb.minus[i], b.z);
        EXPECT_EQ(rb.plus[i], 0.0);
    }
    GlauberPair w = default_widom_rowlinson();
    w.z_plus = 0.7;
    const auto rw = kinetic_rhs(w, zero);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_EQ(rw.minus[i], w.z_minus);
        EXPECT_EQ(rw.plus[i], 0.7);
    }
}

TEST(KineticRhs, GlauberConstantMatchesScalarFormula)
{
    const GridSpec g(line, 64);
    GlauberPair w = default_widom_rowlinson();
    w.phi_minus = Kernel::tophat(0.4, 0.8);
    const double rp = 0.3, rm = 0.6;
    // grid masses by explicit cell sums
    auto cell_mass = [&](double A, double r) {
        double s = 0.0;
        for (int j = -32; j < 32; ++j) s += (std::abs(j) * g.spacing() <= r ? A : 0.0) * g.spacing();
        return s;
    };
    const auto rates = kinetic_rhs(w, KineticState::constant(g, rp, rm));
    const double dm = -rm + w.z_minus * std::exp(-cell_mass(0.4, 0.8) * rm - cell_mass(1.0, 0.5) * rp);
    const double dp = -rp + w.z_plus * std::exp(-cell_mass(1.0, 0.5) * rm);
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(rates.minus[i], dm, 1e-13);
        EXPECT_NEAR(rates.plus[i], dp, 1e-13);
    }
}

TEST(KineticRhs, GlauberWithPositiveSIsUnsupported)
{
    GlauberPair w = default_widom_rowlinson();
    w.s = 0.2;
    const GridSpec g(line, 16);
    EXPECT_THROW((void)kinetic_rhs(w, KineticState::constant(g, 0.1, 0.1)), UnsupportedVariant);
    EXPECT_THROW((void)homogeneous_rhs(w, {0.1, 0.1, 0.0}, 1), UnsupportedVariant);
    EXPECT_THROW((void)homogeneous_fixed_point(w), UnsupportedVariant);
}

TEST(KineticRhs, BdlpPairMatchesPointwiseFormula)
{
    std::mt19937_64 rng(4);
    const GridSpec g(line, 32);
    const BdlpPair b = default_bdlp_pair();
    KineticState s{g, random_field(32, rng), random_field(32, rng), 0.0};
    const auto r = kinetic_rhs(b, s, {BranchingFactor::at_offspring, ConvolutionMethod::direct});
    const auto am = direct_convolution(s.minus, b.compete_minus, g);
    const auto ap = direct_convolution(s.minus, b.branch_minus, g);
    const auto bm = direct_convolution(s.plus, b.compete_plus, g);
    const auto bp = direct_convolution(s.plus, b.branch_plus, g);
    const auto fm = direct_convolution(s.minus, b.cross_death, g);
    const auto fp = direct_convolution(s.minus, b.cross_birth, g);
    for (std::size_t i = 0; i < 32; ++i) {
        EXPECT_NEAR(r.minus[i], -b.m_minus * s.minus[i] - s.minus[i] * am[i] + ap[i] + b.z, 1e-12);
        EXPECT_NEAR(r.plus[i], -(b.m_plus + fm[i]) * s.plus[i] - s.plus[i] * bm[i] + bp[i] + fp[i], 1e-12);
    }
}

TEST(KineticRhs, BranchingFactorPlacementMattersOnlyOffConstants)
{
    const GridSpec g(line, 32);
    DensityBranching d = default_density_branching();
    d.a_plus = Kernel::tophat(0.5, 1.2);
    const auto c = KineticState::constant(g, 0.2, 0.4);
    const auto off = kinetic_rhs(d, c, {BranchingFactor::at_offspring, ConvolutionMethod::automatic});
    const auto par = kinetic_rhs(d, c, {BranchingFactor::at_parent, ConvolutionMethod::automatic});
    EXPECT_LE(max_diff(off.plus, par.plus), 1e-13);
    const auto s = sine_profile(g, 0.3, 0.2);
    const auto off2 = kinetic_rhs(d, s, {BranchingFactor::at_offspring, ConvolutionMethod::automatic});
    const auto par2 = kinetic_rhs(d, s, {BranchingFactor::at_parent, ConvolutionMethod::automatic});
    EXPECT_GT(max_diff(off2.plus, par2.plus), 1e-4);
}

// ---------------------------------------------------------------------------
// integrate

TEST(Integrate, GlauberWithoutActivityDecaysExponentially)
{
    GlauberPair w = default_widom_rowlinson();
    w.z_plus = w.z_minus = 0.0;
    const GridSpec g(line, 16);
    const auto s0 = sine_profile(g, 0.5, 0.3);
    const auto run = integrate(w, s0, 1.0, 0.01, {0.5, 1.0});
    ASSERT_EQ(run.outputs.size(), 2u);
    for (const auto& out : run.outputs)
        for (std::size_t i = 0; i < 16; ++i) {
            EXPECT_NEAR(out.plus[i], s0.plus[i] * std::exp(-out.time), 1e-8);
            EXPECT_NEAR(out.minus[i], s0.minus[i] * std::exp(-out.time), 1e-8);
        }
    EXPECT_EQ(run.clipped, 0u);
}

TEST(Integrate, ConstantDataFollowsHomogeneousSystem)
{
    const GridSpec g(line, 64);
    for (const ModelSpec& m : all_presets()) {
        const auto run = integrate(m, KineticState::constant(g, 0.2, 0.3), 2.0, 0.01, {});
        const auto h = integrate_homogeneous(m, {0.2, 0.3, 0.0}, 2.0, 0.01, grid_masses(g));
        for (std::size_t i = 0; i < g.cell_count(); ++i) {
            EXPECT_NEAR(run.outputs.back().plus[i], h.plus, 1e-6);
            EXPECT_NEAR(run.outputs.back().minus[i], h.minus, 1e-6);
        }
    }
}

namespace {

double richardson_ratio(const ModelSpec& m, const KineticState& s0, double dt)
{
    std::vector<KineticState> finals;
    for (double h : {dt, dt / 2, dt / 4}) finals.push_back(integrate(m, s0, 1.0, h, {}).outputs.back());
    auto diff = [&](int a, int b) {
        return std::max(max_diff(finals[a].plus, finals[b].plus), max_diff(finals[a].minus, finals[b].minus));
    };
    return diff(0, 1) / diff(1, 2);
}

}  // namespace

TEST(Integrate, FourthOrderConvergenceOnSmoothWidomRowlinson)
{
    GlauberPair w = default_widom_rowlinson();
    w.psi_plus = w.psi_minus = Kernel::truncated_gaussian(1.0, 0.4, 2.0);
    const GridSpec g(line, 32);
    EXPECT_NEAR(richardson_ratio(w, sine_profile(g, 0.3, 0.2), 0.1), 16.0, 2.0);
}

TEST(Integrate, FourthOrderConvergenceForEveryPreset)
{
    // the birth-death presets have rates up to ~7, so start from a smaller step
    const GridSpec g(line, 32);
    for (const ModelSpec& m : all_presets()) EXPECT_NEAR(richardson_ratio(m, sine_profile(g, 0.3, 0.2), 0.025), 16.0, 2.0);
}

TEST(Integrate, TranslationEquivariance)
{
    const GridSpec g(line, 32);
    const auto s0 = sine_profile(g, 0.3, 0.2);
    const std::size_t shift = 5;
    KineticState shifted = s0;
    for (std::size_t i = 0; i < 32; ++i) {
        shifted.plus[(i + shift) % 32] = s0.plus[i];
        shifted.minus[(i + shift) % 32] = s0.minus[i];
    }
    for (const ModelSpec& m : all_presets()) {
        const auto a = integrate(m, s0, 1.0, 0.05, {}).outputs.back();
        const auto b = integrate(m, shifted, 1.0, 0.05, {}).outputs.back();
        for (std::size_t i = 0; i < 32; ++i) {
            EXPECT_NEAR(b.plus[(i + shift) % 32], a.plus[i], 1e-12);
            EXPECT_NEAR(b.minus[(i + shift) % 32], a.minus[i], 1e-12);
        }
    }
}

TEST(Integrate, OutputTimesAndArgumentChecks)
{
    const GridSpec g(line, 16);
    const auto s0 = KineticState::constant(g, 0.1, 0.1);
    const auto run = integrate(default_bdlp_pair(), s0, 1.0, 0.3, {0.0, 0.45, 1.0});
    ASSERT_EQ(run.outputs.size(), 3u);
    EXPECT_DOUBLE_EQ(run.outputs[0].time, 0.0);
    EXPECT_DOUBLE_EQ(run.outputs[1].time, 0.45);
    EXPECT_DOUBLE_EQ(run.outputs[2].time, 1.0);
    EXPECT_THROW(integrate(default_bdlp_pair(), s0, 1.0, 0.0, {}), UsageError);
    EXPECT_THROW(integrate(default_bdlp_pair(), s0, 1.0, 0.1, {0.5, 0.2}), UsageError);
}

// ---------------------------------------------------------------------------
// homogeneous system

TEST(Homogeneous, RhsExample)
{
    BdlpPair b;
    b.m_minus = 1.0;
    b.compete_minus = Kernel::tophat(1.0, 0.5);  // mass 1 in dimension 1
    b.z = 2.0;
    const auto r = homogeneous_rhs(b, {0.0, 1.0, 0.0}, 1);
    EXPECT_NEAR(r.minus, 0.0, 1e-15);  // -1 - 1 + 0 + 2
    EXPECT_EQ(r.plus, 0.0);
}

TEST(Homogeneous, MatchesKineticRhsOnConstantFields)
{
    const GridSpec g(line, 64);
    for (const ModelSpec& m : all_presets()) {
        const auto f = kinetic_rhs(m, KineticState::constant(g, 0.17, 0.41));
        const auto h = homogeneous_rhs(m, {0.17, 0.41, 0.0}, grid_masses(g));
        EXPECT_NEAR(f.plus[7], h.plus, 1e-13);
        EXPECT_NEAR(f.minus[7], h.minus, 1e-13);
    }
}

TEST(FixedPoint, BdlpPairQuadraticFormula)
{
    const BdlpPair b = default_bdlp_pair();
    const auto fp = homogeneous_fixed_point(b);
    ASSERT_TRUE(fp.has_value());
    // masses in dimension 1: tophat(A, r) has mass 2 r A
    const double rm = positive_quadratic_root(1.0, b.m_minus - 0.5, -b.z);
    const double rp = positive_quadratic_root(1.0, b.m_plus + 1.0 * rm - 0.5, -0.5 * rm);
    EXPECT_NEAR(fp->minus, rm, 1e-10);
    EXPECT_NEAR(fp->plus, rp, 1e-10);
    const auto r = homogeneous_rhs(b, *fp, 1);
    EXPECT_NEAR(r.minus, 0.0, 1e-10);
    EXPECT_NEAR(r.plus, 0.0, 1e-10);
}

TEST(FixedPoint, NoActivityGivesExtinction)
{
    BdlpPair b = default_bdlp_pair();
    b.z = 0.0;
    const auto fp = homogeneous_fixed_point(b);
    ASSERT_TRUE(fp.has_value());
    EXPECT_EQ(fp->minus, 0.0);
    EXPECT_EQ(fp->plus, 0.0);
}

TEST(FixedPoint, WidomRowlinsonSymmetricRoot)
{
    const GlauberPair w = default_widom_rowlinson();
    const auto fp = homogeneous_fixed_point(w);
    ASSERT_TRUE(fp.has_value());
    const double rho = bisect([&](double r) { return w.z_plus * std::exp(-r) - r; }, 0.0, 1.0);
    EXPECT_NEAR(fp->plus, rho, 1e-9);
    EXPECT_NEAR(fp->minus, rho, 1e-9);
}

TEST(FixedPoint, DensityBranchingPresetIsSubcritical)
{
    const DensityBranching d = default_density_branching();
    const auto fp = homogeneous_fixed_point(d);
    ASSERT_TRUE(fp.has_value());
    const double rm = bisect([&](double r) { return d.z_minus * std::exp(-0.5 * r) - r; }, 0.0, 1.0);
    EXPECT_NEAR(fp->minus, rm, 1e-9);
    EXPECT_EQ(fp->plus, 0.0);
}

TEST(FixedPoint, HomogeneousIntegrationConverges)
{
    for (const Preset& p : default_presets()) {
        const auto fp = homogeneous_fixed_point(p.model);
        ASSERT_TRUE(fp.has_value()) << p.name;
        const auto h = integrate_homogeneous(p.model, {0.2, 0.2, 0.0}, 50.0, 0.01, exact_masses(1));
        EXPECT_NEAR(h.plus, fp->plus, 1e-4) << p.name;
        EXPECT_NEAR(h.minus, fp->minus, 1e-4) << p.name;
    }
}
