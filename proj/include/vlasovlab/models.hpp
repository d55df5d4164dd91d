#pragma once

// The four two-species birth-and-death models, their Vlasov-scaled
// counterparts, and the parameter-condition validators.
//
// Every model is compiled into a RateLaws value: per species one death law
// and one birth law built from relative energies. The simulator and the
// public intensity functions evaluate those laws against a NeighborSource,
// so the same formulas serve brute-force evaluation and cell-list lookup.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace vlasovlab {

// ---------------------------------------------------------------------------
// Model records

/// Constants witnessing the quadratic-form dominations of the BDLP pair theorem.
struct BdlpPairWitness {
    double theta1 = 1.0;  ///< branch_plus <= theta1 * compete_plus
    double theta2 = 1.0;  ///< branch_minus <= theta2 * compete_minus
    double theta3 = 1.0;  ///< cross_birth <= theta3 * cross_death
    double b1 = 0.0;
    double b2 = 0.0;
    friend bool operator==(const BdlpPairWitness&, const BdlpPairWitness&) = default;
};

/// Two interacting BDLP populations. Kernel names map to the usual symbols as
/// compete_minus = a-, branch_minus = a+, compete_plus = b-, branch_plus = b+,
/// cross_death = phi-, cross_birth = phi+.
struct BdlpPair {
    double m_plus = 0.0;
    double m_minus = 0.0;
    Kernel compete_minus;
    Kernel branch_minus;
    Kernel compete_plus;
    Kernel branch_plus;
    Kernel cross_death;  ///< minus particles raise the death rate of plus particles
    Kernel cross_birth;  ///< minus particles seed plus offspring
    double z = 0.0;      ///< minus-species immigration
    BdlpPairWitness witness;
    friend bool operator==(const BdlpPair&, const BdlpPair&) = default;
};

/// Two interacting Glauber populations; Widom-Rowlinson when phi_plus = phi_minus = 0.
struct GlauberPair {
    double s = 0.0;
    double z_plus = 0.0;
    double z_minus = 0.0;
    Kernel psi_plus;   ///< felt by minus particles, sourced by plus particles
    Kernel psi_minus;  ///< felt by plus particles, sourced by minus particles
    Kernel phi_plus;   ///< plus-plus
    Kernel phi_minus;  ///< minus-minus
    friend bool operator==(const GlauberPair&, const GlauberPair&) = default;
};

struct BdlpInGlauberWitness {
    double theta = 1.0;     ///< a_plus <= theta * a_minus
    double vartheta = 1.0;  ///< b_plus <= vartheta * phi
    double b = 0.0;
    friend bool operator==(const BdlpInGlauberWitness&, const BdlpInGlauberWitness&) = default;
};

/// BDLP plus population living in a Glauber minus environment.
struct BdlpInGlauber {
    double m_plus = 0.0;
    Kernel a_minus;
    Kernel a_plus;
    Kernel phi;     ///< minus particles raise plus death rates
    Kernel b_plus;  ///< minus particles seed plus offspring
    Kernel psi;     ///< minus-minus Glauber potential
    double z_minus = 0.0;
    BdlpInGlauberWitness witness;
    friend bool operator==(const BdlpInGlauber&, const BdlpInGlauber&) = default;
};

struct DensityBranchingWitness {
    double vartheta = 1.0;  ///< a_plus <= vartheta * phi_plus
    double b = 0.0;
    friend bool operator==(const DensityBranchingWitness&, const DensityBranchingWitness&) = default;
};

/// Density-dependent branching of plus particles in a Glauber minus environment.
struct DensityBranching {
    double m_plus = 0.0;
    Kernel phi_plus;
    Kernel phi_minus;
    Kernel psi_minus;  ///< minus particles suppress branching of plus parents
    Kernel a_plus;
    double z_minus = 0.0;
    DensityBranchingWitness witness;
    friend bool operator==(const DensityBranching&, const DensityBranching&) = default;
};

using ModelSpec = std::variant<BdlpPair, GlauberPair, BdlpInGlauber, DensityBranching>;

inline const char* variant_name(const ModelSpec& m)
{
    constexpr std::array names{"bdlp_pair", "glauber_pair", "bdlp_in_glauber", "density_branching"};
    return names[m.index()];
}

/// Kernels referenced by a model, in declaration order.
inline std::vector<Kernel> model_kernels(const ModelSpec& m)
{
    return std::visit(
        [](const auto& v) -> std::vector<Kernel> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>)
                return {v.compete_minus, v.branch_minus, v.compete_plus, v.branch_plus, v.cross_death, v.cross_birth};
            else if constexpr (std::is_same_v<T, GlauberPair>)
                return {v.psi_plus, v.psi_minus, v.phi_plus, v.phi_minus};
            else if constexpr (std::is_same_v<T, BdlpInGlauber>)
                return {v.a_minus, v.a_plus, v.phi, v.b_plus, v.psi};
            else
                return {v.phi_plus, v.phi_minus, v.psi_minus, v.a_plus};
        },
        m);
}

inline double max_cutoff(const ModelSpec& m)
{
    double r = 0.0;
    for (const Kernel& k : model_kernels(m)) r = std::max(r, k.cutoff());
    return r;
}

/// Throws UsageError when a scalar parameter is out of range or a kernel does not fit `dom`.
inline void validate_model(const ModelSpec& m, const TorusDomain* dom = nullptr)
{
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be finite and >= 0");
    };
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be finite and > 0");
    };
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                nonneg(v.m_plus, "m_plus");
                nonneg(v.m_minus, "m_minus");
                nonneg(v.z, "z");
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                if (!(v.s >= 0.0 && v.s <= 0.5)) throw UsageError("s must lie in [0, 1/2]");
                nonneg(v.z_plus, "z_plus");
                nonneg(v.z_minus, "z_minus");
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                positive(v.m_plus, "m_plus");
                nonneg(v.z_minus, "z_minus");
            } else {
                positive(v.m_plus, "m_plus");
                nonneg(v.z_minus, "z_minus");
            }
        },
        m);
    if (dom)
        for (const Kernel& k : model_kernels(m)) require_cutoff_fits(k, *dom, variant_name(m));
}

// ---------------------------------------------------------------------------
// Vlasov scaling

/// A model under Vlasov scaling with parameter n. Intensities of a ScaledModel
/// are the effective ones, with the n prefactor of the birth part folded in.
struct ScaledModel {
    ModelSpec base;
    int n = 1;
};

/// Effective parameters at scale n: pair-interaction kernels in deaths and in
/// exponential factors are divided by n, activities multiplied by n, parent
/// (branching) kernels, mortalities and s unchanged.
inline ModelSpec scaled_parameters(const ModelSpec& base, int n)
{
    if (n < 1) throw UsageError("Vlasov scaling parameter n must be >= 1");
    if (n == 1) return base;
    const double inv = 1.0 / n;
    const double up = static_cast<double>(n);
    return std::visit(
        [&](auto v) -> ModelSpec {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                v.compete_minus = v.compete_minus.scaled(inv);
                v.compete_plus = v.compete_plus.scaled(inv);
                v.cross_death = v.cross_death.scaled(inv);
                v.z *= up;
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                v.psi_plus = v.psi_plus.scaled(inv);
                v.psi_minus = v.psi_minus.scaled(inv);
                v.phi_plus = v.phi_plus.scaled(inv);
                v.phi_minus = v.phi_minus.scaled(inv);
                v.z_plus *= up;
                v.z_minus *= up;
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                v.a_minus = v.a_minus.scaled(inv);
                v.phi = v.phi.scaled(inv);
                v.psi = v.psi.scaled(inv);
                v.z_minus *= up;
            } else {
                v.phi_plus = v.phi_plus.scaled(inv);
                v.phi_minus = v.phi_minus.scaled(inv);
                v.psi_minus = v.psi_minus.scaled(inv);
                v.z_minus *= up;
            }
            return v;
        },
        base);
}

inline ScaledModel apply_vlasov_scaling(const ModelSpec& base, int n)
{
    if (n < 1) throw UsageError("apply_vlasov_scaling: n must be >= 1");
    return ScaledModel{base, n};
}

inline ModelSpec effective_model(const ModelSpec& m) { return m; }
inline ModelSpec effective_model(const ScaledModel& m) { return scaled_parameters(m.base, m.n); }

// ---------------------------------------------------------------------------
// Rate laws

/// Relative energy of the points of `source` species under `kernel`.
struct EnergyTerm {
    Species source;
    Kernel kernel;
};

enum class DeathForm {
    additive,   ///< base + sum E
    decaying,   ///< base * exp(-sum E)
    growing,    ///< base * exp(+sum E)
};

struct DeathLaw {
    DeathForm form = DeathForm::additive;
    double base = 0.0;
    std::vector<EnergyTerm> terms;
};

/// Offspring placed around parents of one species with `kernel`; each parent
/// weighted by exp(-sum of damping energies evaluated at the parent).
struct ParentChannel {
    Species parent;
    Kernel kernel;
    std::vector<EnergyTerm> damping;
};

/// b(x) = activity * exp(-sum damping E(x)) + sum over channels and parents of weight(y) k(x - y).
struct BirthLaw {
    double activity = 0.0;
    std::vector<EnergyTerm> damping;
    std::vector<ParentChannel> channels;
};

struct RateLaws {
    DeathLaw death_plus;
    DeathLaw death_minus;
    BirthLaw birth_plus;
    BirthLaw birth_minus;

    const DeathLaw& death(Species s) const noexcept { return s == Species::plus ? death_plus : death_minus; }
    const BirthLaw& birth(Species s) const noexcept { return s == Species::plus ? birth_plus : birth_minus; }
};

namespace detail {

inline void push_term(std::vector<EnergyTerm>& terms, Species src, const Kernel& k)
{
    if (!k.vanishes()) terms.push_back({src, k});
}

inline void push_channel(std::vector<ParentChannel>& channels, Species parent, const Kernel& k,
                         std::vector<EnergyTerm> damping = {})
{
    if (!k.vanishes()) channels.push_back({parent, k, std::move(damping)});
}

}  // namespace detail

inline RateLaws compile_rates(const ModelSpec& model)
{
    using detail::push_channel;
    using detail::push_term;
    constexpr Species P = Species::plus;
    constexpr Species M = Species::minus;
    RateLaws r;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                r.death_minus.base = v.m_minus;
                push_term(r.death_minus.terms, M, v.compete_minus);
                r.death_plus.base = v.m_plus;
                push_term(r.death_plus.terms, P, v.compete_plus);
                push_term(r.death_plus.terms, M, v.cross_death);
                r.birth_minus.activity = v.z;
                push_channel(r.birth_minus.channels, M, v.branch_minus);
                push_channel(r.birth_plus.channels, P, v.branch_plus);
                push_channel(r.birth_plus.channels, M, v.cross_birth);
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                r.death_minus.form = DeathForm::decaying;
                r.death_minus.base = 1.0;
                r.death_plus.form = DeathForm::decaying;
                r.death_plus.base = 1.0;
                if (v.s > 0.0) {
                    push_term(r.death_minus.terms, P, v.psi_plus.scaled(v.s));
                    push_term(r.death_plus.terms, M, v.psi_minus.scaled(v.s));
                }
                r.birth_minus.activity = v.z_minus;
                push_term(r.birth_minus.damping, P, v.psi_plus.scaled(1.0 - v.s));
                push_term(r.birth_minus.damping, M, v.phi_minus);
                r.birth_plus.activity = v.z_plus;
                push_term(r.birth_plus.damping, M, v.psi_minus.scaled(1.0 - v.s));
                push_term(r.birth_plus.damping, P, v.phi_plus);
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                r.death_minus.base = 1.0;
                r.death_plus.base = v.m_plus;
                push_term(r.death_plus.terms, P, v.a_minus);
                push_term(r.death_plus.terms, M, v.phi);
                r.birth_minus.activity = v.z_minus;
                push_term(r.birth_minus.damping, M, v.psi);
                push_channel(r.birth_plus.channels, P, v.a_plus);
                push_channel(r.birth_plus.channels, M, v.b_plus);
            } else {
                r.death_minus.base = 1.0;
                r.death_plus.form = DeathForm::growing;
                r.death_plus.base = v.m_plus;
                push_term(r.death_plus.terms, P, v.phi_plus);
                r.birth_minus.activity = v.z_minus;
                push_term(r.birth_minus.damping, M, v.phi_minus);
                std::vector<EnergyTerm> parent_damping;
                push_term(parent_damping, M, v.psi_minus);
                push_channel(r.birth_plus.channels, P, v.a_plus, std::move(parent_damping));
            }
        },
        model);
    return r;
}

// ---------------------------------------------------------------------------
// Neighbor sources

/// Supplies the points of each species near a location. `for_each_near`
/// visits every point within `radius` (possibly more; callers re-test the
/// distance) and passes the exact torus distance.
template <class S>
concept NeighborSource = requires(const S& s, Species sp, const Point& x, double r) {
    { s.domain() } -> std::convertible_to<const TorusDomain&>;
    { s.count(sp) } -> std::convertible_to<std::size_t>;
    s.for_each_near(sp, x, r, [](const Point&, double) {});
    s.for_each(sp, [](const Point&) {});
};

/// Brute-force source over a configuration.
class ConfigurationSource {
public:
    ConfigurationSource(const TwoSpeciesConfiguration& cfg, const TorusDomain& dom) : cfg_(&cfg), dom_(&dom) {}

    const TorusDomain& domain() const noexcept { return *dom_; }
    std::size_t count(Species s) const noexcept { return cfg_->of(s).size(); }

    template <class F>
    void for_each_near(Species s, const Point& x, double radius, F&& f) const
    {
        const double r2 = radius * radius;
        for (const Point& y : cfg_->of(s)) {
            const double d2 = torus_distance_squared(x, y, *dom_);
            if (d2 <= r2) f(y, std::sqrt(d2));
        }
    }

    template <class F>
    void for_each(Species s, F&& f) const
    {
        for (const Point& y : cfg_->of(s)) f(y);
    }

private:
    const TwoSpeciesConfiguration* cfg_;
    const TorusDomain* dom_;
};

/// Sum of k(|x - y|) over points y of species `s`, skipping a point equal to x.
template <NeighborSource Src>
double source_energy(const Src& src, Species s, const Point& x, const Kernel& k)
{
    if (k.vanishes()) return 0.0;
    double e = 0.0;
    src.for_each_near(s, x, k.cutoff(), [&](const Point& y, double d) {
        if (!(y == x)) e += k(d);
    });
    return e;
}

template <NeighborSource Src>
double total_energy(const Src& src, const std::vector<EnergyTerm>& terms, const Point& x)
{
    double e = 0.0;
    for (const EnergyTerm& t : terms) e += source_energy(src, t.source, x, t.kernel);
    return e;
}

template <NeighborSource Src>
double evaluate_death(const DeathLaw& law, const Point& x, const Src& src)
{
    const double e = total_energy(src, law.terms, x);
    switch (law.form) {
    case DeathForm::additive: return law.base + e;
    case DeathForm::decaying: return law.base * std::exp(-e);
    case DeathForm::growing: return law.base * std::exp(e);
    }
    return 0.0;
}

/// exp(-sum damping energies) at a parent location.
template <NeighborSource Src>
double parent_weight(const ParentChannel& ch, const Point& y, const Src& src)
{
    if (ch.damping.empty()) return 1.0;
    return std::exp(-total_energy(src, ch.damping, y));
}

template <NeighborSource Src>
double evaluate_birth(const BirthLaw& law, const Point& x, const Src& src)
{
    double b = 0.0;
    if (law.activity > 0.0) b += law.activity * std::exp(-total_energy(src, law.damping, x));
    for (const ParentChannel& ch : law.channels) {
        src.for_each_near(ch.parent, x, ch.kernel.cutoff(), [&](const Point& y, double d) {
            const double k = ch.kernel(d);
            if (k > 0.0) b += parent_weight(ch, y, src) * k;
        });
    }
    return b;
}

/// Envelope for the integral of b over the domain: activity * volume plus,
/// per channel, kernel mass times the summed (exact) parent weights.
template <NeighborSource Src>
double birth_envelope(const BirthLaw& law, const Src& src, int dim)
{
    double total = law.activity * src.domain().volume();
    for (const ParentChannel& ch : law.channels) {
        double weights = 0.0;
        if (ch.damping.empty())
            weights = static_cast<double>(src.count(ch.parent));
        else
            src.for_each(ch.parent, [&](const Point& y) { weights += parent_weight(ch, y, src); });
        total += kernel_mass(ch.kernel, dim) * weights;
    }
    return total;
}

/// Random displacement with density proportional to the (radial) kernel.
template <class Rng>
std::array<double, max_dim> sample_kernel_offset(const Kernel& k, int dim, Rng& rng)
{
    std::array<double, max_dim> u{};
    if (k.vanishes()) throw UsageError("sample_kernel_offset: kernel vanishes");
    const double r = k.cutoff();
    const double r2 = r * r;
    if (k.shape() == KernelShape::tophat) {
        std::uniform_real_distribution<double> unif(-r, r);
        for (;;) {
            double s = 0.0;
            for (int a = 0; a < dim; ++a) {
                u[a] = unif(rng);
                s += u[a] * u[a];
            }
            if (s <= r2) return u;
        }
    }
    std::normal_distribution<double> gauss(0.0, k.width());
    for (;;) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
            u[a] = gauss(rng);
            s += u[a] * u[a];
        }
        if (s <= r2) return u;
    }
}

// ---------------------------------------------------------------------------
// Public intensity API over explicit configurations

namespace detail {

inline void require_absent(const Point& x, const std::vector<Point>& pts, const char* what)
{
    if (std::find(pts.begin(), pts.end(), x) != pts.end())
        throw UsageError(std::string(what) + ": x must not be contained in its own species list");
}

}  // namespace detail

/// Death rate of a particle of `species` at x; cfg must not contain x in that species.
inline double death_intensity(const ModelSpec& m, Species species, const Point& x,
                              const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    detail::require_absent(x, cfg.of(species), "death_intensity");
    const RateLaws laws = compile_rates(m);
    return evaluate_death(laws.death(species), x, ConfigurationSource(cfg, dom));
}

inline double death_intensity(const ScaledModel& m, Species species, const Point& x,
                              const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    return death_intensity(effective_model(m), species, x, cfg, dom);
}

/// Birth density b(x, cfg) for `species` (effective n * b_n for a ScaledModel).
inline double birth_intensity(const ModelSpec& m, Species species, const Point& x,
                              const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    const RateLaws laws = compile_rates(m);
    return evaluate_birth(laws.birth(species), x, ConfigurationSource(cfg, dom));
}

inline double birth_intensity(const ScaledModel& m, Species species, const Point& x,
                              const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    return birth_intensity(effective_model(m), species, x, cfg, dom);
}

/// Certified upper bound on the integral of the birth density over the domain.
inline double birth_total_bound(const ModelSpec& m, Species species, const TwoSpeciesConfiguration& cfg,
                                const TorusDomain& dom)
{
    const RateLaws laws = compile_rates(m);
    return birth_envelope(laws.birth(species), ConfigurationSource(cfg, dom), dom.dim());
}

inline double birth_total_bound(const ScaledModel& m, Species species, const TwoSpeciesConfiguration& cfg,
                                const TorusDomain& dom)
{
    return birth_total_bound(effective_model(m), species, cfg, dom);
}

/// One thinning proposal from the birth envelope of a law. Returns the new
/// point on acceptance, nothing on rejection. `pick_parent(channel_index, u)`
/// must return the parent whose cumulative weight first exceeds u.
template <NeighborSource Src, class Rng, class ParentPicker>
std::optional<Point> propose_birth(const BirthLaw& law, const Src& src, const std::vector<double>& channel_bounds,
                                   double activity_bound, Rng& rng, ParentPicker&& pick_parent)
{
    const TorusDomain& dom = src.domain();
    double total = activity_bound;
    for (double b : channel_bounds) total += b;
    if (!(total > 0.0)) return std::nullopt;
    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    double u = unif01(rng) * total;
    if (u < activity_bound || channel_bounds.empty()) {
        Point x;
        x.dim = dom.dim();
        std::uniform_real_distribution<double> coord(0.0, dom.side_length());
        for (int a = 0; a < dom.dim(); ++a) x.x[a] = wrap_coordinate(coord(rng), dom.side_length());
        if (!law.damping.empty()) {
            const double accept = std::exp(-total_energy(src, law.damping, x));
            if (unif01(rng) >= accept) return std::nullopt;
        }
        return x;
    }
    u -= activity_bound;
    std::size_t c = 0;
    while (c + 1 < channel_bounds.size() && u >= channel_bounds[c]) {
        u -= channel_bounds[c];
        ++c;
    }
    const ParentChannel& ch = law.channels[c];
    const double mass = kernel_mass(ch.kernel, dom.dim());
    const Point parent = pick_parent(c, std::clamp(u / mass, 0.0, std::nextafter(channel_bounds[c] / mass, 0.0)));
    return dom.shifted(parent, sample_kernel_offset(ch.kernel, dom.dim(), rng));
}

/// Draws one thinning proposal for `species`: a point with density b(x)/B
/// where B = birth_total_bound, or nothing on rejection.
template <class Rng>
std::optional<Point> sample_birth(const ModelSpec& m, Species species, const TwoSpeciesConfiguration& cfg,
                                  const TorusDomain& dom, Rng& rng)
{
    const RateLaws laws = compile_rates(m);
    const BirthLaw& law = laws.birth(species);
    const ConfigurationSource src(cfg, dom);
    std::vector<double> bounds;
    std::vector<std::vector<double>> weights;
    for (const ParentChannel& ch : law.channels) {
        std::vector<double> w;
        for (const Point& y : cfg.of(ch.parent)) w.push_back(parent_weight(ch, y, src));
        double sum = 0.0;
        for (double v : w) sum += v;
        bounds.push_back(kernel_mass(ch.kernel, dom.dim()) * sum);
        weights.push_back(std::move(w));
    }
    const double activity_bound = law.activity * dom.volume();
    auto pick = [&](std::size_t c, double u) {
        const auto& pts = cfg.of(law.channels[c].parent);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (u < weights[c][i]) return pts[i];
            u -= weights[c][i];
        }
        return pts.back();
    };
    auto out = propose_birth(law, src, bounds, activity_bound, rng, pick);
    if (out) {
        for (const auto* list : {&cfg.plus, &cfg.minus})
            if (std::find(list->begin(), list->end(), *out) != list->end()) return std::nullopt;
    }
    return out;
}

template <class Rng>
std::optional<Point> sample_birth(const ScaledModel& m, Species species, const TwoSpeciesConfiguration& cfg,
                                  const TorusDomain& dom, Rng& rng)
{
    return sample_birth(effective_model(m), species, cfg, dom, rng);
}

// ---------------------------------------------------------------------------
// Parameter-condition validators

struct ConditionRow {
    std::string label;
    double lhs = 0.0;
    std::string relation;  ///< "<", "<=", ">", ">="
    double rhs = 0.0;
    bool pass = false;
    std::string note;
};

struct ConditionReport {
    std::string theorem;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<ConditionRow> rows;
    bool pass = false;
};

enum class ConditionSet {
    evolution,  ///< hypotheses for the evolution of correlation functions
    vlasov,     ///< the stronger relations used for the Vlasov limit where they differ
};

/// max over sampled radii u of (f(u) - theta * g(u)); <= 0 certifies f <= theta g pointwise.
inline double pointwise_excess(const Kernel& f, const Kernel& g, double theta)
{
    const double rmax = std::max(f.cutoff(), g.cutoff());
    double worst = f(0.0) - theta * g(0.0);
    if (rmax == 0.0) return worst;
    auto probe = [&](double u) { worst = std::max(worst, f(u) - theta * g(u)); };
    for (const Kernel* k : {&f, &g}) {
        if (k->cutoff() > 0.0) {
            probe(k->cutoff());
            probe(std::nextafter(k->cutoff(), 0.0));
            probe(std::nextafter(k->cutoff(), rmax + 1.0));
        }
    }
    constexpr int samples = 4096;
    for (int i = 1; i <= samples; ++i) probe(rmax * i / samples);
    return worst;
}

namespace detail {

class ReportBuilder {
public:
    ReportBuilder(std::string theorem, double alpha, double beta)
    {
        report_.theorem = std::move(theorem);
        report_.alpha = alpha;
        report_.beta = beta;
    }

    void less(std::string label, double lhs, double rhs, std::string note = {})
    {
        add(std::move(label), lhs, "<", rhs, lhs < rhs, std::move(note));
    }
    void less_equal(std::string label, double lhs, double rhs, std::string note = {})
    {
        add(std::move(label), lhs, "<=", rhs, lhs <= rhs, std::move(note));
    }
    void greater(std::string label, double lhs, double rhs, std::string note = {})
    {
        add(std::move(label), lhs, ">", rhs, lhs > rhs, std::move(note));
    }
    void greater_equal(std::string label, double lhs, double rhs, std::string note = {})
    {
        add(std::move(label), lhs, ">=", rhs, lhs >= rhs, std::move(note));
    }

    ConditionReport finish()
    {
        report_.pass = std::all_of(report_.rows.begin(), report_.rows.end(),
                                   [](const ConditionRow& r) { return r.pass; });
        return std::move(report_);
    }

private:
    void add(std::string label, double lhs, const char* rel, double rhs, bool pass, std::string note)
    {
        report_.rows.push_back({std::move(label), lhs, rel, rhs, pass, std::move(note)});
    }

    ConditionReport report_;
};

inline constexpr const char* pointwise_note = "pointwise-sufficient";

}  // namespace detail

inline ConditionReport validate_conditions(const ModelSpec& model, double alpha, double beta, int dim = 1,
                                           ConditionSet set = ConditionSet::evolution)
{
    if (!std::isfinite(alpha) || !std::isfinite(beta))
        throw UsageError("validate_conditions: alpha and beta must be finite");
    const double ea = std::exp(alpha);
    const double eb = std::exp(beta);
    auto mass = [dim](const Kernel& k) { return kernel_mass(k, dim); };
    auto mayer = [dim](const Kernel& k) { return mayer_integral(k, dim); };

    return std::visit(
        [&](const auto& v) -> ConditionReport {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                detail::ReportBuilder rb("bdlp_pair", alpha, beta);
                const auto& w = v.witness;
                rb.greater("theta1 > 0", w.theta1, 0.0);
                rb.greater("theta2 > 0", w.theta2, 0.0);
                rb.greater("theta3 > 0", w.theta3, 0.0);
                rb.greater_equal("b1 >= 0", w.b1, 0.0);
                rb.greater_equal("b2 >= 0", w.b2, 0.0);
                rb.less_equal("branch_plus <= theta1 * compete_plus", pointwise_excess(v.branch_plus, v.compete_plus, w.theta1),
                              0.0, detail::pointwise_note);
                rb.less_equal("branch_minus <= theta2 * compete_minus",
                              pointwise_excess(v.branch_minus, v.compete_minus, w.theta2), 0.0, detail::pointwise_note);
                rb.less_equal("cross_birth <= theta3 * cross_death", pointwise_excess(v.cross_birth, v.cross_death, w.theta3),
                              0.0);
                rb.less("theta1 < e^alpha", w.theta1, ea);
                rb.less("theta3 < e^alpha", w.theta3, ea);
                rb.less("theta2 < e^beta", w.theta2, eb);
                rb.greater("plus mortality bound", v.m_plus,
                           ea * mass(v.compete_plus) + eb * mass(v.cross_death) + w.b1 / ea + mass(v.branch_plus) +
                               mass(v.cross_birth));
                rb.greater("minus mortality bound", v.m_minus,
                           eb * mass(v.compete_minus) + (w.b2 + v.z) / eb + mass(v.branch_minus));
                return rb.finish();
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                detail::ReportBuilder rb("glauber_pair", alpha, beta);
                const double s = v.s;
                const double lhs_minus = std::exp(ea * mayer(v.psi_plus.scaled(s))) +
                                         v.z_minus / eb * std::exp(ea * mayer(v.psi_plus.scaled(1.0 - s))) *
                                             std::exp(eb * mayer(v.phi_minus));
                const double lhs_plus = std::exp(eb * mayer(v.psi_minus.scaled(s))) +
                                        v.z_plus / ea * std::exp(eb * mayer(v.psi_minus.scaled(1.0 - s))) *
                                            std::exp(ea * mayer(v.phi_plus));
                rb.less("minus-species activity bound", lhs_minus, 2.0);
                rb.less("plus-species activity bound", lhs_plus, 2.0);
                return rb.finish();
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                detail::ReportBuilder rb("bdlp_in_glauber", alpha, beta);
                const auto& w = v.witness;
                rb.greater("theta > 0", w.theta, 0.0);
                rb.less("theta < e^alpha", w.theta, ea);
                rb.greater_equal("b >= 0", w.b, 0.0);
                rb.less_equal("a_plus <= theta * a_minus", pointwise_excess(v.a_plus, v.a_minus, w.theta), 0.0,
                              detail::pointwise_note);
                rb.greater("vartheta > 0", w.vartheta, 0.0);
                rb.less("vartheta < e^alpha", w.vartheta, ea);
                rb.less_equal("b_plus <= vartheta * phi", pointwise_excess(v.b_plus, v.phi, w.vartheta), 0.0);
                const double psi_term = set == ConditionSet::vlasov ? mass(v.psi) : mayer(v.psi);
                rb.greater("minus-species activity bound", eb, v.z_minus * std::exp(eb * psi_term),
                           set == ConditionSet::vlasov ? "uses <psi>" : "");
                rb.greater("plus mortality bound", v.m_plus,
                           ea * mass(v.a_minus) + eb * mass(v.phi) + mass(v.a_plus) + mass(v.b_plus) + w.b / ea);
                return rb.finish();
            } else {
                detail::ReportBuilder rb("density_branching", alpha, beta);
                const auto& w = v.witness;
                rb.greater("sup phi_plus > 0", v.phi_plus.sup(), 0.0);
                rb.greater("vartheta > 0", w.vartheta, 0.0);
                rb.greater_equal("b >= 0", w.b, 0.0);
                rb.less_equal("a_plus <= vartheta * phi_plus", pointwise_excess(v.a_plus, v.phi_plus, w.vartheta), 0.0,
                              detail::pointwise_note);
                const bool vl = set == ConditionSet::vlasov;
                const double phi_minus_term = vl ? mass(v.phi_minus) : mayer(v.phi_minus);
                const double phi_plus_term = vl ? mass(v.phi_plus) : mayer_integral_negated(v.phi_plus, dim);
                const double psi_term = vl ? mass(v.psi_minus) : mayer(v.psi_minus);
                rb.greater("minus-species activity bound", eb, v.z_minus * std::exp(eb * phi_minus_term),
                           vl ? "uses <phi_minus>" : "");
                const double branching = std::max(mass(v.a_plus) + w.b / ea, w.vartheta / ea);
                rb.less("plus-species branching bound",
                        std::exp(ea * phi_plus_term) + branching / v.m_plus * std::exp(eb * psi_term), 2.0,
                        vl ? "uses kernel masses" : "");
                return rb.finish();
            }
        },
        model);
}

struct FeasiblePoint {
    double alpha = 0.0;
    double beta = 0.0;
    ConditionReport report;
};

/// First (alpha, beta) on the grid, alpha-major, at which validate_conditions passes.
inline std::optional<FeasiblePoint> feasible_region_scan(const ModelSpec& model, double alpha_lo, double alpha_hi,
                                                         double beta_lo, double beta_hi, double step, int dim = 1,
                                                         ConditionSet set = ConditionSet::evolution)
{
    if (!(step > 0.0) || !std::isfinite(step)) throw UsageError("feasible_region_scan: step must be > 0");
    if (!(alpha_lo <= alpha_hi) || !(beta_lo <= beta_hi))
        throw UsageError("feasible_region_scan: empty alpha or beta range");
    const auto na = static_cast<long>(std::floor((alpha_hi - alpha_lo) / step + 1e-9));
    const auto nb = static_cast<long>(std::floor((beta_hi - beta_lo) / step + 1e-9));
    for (long i = 0; i <= na; ++i) {
        const double a = alpha_lo + static_cast<double>(i) * step;
        for (long j = 0; j <= nb; ++j) {
            const double b = beta_lo + static_cast<double>(j) * step;
            ConditionReport rep = validate_conditions(model, a, b, dim, set);
            if (rep.pass) return FeasiblePoint{a, b, std::move(rep)};
        }
    }
    return std::nullopt;
}

}  // namespace vlasovlab
