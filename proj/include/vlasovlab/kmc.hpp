#pragma once

// Exact continuous-time simulation of the two-species birth-and-death
// process: thinned Gillespie over per-particle death rates and per-species
// birth envelopes, with cell lists for local rate updates.

#include "vlasovlab/cell_grid.hpp"
#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"
#include "vlasovlab/models.hpp"
#include "vlasovlab/rate_tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace vlasovlab {

// ---------------------------------------------------------------------------
// Initial states

namespace detail {

template <class Rng>
Point uniform_point_in_box(const TorusDomain& dom, const std::array<double, max_dim>& lo, double side, Rng& rng)
{
    std::uniform_real_distribution<double> unif(0.0, side);
    Point p;
    p.dim = dom.dim();
    for (int a = 0; a < dom.dim(); ++a) p.x[a] = wrap_coordinate(lo[a] + unif(rng), dom.side_length());
    return p;
}

}  // namespace detail

/// Independent Poisson configurations with constant intensities; coincident draws are re-drawn.
template <class Rng>
TwoSpeciesConfiguration init_poisson(const TorusDomain& dom, double intensity_plus, double intensity_minus, Rng& rng)
{
    if (!(intensity_plus >= 0.0) || !(intensity_minus >= 0.0))
        throw UsageError("init_poisson: intensities must be >= 0");
    TwoSpeciesConfiguration cfg;
    std::set<Point> seen;
    const std::array<double, max_dim> origin{};
    for (Species s : {Species::plus, Species::minus}) {
        const double mean = (s == Species::plus ? intensity_plus : intensity_minus) * dom.volume();
        if (mean <= 0.0) continue;
        std::poisson_distribution<long> count(mean);
        const long n = count(rng);
        auto& list = cfg.of(s);
        list.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) {
            Point p = detail::uniform_point_in_box(dom, origin, dom.side_length(), rng);
            while (!seen.insert(p).second) p = detail::uniform_point_in_box(dom, origin, dom.side_length(), rng);
            list.push_back(p);
        }
    }
    return cfg;
}

/// Poisson configurations with piecewise-constant intensities on an M^dim cell grid
/// (cell index = sum_a i_a M^a).
template <class Rng>
TwoSpeciesConfiguration init_poisson_profile(const TorusDomain& dom, int cells_per_axis,
                                             const std::vector<double>& intensity_plus,
                                             const std::vector<double>& intensity_minus, Rng& rng)
{
    if (cells_per_axis < 1) throw UsageError("init_poisson_profile: cells_per_axis must be >= 1");
    std::size_t ncell = 1;
    for (int a = 0; a < dom.dim(); ++a) ncell *= static_cast<std::size_t>(cells_per_axis);
    if (intensity_plus.size() != ncell || intensity_minus.size() != ncell)
        throw UsageError("init_poisson_profile: profile size does not match grid");
    const double h = dom.side_length() / cells_per_axis;
    const double cell_volume = std::pow(h, dom.dim());
    TwoSpeciesConfiguration cfg;
    std::set<Point> seen;
    for (Species s : {Species::plus, Species::minus}) {
        const auto& profile = s == Species::plus ? intensity_plus : intensity_minus;
        auto& list = cfg.of(s);
        for (std::size_t c = 0; c < ncell; ++c) {
            if (!(profile[c] >= 0.0)) throw UsageError("init_poisson_profile: intensities must be >= 0");
            if (profile[c] == 0.0) continue;
            std::array<double, max_dim> lo{};
            std::size_t rem = c;
            for (int a = 0; a < dom.dim(); ++a) {
                lo[a] = static_cast<double>(rem % static_cast<std::size_t>(cells_per_axis)) * h;
                rem /= static_cast<std::size_t>(cells_per_axis);
            }
            std::poisson_distribution<long> count(profile[c] * cell_volume);
            const long n = count(rng);
            for (long i = 0; i < n; ++i) {
                Point p = detail::uniform_point_in_box(dom, lo, h, rng);
                while (!seen.insert(p).second) p = detail::uniform_point_in_box(dom, lo, h, rng);
                list.push_back(p);
            }
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Simulation state

/// Mutable state of one simulated replica. Implements NeighborSource over
/// its own particles.
class SimulationState {
public:
    SimulationState(const ModelSpec& model, const TorusDomain& dom, const TwoSpeciesConfiguration& init)
        : dom_(dom),
          laws_(compile_rates(model)),
          pops_{Population(dom, max_cutoff(model)), Population(dom, max_cutoff(model))}
    {
        validate_model(model, &dom);
        init.validate(dom);
        for (Species t : {Species::plus, Species::minus})
            for (Species s : {Species::plus, Species::minus}) {
                double r = 0.0;
                for (const EnergyTerm& term : laws_.death(t).terms)
                    if (term.source == s) r = std::max(r, term.kernel.cutoff());
                death_radius_[idx(t)][idx(s)] = r;
            }
        for (Species s : {Species::plus, Species::minus}) {
            const BirthLaw& law = laws_.birth(s);
            for (std::size_t c = 0; c < law.channels.size(); ++c) {
                const ParentChannel& ch = law.channels[c];
                channel_mass_[idx(s)].push_back(kernel_mass(ch.kernel, dom.dim()));
                if (ch.damping.empty()) continue;
                WeightedChannel wc;
                wc.birth_species = s;
                wc.channel = c;
                for (const EnergyTerm& term : ch.damping)
                    wc.radius[idx(term.source)] = std::max(wc.radius[idx(term.source)], term.kernel.cutoff());
                weighted_.push_back(std::move(wc));
            }
        }
        for (Species s : {Species::plus, Species::minus})
            for (const Point& p : init.of(s)) place(s, p);
        refresh_all();
    }

    // NeighborSource
    const TorusDomain& domain() const noexcept { return dom_; }
    std::size_t count(Species s) const noexcept { return pop(s).pos.size(); }

    template <class F>
    void for_each_near(Species s, const Point& x, double radius, F&& f) const
    {
        for_each_near_id(s, x, radius, [&](std::uint32_t id, double d) { f(pop(s).pos[id], d); });
    }

    template <class F>
    void for_each(Species s, F&& f) const
    {
        for (const Point& p : pop(s).pos) f(p);
    }

    const RateLaws& laws() const noexcept { return laws_; }
    const std::vector<Point>& points(Species s) const noexcept { return pop(s).pos; }

    TwoSpeciesConfiguration configuration() const
    {
        TwoSpeciesConfiguration cfg;
        cfg.plus = pops_[0].pos;
        cfg.minus = pops_[1].pos;
        return cfg;
    }

    double death_total(Species s) const noexcept { return std::max(0.0, pop(s).death.total()); }
    double death_rate(Species s, std::size_t i) const noexcept { return pop(s).death[i]; }

    double activity_bound(Species s) const noexcept { return laws_.birth(s).activity * dom_.volume(); }

    /// Envelope of each parent channel of the birth law of `s`.
    std::vector<double> channel_bounds(Species s) const
    {
        const BirthLaw& law = laws_.birth(s);
        std::vector<double> out(law.channels.size());
        for (std::size_t c = 0; c < law.channels.size(); ++c) {
            const WeightedChannel* wc = find_weighted(s, c);
            const double weight = wc ? std::max(0.0, wc->weights.total())
                                     : static_cast<double>(count(law.channels[c].parent));
            out[c] = channel_mass_[idx(s)][c] * weight;
        }
        return out;
    }

    double birth_bound(Species s) const
    {
        double b = activity_bound(s);
        for (double v : channel_bounds(s)) b += v;
        return b;
    }

    double total_event_rate() const
    {
        return death_total(Species::plus) + death_total(Species::minus) + birth_bound(Species::plus) +
               birth_bound(Species::minus);
    }

    /// Adds a particle and updates every cached rate it influences.
    void insert(Species s, const Point& p)
    {
        place(s, p);
        pop(s).death.push_back(evaluate_death(laws_.death(s), p, *this));
        for (WeightedChannel& wc : weighted_)
            if (parent_of(wc) == s) wc.weights.push_back(parent_weight(channel_of(wc), p, *this));
        refresh_around(s, p);
    }

    /// Removes particle i of species s (the last particle takes its index).
    void remove(Species s, std::size_t i)
    {
        Population& P = pop(s);
        const Point x = P.pos[i];
        const auto last = static_cast<std::uint32_t>(P.pos.size() - 1);
        const auto id = static_cast<std::uint32_t>(i);
        P.grid.erase(id, P.cell[i]);
        if (id != last) {
            P.grid.relabel(last, id, P.cell[last]);
            P.pos[i] = P.pos[last];
            P.cell[i] = P.cell[last];
        }
        P.pos.pop_back();
        P.cell.pop_back();
        P.death.swap_remove(i);
        for (WeightedChannel& wc : weighted_)
            if (parent_of(wc) == s) wc.weights.swap_remove(i);
        refresh_around(s, x);
    }

    /// True if a particle of either species sits exactly at p.
    bool occupied(const Point& p) const
    {
        bool hit = false;
        for (Species s : {Species::plus, Species::minus})
            for_each_near_id(s, p, 0.0, [&](std::uint32_t id, double) { hit = hit || pop(s).pos[id] == p; });
        return hit;
    }

    /// Picks a particle of species s with probability proportional to its death rate; u in [0, death_total).
    std::size_t pick_death(Species s, double u) const { return pop(s).death.find(u); }

    template <class Rng>
    std::optional<Point> propose(Species s, Rng& rng) const
    {
        const BirthLaw& law = laws_.birth(s);
        const std::vector<double> bounds = channel_bounds(s);
        auto pick = [&](std::size_t c, double u) {
            const Species parent = law.channels[c].parent;
            const auto& pts = pop(parent).pos;
            if (const WeightedChannel* wc = find_weighted(s, c)) return pts[wc->weights.find(u)];
            const auto i = std::min(static_cast<std::size_t>(u), pts.size() - 1);
            return pts[i];
        };
        return propose_birth(law, *this, bounds, activity_bound(s), rng, pick);
    }

    /// Recomputes the Fenwick trees from the cached per-particle values.
    void resync()
    {
        for (Population& P : pops_) P.death.rebuild();
        for (WeightedChannel& wc : weighted_) wc.weights.rebuild();
    }

    /// Largest relative discrepancy between cached rates (per particle and
    /// totals) and a from-scratch recomputation.
    double cache_discrepancy() const
    {
        double worst = 0.0;
        auto rel = [](double cached, double fresh) {
            const double scale = std::max(std::abs(fresh), 1e-300);
            return std::abs(cached - fresh) / scale;
        };
        for (Species s : {Species::plus, Species::minus}) {
            const Population& P = pop(s);
            double sum = 0.0;
            for (std::size_t i = 0; i < P.pos.size(); ++i) {
                const double fresh = evaluate_death(laws_.death(s), P.pos[i], *this);
                worst = std::max(worst, rel(P.death[i], fresh));
                sum += fresh;
            }
            if (sum > 0.0) worst = std::max(worst, rel(P.death.total(), sum));
        }
        for (const WeightedChannel& wc : weighted_) {
            const Population& P = pop(parent_of(wc));
            double sum = 0.0;
            for (std::size_t i = 0; i < P.pos.size(); ++i) {
                const double fresh = parent_weight(channel_of(wc), P.pos[i], *this);
                worst = std::max(worst, rel(wc.weights[i], fresh));
                sum += fresh;
            }
            if (sum > 0.0) worst = std::max(worst, rel(wc.weights.total(), sum));
        }
        return worst;
    }

private:
    struct Population {
        Population(const TorusDomain& dom, double cutoff) : grid(dom, cutoff) {}
        std::vector<Point> pos;
        std::vector<std::uint32_t> cell;
        CellGrid grid;
        RateTree death;
    };

    /// Parent weights of a damped parent channel, indexed like the parent population.
    struct WeightedChannel {
        Species birth_species = Species::plus;
        std::size_t channel = 0;
        std::array<double, 2> radius{};  ///< damping range per source species
        RateTree weights;
    };

    static constexpr std::size_t idx(Species s) noexcept { return s == Species::plus ? 0 : 1; }
    Population& pop(Species s) noexcept { return pops_[idx(s)]; }
    const Population& pop(Species s) const noexcept { return pops_[idx(s)]; }

    const ParentChannel& channel_of(const WeightedChannel& wc) const
    {
        return laws_.birth(wc.birth_species).channels[wc.channel];
    }
    Species parent_of(const WeightedChannel& wc) const { return channel_of(wc).parent; }

    const WeightedChannel* find_weighted(Species s, std::size_t c) const
    {
        for (const WeightedChannel& wc : weighted_)
            if (wc.birth_species == s && wc.channel == c) return &wc;
        return nullptr;
    }

    template <class F>
    void for_each_near_id(Species s, const Point& x, double radius, F&& f) const
    {
        const Population& P = pop(s);
        const double r2 = radius * radius;
        auto visit = [&](std::uint32_t id) {
            const double d2 = torus_distance_squared(x, P.pos[id], dom_);
            if (d2 <= r2) f(id, std::sqrt(d2));
        };
        if (radius > P.grid.cell_side())
            P.grid.for_each_all(visit);
        else
            P.grid.for_each_candidate(x, visit);
    }

    /// Stores a particle without touching any rate.
    void place(Species s, const Point& p)
    {
        Population& P = pop(s);
        const auto id = static_cast<std::uint32_t>(P.pos.size());
        P.pos.push_back(p);
        P.cell.push_back(P.grid.insert(id, p));
    }

    /// Computes every cached rate from scratch.
    void refresh_all()
    {
        for (Species s : {Species::plus, Species::minus}) {
            Population& P = pop(s);
            P.death.clear();
            for (const Point& p : P.pos) P.death.push_back(evaluate_death(laws_.death(s), p, *this));
            P.death.rebuild();
        }
        for (WeightedChannel& wc : weighted_) {
            wc.weights.clear();
            for (const Point& p : pop(parent_of(wc)).pos) wc.weights.push_back(parent_weight(channel_of(wc), p, *this));
            wc.weights.rebuild();
        }
    }

    /// Recomputes the rates that depend on a particle of species `s` at x.
    void refresh_around(Species s, const Point& x)
    {
        for (Species t : {Species::plus, Species::minus}) {
            const double r = death_radius_[idx(t)][idx(s)];
            if (r <= 0.0) continue;
            const DeathLaw& law = laws_.death(t);
            Population& T = pop(t);
            updates_.clear();
            for_each_near_id(t, x, r, [&](std::uint32_t id, double) { updates_.push_back(id); });
            for (std::uint32_t id : updates_) T.death.set(id, evaluate_death(law, T.pos[id], *this));
        }
        for (WeightedChannel& wc : weighted_) {
            const double r = wc.radius[idx(s)];
            if (r <= 0.0) continue;
            const Species parent = parent_of(wc);
            const ParentChannel& ch = channel_of(wc);
            updates_.clear();
            for_each_near_id(parent, x, r, [&](std::uint32_t id, double) { updates_.push_back(id); });
            for (std::uint32_t id : updates_) wc.weights.set(id, parent_weight(ch, pop(parent).pos[id], *this));
        }
    }

    TorusDomain dom_;
    RateLaws laws_;
    std::array<Population, 2> pops_;
    std::array<std::array<double, 2>, 2> death_radius_{};
    std::array<std::vector<double>, 2> channel_mass_;
    std::vector<WeightedChannel> weighted_;
    std::vector<std::uint32_t> updates_;
};

/// Total event rate of the chain: all death rates plus both birth envelopes.
inline double total_event_rate(const SimulationState& state) { return state.total_event_rate(); }

/// The same total recomputed from scratch with brute-force sums.
inline double total_event_rate(const ModelSpec& model, const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    const RateLaws laws = compile_rates(model);
    const ConfigurationSource src(cfg, dom);
    double total = 0.0;
    for (Species s : {Species::plus, Species::minus}) {
        for (const Point& p : cfg.of(s)) total += evaluate_death(laws.death(s), p, src);
        total += birth_envelope(laws.birth(s), src, dom.dim());
    }
    return total;
}

// ---------------------------------------------------------------------------
// Trajectories

struct Snapshot {
    double time = 0.0;
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
    std::optional<TwoSpeciesConfiguration> configuration;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
};

/// Time integrals of count observables over [start, t_end].
struct OccupationIntegrals {
    double duration = 0.0;
    double plus = 0.0;
    double minus = 0.0;
    double plus_sq = 0.0;
    double minus_sq = 0.0;
    double cross = 0.0;

    void accumulate(double dt, double np, double nm) noexcept
    {
        duration += dt;
        plus += np * dt;
        minus += nm * dt;
        plus_sq += np * np * dt;
        minus_sq += nm * nm * dt;
        cross += np * nm * dt;
    }
};

struct SimulationOptions {
    std::size_t max_particles = 1'000'000;
    bool record_configurations = false;
    std::uint64_t resync_interval = 10'000;
    /// Occupation integrals are accumulated from this time on.
    double statistics_start = 0.0;
};

struct SimulationResult {
    Trajectory trajectory;
    TwoSpeciesConfiguration final_configuration;
    double final_time = 0.0;
    std::uint64_t events = 0;
    std::uint64_t births = 0;
    std::uint64_t deaths = 0;
    std::uint64_t rejections = 0;
    OccupationIntegrals occupation;
};

/// Advances `state` from time t to t_end, recording snapshots at observer
/// times (the state at the last jump not after each observer time).
template <class Rng>
SimulationResult run_simulation(SimulationState& state, double t_end, const std::vector<double>& observer_times,
                                Rng& rng, const SimulationOptions& opt = {})
{
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw UsageError("simulate: t_end must be positive and finite");
    for (std::size_t i = 0; i < observer_times.size(); ++i) {
        const double t = observer_times[i];
        if (!(t >= 0.0 && t <= t_end)) throw UsageError("simulate: observer times must lie in [0, t_end]");
        if (i > 0 && !(t > observer_times[i - 1])) throw UsageError("simulate: observer times must be strictly increasing");
    }
    SimulationResult res;
    std::size_t next_obs = 0;
    auto record_until = [&](double t_excl) {
        while (next_obs < observer_times.size() && observer_times[next_obs] < t_excl) {
            Snapshot s{observer_times[next_obs], state.count(Species::plus), state.count(Species::minus), std::nullopt};
            if (opt.record_configurations) s.configuration = state.configuration();
            res.trajectory.snapshots.push_back(std::move(s));
            ++next_obs;
        }
    };
    auto accumulate = [&](double from, double to) {
        const double a = std::max(from, opt.statistics_start);
        if (to > a)
            res.occupation.accumulate(to - a, static_cast<double>(state.count(Species::plus)),
                                      static_cast<double>(state.count(Species::minus)));
    };

    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    double t = 0.0;
    std::uint64_t since_resync = 0;
    for (;;) {
        const double d_plus = state.death_total(Species::plus);
        const double d_minus = state.death_total(Species::minus);
        const double b_plus = state.birth_bound(Species::plus);
        const double b_minus = state.birth_bound(Species::minus);
        const double total = d_plus + d_minus + b_plus + b_minus;
        double t_next = std::numeric_limits<double>::infinity();
        if (total > 0.0) t_next = t + std::exponential_distribution<double>(total)(rng);
        if (!(t_next <= t_end)) {
            accumulate(t, t_end);
            record_until(std::nextafter(t_end, std::numeric_limits<double>::infinity()));
            t = t_end;
            break;
        }
        accumulate(t, t_next);
        record_until(t_next);
        t = t_next;

        double u = unif01(rng) * total;
        ++res.events;
        if (u < d_plus + d_minus) {
            const Species s = u < d_plus ? Species::plus : Species::minus;
            const double v = s == Species::plus ? u : u - d_plus;
            state.remove(s, state.pick_death(s, v));
            ++res.deaths;
        } else {
            u -= d_plus + d_minus;
            const Species s = u < b_plus ? Species::plus : Species::minus;
            std::optional<Point> x = state.propose(s, rng);
            if (x && !state.occupied(*x)) {
                state.insert(s, *x);
                ++res.births;
                if (state.count(Species::plus) + state.count(Species::minus) > opt.max_particles)
                    throw SimulationError("simulate: particle count exceeded " + std::to_string(opt.max_particles) +
                                          " at t=" + std::to_string(t));
            } else {
                ++res.rejections;
            }
        }
        if (++since_resync >= opt.resync_interval) {
            state.resync();
            since_resync = 0;
        }
    }
    res.final_time = t;
    res.final_configuration = state.configuration();
    return res;
}

template <class Rng>
SimulationResult simulate(const ModelSpec& model, const TorusDomain& dom, const TwoSpeciesConfiguration& init,
                          double t_end, const std::vector<double>& observer_times, Rng& rng,
                          const SimulationOptions& opt = {})
{
    SimulationState state(model, dom, init);
    return run_simulation(state, t_end, observer_times, rng, opt);
}

template <class Rng>
SimulationResult simulate(const ScaledModel& model, const TorusDomain& dom, const TwoSpeciesConfiguration& init,
                          double t_end, const std::vector<double>& observer_times, Rng& rng,
                          const SimulationOptions& opt = {})
{
    return simulate(effective_model(model), dom, init, t_end, observer_times, rng, opt);
}

}  // namespace vlasovlab
