#include "oracles.hpp"

#include "vlasovlab/kmc.hpp"
#include "vlasovlab/observables.hpp"
#include "vlasovlab/presets.hpp"
#include "vlasovlab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace vlasovlab;

namespace {

const TorusDomain line(1, 10.0);

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance_of(const std::vector<double>& v)
{
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

bool disjoint(const TwoSpeciesConfiguration& cfg)
{
    std::vector<Point> all = cfg.plus;
    all.insert(all.end(), cfg.minus.begin(), cfg.minus.end());
    std::sort(all.begin(), all.end(), [](const Point& a, const Point& b) { return a < b; });
    return std::adjacent_find(all.begin(), all.end()) == all.end();
}

/// Death intensity of the i-th particle of species s, evaluated on cfg without it.
double death_of(const ModelSpec& m, Species s, const TwoSpeciesConfiguration& cfg, std::size_t i,
                const TorusDomain& dom)
{
    TwoSpeciesConfiguration rest = cfg;
    rest.of(s).erase(rest.of(s).begin() + static_cast<std::ptrdiff_t>(i));
    return death_intensity(m, s, cfg.of(s)[i], rest, dom);
}

/// Total rate from the public pointwise intensities.
double brute_total(const ModelSpec& m, const TwoSpeciesConfiguration& cfg, const TorusDomain& dom)
{
    double total = 0.0;
    for (Species s : {Species::plus, Species::minus}) {
        for (std::size_t i = 0; i < cfg.of(s).size(); ++i) total += death_of(m, s, cfg, i, dom);
        total += birth_total_bound(m, s, cfg, dom);
    }
    return total;
}

BdlpPair immigration_death(double z, double m)
{
    BdlpPair b;
    b.z = z;
    b.m_minus = m;
    b.m_plus = 1.0;
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// init_poisson

TEST(InitPoisson, ZeroIntensityIsEmpty)
{
    Rng rng(1);
    const auto cfg = init_poisson(line, 0.0, 0.0, rng);
    EXPECT_TRUE(cfg.plus.empty());
    EXPECT_TRUE(cfg.minus.empty());
    EXPECT_THROW(init_poisson(line, -1.0, 0.0, rng), UsageError);
}

TEST(InitPoisson, CountsArePoisson)
{
    Rng rng(2);
    std::vector<double> np, nm;
    for (int i = 0; i < 10000; ++i) {
        const auto cfg = init_poisson(line, 2.0, 0.5, rng);
        np.push_back(static_cast<double>(cfg.plus.size()));
        nm.push_back(static_cast<double>(cfg.minus.size()));
        if (i < 200) {
            EXPECT_TRUE(disjoint(cfg));
            for (const Point& p : cfg.plus) EXPECT_TRUE(p[0] >= 0.0 && p[0] < 10.0);
        }
    }
    // mean 20: standard error sqrt(20/1e4); variance estimator sd ~ sqrt((mu4 - s^4)/N)
    EXPECT_NEAR(mean_of(np), 20.0, 3 * std::sqrt(20.0 / 1e4));
    EXPECT_NEAR(variance_of(np), 20.0, 3 * std::sqrt((20.0 * 61.0 - 400.0) / 1e4));
    EXPECT_NEAR(mean_of(nm), 5.0, 3 * std::sqrt(5.0 / 1e4));
}

TEST(InitPoisson, ProfileFollowsCellIntensities)
{
    Rng rng(3);
    std::vector<double> plus{0.0, 4.0}, minus{1.0, 0.0};
    double left = 0.0, right = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto cfg = init_poisson_profile(line, 2, plus, minus, rng);
        for (const Point& p : cfg.plus) (p[0] < 5.0 ? left : right) += 1.0;
        for (const Point& p : cfg.minus) EXPECT_LT(p[0], 5.0);
    }
    EXPECT_EQ(left, 0.0);
    EXPECT_NEAR(right / 2000, 20.0, 3 * std::sqrt(20.0 / 2000));
    EXPECT_THROW(init_poisson_profile(line, 3, plus, minus, rng), UsageError);
}

// ---------------------------------------------------------------------------
// total_event_rate / cached state

TEST(TotalEventRate, EmptyConfigurationExamples)
{
    const BdlpPair b = default_bdlp_pair();
    EXPECT_DOUBLE_EQ(total_event_rate(b, {}, line), b.z * 10.0);
    const GlauberPair g = default_widom_rowlinson();
    EXPECT_DOUBLE_EQ(total_event_rate(g, {}, line), (g.z_plus + g.z_minus) * 10.0);
    EXPECT_DOUBLE_EQ(SimulationState(g, line, {}).total_event_rate(), (g.z_plus + g.z_minus) * 10.0);
}

TEST(TotalEventRate, MatchesPointwiseSumsForEveryPreset)
{
    std::mt19937_64 rng(4);
    const TorusDomain plane(2, 5.0);
    for (const Preset& p : default_presets())
        for (const TorusDomain* dom : {&line, &plane})
            for (int trial = 0; trial < 5; ++trial) {
                const auto cfg = oracle::random_configuration(*dom, 20, 20, rng);
                const double ref = brute_total(p.model, cfg, *dom);
                EXPECT_NEAR(total_event_rate(p.model, cfg, *dom), ref, 1e-9 * ref) << p.name;
                EXPECT_NEAR(SimulationState(p.model, *dom, cfg).total_event_rate(), ref, 1e-9 * ref) << p.name;
            }
}

TEST(SimulationState, IncrementalCachesStayConsistent)
{
    std::mt19937_64 rng(5);
    for (const Preset& p : default_presets()) {
        SimulationState state(p.model, line, oracle::random_configuration(line, 10, 10, rng));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int step = 0; step < 400; ++step) {
            const Species s = u(rng) < 0.5 ? Species::plus : Species::minus;
            if (u(rng) < 0.5 || state.count(s) == 0) {
                state.insert(s, oracle::random_point(line, rng));
            } else {
                state.remove(s, static_cast<std::size_t>(u(rng) * state.count(s)) % state.count(s));
            }
            if (step % 50 == 0) {
                EXPECT_LE(state.cache_discrepancy(), 1e-9) << p.name;
                const auto cfg = state.configuration();
                const double ref = brute_total(p.model, cfg, line);
                EXPECT_NEAR(state.total_event_rate(), ref, 1e-9 * std::max(1.0, ref)) << p.name;
                for (Species sp : {Species::plus, Species::minus})
                    for (std::size_t i = 0; i < state.count(sp); ++i)
                        EXPECT_NEAR(state.death_rate(sp, i), death_of(p.model, sp, cfg, i, line), 1e-9);
            }
        }
        state.resync();
        EXPECT_LE(state.cache_discrepancy(), 1e-12);
    }
}

// ---------------------------------------------------------------------------
// simulate

TEST(Simulate, ZeroRatesLeaveConfigurationUnchanged)
{
    std::mt19937_64 gen(6);
    BdlpPair m;  // all rates zero
    const auto init = oracle::random_configuration(line, 5, 7, gen);
    Rng rng(6);
    const auto res = simulate(m, line, init, 3.0, {0.0, 1.5, 3.0}, rng);
    EXPECT_EQ(res.events, 0u);
    EXPECT_EQ(res.final_configuration, init);
    ASSERT_EQ(res.trajectory.snapshots.size(), 3u);
    for (const auto& s : res.trajectory.snapshots) {
        EXPECT_EQ(s.n_plus, 5u);
        EXPECT_EQ(s.n_minus, 7u);
    }
}

TEST(Simulate, PureDeathFollowsExponentialLaw)
{
    const BdlpPair m = immigration_death(0.0, 1.0);
    TwoSpeciesConfiguration init;
    for (int i = 0; i < 100; ++i) init.minus.push_back(line.point({0.1 * i}));
    std::vector<double> counts;
    for (int r = 0; r < 200; ++r) {
        Rng rng = make_stream(7, {static_cast<std::uint64_t>(r)});
        const auto res = simulate(m, line, init, 1.0, {1.0}, rng);
        counts.push_back(static_cast<double>(res.trajectory.snapshots.back().n_minus));
        EXPECT_EQ(res.births, 0u);
    }
    const double p = std::exp(-1.0);
    EXPECT_NEAR(mean_of(counts), 100 * p, 3 * std::sqrt(100 * p * (1 - p) / 200));
}

TEST(Simulate, ImmigrationDeathIsStationaryPoisson)
{
    const BdlpPair m = immigration_death(2.0, 1.0);  // mean z|L| / m = 20
    SimulationOptions opt;
    opt.statistics_start = 20.0;
    std::vector<double> means, ratios;
    for (int r = 0; r < 16; ++r) {
        Rng rng = make_stream(8, {static_cast<std::uint64_t>(r)});
        const auto res = simulate(m, line, {}, 120.0, {}, rng, opt);
        const auto& o = res.occupation;
        ASSERT_NEAR(o.duration, 100.0, 1e-9);
        const double mean = o.minus / o.duration;
        means.push_back(mean);
        ratios.push_back((o.minus_sq / o.duration - mean * mean) / mean);
    }
    EXPECT_NEAR(mean_of(means), 20.0, 3 * std::sqrt(variance_of(means) / means.size()));
    EXPECT_GT(mean_of(ratios), 0.85);
    EXPECT_LT(mean_of(ratios), 1.15);
}

TEST(Simulate, SameSeedGivesIdenticalRuns)
{
    for (const Preset& p : default_presets()) {
        const ScaledModel sm = apply_vlasov_scaling(p.model, 3);
        Rng a(9), b(9);
        const auto init = init_poisson(line, 0.6, 0.6, a);
        (void)init_poisson(line, 0.6, 0.6, b);
        SimulationOptions opt;
        opt.record_configurations = true;
        const auto ra = simulate(sm, line, init, 1.0, {0.5, 1.0}, a, opt);
        const auto rb = simulate(sm, line, init, 1.0, {0.5, 1.0}, b, opt);
        EXPECT_EQ(ra.final_configuration, rb.final_configuration) << p.name;
        EXPECT_EQ(ra.events, rb.events);
        EXPECT_TRUE(disjoint(ra.final_configuration));
        EXPECT_EQ(ra.trajectory.snapshots.back().configuration, ra.final_configuration);
    }
}

TEST(Simulate, ObserverSnapshotsMatchRecordedConfigurations)
{
    Rng rng(10);
    SimulationOptions opt;
    opt.record_configurations = true;
    const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto res = simulate(apply_vlasov_scaling(default_bdlp_pair(), 2), line, {}, 1.0, times, rng, opt);
    ASSERT_EQ(res.trajectory.snapshots.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto& s = res.trajectory.snapshots[i];
        EXPECT_EQ(s.time, times[i]);
        ASSERT_TRUE(s.configuration.has_value());
        EXPECT_EQ(s.n_plus, s.configuration->plus.size());
        EXPECT_EQ(s.n_minus, s.configuration->minus.size());
    }
    EXPECT_EQ(res.events, res.births + res.deaths + res.rejections);
}

TEST(Simulate, BadArgumentsAndExplosionGuard)
{
    Rng rng(11);
    const BdlpPair m = immigration_death(100.0, 0.0);
    EXPECT_THROW(simulate(m, line, {}, 0.0, {}, rng), UsageError);
    EXPECT_THROW(simulate(m, line, {}, 1.0, {0.5, 0.5}, rng), UsageError);
    EXPECT_THROW(simulate(m, line, {}, 1.0, {2.0}, rng), UsageError);
    SimulationOptions opt;
    opt.max_particles = 50;
    EXPECT_THROW(simulate(m, line, {}, 10.0, {}, rng, opt), SimulationError);
}

// ---------------------------------------------------------------------------
// observables

TEST(DensityField, EmptyAndSingleParticle)
{
    std::vector<TwoSpeciesConfiguration> snaps(3);
    auto f = estimate_density_field(snaps, 10, line);
    for (double v : f.plus) EXPECT_EQ(v, 0.0);
    TwoSpeciesConfiguration one;
    one.minus = {line.point({4.5})};
    f = estimate_density_field(std::span(&one, 1), 10, line);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(f.minus[i], i == 4 ? 1.0 : 0.0);
}

TEST(DensityField, PoissonDataAveragesToIntensity)
{
    Rng rng(12);
    std::vector<TwoSpeciesConfiguration> snaps;
    for (int i = 0; i < 2000; ++i) snaps.push_back(init_poisson(line, 2.0, 0.0, rng));
    const auto f = estimate_density_field(snaps, 5, line);
    // per cell: count ~ Poisson(4), mean over 2000 snapshots / cell volume 2
    for (double v : f.plus) EXPECT_NEAR(v, 2.0, 3.5 * std::sqrt(4.0 / 2000) / 2.0);
    double mass = 0.0;
    for (double v : f.plus) mass += v * 2.0;
    double total = 0.0;
    for (const auto& c : snaps) total += c.plus.size();
    EXPECT_NEAR(mass, total / 2000, 1e-9);
}

TEST(PairCorrelation, Examples)
{
    const std::vector<double> edges{0.0, 0.5, 1.0, 1.5, 2.0};
    TwoSpeciesConfiguration single;
    single.plus = {line.point({1.0})};
    for (const auto& b : estimate_pair_correlation(std::span(&single, 1), Species::plus, Species::plus, edges, line))
        EXPECT_EQ(b.value, 0.0);

    TwoSpeciesConfiguration two;
    two.plus = {line.point({1.0})};
    two.minus = {line.point({9.8})};  // distance 1.2 through the boundary
    const auto g = estimate_pair_correlation(std::span(&two, 1), Species::plus, Species::minus, edges, line);
    for (std::size_t k = 0; k < g.size(); ++k)
        EXPECT_DOUBLE_EQ(g[k].value, k == 2 ? 1.0 / (10.0 * 1.0) : 0.0);

    EXPECT_THROW((void)estimate_pair_correlation(std::span(&two, 1), Species::plus, Species::minus,
                                                 std::vector<double>{0.0, 6.0}, line),
                 UsageError);
}

TEST(PairCorrelation, PoissonIsFlatAtIntensitySquared)
{
    Rng rng(13);
    std::vector<TwoSpeciesConfiguration> snaps;
    for (int i = 0; i < 2000; ++i) snaps.push_back(init_poisson(line, 2.0, 1.0, rng));
    const std::vector<double> edges{0.0, 1.0, 2.0, 3.0, 4.0};
    for (const auto& b : estimate_pair_correlation(snaps, Species::plus, Species::plus, edges, line))
        EXPECT_NEAR(b.value, 4.0, 0.15);
    for (const auto& b : estimate_pair_correlation(snaps, Species::plus, Species::minus, edges, line))
        EXPECT_NEAR(b.value, 2.0, 0.1);
}
