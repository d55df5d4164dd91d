#pragma once

// Experiment orchestration: replica pools, Vlasov scaling sweeps comparing
// rescaled empirical densities with kinetic solutions, single runs, and the
// command-line entry point.

#include "vlasovlab/combinatorics.hpp"
#include "vlasovlab/config.hpp"
#include "vlasovlab/convolution.hpp"
#include "vlasovlab/errors.hpp"
#include "vlasovlab/io.hpp"
#include "vlasovlab/kinetic.hpp"
#include "vlasovlab/kmc.hpp"
#include "vlasovlab/models.hpp"
#include "vlasovlab/observables.hpp"
#include "vlasovlab/presets.hpp"
#include "vlasovlab/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace vlasovlab {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int conditions_failed = 2;
inline constexpr int usage = 64;
inline constexpr int config = 65;
inline constexpr int software = 70;
inline constexpr int io = 74;
}  // namespace exit_code

/// Runs body(i) for i in [0, count) on up to `threads` workers (0: hardware
/// concurrency). The first exception by index is rethrown after all workers finish.
template <class F>
void parallel_for(int count, int threads, F&& body)
{
    if (count <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Shared pieces

inline GridSpec comparison_grid(const ExperimentConfig& cfg) { return GridSpec(cfg.domain, cfg.grid); }

/// Initial density of one species as a per-cell vector on the comparison grid.
inline std::vector<double> initial_profile(const ExperimentConfig& cfg, Species s)
{
    const auto& v = s == Species::plus ? cfg.rho_plus : cfg.rho_minus;
    const std::size_t n = comparison_grid(cfg).cell_count();
    return v.size() == 1 ? std::vector<double>(n, v.front()) : v;
}

/// Observer times: multiples of observer_dt up to t_end, plus t_end; {0, t_end} when observer_dt is 0.
inline std::vector<double> observer_times(const ExperimentConfig& cfg)
{
    std::vector<double> t{0.0};
    if (cfg.observer_dt > 0.0)
        for (long i = 1;; ++i) {
            const double ti = static_cast<double>(i) * cfg.observer_dt;
            if (ti >= cfg.t_end * (1.0 - 1e-12)) break;
            t.push_back(ti);
        }
    t.push_back(cfg.t_end);
    return t;
}

namespace detail {

inline std::size_t coarse_index(const GridSpec& fine, const GridSpec& coarse, std::size_t i, int refine)
{
    const auto ii = fine.cell_indices(i);
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int a = 0; a < fine.domain.dim(); ++a) {
        idx += static_cast<std::size_t>(ii[a] / refine) * stride;
        stride *= static_cast<std::size_t>(coarse.cells_per_axis);
    }
    return idx;
}

}  // namespace detail

struct KineticReference {
    std::vector<KineticState> states;  ///< on the comparison grid
    std::size_t clipped = 0;
};

/// Integrates the unscaled kinetic system on the refined grid from the
/// configured initial densities and block-averages onto the comparison grid.
inline KineticReference kinetic_reference(const ExperimentConfig& cfg, const std::vector<double>& times)
{
    const GridSpec coarse = comparison_grid(cfg);
    const int refine = cfg.kinetic_refine;
    const GridSpec fine(cfg.domain, cfg.grid * refine);
    KineticState s0{fine, std::vector<double>(fine.cell_count()), std::vector<double>(fine.cell_count()), 0.0};
    const auto p0 = initial_profile(cfg, Species::plus);
    const auto m0 = initial_profile(cfg, Species::minus);
    for (std::size_t i = 0; i < fine.cell_count(); ++i) {
        const std::size_t c = detail::coarse_index(fine, coarse, i, refine);
        s0.plus[i] = p0[c];
        s0.minus[i] = m0[c];
    }
    KineticOptions opt;
    opt.branching_factor = cfg.branching_factor;
    const double t_last = times.empty() ? cfg.t_end : times.back();
    const KineticRun run = integrate(cfg.model, s0, t_last, cfg.dt, times, opt);
    KineticReference ref;
    ref.clipped = run.clipped;
    const double w = 1.0 / std::pow(static_cast<double>(refine), cfg.domain.dim());
    for (const KineticState& f : run.outputs) {
        KineticState c{coarse, std::vector<double>(coarse.cell_count(), 0.0),
                       std::vector<double>(coarse.cell_count(), 0.0), f.time};
        for (std::size_t i = 0; i < fine.cell_count(); ++i) {
            const std::size_t k = detail::coarse_index(fine, coarse, i, refine);
            c.plus[k] += w * f.plus[i];
            c.minus[k] += w * f.minus[i];
        }
        ref.states.push_back(std::move(c));
    }
    return ref;
}

/// Poisson initial configuration with intensities n * rho0 for scale n.
template <class R>
TwoSpeciesConfiguration initial_configuration(const ExperimentConfig& cfg, int n, R& rng)
{
    if (cfg.rho_plus.size() == 1 && cfg.rho_minus.size() == 1)
        return init_poisson(cfg.domain, n * cfg.rho_plus.front(), n * cfg.rho_minus.front(), rng);
    auto p = initial_profile(cfg, Species::plus);
    auto m = initial_profile(cfg, Species::minus);
    for (double& v : p) v *= n;
    for (double& v : m) v *= n;
    return init_poisson_profile(cfg.domain, cfg.grid, p, m, rng);
}

/// ||a - b||_2 / ||b||_2 over cells, or the absolute distance when b vanishes.
inline double relative_l2(const std::vector<double>& a, const std::vector<double>& b)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// Scaling sweep

struct ConvergenceRow {
    int n = 1;
    int replicas = 0;
    double t_eval = 0.0;
    double err_minus = 0.0;
    double err_plus = 0.0;
    double se_minus = 0.0;
    double se_plus = 0.0;
    double wall_s = 0.0;
};

struct ReplicaRecord {
    int n = 1;
    int replica = 0;
    bool ok = true;
    std::uint64_t events = 0;
    std::uint64_t births = 0;
    std::uint64_t deaths = 0;
    std::uint64_t rejections = 0;
    std::size_t n_plus = 0;  ///< counts at t_eval
    std::size_t n_minus = 0;
    double wall_s = 0.0;
    std::string message;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::vector<std::vector<ReplicaRecord>> replicas;  ///< per row
    KineticReference kinetic;

    Table table() const
    {
        Table t({"n", "replicas", "t_eval", "err_minus", "err_plus", "se_minus", "se_plus", "wall_s"});
        for (const auto& r : rows)
            t.add_row({static_cast<double>(r.n), static_cast<double>(r.replicas), r.t_eval, r.err_minus, r.err_plus,
                       r.se_minus, r.se_plus, r.wall_s});
        return t;
    }
};

inline Table replica_table(const std::vector<ReplicaRecord>& recs)
{
    Table t({"n", "replica", "ok", "events", "births", "deaths", "rejections", "n_plus", "n_minus", "wall_s"});
    for (const auto& r : recs)
        t.add_row({static_cast<double>(r.n), static_cast<double>(r.replica), r.ok ? 1.0 : 0.0,
                   static_cast<double>(r.events), static_cast<double>(r.births), static_cast<double>(r.deaths),
                   static_cast<double>(r.rejections), static_cast<double>(r.n_plus), static_cast<double>(r.n_minus),
                   r.wall_s});
    return t;
}

struct RunOptions {
    bool quiet = true;
    bool write_files = true;
    int bootstrap_samples = 200;
};

namespace detail {

inline void log(const RunOptions& opt, const std::string& msg)
{
    if (!opt.quiet) std::cerr << msg << '\n';
}

}  // namespace detail

/// For each n: simulate the scaled model from Poisson(n rho0) initial data,
/// average the density field at t_eval over replicas, divide by n and compare
/// with the unscaled kinetic solution. Standard errors are replica bootstraps.
inline ConvergenceTable run_scaling_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    validate_config(cfg);
    require_kinetic_support(cfg.model);
    ConvergenceTable out;
    out.kinetic = kinetic_reference(cfg, {cfg.t_eval});
    if (out.kinetic.clipped) detail::log(opt, "warning: kinetic reference clipped " +
                                                  std::to_string(out.kinetic.clipped) + " negative values");
    const KineticState& ref = out.kinetic.states.back();
    const GridSpec grid = comparison_grid(cfg);
    const std::size_t cells = grid.cell_count();
    const auto R = static_cast<std::size_t>(cfg.replicas);

    for (std::size_t k = 0; k < cfg.scaling.size(); ++k) {
        const int n = cfg.scaling[k];
        const ModelSpec eff = effective_model(apply_vlasov_scaling(cfg.model, n));
        std::vector<ReplicaRecord> recs(R);
        std::vector<std::vector<double>> plus(R), minus(R);
        parallel_for(cfg.replicas, cfg.threads, [&](int r) {
            const auto t0 = std::chrono::steady_clock::now();
            ReplicaRecord& rec = recs[static_cast<std::size_t>(r)];
            rec.n = n;
            rec.replica = r;
            Rng rng = make_stream(cfg.seed, {k, static_cast<std::uint64_t>(r)});
            SimulationOptions sopt;
            sopt.max_particles = cfg.max_particles;
            sopt.record_configurations = true;
            try {
                const auto init = initial_configuration(cfg, n, rng);
                const auto res = simulate(eff, cfg.domain, init, cfg.t_end, {cfg.t_eval}, rng, sopt);
                const Snapshot& snap = res.trajectory.snapshots.back();
                DensityField f = estimate_density_field(std::span(&*snap.configuration, 1), cfg.grid, cfg.domain);
                for (double& v : f.plus) v /= n;
                for (double& v : f.minus) v /= n;
                plus[static_cast<std::size_t>(r)] = std::move(f.plus);
                minus[static_cast<std::size_t>(r)] = std::move(f.minus);
                rec.events = res.events;
                rec.births = res.births;
                rec.deaths = res.deaths;
                rec.rejections = res.rejections;
                rec.n_plus = snap.n_plus;
                rec.n_minus = snap.n_minus;
            } catch (const SimulationError& e) {
                rec.ok = false;
                rec.message = e.what();
            }
            if (cfg.record_timing)
                rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        });

        std::vector<std::size_t> good;
        for (std::size_t r = 0; r < R; ++r) {
            if (recs[r].ok)
                good.push_back(r);
            else
                detail::log(opt, "warning: n=" + std::to_string(n) + " replica " + std::to_string(r) +
                                     " aborted: " + recs[r].message);
        }
        if (good.empty())
            throw SimulationError("run_scaling_sweep: every replica aborted at n=" + std::to_string(n) + " (" +
                                  recs.front().message + ")");

        auto error_of = [&](const std::vector<std::size_t>& sample) {
            std::vector<double> mp(cells, 0.0), mm(cells, 0.0);
            for (std::size_t r : sample)
                for (std::size_t i = 0; i < cells; ++i) {
                    mp[i] += plus[r][i];
                    mm[i] += minus[r][i];
                }
            const double w = 1.0 / static_cast<double>(sample.size());
            for (std::size_t i = 0; i < cells; ++i) {
                mp[i] *= w;
                mm[i] *= w;
            }
            return std::pair{relative_l2(mm, ref.minus), relative_l2(mp, ref.plus)};
        };

        ConvergenceRow row;
        row.n = n;
        row.replicas = static_cast<int>(good.size());
        row.t_eval = cfg.t_eval;
        std::tie(row.err_minus, row.err_plus) = error_of(good);
        Rng boot = make_stream(cfg.seed, {0xB0075742ULL, k});
        std::uniform_int_distribution<std::size_t> pick(0, good.size() - 1);
        std::vector<double> em, ep;
        std::vector<std::size_t> sample(good.size());
        for (int b = 0; b < opt.bootstrap_samples; ++b) {
            for (auto& s : sample) s = good[pick(boot)];
            const auto [a, c] = error_of(sample);
            em.push_back(a);
            ep.push_back(c);
        }
        auto sd = [](const std::vector<double>& v) {
            if (v.size() < 2) return 0.0;
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double s = 0.0;
            for (double x : v) s += (x - mean) * (x - mean);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        row.se_minus = sd(em);
        row.se_plus = sd(ep);
        for (const auto& r : recs) row.wall_s += r.wall_s;
        detail::log(opt, "n=" + std::to_string(n) + " err_minus=" + format_number(row.err_minus) +
                             " err_plus=" + format_number(row.err_plus));
        out.rows.push_back(row);
        out.replicas.push_back(std::move(recs));
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
    // keep per-row replica lists aligned with the sorted rows
    std::vector<std::size_t> order(cfg.scaling.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.scaling[a] < cfg.scaling[b]; });
    std::vector<std::vector<ReplicaRecord>> sorted;
    for (auto i : order) sorted.push_back(std::move(out.replicas[i]));
    out.replicas = std::move(sorted);
    return out;
}

// ---------------------------------------------------------------------------
// Single runs

struct RunSummary {
    int exit = exit_code::ok;
    std::vector<std::filesystem::path> files;
};

inline std::filesystem::path echo_config(const ExperimentConfig& cfg)
{
    const auto path = std::filesystem::path(cfg.output_dir) / "config.json";
    write_text_file(path, serialize_config(cfg));
    return path;
}

inline RunSummary write_sweep(const ExperimentConfig& cfg, const ConvergenceTable& table)
{
    RunSummary s;
    const std::filesystem::path dir = cfg.output_dir;
    const bool as_json = cfg.format == OutputFormat::json;
    s.files.push_back(echo_config(cfg));
    s.files.push_back(table.table().write(dir, "convergence", as_json));
    s.files.push_back(kinetic_table(table.kinetic.states).write(dir, "kinetic_reference", as_json));
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        s.files.push_back(replica_table(table.replicas[i])
                              .write(dir, "replicas_row" + std::to_string(i) + "_n" + std::to_string(table.rows[i].n),
                                     as_json));
    return s;
}

inline RunSummary run_simulate(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    const int n = cfg.scaling.front();
    const ModelSpec eff = effective_model(apply_vlasov_scaling(cfg.model, n));
    const auto times = observer_times(cfg);
    const auto R = static_cast<std::size_t>(cfg.replicas);
    std::vector<SimulationResult> results(R);
    parallel_for(cfg.replicas, cfg.threads, [&](int r) {
        Rng rng = make_stream(cfg.seed, {0, static_cast<std::uint64_t>(r)});
        SimulationOptions sopt;
        sopt.max_particles = cfg.max_particles;
        sopt.record_configurations = true;
        const auto init = initial_configuration(cfg, n, rng);
        results[static_cast<std::size_t>(r)] = simulate(eff, cfg.domain, init, cfg.t_end, times, rng, sopt);
    });
    RunSummary s;
    const std::filesystem::path dir = cfg.output_dir;
    const bool as_json = cfg.format == OutputFormat::json;
    const GridSpec grid = comparison_grid(cfg);
    s.files.push_back(echo_config(cfg));
    Table mean_traj({"t", "n_plus", "n_minus"});
    Table mean_density(field_columns(cfg.domain.dim()));
    std::vector<std::vector<double>> acc_p(times.size(), std::vector<double>(grid.cell_count(), 0.0));
    std::vector<std::vector<double>> acc_m = acc_p;
    std::vector<double> cnt_p(times.size(), 0.0), cnt_m(times.size(), 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        const auto& traj = results[r].trajectory;
        Table density(field_columns(cfg.domain.dim()));
        for (std::size_t t = 0; t < traj.snapshots.size(); ++t) {
            const Snapshot& snap = traj.snapshots[t];
            DensityField f = estimate_density_field(std::span(&*snap.configuration, 1), cfg.grid, cfg.domain);
            for (double& v : f.plus) v /= n;
            for (double& v : f.minus) v /= n;
            append_field(density, snap.time, grid, f.plus, f.minus);
            for (std::size_t i = 0; i < grid.cell_count(); ++i) {
                acc_p[t][i] += f.plus[i] / static_cast<double>(R);
                acc_m[t][i] += f.minus[i] / static_cast<double>(R);
            }
            cnt_p[t] += static_cast<double>(snap.n_plus) / static_cast<double>(R);
            cnt_m[t] += static_cast<double>(snap.n_minus) / static_cast<double>(R);
        }
        s.files.push_back(trajectory_table(traj).write(dir, "trajectory_r" + std::to_string(r), as_json));
        s.files.push_back(density.write(dir, "density_r" + std::to_string(r), as_json));
    }
    for (std::size_t t = 0; t < times.size(); ++t) {
        mean_traj.add_row({times[t], cnt_p[t], cnt_m[t]});
        append_field(mean_density, times[t], grid, acc_p[t], acc_m[t]);
    }
    s.files.push_back(mean_traj.write(dir, "trajectory_mean", as_json));
    s.files.push_back(mean_density.write(dir, "density_mean", as_json));
    detail::log(opt, "simulate: wrote " + std::to_string(s.files.size()) + " files to " + cfg.output_dir);
    return s;
}

inline RunSummary run_kinetic(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    const KineticReference ref = kinetic_reference(cfg, observer_times(cfg));
    if (ref.clipped) detail::log(opt, "warning: clipped " + std::to_string(ref.clipped) + " negative values");
    RunSummary s;
    s.files.push_back(echo_config(cfg));
    s.files.push_back(kinetic_table(ref.states).write(cfg.output_dir, "kinetic", cfg.format == OutputFormat::json));
    detail::log(opt, "kinetic: wrote " + std::to_string(s.files.size()) + " files to " + cfg.output_dir);
    return s;
}

inline RunSummary run_validate(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    const ConditionReport rep =
        validate_conditions(cfg.model, cfg.alpha, cfg.beta, cfg.domain.dim(), cfg.condition_set);
    RunSummary s;
    s.files.push_back(echo_config(cfg));
    const auto path = std::filesystem::path(cfg.output_dir) / "validate.json";
    write_text_file(path, report_to_json(rep).dump(2) + "\n");
    s.files.push_back(path);
    if (!opt.quiet) {
        for (const auto& row : rep.rows)
            std::cout << (row.pass ? "pass  " : "FAIL  ") << row.label << ": " << format_number(row.lhs) << ' '
                      << row.relation << ' ' << format_number(row.rhs) << '\n';
        std::cout << rep.theorem << ": " << (rep.pass ? "all conditions hold" : "conditions violated") << '\n';
    }
    s.exit = rep.pass ? exit_code::ok : exit_code::conditions_failed;
    return s;
}

/// Dispatches on cfg.mode and writes the output files.
inline RunSummary run_single(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    validate_config(cfg);
    switch (cfg.mode) {
    case Mode::simulate: return run_simulate(cfg, opt);
    case Mode::kinetic: return run_kinetic(cfg, opt);
    case Mode::validate: return run_validate(cfg, opt);
    case Mode::sweep: {
        const auto table = run_scaling_sweep(cfg, opt);
        return write_sweep(cfg, table);
    }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Self test

/// Exact combinatorics and convolution equivalence checks; true when all pass.
inline bool run_selftest(std::ostream& os)
{
    bool all = true;
    auto report = [&](const std::string& name, bool ok) {
        os << (ok ? "ok    " : "FAIL  ") << name << '\n';
        all = all && ok;
    };

    const TorusDomain line(1, 10.0);
    Rng rng(20240611ULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    {
        bool ok = true;
        for (int np = 0; np <= 3; ++np)
            for (int nm = 0; nm + np <= 5; ++nm) {
                TwoSpeciesConfiguration eta;
                for (int i = 0; i < np; ++i) eta.plus.push_back(line.point({0.5 + i}));
                for (int i = 0; i < nm; ++i) eta.minus.push_back(line.point({0.25 + i}));
                const double a = u(rng), b = u(rng);
                auto g = [&](const TwoSpeciesConfiguration& c) {
                    return a * static_cast<double>(c.plus.size()) + b * static_cast<double>(c.minus.size() * c.minus.size()) + 0.5;
                };
                auto kg = [&](const TwoSpeciesConfiguration& c) { return k_transform(g, c); };
                ok = ok && std::abs(k_inverse(kg, eta) - g(eta)) <= 1e-12 * std::max(1.0, std::abs(g(eta)));
                auto fp = [&](const Point& p) { return a * p.x[0]; };
                auto fm = [&](const Point&) { return b; };
                auto fp1 = [&](const Point& p) { return 1.0 + fp(p); };
                auto fm1 = [&](const Point& p) { return 1.0 + fm(p); };
                double sum = 0.0;
                for (const auto& xi : enumerate_subconfigurations(eta)) sum += lp_exponential(fp, fm, xi);
                ok = ok && std::abs(sum - lp_exponential(fp1, fm1, eta)) <= 1e-12 * std::max(1.0, std::abs(sum));
            }
        report("K-transform round trip and exponential identity", ok);
    }
    {
        bool ok = true;
        for (int m : {16, 64, 256}) {
            const GridSpec grid(line, m);
            std::vector<double> f(grid.cell_count());
            for (double& v : f) v = u(rng) + 1.0;
            for (const Kernel& k : {Kernel::tophat(1.3, 2.0), Kernel::truncated_gaussian(0.8, 0.6, 3.0)}) {
                const auto a = convolve_periodic(f, k, grid, ConvolutionMethod::fft);
                const auto b = convolve_periodic(f, k, grid, ConvolutionMethod::direct);
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    num = std::max(num, std::abs(a[i] - b[i]));
                    den = std::max(den, std::abs(b[i]));
                }
                ok = ok && num <= 1e-10 * den;
            }
        }
        report("fast and direct periodic convolution agree", ok);
    }
    {
        bool ok = true;
        for (const Preset& p : default_presets())
            ok = ok && validate_conditions(p.model, p.alpha, p.beta).pass;
        report("default parameter sets satisfy their conditions", ok);
    }
    return all;
}

// ---------------------------------------------------------------------------
// Command line

/// Entry point of the vlasovlab executable.
inline int cli_main(int argc, char** argv)
{
    CLI::App app{"vlasovlab: two-species birth-and-death dynamics and their kinetic limits"};
    app.require_subcommand(1);
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format;
    bool quiet = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run replicas of the particle system");
    CLI::App* kinetic_cmd = app.add_subcommand("kinetic", "integrate the kinetic equations");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Vlasov scaling sweep against the kinetic solution");
    CLI::App* validate_cmd = app.add_subcommand("validate", "check parameter conditions");
    CLI::App* selftest_cmd = app.add_subcommand("selftest", "run built-in consistency checks");
    for (CLI::App* sub : {simulate_cmd, kinetic_cmd, sweep_cmd, validate_cmd}) add_common(sub);
    selftest_cmd->add_flag("--quiet", quiet, "suppress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return exit_code::usage;
    }

    if (selftest_cmd->parsed()) {
        std::ostringstream sink;
        const bool ok = run_selftest(quiet ? static_cast<std::ostream&>(sink) : std::cout);
        return ok ? exit_code::ok : exit_code::failure;
    }

    try {
        ExperimentConfig cfg = load_config(config_path);
        const std::pair<CLI::App*, Mode> modes[] = {{simulate_cmd, Mode::simulate},
                                                    {kinetic_cmd, Mode::kinetic},
                                                    {sweep_cmd, Mode::sweep},
                                                    {validate_cmd, Mode::validate}};
        for (const auto& [cmd, mode] : modes)
            if (cmd->parsed()) cfg.mode = mode;
        for (CLI::App* sub : {simulate_cmd, kinetic_cmd, sweep_cmd, validate_cmd}) {
            if (!sub->parsed()) continue;
            if (sub->count("--seed")) cfg.seed = seed;
            if (sub->count("--out")) cfg.output_dir = out_dir;
            if (sub->count("--format")) cfg.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
        }
        validate_config(cfg);
        RunOptions opt;
        opt.quiet = quiet;
        if (cfg.mode == Mode::sweep) {
            const ConvergenceTable table = run_scaling_sweep(cfg, opt);
            const RunSummary s = write_sweep(cfg, table);
            if (!quiet) std::cout << table.table().csv();
            return s.exit;
        }
        const RunSummary s = run_single(cfg, opt);
        return s.exit;
    } catch (const ConfigError& e) {
        std::cerr << "config error in field '" << e.field() << "': " << e.what() << '\n';
        return exit_code::config;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return exit_code::io;
    } catch (const UsageError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const UnsupportedVariant& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return exit_code::software;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::software;
    }
}

}  // namespace vlasovlab
