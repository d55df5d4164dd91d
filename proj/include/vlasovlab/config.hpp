#pragma once

// Experiment configuration: a single JSON document with every field explicit.
// Unknown fields are rejected; errors name the offending field by its path.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"
#include "vlasovlab/kinetic.hpp"
#include "vlasovlab/models.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace vlasovlab {

using json = nlohmann::json;

enum class Mode { simulate, kinetic, sweep, validate };
enum class OutputFormat { csv, json };

struct ExperimentConfig {
    TorusDomain domain{1, 10.0};
    ModelSpec model = GlauberPair{};
    Mode mode = Mode::simulate;
    /// One value for a constant density, or one per cell of the comparison grid.
    std::vector<double> rho_plus{0.0};
    std::vector<double> rho_minus{0.0};
    double t_end = 1.0;
    double t_eval = 1.0;
    double dt = 0.01;
    int grid = 16;
    /// Kinetic solutions are computed on grid * kinetic_refine cells per axis
    /// and block-averaged onto the comparison grid.
    int kinetic_refine = 1;
    /// Spacing of observer times; 0 records t = 0 and t_end only.
    double observer_dt = 0.0;
    std::vector<int> scaling{1};
    int replicas = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    OutputFormat format = OutputFormat::csv;
    double alpha = 0.0;
    double beta = 0.0;
    ConditionSet condition_set = ConditionSet::evolution;
    BranchingFactor branching_factor = BranchingFactor::at_offspring;
    std::size_t max_particles = 1'000'000;
    /// Worker threads for replicas; 0 uses the hardware concurrency.
    int threads = 0;
    /// When false, wall-clock fields are written as 0 so outputs are byte-reproducible.
    bool record_timing = true;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// Enumerations as strings

inline const char* to_string(Mode m)
{
    switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::kinetic: return "kinetic";
    case Mode::sweep: return "sweep";
    case Mode::validate: return "validate";
    }
    return "?";
}

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }
inline const char* to_string(ConditionSet c) { return c == ConditionSet::evolution ? "evolution" : "vlasov"; }
inline const char* to_string(BranchingFactor b)
{
    return b == BranchingFactor::at_offspring ? "at_offspring" : "at_parent";
}

inline const char* to_string(KernelShape s)
{
    switch (s) {
    case KernelShape::zero: return "zero";
    case KernelShape::tophat: return "tophat";
    case KernelShape::truncated_gaussian: return "truncated_gaussian";
    }
    return "?";
}

namespace detail {

template <class E, std::size_t N>
E parse_enum(const std::string& field, const std::string& value, const std::array<E, N>& all)
{
    std::string allowed;
    for (E e : all) {
        if (value == to_string(e)) return e;
        allowed += allowed.empty() ? "" : ", ";
        allowed += to_string(e);
    }
    throw ConfigError(field, "unknown value '" + value + "' (expected one of " + allowed + ")");
}

/// Reads fields of one JSON object and rejects the ones never read.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
        return j_.at(key);
    }

    double number(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : touch(key, fallback); }

    long long integer(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : touch(key, fallback); }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback)
    {
        if (!has(key)) return touch(key, fallback);
        const json& v = raw(key);
        if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) return touch(key, fallback);
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback)
    {
        return has(key) ? string(key) : touch(key, fallback);
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }

private:
    template <class T>
    T touch(const std::string& key, T v)
    {
        seen_.insert(key);
        return v;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernels and models

inline json kernel_to_json(const Kernel& k)
{
    switch (k.shape()) {
    case KernelShape::zero: return {{"shape", "zero"}};
    case KernelShape::tophat: return {{"shape", "tophat"}, {"amplitude", k.amplitude()}, {"radius", k.cutoff()}};
    case KernelShape::truncated_gaussian:
        return {{"shape", "truncated_gaussian"},
                {"amplitude", k.amplitude()},
                {"width", k.width()},
                {"cutoff", k.cutoff()}};
    }
    return {};
}

inline Kernel kernel_from_json(const json& j, const std::string& path)
{
    detail::ObjectReader r(j, path);
    const std::string shape = r.string("shape");
    Kernel k;
    try {
        if (shape == "zero") {
            k = Kernel::zero();
        } else if (shape == "tophat") {
            const double a = r.number("amplitude");
            k = Kernel::tophat(a, r.number("radius"));
        } else if (shape == "truncated_gaussian") {
            const double a = r.number("amplitude");
            const double w = r.number("width");
            k = Kernel::truncated_gaussian(a, w, r.number("cutoff"));
        } else {
            throw ConfigError(r.field("shape"),
                              "unknown kernel shape '" + shape + "' (expected zero, tophat or truncated_gaussian)");
        }
    } catch (const UsageError& e) {
        throw ConfigError(path, e.what());
    }
    r.finish();
    return k;
}

inline json model_to_json(const ModelSpec& m)
{
    json j;
    j["variant"] = variant_name(m);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BdlpPair>) {
                j["m_plus"] = v.m_plus;
                j["m_minus"] = v.m_minus;
                j["compete_minus"] = kernel_to_json(v.compete_minus);
                j["branch_minus"] = kernel_to_json(v.branch_minus);
                j["compete_plus"] = kernel_to_json(v.compete_plus);
                j["branch_plus"] = kernel_to_json(v.branch_plus);
                j["cross_death"] = kernel_to_json(v.cross_death);
                j["cross_birth"] = kernel_to_json(v.cross_birth);
                j["z"] = v.z;
                j["witness"] = {{"theta1", v.witness.theta1}, {"theta2", v.witness.theta2},
                                {"theta3", v.witness.theta3}, {"b1", v.witness.b1},
                                {"b2", v.witness.b2}};
            } else if constexpr (std::is_same_v<T, GlauberPair>) {
                j["s"] = v.s;
                j["z_plus"] = v.z_plus;
                j["z_minus"] = v.z_minus;
                j["psi_plus"] = kernel_to_json(v.psi_plus);
                j["psi_minus"] = kernel_to_json(v.psi_minus);
                j["phi_plus"] = kernel_to_json(v.phi_plus);
                j["phi_minus"] = kernel_to_json(v.phi_minus);
            } else if constexpr (std::is_same_v<T, BdlpInGlauber>) {
                j["m_plus"] = v.m_plus;
                j["a_minus"] = kernel_to_json(v.a_minus);
                j["a_plus"] = kernel_to_json(v.a_plus);
                j["phi"] = kernel_to_json(v.phi);
                j["b_plus"] = kernel_to_json(v.b_plus);
                j["psi"] = kernel_to_json(v.psi);
                j["z_minus"] = v.z_minus;
                j["witness"] = {{"theta", v.witness.theta}, {"vartheta", v.witness.vartheta}, {"b", v.witness.b}};
            } else {
                j["m_plus"] = v.m_plus;
                j["phi_plus"] = kernel_to_json(v.phi_plus);
                j["phi_minus"] = kernel_to_json(v.phi_minus);
                j["psi_minus"] = kernel_to_json(v.psi_minus);
                j["a_plus"] = kernel_to_json(v.a_plus);
                j["z_minus"] = v.z_minus;
                j["witness"] = {{"vartheta", v.witness.vartheta}, {"b", v.witness.b}};
            }
        },
        m);
    return j;
}

inline ModelSpec model_from_json(const json& j, const std::string& path = "model")
{
    detail::ObjectReader r(j, path);
    const std::string variant = r.string("variant");
    auto kernel = [&](const char* key) {
        return r.has(key) ? kernel_from_json(r.raw(key), r.field(key)) : Kernel::zero();
    };
    ModelSpec out;
    if (variant == "bdlp_pair") {
        BdlpPair m;
        m.m_plus = r.number("m_plus", 0.0);
        m.m_minus = r.number("m_minus", 0.0);
        m.compete_minus = kernel("compete_minus");
        m.branch_minus = kernel("branch_minus");
        m.compete_plus = kernel("compete_plus");
        m.branch_plus = kernel("branch_plus");
        m.cross_death = kernel("cross_death");
        m.cross_birth = kernel("cross_birth");
        m.z = r.number("z", 0.0);
        if (r.has("witness")) {
            detail::ObjectReader w(r.raw("witness"), r.field("witness"));
            m.witness.theta1 = w.number("theta1", 1.0);
            m.witness.theta2 = w.number("theta2", 1.0);
            m.witness.theta3 = w.number("theta3", 1.0);
            m.witness.b1 = w.number("b1", 0.0);
            m.witness.b2 = w.number("b2", 0.0);
            w.finish();
        }
        out = m;
    } else if (variant == "glauber_pair") {
        GlauberPair m;
        m.s = r.number("s", 0.0);
        m.z_plus = r.number("z_plus", 0.0);
        m.z_minus = r.number("z_minus", 0.0);
        m.psi_plus = kernel("psi_plus");
        m.psi_minus = kernel("psi_minus");
        m.phi_plus = kernel("phi_plus");
        m.phi_minus = kernel("phi_minus");
        out = m;
    } else if (variant == "bdlp_in_glauber") {
        BdlpInGlauber m;
        m.m_plus = r.number("m_plus", 0.0);
        m.a_minus = kernel("a_minus");
        m.a_plus = kernel("a_plus");
        m.phi = kernel("phi");
        m.b_plus = kernel("b_plus");
        m.psi = kernel("psi");
        m.z_minus = r.number("z_minus", 0.0);
        if (r.has("witness")) {
            detail::ObjectReader w(r.raw("witness"), r.field("witness"));
            m.witness.theta = w.number("theta", 1.0);
            m.witness.vartheta = w.number("vartheta", 1.0);
            m.witness.b = w.number("b", 0.0);
            w.finish();
        }
        out = m;
    } else if (variant == "density_branching") {
        DensityBranching m;
        m.m_plus = r.number("m_plus", 0.0);
        m.phi_plus = kernel("phi_plus");
        m.phi_minus = kernel("phi_minus");
        m.psi_minus = kernel("psi_minus");
        m.a_plus = kernel("a_plus");
        m.z_minus = r.number("z_minus", 0.0);
        if (r.has("witness")) {
            detail::ObjectReader w(r.raw("witness"), r.field("witness"));
            m.witness.vartheta = w.number("vartheta", 1.0);
            m.witness.b = w.number("b", 0.0);
            w.finish();
        }
        out = m;
    } else {
        throw ConfigError(r.field("variant"), "unknown model variant '" + variant +
                                                  "' (expected bdlp_pair, glauber_pair, bdlp_in_glauber or "
                                                  "density_branching)");
    }
    r.finish();
    return out;
}

// ---------------------------------------------------------------------------
// Whole configuration

inline json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["domain"] = {{"dim", c.domain.dim()}, {"side_length", c.domain.side_length()}};
    j["model"] = model_to_json(c.model);
    j["mode"] = to_string(c.mode);
    auto density = [](const std::vector<double>& v) { return v.size() == 1 ? json(v.front()) : json(v); };
    j["initial"] = {{"rho_plus", density(c.rho_plus)}, {"rho_minus", density(c.rho_minus)}};
    j["t_end"] = c.t_end;
    j["t_eval"] = c.t_eval;
    j["dt"] = c.dt;
    j["grid"] = c.grid;
    j["kinetic_refine"] = c.kinetic_refine;
    j["observer_dt"] = c.observer_dt;
    j["scaling"] = c.scaling;
    j["replicas"] = c.replicas;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["format"] = to_string(c.format);
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["condition_set"] = to_string(c.condition_set);
    j["branching_factor"] = to_string(c.branching_factor);
    j["max_particles"] = c.max_particles;
    j["threads"] = c.threads;
    j["record_timing"] = c.record_timing;
    return j;
}

inline void validate_config(const ExperimentConfig& c)
{
    try {
        validate_model(c.model, &c.domain);
    } catch (const UsageError& e) {
        throw ConfigError("model", e.what());
    }
    if (!(c.t_end > 0.0)) throw ConfigError("t_end", "must be > 0");
    if (!(c.t_eval > 0.0 && c.t_eval <= c.t_end)) throw ConfigError("t_eval", "must lie in (0, t_end]");
    if (!(c.dt > 0.0)) throw ConfigError("dt", "must be > 0");
    if (c.grid < 1) throw ConfigError("grid", "must be >= 1");
    if (c.kinetic_refine < 1) throw ConfigError("kinetic_refine", "must be >= 1");
    if (!(c.observer_dt >= 0.0)) throw ConfigError("observer_dt", "must be >= 0");
    if (c.scaling.empty()) throw ConfigError("scaling", "must list at least one n");
    for (int n : c.scaling)
        if (n < 1) throw ConfigError("scaling", "every n must be >= 1");
    if (c.replicas < 1) throw ConfigError("replicas", "must be >= 1");
    if (c.max_particles < 1) throw ConfigError("max_particles", "must be >= 1");
    if (c.threads < 0) throw ConfigError("threads", "must be >= 0");
    std::size_t cells = 1;
    for (int a = 0; a < c.domain.dim(); ++a) cells *= static_cast<std::size_t>(c.grid);
    for (const auto* v : {&c.rho_plus, &c.rho_minus}) {
        const char* name = v == &c.rho_plus ? "initial.rho_plus" : "initial.rho_minus";
        if (v->size() != 1 && v->size() != cells)
            throw ConfigError(name, "must be a number or an array with grid^dim = " + std::to_string(cells) + " entries");
        for (double x : *v)
            if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(name, "densities must be finite and >= 0");
    }
    if (c.mode == Mode::kinetic || c.mode == Mode::sweep) {
        try {
            require_kinetic_support(c.model);
        } catch (const UnsupportedVariant& e) {
            throw ConfigError("model.s", e.what());
        }
    }
}

inline ExperimentConfig config_from_json(const json& j)
{
    detail::ObjectReader r(j, "");
    ExperimentConfig c;
    {
        detail::ObjectReader d(r.raw("domain"), "domain");
        const long long dim = d.integer("dim");
        const double side = d.number("side_length");
        try {
            c.domain = TorusDomain(static_cast<int>(dim), side);
        } catch (const UsageError& e) {
            throw ConfigError("domain", e.what());
        }
        d.finish();
    }
    c.model = model_from_json(r.raw("model"));
    c.mode = detail::parse_enum("mode", r.string("mode"),
                                std::array{Mode::simulate, Mode::kinetic, Mode::sweep, Mode::validate});
    if (r.has("initial")) {
        detail::ObjectReader in(r.raw("initial"), "initial");
        auto density = [&](const char* key) -> std::vector<double> {
            if (!in.has(key)) return {0.0};
            const json& v = in.raw(key);
            if (v.is_number()) return {v.get<double>()};
            if (!v.is_array() || v.empty()) throw ConfigError(in.field(key), "expected a number or a non-empty array");
            std::vector<double> out;
            for (const json& x : v) {
                if (!x.is_number()) throw ConfigError(in.field(key), "array entries must be numbers");
                out.push_back(x.get<double>());
            }
            return out;
        };
        c.rho_plus = density("rho_plus");
        c.rho_minus = density("rho_minus");
        in.finish();
    }
    c.t_end = r.number("t_end", c.t_end);
    c.t_eval = r.number("t_eval", c.t_end);
    c.dt = r.number("dt", c.dt);
    c.grid = static_cast<int>(r.integer("grid", c.grid));
    c.kinetic_refine = static_cast<int>(r.integer("kinetic_refine", c.kinetic_refine));
    c.observer_dt = r.number("observer_dt", c.observer_dt);
    if (r.has("scaling")) {
        const json& s = r.raw("scaling");
        if (!s.is_array()) throw ConfigError("scaling", "expected an array of integers");
        c.scaling.clear();
        for (const json& x : s) {
            if (!x.is_number_integer()) throw ConfigError("scaling", "expected an array of integers");
            c.scaling.push_back(x.get<int>());
        }
    }
    c.replicas = static_cast<int>(r.integer("replicas", c.replicas));
    c.seed = r.unsigned_integer("seed", c.seed);
    c.output_dir = r.string("output_dir", c.output_dir);
    c.format = detail::parse_enum("format", r.string("format", to_string(c.format)),
                                  std::array{OutputFormat::csv, OutputFormat::json});
    c.alpha = r.number("alpha", c.alpha);
    c.beta = r.number("beta", c.beta);
    c.condition_set = detail::parse_enum("condition_set", r.string("condition_set", to_string(c.condition_set)),
                                         std::array{ConditionSet::evolution, ConditionSet::vlasov});
    c.branching_factor =
        detail::parse_enum("branching_factor", r.string("branching_factor", to_string(c.branching_factor)),
                           std::array{BranchingFactor::at_offspring, BranchingFactor::at_parent});
    const long long maxp = r.integer("max_particles", static_cast<long long>(c.max_particles));
    if (maxp < 1) throw ConfigError("max_particles", "must be >= 1");
    c.max_particles = static_cast<std::size_t>(maxp);
    c.threads = static_cast<int>(r.integer("threads", c.threads));
    c.record_timing = r.boolean("record_timing", c.record_timing);
    r.finish();
    validate_config(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace vlasovlab
