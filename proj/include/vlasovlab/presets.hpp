#pragma once

// Default parameter sets, one per model, each passing validate_conditions at
// the listed (alpha, beta) in dimension 1.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/geometry.hpp"
#include "vlasovlab/models.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace vlasovlab {

struct Preset {
    std::string name;
    ModelSpec model;
    double alpha = 0.0;
    double beta = 0.0;
};

inline BdlpPair default_bdlp_pair()
{
    BdlpPair m;
    m.m_plus = 4.0;
    m.m_minus = 3.0;
    m.compete_minus = Kernel::tophat(1.0, 0.5);
    m.branch_minus = Kernel::tophat(0.5, 0.5);
    m.compete_plus = Kernel::tophat(1.0, 0.5);
    m.branch_plus = Kernel::tophat(0.5, 0.5);
    m.cross_death = Kernel::tophat(1.0, 0.5);
    m.cross_birth = Kernel::tophat(0.5, 0.5);
    m.z = 1.0;
    m.witness = {0.5, 0.5, 0.5, 0.0, 0.0};
    return m;
}

/// Widom-Rowlinson: cross repulsion only, <psi> = 1.
inline GlauberPair default_widom_rowlinson()
{
    GlauberPair m;
    m.s = 0.0;
    m.z_plus = 0.3;
    m.z_minus = 0.3;
    m.psi_plus = Kernel::tophat(1.0, 0.5);
    m.psi_minus = Kernel::tophat(1.0, 0.5);
    return m;
}

inline BdlpInGlauber default_bdlp_in_glauber()
{
    BdlpInGlauber m;
    m.m_plus = 4.0;
    m.a_minus = Kernel::tophat(1.0, 0.5);
    m.a_plus = Kernel::tophat(0.5, 0.5);
    m.phi = Kernel::tophat(1.0, 0.5);
    m.b_plus = Kernel::tophat(0.5, 0.5);
    m.psi = Kernel::tophat(1.0, 0.5);
    m.z_minus = 0.3;
    m.witness = {0.5, 0.5, 0.0};
    return m;
}

inline DensityBranching default_density_branching()
{
    DensityBranching m;
    m.m_plus = 7.0;
    m.phi_plus = Kernel::tophat(0.01, 0.5);
    m.phi_minus = Kernel::tophat(0.5, 0.5);
    m.psi_minus = Kernel::tophat(1.0, 0.5);
    m.a_plus = Kernel::tophat(0.5, 0.5);
    m.z_minus = 0.3;
    m.witness = {50.0, 0.0};
    return m;
}

inline std::array<Preset, 4> default_presets()
{
    return {{{"bdlp_pair", default_bdlp_pair(), 0.0, 0.0},
             {"glauber_pair", default_widom_rowlinson(), 0.0, 0.0},
             {"bdlp_in_glauber", default_bdlp_in_glauber(), 0.0, 0.0},
             {"density_branching", default_density_branching(), std::log(20.0), 0.0}}};
}

inline Preset default_preset(std::string_view variant)
{
    for (Preset& p : default_presets())
        if (p.name == variant) return p;
    throw UsageError("unknown model variant '" + std::string(variant) + "'");
}

}  // namespace vlasovlab
