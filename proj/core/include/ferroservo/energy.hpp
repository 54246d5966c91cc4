#pragma once

#include "ferroservo/workspace.hpp"

#include <optional>
#include <vector>

namespace ferroservo::energy {

// Axisymmetric energy of a particle pinned at the deformed air-ferrofluid
// interface, in SI units throughout (m, kg, J, N, T):
//
//   E(rho) = E0 + m_e g (u(rho) + l^2 H(rho)) - (chi_L V_imm - chi_p V_p) B(rho)^2 / mu0
//
// The deformation u is a Gaussian bump and H its small-slope mean curvature.
// The module checks signs, gradients and reductions; absolute magnitudes are
// only as good as the configured bump and field.

inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;
inline constexpr double kGravity = 9.81;

struct FluidProperties {
    double surface_tension_n_m{0.07475};
    double density_kg_m3{1071.0};
    double viscosity_pa_s{0.9e-3};
    double susceptibility_chi_l{0.5};
    double mu0{kMu0};

    void validate() const;
};

struct ParticleProperties {
    double volume_m3{0.0};
    double immersed_volume_m3{0.0};
    double susceptibility_chi_p{0.0};
    double effective_mass_kg{0.0};   // buoyancy-corrected; may be negative
    double adsorption_energy_j{0.0};
    bool allow_immersed_excess{false};

    void validate() const;
};

/// Polyethylene sphere half immersed in the fluid: m_e = rho_p V_p - rho_f V_imm.
ParticleProperties pe_sphere(double diameter_m = 550e-6, double particle_density = 950.0,
                             const FluidProperties& fluid = {});

struct DeformationField {
    double height_m{1e-4};
    double width_m{1e-3};

    double height(double rho) const;            // u
    double slope(double rho) const;             // du/drho
    double second_derivative(double rho) const; // d2u/drho2
};

struct EnergyParams {
    FluidProperties fluid{};
    ParticleProperties particle{pe_sphere()};
    DeformationField deformation{};
    FieldFalloff falloff{};          // mT over mm, as configured for the rig
    double tip_height_m{0.75e-3};
    bool field_enabled{true};
    std::optional<double> capillary_length_m{};  // derived from fluid when empty
    double gravity{kGravity};

    double capillary_length() const;
};

/// sqrt(gamma / (rho_f g)). Throws std::invalid_argument on non-positive inputs.
double capillary_length(const FluidProperties& fluid, double gravity = kGravity);

/// Small-slope mean curvature (u'' + u'/rho) / 2; equals u''(0) on the axis.
double mean_curvature(const DeformationField& def, double rho);

/// Field magnitude in tesla at in-plane distance rho from the tip axis.
double field_tesla(const EnergyParams& params, double rho);

double total_energy(const EnergyParams& params, double rho);

/// F = -dE/drho by Richardson-extrapolated central differences. A zero
/// `step` means width/1000.
double radial_force(const EnergyParams& params, double rho, double step = 0.0);

struct EnergySample {
    double rho_m{};
    double u_m{};
    double h_per_m{};
    double b_t{};
    double e_j{};
    double f_n{};
};

/// `count` evenly spaced samples on [0, rho_max].
std::vector<EnergySample> energy_sweep(const EnergyParams& params, double rho_max, int count);

}  // namespace ferroservo::energy
