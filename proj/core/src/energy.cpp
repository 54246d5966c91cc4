#include "ferroservo/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace ferroservo::energy {

void FluidProperties::validate() const {
    if (!(surface_tension_n_m > 0.0)) {
        throw std::invalid_argument("surface tension must be positive");
    }
    if (!(density_kg_m3 > 0.0)) {
        throw std::invalid_argument("fluid density must be positive");
    }
    if (!(susceptibility_chi_l >= 0.0)) {
        throw std::invalid_argument("liquid susceptibility must be non-negative");
    }
}

void ParticleProperties::validate() const {
    if (!(volume_m3 >= 0.0) || !(immersed_volume_m3 >= 0.0)) {
        throw std::invalid_argument("particle volumes must be non-negative");
    }
    if (!allow_immersed_excess && immersed_volume_m3 > volume_m3) {
        throw std::invalid_argument("immersed volume exceeds particle volume");
    }
}

ParticleProperties pe_sphere(double diameter_m, double particle_density,
                             const FluidProperties& fluid) {
    const double r = 0.5 * diameter_m;
    ParticleProperties p;
    p.volume_m3 = 4.0 / 3.0 * 3.14159265358979323846 * r * r * r;
    p.immersed_volume_m3 = 0.5 * p.volume_m3;
    p.susceptibility_chi_p = -1e-5;
    p.effective_mass_kg = particle_density * p.volume_m3 - fluid.density_kg_m3 * p.immersed_volume_m3;
    p.adsorption_energy_j = -fluid.surface_tension_n_m * 3.14159265358979323846 * r * r;
    return p;
}

double DeformationField::height(double rho) const {
    return height_m * std::exp(-rho * rho / (2.0 * width_m * width_m));
}

double DeformationField::slope(double rho) const {
    return -rho / (width_m * width_m) * height(rho);
}

double DeformationField::second_derivative(double rho) const {
    const double w2 = width_m * width_m;
    return (rho * rho / (w2 * w2) - 1.0 / w2) * height(rho);
}

double capillary_length(const FluidProperties& fluid, double gravity) {
    if (!(fluid.surface_tension_n_m > 0.0) || !(fluid.density_kg_m3 > 0.0) || !(gravity > 0.0)) {
        throw std::invalid_argument("capillary length needs positive tension, density and gravity");
    }
    return std::sqrt(fluid.surface_tension_n_m / (fluid.density_kg_m3 * gravity));
}

double EnergyParams::capillary_length() const {
    return capillary_length_m ? *capillary_length_m : energy::capillary_length(fluid, gravity);
}

double mean_curvature(const DeformationField& def, double rho) {
    const double r = std::abs(rho);
    // For the Gaussian, u'/rho = -u/w^2 is regular on the axis, where it
    // equals u''(0).
    const double slope_over_rho = -def.height(r) / (def.width_m * def.width_m);
    return 0.5 * (def.second_derivative(r) + slope_over_rho);
}

double field_tesla(const EnergyParams& params, double rho) {
    if (!params.field_enabled) {
        return 0.0;
    }
    const double d_m = std::hypot(rho, params.tip_height_m);
    return 1e-3 * params.falloff.field_mT(d_m * 1e3);
}

double total_energy(const EnergyParams& params, double rho) {
    const double r = std::abs(rho);
    const auto& p = params.particle;
    const double l = params.capillary_length();
    const double gravito_capillary =
        p.effective_mass_kg * params.gravity *
        (params.deformation.height(r) + l * l * mean_curvature(params.deformation, r));
    const double b = field_tesla(params, r);
    const double magnetic = (params.fluid.susceptibility_chi_l * p.immersed_volume_m3 -
                             p.susceptibility_chi_p * p.volume_m3) *
                            b * b / params.fluid.mu0;
    return p.adsorption_energy_j + gravito_capillary - magnetic;
}

double radial_force(const EnergyParams& params, double rho, double step) {
    const double h = step > 0.0 ? step : params.deformation.width_m / 1000.0;
    auto central = [&](double dh) {
        return (total_energy(params, rho + dh) - total_energy(params, rho - dh)) / (2.0 * dh);
    };
    const double coarse = central(h);
    const double fine = central(0.5 * h);
    return -(4.0 * fine - coarse) / 3.0;
}

std::vector<EnergySample> energy_sweep(const EnergyParams& params, double rho_max, int count) {
    if (count < 2 || !(rho_max > 0.0)) {
        throw std::invalid_argument("energy sweep needs rho_max > 0 and at least two samples");
    }
    std::vector<EnergySample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double rho = rho_max * static_cast<double>(i) / static_cast<double>(count - 1);
        EnergySample s;
        s.rho_m = rho;
        s.u_m = params.deformation.height(rho);
        s.h_per_m = mean_curvature(params.deformation, rho);
        s.b_t = field_tesla(params, rho);
        s.e_j = total_energy(params, rho);
        s.f_n = radial_force(params, rho);
        out.push_back(s);
    }
    return out;
}

}  // namespace ferroservo::energy
