#pragma once

#include "ferroservo/actuation_pattern.hpp"
#include "ferroservo/vec2.hpp"
#include "ferroservo/workspace.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace ferroservo {

/// Distance dependence of the single-solenoid actuation speed (mm/s).
///   Inverse:       c1 / rho + c0
///   Linear:        c1 * rho + c0
///   InverseSquare: c1 / rho^2 + c0
///   Tabulated:     linear interpolation of `table` on a uniform rho grid,
///                  used for plant laws identified by calibrate_plant_model().
enum class LawKind { Inverse, Linear, InverseSquare, Tabulated };

struct DistanceLaw {
    LawKind kind{LawKind::Inverse};
    double c1{3.17};
    double c0{0.03};
    double table_rho0_mm{0.0};
    double table_step_mm{0.0};
    std::vector<double> table;
    // Outside the table the speed follows `tail_law` rescaled to be continuous
    // at the table ends.
    LawKind tail_kind{LawKind::Inverse};
    double tail_c1{3.17};
    double tail_c0{0.03};

    double speed(double rho_mm) const;
};

DistanceLaw inverse_law();        // 3.17/rho + 0.03
DistanceLaw linear_law();         // -0.16 rho + 1.54
DistanceLaw inverse_square_law(); // 6.02/rho^2 + 0.40

enum class GainPreset { Unit, Fig2d };

std::string_view to_string(GainPreset preset);
GainPreset gain_preset_from_string(std::string_view text);

struct VelocityModel {
    DistanceLaw law{};
    double current_slope{0.66};    // (mm/s)/A
    double current_offset{-0.05};  // mm/s
    double reference_current_a{1.43};
    double gain_short{1.0};
    double gain_long{1.0};

    double class_gain(SolenoidClass cls) const {
        return cls == SolenoidClass::Short ? gain_short : gain_long;
    }
    void validate() const;
};

VelocityModel make_velocity_model(GainPreset preset = GainPreset::Unit,
                                  DistanceLaw law = inverse_law());

inline constexpr double kMinActuationDistanceMm = 0.1;

/// c(I): current scaling normalised to 1 at the reference current, clamped at 0.
double current_scale(const VelocityModel& model, double current_a);

/// g_class * c(I) * law(rho). Distances below 0.1 mm use the 0.1 mm value.
/// Throws std::domain_error for rho <= 0 or current < 0.
double actuation_speed(const VelocityModel& model, double rho_mm, SolenoidClass cls,
                       double current_a);

/// Velocity contribution of one solenoid on a particle at `position`.
/// The solenoid's own gain multiplies the class gain.
Vec2 solenoid_velocity(const Vec2& position, const SolenoidSpec& coil,
                       const VelocityModel& model, double current_a);

/// Vector sum of the ON solenoids' repulsive velocities.
Vec2 superposed_velocity(const Vec2& position, ActuationPattern pattern,
                         const WorkspaceConfig& cfg, const VelocityModel& model,
                         double current_a);

struct CalibrationOptions {
    double window_s{1.0};
    double fit_min_mm{2.0};   // below ~1.8 mm the mean law cannot be realised by any plant
    double fit_max_mm{11.0};
    double fit_step_mm{0.05};
    double table_step_mm{0.01};
    int max_evaluations{2000};
    double tolerance{1e-12};
};

struct CalibrationReport {
    int evaluations{0};
    double max_residual_mm_s{0.0};
    std::array<double, 4> coefficients{};  // a, b, c, d of a/rho + b/rho^2 + c/rho^3 + d
};

/// Identifies an instantaneous plant law whose mean speed over the first
/// `window_s` after a step actuation from rest (first-order lag `lag_tau_s`,
/// explicit Euler at `dt_s`) reproduces `observed.law` as a function of the
/// starting distance. The law is fitted in the family
/// a/rho + b/rho^2 + c/rho^3 + d by Levenberg-Marquardt over the fit range and
/// tabulated there; outside it the observed law's shape is scaled to stay
/// continuous. Current scaling and gains are copied from `observed`.
VelocityModel calibrate_plant_model(const VelocityModel& observed, double lag_tau_s,
                                    double dt_s, const CalibrationOptions& options = {},
                                    CalibrationReport* report = nullptr);

/// First-second mean speed of a particle starting at rest at `rho0_mm` from a
/// single solenoid, simulated in one dimension with the plant's integrator.
double simulated_mean_speed(const DistanceLaw& law, double rho0_mm, double lag_tau_s,
                            double dt_s, double window_s = 1.0, double scale = 1.0);

/// Blend factor exp(-dt/tau) of the first-order lag, 0 when tau == 0.
double lag_retention(double dt_s, double lag_tau_s);

}  // namespace ferroservo
