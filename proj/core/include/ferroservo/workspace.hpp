#pragma once

#include "ferroservo/vec2.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace ferroservo {

inline constexpr std::size_t kSolenoidCount = 8;

enum class SolenoidClass { Short, Long };

std::string_view to_string(SolenoidClass cls);
SolenoidClass solenoid_class_from_string(std::string_view text);

struct SolenoidSpec {
    int index{0};
    double angle_rad{0.0};         // tip azimuth in the workspace plane
    double tip_radius_mm{5.1};     // centre to tip-axis intersection with the fluid plane
    SolenoidClass cls{SolenoidClass::Short};
    double gain{1.0};
    double inclination_rad{kPi / 4.0};
};

/// Linear supply line I = slope * V + offset.
struct SupplyMap {
    double slope_a_per_v{0.0};
    double offset_a{0.0};
    double min_volts{0.0};
    double max_volts{6.0};
};

/// On-axis field magnitude B(d) = b0 * (d0 / d)^exponent.
struct FieldFalloff {
    double b0_mT{100.0};
    double d0_mm{1.0};
    double exponent{3.0};

    /// Field at distance `d_mm` from the tip, in mT. Throws on d_mm <= 0.
    double field_mT(double d_mm) const;
    void validate() const;
};

struct WorkspaceConfig {
    std::array<SolenoidSpec, kSolenoidCount> solenoids{};
    double workspace_radius_mm{4.0};
    double tick_rate_hz{30.0};
    double current_ref_a{1.43};
    SupplyMap supply{};
    FieldFalloff falloff{};
    double tip_height_mm{0.75};  // metadata; planar kinematics never read it

    double tick_seconds() const { return 1.0 / tick_rate_hz; }
    double min_tip_radius() const;
    bool contains(const Vec2& p) const;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;
};

/// Supply line through (2 V, 0.47 A) and (6 V, 1.4 A).
SupplyMap default_supply_map();

/// Eight solenoids at 45 degree steps, alternating Short/Long, 5.1 mm tips.
WorkspaceConfig default_rig();

Vec2 tip_projection(const SolenoidSpec& coil);

/// Throws std::domain_error outside [min_volts, max_volts].
double voltage_to_current(const WorkspaceConfig& cfg, double volts);
double current_to_voltage(const WorkspaceConfig& cfg, double amps);

/// Rig overrides: `solenoids[] {angle_deg, tip_radius_mm, class, gain}`,
/// `workspace_radius_mm`, `tick_rate_hz`, `current_ref_a`. Missing keys keep
/// their default_rig() values. Throws std::invalid_argument on bad input.
WorkspaceConfig rig_from_json(std::string_view json_text);
WorkspaceConfig load_rig(const std::filesystem::path& file);
std::string rig_to_json(const WorkspaceConfig& cfg);

}  // namespace ferroservo
