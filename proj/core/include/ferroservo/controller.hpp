#pragma once

#include "ferroservo/actuation_pattern.hpp"
#include "ferroservo/velocity_model.hpp"
#include "ferroservo/workspace.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace ferroservo {

struct ControllerWeights {
    double alpha{0.4145};
    double beta{0.2685};
    double gamma{0.0001};      // mm^2, scales 1/|PT|^2 with |PT| in mm
    double deadband_mm{0.05};
    double lookahead_mm{0.2};
    double reach_mm{0.1};      // radius at which a held path corner counts as reached

    void validate() const;
};

using SolenoidVectors = std::array<Vec2, kSolenoidCount>;

struct ServoScene {
    Vec2 particle{};
    Vec2 target{};
    SolenoidVectors expected_velocities{};
};

/// Expected per-solenoid velocity at P: speed from `model` along the unit
/// vector from each tip projection to P, scaled by class gain, solenoid gain
/// and c(I). Throws std::domain_error when P sits on a tip projection.
SolenoidVectors expected_velocities(const Vec2& particle, const WorkspaceConfig& cfg,
                                    const VelocityModel& model, double current_a);

ServoScene make_scene(const Vec2& particle, const Vec2& target, const WorkspaceConfig& cfg,
                      const VelocityModel& model, double current_a);

struct Projection {
    double parallel{};
    double perpendicular{};
};

/// Scalar projections of `v` on PT/|PT| and on its +90 degree rotation.
/// Throws std::domain_error for P == T.
Projection project(const Vec2& v, const Vec2& particle, const Vec2& target);

/// c_i = alpha v_par,i - beta |v_perp,i| - gamma / |PT|^2.
std::array<double, kSolenoidCount> pattern_coefficients(const ServoScene& scene,
                                                        const ControllerWeights& w);

/// J(S) = sum_i c_i S_i, summed in solenoid order.
double objective(const ServoScene& scene, const ControllerWeights& w, ActuationPattern pattern);

/// Maximiser of J over the 256 patterns. J is separable, so solenoid i is ON
/// exactly when c_i > 0. Inside the deadband the result is all-OFF.
ActuationPattern solve_pattern(const ServoScene& scene, const ControllerWeights& w);

/// Exhaustive check of solve_pattern: evaluates all 256 patterns; ties go to
/// fewer ON bits, then to the lower integer encoding.
ActuationPattern enumerate_oracle(const ServoScene& scene, const ControllerWeights& w);

/// Carrot-point manager for a sampled reference path.
///
/// Keeps a monotone index of the nearest sample passed so far and returns the
/// farthest sample within `lookahead` arc length of it. The carrot is held at
/// the next corner (turn sharper than `corner_angle`) until the particle is
/// within `reach` of that corner or the nearest index passes it.
class WaypointTracker {
public:
    WaypointTracker() = default;
    WaypointTracker(std::vector<Vec2> samples, double lookahead_mm, double reach_mm,
                    double corner_angle_rad = 0.5235987755982988);

    /// Updates the index for particle position `p` and returns the carrot.
    Vec2 advance(const Vec2& p);

    std::size_t index() const { return index_; }
    std::size_t carrot_index() const { return carrot_; }
    bool empty() const { return samples_.empty(); }
    bool at_final_sample() const { return !samples_.empty() && carrot_ + 1 == samples_.size(); }
    const std::vector<Vec2>& samples() const { return samples_; }
    const std::vector<std::size_t>& corners() const { return corners_; }
    Vec2 carrot() const { return samples_.at(carrot_); }
    Vec2 final_sample() const { return samples_.back(); }

private:
    std::size_t next_corner_after(std::size_t i) const;
    double arc(std::size_t i) const { return arc_[i]; }

    std::vector<Vec2> samples_;
    std::vector<double> arc_;
    std::vector<std::size_t> corners_;
    double lookahead_mm_{0.2};
    double reach_mm_{0.1};
    std::size_t index_{0};
    std::size_t carrot_{0};
};

}  // namespace ferroservo
