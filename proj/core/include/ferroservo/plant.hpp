#pragma once

#include "ferroservo/actuation_pattern.hpp"
#include "ferroservo/velocity_model.hpp"
#include "ferroservo/workspace.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace ferroservo {

struct ParticleState {
    Vec2 position{};   // mm
    Vec2 velocity{};   // mm/s, actuation plus drift
    double diameter_mm{0.55};
    std::string label{"PE"};
};

struct PlantParams {
    double lag_tau_s{0.1};
    double drift_rms_mm_s{0.05};
    double drift_corr_time_s{2.0};
    std::uint64_t seed{1};

    void validate() const;
};

/// Planar particle on the deformed interface. Owns its random stream, so a
/// single instance must be stepped by one caller at a time.
///
/// Each step:
///   commanded  = superposed_velocity(position, pattern)
///   actuation  = commanded + (actuation - commanded) * exp(-dt / lag_tau)
///   drift      = Ornstein-Uhlenbeck update with stationary RMS drift_rms
///   position  += dt * (actuation + drift), clamped to the workspace disk
class Plant {
public:
    Plant(WorkspaceConfig cfg, VelocityModel model, PlantParams params, ParticleState initial);

    const ParticleState& step(ActuationPattern pattern, double current_a, double dt_s);

    const ParticleState& state() const { return state_; }
    const Vec2& drift_velocity() const { return drift_; }
    const Vec2& actuation_velocity() const { return actuation_; }
    const WorkspaceConfig& config() const { return cfg_; }
    const VelocityModel& model() const { return model_; }
    const PlantParams& params() const { return params_; }

    /// Moves the particle and zeroes its actuation velocity; the random
    /// stream and drift state carry on.
    void place(const Vec2& position);

    void set_model(VelocityModel model);

private:
    WorkspaceConfig cfg_;
    VelocityModel model_;
    PlantParams params_;
    ParticleState state_;
    Vec2 actuation_{};
    Vec2 drift_{};
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ferroservo
