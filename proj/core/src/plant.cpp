#include "ferroservo/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace ferroservo {

void PlantParams::validate() const {
    if (!(lag_tau_s >= 0.0)) {
        throw std::invalid_argument("lag_tau must be non-negative");
    }
    if (!(drift_rms_mm_s >= 0.0)) {
        throw std::invalid_argument("drift_rms must be non-negative");
    }
    if (drift_rms_mm_s > 0.0 && !(drift_corr_time_s > 0.0)) {
        throw std::invalid_argument("drift correlation time must be positive");
    }
}

Plant::Plant(WorkspaceConfig cfg, VelocityModel model, PlantParams params, ParticleState initial)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      params_(params),
      state_(std::move(initial)),
      rng_(params.seed) {
    cfg_.validate();
    model_.validate();
    params_.validate();
    if (params_.drift_rms_mm_s > 0.0) {
        // Start from the stationary distribution so statistics hold from tick 0.
        const double sigma = params_.drift_rms_mm_s / std::sqrt(2.0);
        drift_.x = sigma * normal_(rng_);
        drift_.y = sigma * normal_(rng_);
    }
    state_.velocity = actuation_ + drift_;
}

const ParticleState& Plant::step(ActuationPattern pattern, double current_a, double dt_s) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("plant step needs dt > 0");
    }
    const Vec2 commanded = superposed_velocity(state_.position, pattern, cfg_, model_, current_a);
    const double keep = lag_retention(dt_s, params_.lag_tau_s);
    actuation_ = commanded + (actuation_ - commanded) * keep;

    if (params_.drift_rms_mm_s > 0.0) {
        const double phi = std::exp(-dt_s / params_.drift_corr_time_s);
        const double sigma = params_.drift_rms_mm_s / std::sqrt(2.0) * std::sqrt(1.0 - phi * phi);
        const double nx = normal_(rng_);
        const double ny = normal_(rng_);
        drift_ = drift_ * phi + Vec2{sigma * nx, sigma * ny};
    }

    state_.velocity = actuation_ + drift_;
    state_.position += state_.velocity * dt_s;

    const double r = norm(state_.position);
    if (r > cfg_.workspace_radius_mm) {
        state_.position *= cfg_.workspace_radius_mm / r;
    }
    return state_;
}

void Plant::place(const Vec2& position) {
    state_.position = position;
    actuation_ = Vec2{};
    state_.velocity = drift_;
}

void Plant::set_model(VelocityModel model) {
    model.validate();
    model_ = std::move(model);
}

}  // namespace ferroservo
