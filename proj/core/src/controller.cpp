#include "ferroservo/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ferroservo {

void ControllerWeights::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) {
        throw std::invalid_argument("controller weights must be non-negative");
    }
    if (!(deadband_mm > 0.0)) {
        throw std::invalid_argument("deadband must be positive");
    }
    if (!(lookahead_mm > 0.0)) {
        throw std::invalid_argument("lookahead must be positive");
    }
    if (!(reach_mm >= 0.0)) {
        throw std::invalid_argument("corner reach must be non-negative");
    }
}

SolenoidVectors expected_velocities(const Vec2& particle, const WorkspaceConfig& cfg,
                                    const VelocityModel& model, double current_a) {
    SolenoidVectors out{};
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        out[i] = solenoid_velocity(particle, cfg.solenoids[i], model, current_a);
    }
    return out;
}

ServoScene make_scene(const Vec2& particle, const Vec2& target, const WorkspaceConfig& cfg,
                      const VelocityModel& model, double current_a) {
    return ServoScene{particle, target, expected_velocities(particle, cfg, model, current_a)};
}

Projection project(const Vec2& v, const Vec2& particle, const Vec2& target) {
    const Vec2 pt = target - particle;
    const double len = norm(pt);
    if (!(len > 0.0)) {
        throw std::domain_error("projection needs distinct particle and target");
    }
    const Vec2 along = pt / len;
    return {dot(v, along), dot(v, perp(along))};
}

std::array<double, kSolenoidCount> pattern_coefficients(const ServoScene& scene,
                                                        const ControllerWeights& w) {
    const double len = distance(scene.particle, scene.target);
    if (!(len > 0.0)) {
        throw std::domain_error("coefficients need distinct particle and target");
    }
    const double proximity = w.gamma / (len * len);
    std::array<double, kSolenoidCount> c{};
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        const Projection pr = project(scene.expected_velocities[i], scene.particle, scene.target);
        c[i] = w.alpha * pr.parallel - w.beta * std::abs(pr.perpendicular) - proximity;
    }
    return c;
}

double objective(const ServoScene& scene, const ControllerWeights& w, ActuationPattern pattern) {
    const auto c = pattern_coefficients(scene, w);
    double j = 0.0;
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        if (pattern.on(i)) {
            j += c[i];
        }
    }
    return j;
}

ActuationPattern solve_pattern(const ServoScene& scene, const ControllerWeights& w) {
    if (distance(scene.particle, scene.target) <= w.deadband_mm) {
        return ActuationPattern::all_off();
    }
    const auto c = pattern_coefficients(scene, w);
    ActuationPattern out;
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        out.set(i, c[i] > 0.0);
    }
    return out;
}

ActuationPattern enumerate_oracle(const ServoScene& scene, const ControllerWeights& w) {
    if (distance(scene.particle, scene.target) <= w.deadband_mm) {
        return ActuationPattern::all_off();
    }
    const auto c = pattern_coefficients(scene, w);
    ActuationPattern best;
    double best_j = 0.0;  // J of the empty pattern
    for (unsigned code = 1; code < 256; ++code) {
        const ActuationPattern candidate{static_cast<std::uint8_t>(code)};
        double j = 0.0;
        for (std::size_t i = 0; i < kSolenoidCount; ++i) {
            if (candidate.on(i)) {
                j += c[i];
            }
        }
        // Codes ascend, so on equal J and equal popcount the earlier code wins.
        if (j > best_j || (j == best_j && candidate.count() < best.count())) {
            best = candidate;
            best_j = j;
        }
    }
    return best;
}

WaypointTracker::WaypointTracker(std::vector<Vec2> samples, double lookahead_mm, double reach_mm,
                                 double corner_angle_rad)
    : samples_(std::move(samples)), lookahead_mm_(lookahead_mm), reach_mm_(reach_mm) {
    if (samples_.empty()) {
        throw std::invalid_argument("reference path has no samples");
    }
    if (!(lookahead_mm_ > 0.0)) {
        throw std::invalid_argument("lookahead must be positive");
    }
    arc_.resize(samples_.size(), 0.0);
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        arc_[i] = arc_[i - 1] + distance(samples_[i - 1], samples_[i]);
    }
    for (std::size_t i = 1; i + 1 < samples_.size(); ++i) {
        const Vec2 a = samples_[i] - samples_[i - 1];
        const Vec2 b = samples_[i + 1] - samples_[i];
        if (norm(a) == 0.0 || norm(b) == 0.0) {
            continue;
        }
        const double turn = std::abs(std::atan2(cross(a, b), dot(a, b)));
        if (turn > corner_angle_rad) {
            corners_.push_back(i);
        }
    }
}

std::size_t WaypointTracker::next_corner_after(std::size_t i) const {
    const auto it = std::upper_bound(corners_.begin(), corners_.end(), i);
    return it == corners_.end() ? samples_.size() - 1 : *it;
}

Vec2 WaypointTracker::advance(const Vec2& p) {
    const std::size_t last = samples_.size() - 1;

    // Nearest sample in a forward window; the index never moves backwards.
    const double window = 2.0 * lookahead_mm_ + reach_mm_;
    std::size_t nearest = index_;
    double best = distance(p, samples_[index_]);
    for (std::size_t j = index_ + 1; j <= last && arc(j) - arc(index_) <= window; ++j) {
        const double d = distance(p, samples_[j]);
        if (d < best) {
            best = d;
            nearest = j;
        }
    }
    std::size_t corner = next_corner_after(index_);
    // Do not let the nearest-sample search skip past a held corner.
    index_ = std::min(std::max(index_, nearest), corner);
    // The final sample is reached by progression only; on closed paths it
    // coincides with the start.
    if (corner < last && distance(p, samples_[corner]) <= reach_mm_) {
        index_ = corner;
    }
    corner = next_corner_after(index_);

    std::size_t carrot = index_;
    while (carrot < corner && arc(carrot + 1) - arc(index_) <= lookahead_mm_ + 1e-9) {
        ++carrot;
    }
    carrot_ = carrot;
    return samples_[carrot_];
}

}  // namespace ferroservo
