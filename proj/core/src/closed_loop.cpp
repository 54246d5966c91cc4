#include "ferroservo/closed_loop.hpp"

#include "ferroservo/metrics.hpp"

#include <stdexcept>

namespace ferroservo {

namespace {

// Decorrelates the camera noise stream from the plant's drift stream.
constexpr std::uint64_t kCameraSeedSalt = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::string_view to_string(MeasureMode mode) {
    return mode == MeasureMode::Vision ? "vision" : "oracle";
}

MeasureMode measure_mode_from_string(std::string_view text) {
    if (text == "oracle") return MeasureMode::Oracle;
    if (text == "vision") return MeasureMode::Vision;
    throw std::invalid_argument("unknown measurement mode: " + std::string(text));
}

std::string_view to_string(LoopMode mode) {
    switch (mode) {
        case LoopMode::Idle: return "idle";
        case LoopMode::ServoToPoint: return "servo_to_point";
        case LoopMode::FollowPath: return "follow_path";
        case LoopMode::Hold: return "hold";
    }
    return "idle";
}

std::vector<Vec2> TrajectoryLog::positions() const {
    std::vector<Vec2> out;
    out.reserve(rows.size());
    for (const LogRow& r : rows) {
        out.push_back(r.position);
    }
    return out;
}

ClosedLoop::ClosedLoop(LoopConfig cfg, const Vec2& start)
    : cfg_(std::move(cfg)),
      plant_(cfg_.rig, cfg_.plant_model, cfg_.plant, ParticleState{start, {}, 0.55, "PE"}),
      dt_(cfg_.rig.tick_seconds()),
      camera_rng_(cfg_.plant.seed ^ kCameraSeedSalt) {
    cfg_.weights.validate();
    cfg_.controller_model.validate();
    if (cfg_.measure == MeasureMode::Vision) {
        cfg_.camera.validate();
    }
    if (!(cfg_.current_a >= 0.0)) {
        throw std::invalid_argument("current must be non-negative");
    }
    check_inside(start);
}

void ClosedLoop::check_inside(const Vec2& p) const {
    if (!cfg_.rig.contains(p)) {
        throw std::domain_error("point lies outside the workspace");
    }
}

void ClosedLoop::set_target(const Vec2& target) {
    check_inside(target);
    target_ = target;
    mode_ = LoopMode::ServoToPoint;
    path_.clear();
    tracker_ = WaypointTracker{};
    path_completed_ = false;
}

void ClosedLoop::set_path(std::vector<Vec2> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("path has no samples");
    }
    for (const Vec2& p : samples) {
        check_inside(p);
    }
    tracker_ = WaypointTracker(samples, cfg_.weights.lookahead_mm, cfg_.weights.reach_mm);
    path_ = std::move(samples);
    mode_ = LoopMode::FollowPath;
    target_ = path_.front();
    path_completed_ = false;
}

void ClosedLoop::set_idle() {
    mode_ = LoopMode::Idle;
    target_.reset();
    path_.clear();
    tracker_ = WaypointTracker{};
    path_completed_ = false;
}

void ClosedLoop::reset(const Vec2& start) {
    check_inside(start);
    plant_.place(start);
    last_measured_.reset();
    set_idle();
}

void ClosedLoop::set_current(double current_a) {
    if (!(current_a >= 0.0)) {
        throw std::invalid_argument("current must be non-negative");
    }
    cfg_.current_a = current_a;
}

void ClosedLoop::set_weights(const ControllerWeights& weights) {
    weights.validate();
    cfg_.weights = weights;
}

void ClosedLoop::set_models(const VelocityModel& controller_model, const VelocityModel& plant_model) {
    controller_model.validate();
    plant_model.validate();
    cfg_.controller_model = controller_model;
    cfg_.plant_model = plant_model;
    // The plant keeps its state and random stream; only the law changes.
    plant_.set_model(plant_model);
}

LogRow ClosedLoop::tick() {
    LogRow row;
    row.tick = ticks_;
    row.t_s = time_s();
    row.position = plant_.state().position;

    std::optional<Vec2> measured;
    if (cfg_.measure == MeasureMode::Oracle) {
        measured = row.position;
    } else {
        const GrayFrame frame = render_frame(plant_.state(), cfg_.camera, camera_rng_);
        measured = detect_particle(frame, cfg_.camera);
        if (!measured) {
            measured = last_measured_;
        }
    }
    last_measured_ = measured;
    row.measured = measured;

    ActuationPattern pattern;
    if (measured) {
        const Vec2 p = *measured;
        switch (mode_) {
            case LoopMode::Idle:
                break;
            case LoopMode::ServoToPoint:
                if (distance(p, *target_) <= cfg_.weights.deadband_mm) {
                    mode_ = LoopMode::Hold;
                }
                break;
            case LoopMode::FollowPath:
                if (!paused_) {
                    target_ = tracker_.advance(p);
                    if (tracker_.at_final_sample() &&
                        distance(p, tracker_.final_sample()) <= cfg_.weights.deadband_mm) {
                        path_completed_ = true;
                        mode_ = LoopMode::Hold;
                        target_ = tracker_.final_sample();
                    }
                }
                break;
            case LoopMode::Hold:
                break;
        }
        if (target_ && mode_ != LoopMode::Idle && !paused_) {
            try {
                pattern = solve_pattern(
                    make_scene(p, *target_, cfg_.rig, cfg_.controller_model, cfg_.current_a),
                    cfg_.weights);
            } catch (const std::domain_error&) {
                // A measurement on a tip projection has no defined push; stay OFF.
                pattern = ActuationPattern::all_off();
            }
        }
    }

    row.target = mode_ == LoopMode::Idle ? std::nullopt : target_;
    row.pattern = pattern;
    row.mode = mode_;
    row.paused = paused_;
    if (!path_.empty() && (mode_ == LoopMode::FollowPath || path_completed_)) {
        row.err_mm = distance_to_polyline(row.position, path_);
    } else if (row.target) {
        row.err_mm = distance(row.position, *row.target);
    }
    row.commanded_speed_mm_s = norm(
        superposed_velocity(row.position, pattern, cfg_.rig, cfg_.controller_model, cfg_.current_a));

    plant_.step(pattern, cfg_.current_a, dt_);
    ++ticks_;
    return row;
}

}  // namespace ferroservo
