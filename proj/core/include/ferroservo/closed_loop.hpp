#pragma once

#include "ferroservo/controller.hpp"
#include "ferroservo/plant.hpp"
#include "ferroservo/vision.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ferroservo {

enum class MeasureMode { Oracle, Vision };
enum class LoopMode { Idle, ServoToPoint, FollowPath, Hold };

std::string_view to_string(MeasureMode mode);
MeasureMode measure_mode_from_string(std::string_view text);
std::string_view to_string(LoopMode mode);

struct LoopConfig {
    WorkspaceConfig rig{default_rig()};
    VelocityModel controller_model{make_velocity_model()};
    VelocityModel plant_model{make_velocity_model()};
    PlantParams plant{};
    ControllerWeights weights{};
    double current_a{1.43};
    MeasureMode measure{MeasureMode::Oracle};
    CameraModel camera{default_camera(5.0)};
};

struct LogRow {
    std::uint64_t tick{0};
    double t_s{0.0};
    Vec2 position{};                 // true particle position
    std::optional<Vec2> measured{};  // what the controller saw
    std::optional<Vec2> target{};
    ActuationPattern pattern{};
    LoopMode mode{LoopMode::Idle};
    bool paused{false};
    double err_mm{0.0};
    double commanded_speed_mm_s{0.0};
};

struct LogMetadata {
    std::uint64_t seed{0};
    ControllerWeights weights{};
    std::string preset{"unit"};
    double current_a{0.0};
    std::string path{};
    MeasureMode measure{MeasureMode::Oracle};
};

struct TrajectoryLog {
    LogMetadata meta{};
    double dt_s{1.0 / 30.0};
    bool completed{false};
    std::vector<LogRow> rows;

    std::vector<Vec2> positions() const;
};

/// One plant plus controller advancing in fixed ticks. The harness and the
/// HTTP service both drive this class, so their runs agree tick for tick.
///
/// Each tick: measure (oracle or rendered frame), update the mode and pick
/// the target, solve the pattern, log the row for time k*dt, then step the
/// plant by dt. Commands issued between ticks take effect on the next tick.
class ClosedLoop {
public:
    ClosedLoop(LoopConfig cfg, const Vec2& start);

    /// Throws std::domain_error for a point outside the workspace.
    void set_target(const Vec2& target);
    /// Throws std::invalid_argument for an empty path and std::domain_error
    /// for samples outside the workspace.
    void set_path(std::vector<Vec2> samples);
    void set_idle();
    void pause() { paused_ = true; }
    void resume() { paused_ = false; }
    /// Re-places the particle and returns to idle; time keeps running.
    void reset(const Vec2& start);

    void set_current(double current_a);
    void set_weights(const ControllerWeights& weights);
    /// Replaces both models, e.g. after a gain preset change.
    void set_models(const VelocityModel& controller_model, const VelocityModel& plant_model);

    LogRow tick();

    LoopMode mode() const { return mode_; }
    bool paused() const { return paused_; }
    bool path_completed() const { return path_completed_; }
    std::uint64_t tick_count() const { return ticks_; }
    double time_s() const { return static_cast<double>(ticks_) * dt_; }
    double dt_s() const { return dt_; }
    std::optional<Vec2> target() const { return target_; }
    const WaypointTracker& tracker() const { return tracker_; }
    const Plant& plant() const { return plant_; }
    const LoopConfig& config() const { return cfg_; }

private:
    void check_inside(const Vec2& p) const;

    LoopConfig cfg_;
    Plant plant_;
    double dt_;
    std::mt19937_64 camera_rng_;
    std::optional<Vec2> last_measured_{};
    LoopMode mode_{LoopMode::Idle};
    bool paused_{false};
    bool path_completed_{false};
    std::optional<Vec2> target_{};
    std::vector<Vec2> path_;
    WaypointTracker tracker_{};
    std::uint64_t ticks_{0};
};

}  // namespace ferroservo
