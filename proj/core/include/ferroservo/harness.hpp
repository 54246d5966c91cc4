#pragma once

#include "ferroservo/closed_loop.hpp"
#include "ferroservo/metrics.hpp"
#include "ferroservo/path.hpp"

#include <string_view>
#include <vector>

namespace ferroservo {

/// How the simulated plant realises the fitted distance law.
///   Calibrated: an instantaneous law identified so that the first-second
///               mean speed through the lagged plant reproduces the fit.
///   Direct:     the fitted law used as the instantaneous speed.
enum class PlantLaw { Calibrated, Direct };

std::string_view to_string(PlantLaw law);
PlantLaw plant_law_from_string(std::string_view text);

struct TrialSetup {
    WorkspaceConfig rig{default_rig()};
    GainPreset preset{GainPreset::Unit};
    PlantParams plant{};
    ControllerWeights weights{};
    double current_a{1.43};
    MeasureMode measure{MeasureMode::Oracle};
    CameraModel camera{default_camera(5.0)};
    PlantLaw plant_law{PlantLaw::Calibrated};
    double timeout_s{120.0};
    double placement_error_mm{0.0};  // radius of the random start offset
};

/// Controller model for the preset and the matching plant model.
VelocityModel controller_model_for(const TrialSetup& setup);
VelocityModel plant_model_for(const TrialSetup& setup);

LoopConfig make_loop_config(const TrialSetup& setup);

/// Partial weight overrides {alpha, beta, gamma, deadband_mm, lookahead_mm,
/// reach_mm} on top of `base`. Throws std::invalid_argument on unknown keys,
/// wrong types or invalid values.
ControllerWeights weights_from_json(std::string_view json_text, ControllerWeights base = {});

/// Overrides on top of `base`: seed, current_a, preset, rig (see
/// rig_from_json), plant {lag_tau_s, drift_rms_mm_s, drift_corr_time_s},
/// weights, measure, camera_sigma, plant_law, timeout_s, placement_error_mm.
/// Throws std::invalid_argument on unknown keys or invalid values.
TrialSetup trial_setup_from_json(std::string_view json_text, TrialSetup base = {});

/// Servoes along `path` from its first sample until the final sample is
/// reached within the deadband or the timeout elapses (log.completed false).
TrajectoryLog run_path_trial(const ReferencePath& path, const TrialSetup& setup);

/// Starts at `point`, servoes to it and holds for `duration_s`.
TrajectoryLog run_hold_trial(const Vec2& point, double duration_s, const TrialSetup& setup);

/// `reps` trials with seeds setup.plant.seed, +1, ... run in parallel and
/// returned in seed order.
std::vector<TrajectoryLog> run_path_batch(const ReferencePath& path, const TrialSetup& setup,
                                          int reps);
std::vector<TrajectoryLog> run_hold_batch(const Vec2& point, double duration_s,
                                          const TrialSetup& setup, int reps);

/// Error and velocity statistics pooled over every tick of every log.
PathStats pooled_stats(const std::vector<TrajectoryLog>& logs);

struct SweepRow {
    double distance_mm{0.0};
    double mean_speed_mm_s{0.0};
    double std_speed_mm_s{0.0};
    std::vector<double> speeds;  // one per repetition
};

/// For each distance, places the particle that far from solenoid `solenoid`
/// on the line through its tip and the centre, switches only that solenoid
/// on and reports the mean speed over the first second.
std::vector<SweepRow> open_loop_sweep(const TrialSetup& setup, const std::vector<double>& distances,
                                      int reps, int solenoid = 0);

}  // namespace ferroservo
