#include "ferroservo/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <future>
#include <random>
#include <stdexcept>

namespace ferroservo {

std::string_view to_string(PlantLaw law) {
    return law == PlantLaw::Direct ? "direct" : "calibrated";
}

PlantLaw plant_law_from_string(std::string_view text) {
    if (text == "calibrated") return PlantLaw::Calibrated;
    if (text == "direct") return PlantLaw::Direct;
    throw std::invalid_argument("unknown plant law: " + std::string(text));
}

VelocityModel controller_model_for(const TrialSetup& setup) {
    VelocityModel model = make_velocity_model(setup.preset);
    model.reference_current_a = setup.rig.current_ref_a;
    return model;
}

VelocityModel plant_model_for(const TrialSetup& setup) {
    const VelocityModel observed = controller_model_for(setup);
    if (setup.plant_law == PlantLaw::Direct) {
        return observed;
    }
    return calibrate_plant_model(observed, setup.plant.lag_tau_s, setup.rig.tick_seconds());
}

LoopConfig make_loop_config(const TrialSetup& setup) {
    LoopConfig cfg;
    cfg.rig = setup.rig;
    cfg.controller_model = controller_model_for(setup);
    cfg.plant_model = plant_model_for(setup);
    cfg.plant = setup.plant;
    cfg.weights = setup.weights;
    cfg.current_a = setup.current_a;
    cfg.measure = setup.measure;
    cfg.camera = setup.camera;
    return cfg;
}

namespace {

using nlohmann::json;

json parse_object(std::string_view text, const char* what) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string(what) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument(std::string(what) + " must be a JSON object");
    }
    return doc;
}

double number_field(const json& v, const std::string& key) {
    if (!v.is_number()) {
        throw std::invalid_argument(key + " must be a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw std::invalid_argument(key + " must be finite");
    }
    return x;
}

std::string string_field(const json& v, const std::string& key) {
    if (!v.is_string()) {
        throw std::invalid_argument(key + " must be a string");
    }
    return v.get<std::string>();
}

void apply_weights(const json& doc, ControllerWeights& w) {
    for (const auto& [key, v] : doc.items()) {
        if (key == "alpha") w.alpha = number_field(v, key);
        else if (key == "beta") w.beta = number_field(v, key);
        else if (key == "gamma") w.gamma = number_field(v, key);
        else if (key == "deadband_mm") w.deadband_mm = number_field(v, key);
        else if (key == "lookahead_mm") w.lookahead_mm = number_field(v, key);
        else if (key == "reach_mm") w.reach_mm = number_field(v, key);
        else throw std::invalid_argument("unknown weight: " + key);
    }
    w.validate();
}

void apply_plant(const json& doc, PlantParams& p) {
    if (!doc.is_object()) {
        throw std::invalid_argument("plant must be an object");
    }
    for (const auto& [key, v] : doc.items()) {
        if (key == "lag_tau_s") p.lag_tau_s = number_field(v, key);
        else if (key == "drift_rms_mm_s") p.drift_rms_mm_s = number_field(v, key);
        else if (key == "drift_corr_time_s") p.drift_corr_time_s = number_field(v, key);
        else throw std::invalid_argument("unknown plant field: " + key);
    }
    p.validate();
}

LogMetadata metadata_for(const TrialSetup& setup, std::string path) {
    LogMetadata meta;
    meta.seed = setup.plant.seed;
    meta.weights = setup.weights;
    meta.preset = std::string(to_string(setup.preset));
    meta.current_a = setup.current_a;
    meta.path = std::move(path);
    meta.measure = setup.measure;
    return meta;
}

Vec2 placed_start(const Vec2& nominal, const TrialSetup& setup) {
    if (!(setup.placement_error_mm > 0.0)) {
        return nominal;
    }
    // Separate stream so the placement does not shift the drift sequence.
    std::mt19937_64 rng(setup.plant.seed + 0x5851F42D4C957F2DULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = setup.placement_error_mm * std::sqrt(u(rng));
    const double th = 2.0 * kPi * u(rng);
    Vec2 p = nominal + Vec2{r * std::cos(th), r * std::sin(th)};
    if (!setup.rig.contains(p)) {
        p = nominal;
    }
    return p;
}

std::size_t tick_budget(double seconds, double dt) {
    return static_cast<std::size_t>(std::llround(seconds / dt));
}

TrajectoryLog path_trial(LoopConfig cfg, const ReferencePath& path, const TrialSetup& setup) {
    if (path.samples.empty()) {
        throw std::invalid_argument("path has no samples");
    }
    cfg.plant.seed = setup.plant.seed;
    ClosedLoop loop(std::move(cfg), placed_start(path.samples.front(), setup));
    loop.set_path(path.samples);

    TrajectoryLog log;
    log.meta = metadata_for(setup, path.name);
    log.dt_s = loop.dt_s();
    const std::size_t budget = tick_budget(setup.timeout_s, loop.dt_s());
    while (log.rows.size() <= budget) {
        log.rows.push_back(loop.tick());
        if (loop.path_completed()) {
            log.completed = true;
            break;
        }
    }
    return log;
}

TrajectoryLog hold_trial(LoopConfig cfg, const Vec2& point, double duration_s,
                         const TrialSetup& setup) {
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("hold duration must be positive");
    }
    cfg.plant.seed = setup.plant.seed;
    ClosedLoop loop(std::move(cfg), placed_start(point, setup));
    loop.set_target(point);

    TrajectoryLog log;
    log.meta = metadata_for(setup, "hold");
    log.dt_s = loop.dt_s();
    const std::size_t ticks = tick_budget(duration_s, loop.dt_s());
    log.rows.reserve(ticks);
    for (std::size_t k = 0; k < ticks; ++k) {
        log.rows.push_back(loop.tick());
    }
    log.completed = true;
    return log;
}

// Runs fn(seeded setup) for seeds setup.plant.seed + i in parallel.
template <typename Fn>
std::vector<TrajectoryLog> run_seeded(const TrialSetup& setup, int reps, Fn fn) {
    if (reps < 1) {
        throw std::invalid_argument("reps must be at least 1");
    }
    std::vector<std::future<TrajectoryLog>> jobs;
    jobs.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        TrialSetup s = setup;
        s.plant.seed = setup.plant.seed + static_cast<std::uint64_t>(i);
        jobs.push_back(std::async(std::launch::async, [s, fn] { return fn(s); }));
    }
    std::vector<TrajectoryLog> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) {
        out.push_back(j.get());
    }
    return out;
}

}  // namespace

TrajectoryLog run_path_trial(const ReferencePath& path, const TrialSetup& setup) {
    return path_trial(make_loop_config(setup), path, setup);
}

TrajectoryLog run_hold_trial(const Vec2& point, double duration_s, const TrialSetup& setup) {
    return hold_trial(make_loop_config(setup), point, duration_s, setup);
}

// Batches identify the plant law once and share it across seeds.

std::vector<TrajectoryLog> run_path_batch(const ReferencePath& path, const TrialSetup& setup,
                                          int reps) {
    const LoopConfig cfg = make_loop_config(setup);
    return run_seeded(setup, reps,
                      [&path, &cfg](const TrialSetup& s) { return path_trial(cfg, path, s); });
}

std::vector<TrajectoryLog> run_hold_batch(const Vec2& point, double duration_s,
                                          const TrialSetup& setup, int reps) {
    const LoopConfig cfg = make_loop_config(setup);
    return run_seeded(setup, reps, [&cfg, point, duration_s](const TrialSetup& s) {
        return hold_trial(cfg, point, duration_s, s);
    });
}

PathStats pooled_stats(const std::vector<TrajectoryLog>& logs) {
    std::vector<double> errs;
    std::vector<double> speeds;
    for (const TrajectoryLog& log : logs) {
        for (const LogRow& r : log.rows) {
            errs.push_back(r.err_mm * 1e3);
        }
        for (const double v : speed_series(log.positions(), log.dt_s)) {
            speeds.push_back(v * 1e3);
        }
    }
    const Summary e = summarize(errs);
    const Summary v = summarize(speeds);
    return {e.mean, e.std, e.max, v.mean, v.std, v.max};
}

std::vector<SweepRow> open_loop_sweep(const TrialSetup& setup, const std::vector<double>& distances,
                                      int reps, int solenoid) {
    if (reps < 1) {
        throw std::invalid_argument("reps must be at least 1");
    }
    if (solenoid < 0 || solenoid >= static_cast<int>(kSolenoidCount)) {
        throw std::invalid_argument("solenoid index out of range");
    }
    const SolenoidSpec& coil = setup.rig.solenoids[static_cast<std::size_t>(solenoid)];
    const Vec2 tip = tip_projection(coil);
    const Vec2 inward = -tip / norm(tip);
    const VelocityModel model = plant_model_for(setup);
    const double dt = setup.rig.tick_seconds();
    const auto steps = static_cast<int>(std::lround(1.0 / dt));
    ActuationPattern pattern;
    pattern.set(static_cast<std::size_t>(solenoid), true);

    std::vector<SweepRow> out;
    for (const double d : distances) {
        const Vec2 start = tip + inward * d;
        if (!(d > 0.0) || !setup.rig.contains(start)) {
            throw std::domain_error("sweep distance puts the particle outside the workspace");
        }
        SweepRow row;
        row.distance_mm = d;
        for (int rep = 0; rep < reps; ++rep) {
            PlantParams params = setup.plant;
            params.seed = setup.plant.seed + static_cast<std::uint64_t>(rep);
            Plant plant(setup.rig, model, params, ParticleState{start, {}, 0.55, "PE"});
            for (int k = 0; k < steps; ++k) {
                plant.step(pattern, setup.current_a, dt);
            }
            row.speeds.push_back(distance(plant.state().position, start) / (steps * dt));
        }
        const Summary s = summarize(row.speeds);
        row.mean_speed_mm_s = s.mean;
        row.std_speed_mm_s = s.std;
        out.push_back(std::move(row));
    }
    return out;
}

ControllerWeights weights_from_json(std::string_view json_text, ControllerWeights base) {
    apply_weights(parse_object(json_text, "weights"), base);
    return base;
}

TrialSetup trial_setup_from_json(std::string_view json_text, TrialSetup base) {
    const json doc = parse_object(json_text, "config");
    // The rig goes first so later fields validate against it.
    if (doc.contains("rig")) {
        if (!doc["rig"].is_object()) {
            throw std::invalid_argument("rig must be an object");
        }
        base.rig = rig_from_json(doc["rig"].dump());
    }
    for (const auto& [key, v] : doc.items()) {
        if (key == "rig") {
            continue;
        }
        if (key == "seed") {
            if (!v.is_number_unsigned()) {
                throw std::invalid_argument("seed must be a non-negative integer");
            }
            base.plant.seed = v.get<std::uint64_t>();
        } else if (key == "current_a") {
            base.current_a = number_field(v, key);
            if (!(base.current_a >= 0.0)) {
                throw std::invalid_argument("current_a must be non-negative");
            }
        } else if (key == "preset") {
            base.preset = gain_preset_from_string(string_field(v, key));
        } else if (key == "plant") {
            apply_plant(v, base.plant);
        } else if (key == "weights") {
            if (!v.is_object()) {
                throw std::invalid_argument("weights must be an object");
            }
            apply_weights(v, base.weights);
        } else if (key == "measure") {
            base.measure = measure_mode_from_string(string_field(v, key));
        } else if (key == "camera_sigma") {
            base.camera.noise_sigma = number_field(v, key);
            base.camera.validate();
        } else if (key == "plant_law") {
            base.plant_law = plant_law_from_string(string_field(v, key));
        } else if (key == "timeout_s") {
            base.timeout_s = number_field(v, key);
            if (!(base.timeout_s > 0.0)) {
                throw std::invalid_argument("timeout_s must be positive");
            }
        } else if (key == "placement_error_mm") {
            base.placement_error_mm = number_field(v, key);
            if (!(base.placement_error_mm >= 0.0)) {
                throw std::invalid_argument("placement_error_mm must be non-negative");
            }
        } else {
            throw std::invalid_argument("unknown config field: " + key);
        }
    }
    return base;
}

}  // namespace ferroservo
