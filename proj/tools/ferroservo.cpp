#include "ferroservo/energy.hpp"
#include "ferroservo/harness.hpp"
#include "ferroservo/io.hpp"
#include "ferroservo/path.hpp"
#include "ferroservo/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ferroservo;

namespace {

std::string read_file(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot read " + file.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Options shared by the closed-loop subcommands. Flags given on the command
// line win over the config file.
struct SetupFlags {
    std::string config;
    std::uint64_t seed{1};
    double current{1.43};
    std::string mode{"oracle"};
    std::string preset{"unit"};
    std::string plant_law{"calibrated"};
    double drift{-1.0};

    void add(CLI::App* app, bool with_current = true) {
        app->add_option("--config", config, "JSON overrides for rig, plant and weights")
            ->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "first seed; repetitions use seed, seed+1, ...")
            ->capture_default_str();
        if (with_current) {
            app->add_option("--current", current, "solenoid current in A")->capture_default_str();
        }
        app->add_option("--mode", mode, "position measurement")
            ->check(CLI::IsMember({"oracle", "vision"}))
            ->capture_default_str();
        app->add_option("--preset", preset, "solenoid gain preset")
            ->check(CLI::IsMember({"unit", "fig2d"}))
            ->capture_default_str();
        app->add_option("--plant-law", plant_law, "how the plant realises the fitted law")
            ->check(CLI::IsMember({"calibrated", "direct"}))
            ->capture_default_str();
        app->add_option("--drift", drift, "drift RMS in mm/s (0 for noise-free runs)");
    }

    TrialSetup build(const CLI::App* app) const {
        TrialSetup s;
        if (!config.empty()) {
            s = trial_setup_from_json(read_file(config), s);
        }
        if (config.empty() || app->count("--seed")) s.plant.seed = seed;
        if (config.empty() || app->count("--current")) s.current_a = current;
        if (config.empty() || app->count("--mode")) s.measure = measure_mode_from_string(mode);
        if (config.empty() || app->count("--preset")) s.preset = gain_preset_from_string(preset);
        if (config.empty() || app->count("--plant-law")) {
            s.plant_law = plant_law_from_string(plant_law);
        }
        if (app->count("--drift")) {
            s.plant.drift_rms_mm_s = drift;
        }
        s.plant.validate();
        return s;
    }
};

std::string slug(std::string name) {
    for (char& c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    return name;
}

void write_logs(const std::vector<TrajectoryLog>& logs, const fs::path& dir,
                const std::string& stem) {
    for (const TrajectoryLog& log : logs) {
        write_text(dir / fmt::format("{}_seed{}.csv", stem, log.meta.seed), trajectory_csv(log));
    }
}

int run_paths(const ReferencePath& path, const TrialSetup& setup, int reps, const fs::path& out) {
    const auto logs = run_path_batch(path, setup, reps);
    const std::string stem = slug(path.name);
    write_logs(logs, out, stem);
    const std::string stats = stats_json(path.name, reps, pooled_stats(logs));
    write_text(out / (stem + "_stats.json"), stats);
    std::cout << stats;
    int incomplete = 0;
    for (const auto& log : logs) {
        incomplete += log.completed ? 0 : 1;
    }
    if (incomplete > 0) {
        std::cerr << fmt::format("{}: {} of {} trials timed out\n", path.name, incomplete, reps);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop ferrofluid particle manipulation workbench"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "path-following batch");
    SetupFlags run_flags;
    run_flags.add(run);
    std::string run_path = "line";
    int run_reps = 10;
    std::string run_out = "out";
    run->add_option("--path", run_path, "line, square, circle or a path JSON file")
        ->capture_default_str();
    run->add_option("--reps", run_reps, "repetitions")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--out", run_out, "output directory")->capture_default_str();

    // hold
    auto* hold = app.add_subcommand("hold", "position-hold batch, one per current");
    SetupFlags hold_flags;
    hold_flags.add(hold, false);
    double hold_x = 0.0;
    double hold_y = 0.0;
    double hold_duration = 60.0;
    std::vector<double> hold_currents{1.43};
    int hold_reps = 10;
    std::string hold_out = "out";
    hold->add_option("--x", hold_x, "hold point x in mm")->capture_default_str();
    hold->add_option("--y", hold_y, "hold point y in mm")->capture_default_str();
    hold->add_option("--duration", hold_duration, "seconds")->check(CLI::PositiveNumber)->capture_default_str();
    hold->add_option("--current", hold_currents, "one or more currents in A")->capture_default_str();
    hold->add_option("--reps", hold_reps, "repetitions per current")->check(CLI::PositiveNumber)->capture_default_str();
    hold->add_option("--out", hold_out, "output directory")->capture_default_str();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "open-loop velocity against distance");
    SetupFlags sweep_flags;
    sweep_flags.add(sweep);
    std::vector<double> distances{2.7, 3.8, 4.9, 5.9, 7.0};
    int sweep_reps = 5;
    int solenoid = 0;
    std::string sweep_out;
    sweep->add_option("--distances", distances, "tip distances in mm")->capture_default_str();
    sweep->add_option("--reps", sweep_reps, "repetitions per distance")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--solenoid", solenoid, "solenoid index")->check(CLI::Range(0, 7))->capture_default_str();
    sweep->add_option("--out", sweep_out, "CSV file (stdout when omitted)");

    // energy-sweep
    auto* esweep = app.add_subcommand("energy-sweep", "interface energy and radial force profile");
    double rho_max_mm = 3.0;
    int count = 61;
    double bump_height_um = 100.0;
    double bump_width_mm = 1.0;
    bool no_field = false;
    std::string esweep_out;
    esweep->add_option("--rho-max", rho_max_mm, "outer radius in mm")->check(CLI::PositiveNumber)->capture_default_str();
    esweep->add_option("--count", count, "samples")->check(CLI::Range(2, 1000000))->capture_default_str();
    esweep->add_option("--bump-height", bump_height_um, "deformation height in um")->capture_default_str();
    esweep->add_option("--bump-width", bump_width_mm, "deformation width in mm")->check(CLI::PositiveNumber)->capture_default_str();
    esweep->add_flag("--no-field", no_field, "drop the magnetic term");
    esweep->add_option("--out", esweep_out, "CSV file (stdout when omitted)");

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP control service");
    ServiceOptions sopts;
    std::string clock = "realtime";
    bool turbo = false;
    std::string static_dir;
    std::string serve_config;
    serve->add_option("--port", sopts.port, "TCP port (0 picks one)")->capture_default_str();
    serve->add_option("--host", sopts.host, "bind address")->capture_default_str();
    serve->add_option("--clock", clock, "default session clock")
        ->check(CLI::IsMember({"realtime", "turbo", "manual"}))
        ->capture_default_str();
    serve->add_flag("--turbo", turbo, "same as --clock turbo");
    serve->add_option("--static", static_dir, "directory served at /")->check(CLI::ExistingDirectory);
    serve->add_option("--config", serve_config, "JSON defaults for new sessions")->check(CLI::ExistingFile);

    // paths
    auto* paths = app.add_subcommand("paths", "write the shared path files");
    std::string paths_out = "paths";
    paths->add_option("--out", paths_out, "output directory")->capture_default_str();

    // demo
    auto* demo = app.add_subcommand("demo", "trace the AALTO letters");
    SetupFlags demo_flags;
    demo_flags.add(demo);
    std::string demo_out = "out/demo";
    demo->add_option("--out", demo_out, "output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const TrialSetup setup = run_flags.build(run);
            return run_paths(resolve_path(run_path, setup.rig.workspace_radius_mm), setup, run_reps,
                             run_out);
        }
        if (hold->parsed()) {
            const TrialSetup base = hold_flags.build(hold);
            for (double current : hold_currents) {
                TrialSetup setup = base;
                setup.current_a = current;
                const auto logs = run_hold_batch({hold_x, hold_y}, hold_duration, setup, hold_reps);
                const std::string stem = fmt::format("hold_{:.2f}A", current);
                write_logs(logs, hold_out, stem);
                const std::string stats = stats_json(stem, hold_reps, pooled_stats(logs));
                write_text(fs::path(hold_out) / (stem + "_stats.json"), stats);
                std::cout << stats;
            }
            return 0;
        }
        if (sweep->parsed()) {
            const TrialSetup setup = sweep_flags.build(sweep);
            const std::string csv = sweep_csv(open_loop_sweep(setup, distances, sweep_reps, solenoid));
            if (sweep_out.empty()) {
                std::cout << csv;
            } else {
                write_text(sweep_out, csv);
            }
            return 0;
        }
        if (esweep->parsed()) {
            energy::EnergyParams params;
            params.deformation.height_m = bump_height_um * 1e-6;
            params.deformation.width_m = bump_width_mm * 1e-3;
            params.field_enabled = !no_field;
            const std::string csv =
                energy_csv(energy::energy_sweep(params, rho_max_mm * 1e-3, count));
            if (esweep_out.empty()) {
                std::cout << csv;
            } else {
                write_text(esweep_out, csv);
            }
            return 0;
        }
        if (serve->parsed()) {
            sopts.clock = turbo ? ClockMode::Turbo : clock_mode_from_string(clock);
            sopts.static_dir = static_dir;
            if (!serve_config.empty()) {
                sopts.defaults = trial_setup_from_json(read_file(serve_config), sopts.defaults);
            }
            // Block the stop signals before any thread starts, then wait for one here.
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);
            ControlService service(sopts);
            const int port = service.start();
            std::cout << fmt::format("listening on http://{}:{} ({} clock)\n", sopts.host, port,
                                     to_string(sopts.clock))
                      << std::flush;
            int sig = 0;
            sigwait(&signals, &sig);
            service.stop();
            return 0;
        }
        if (paths->parsed()) {
            std::vector<ReferencePath> all{make_path(PathKind::Line), make_path(PathKind::Square),
                                           make_path(PathKind::Circle)};
            for (ReferencePath& letter : aalto_letters()) {
                all.push_back(std::move(letter));
            }
            for (const ReferencePath& p : all) {
                const std::string stem = p.kind == PathKind::Polyline ? "aalto_" + p.name : p.name;
                const fs::path file = fs::path(paths_out) / (stem + ".json");
                save_path(p, file);
                std::cout << file.string() << '\n';
            }
            return 0;
        }
        if (demo->parsed()) {
            const TrialSetup setup = demo_flags.build(demo);
            for (const ReferencePath& letter : aalto_letters()) {
                run_paths(letter, setup, 1, demo_out);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
