#include "ferroservo/closed_loop.hpp"
#include "ferroservo/controller.hpp"
#include "ferroservo/harness.hpp"
#include "ferroservo/vision.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ferroservo;

static void BM_SolvePattern(benchmark::State& state) {
    const WorkspaceConfig rig = default_rig();
    const VelocityModel model = make_velocity_model();
    const ServoScene scene = make_scene({0.7, -0.4}, {1.2, 0.3}, rig, model, 1.43);
    const ControllerWeights w;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_pattern(scene, w));
    }
}
BENCHMARK(BM_SolvePattern);

static void BM_EnumerateOracle(benchmark::State& state) {
    const WorkspaceConfig rig = default_rig();
    const VelocityModel model = make_velocity_model();
    const ServoScene scene = make_scene({0.7, -0.4}, {1.2, 0.3}, rig, model, 1.43);
    const ControllerWeights w;
    for (auto _ : state) {
        benchmark::DoNotOptimize(enumerate_oracle(scene, w));
    }
}
BENCHMARK(BM_EnumerateOracle);

static void BM_RenderAndDetect(benchmark::State& state) {
    const CameraModel cam = default_camera(5.0);
    std::mt19937_64 rng(1);
    for (auto _ : state) {
        const GrayFrame f = render_frame(ParticleState{{0.4, -1.1}}, cam, rng);
        benchmark::DoNotOptimize(detect_particle(f, cam));
    }
}
BENCHMARK(BM_RenderAndDetect);

static void BM_ClosedLoopTick(benchmark::State& state) {
    TrialSetup setup;
    setup.measure = state.range(0) != 0 ? MeasureMode::Vision : MeasureMode::Oracle;
    ClosedLoop loop(make_loop_config(setup), {0.0, 0.0});
    loop.set_target({2.0, 1.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(loop.tick());
        if (loop.mode() == LoopMode::Hold) {
            loop.reset({0.0, 0.0});
            loop.set_target({2.0, 1.0});
        }
    }
}
BENCHMARK(BM_ClosedLoopTick)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
