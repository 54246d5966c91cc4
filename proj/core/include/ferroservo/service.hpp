#pragma once

#include "ferroservo/harness.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace ferroservo {

/// How a session's control loop advances.
///   Realtime: one tick per 1/tick_rate of wall-clock time.
///   Turbo:    ticks back to back, for batch use.
///   Manual:   ticks only on POST /sessions/{id}/step, for scripted runs.
enum class ClockMode { Realtime, Turbo, Manual };

std::string_view to_string(ClockMode mode);
ClockMode clock_mode_from_string(std::string_view text);

struct ServiceOptions {
    std::string host{"127.0.0.1"};
    int port{8080};  // 0 picks a free port
    ClockMode clock{ClockMode::Realtime};
    TrialSetup defaults{};
    std::filesystem::path static_dir{};  // served at "/" when set
    std::size_t max_sessions{64};
    std::size_t max_log_rows{2'000'000};
    int worker_threads{32};
};

/// HTTP host for live closed-loop sessions.
///
///   POST /sessions                       -> {"id"}
///   GET  /sessions                       -> {"sessions": [...]}
///   GET  /sessions/{id}/state            -> latest state event
///   POST /sessions/{id}/target           {x_mm, y_mm}
///   POST /sessions/{id}/path             {points: [[x, y], ...]}
///   POST /sessions/{id}/params           {current_a?, weights?, preset?}
///   POST /sessions/{id}/pause|resume|reset
///   POST /sessions/{id}/step             {ticks}  (manual clock only)
///   GET  /sessions/{id}/stream           NDJSON events, latest-wins
///   GET  /sessions/{id}/log.csv          trajectory CSV
///   DELETE /sessions/{id}
///
/// Each session runs its own loop thread. Commands are validated on the
/// request thread, queued, and applied between ticks.
class ControlService {
public:
    explicit ControlService(ServiceOptions options);
    ~ControlService();

    ControlService(const ControlService&) = delete;
    ControlService& operator=(const ControlService&) = delete;

    /// Binds the listening socket and returns the bound port.
    /// Throws std::runtime_error when the address is unavailable.
    int bind();
    /// Serves until stop(); bind() is called first if needed.
    void listen();
    /// bind() plus listen() on a background thread.
    int start();
    void stop();

    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ferroservo
