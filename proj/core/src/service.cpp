#include "ferroservo/service.hpp"

#include "ferroservo/io.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>

namespace ferroservo {

std::string_view to_string(ClockMode mode) {
    switch (mode) {
        case ClockMode::Realtime: return "realtime";
        case ClockMode::Turbo: return "turbo";
        case ClockMode::Manual: return "manual";
    }
    return "realtime";
}

ClockMode clock_mode_from_string(std::string_view text) {
    if (text == "realtime") return ClockMode::Realtime;
    if (text == "turbo") return ClockMode::Turbo;
    if (text == "manual") return ClockMode::Manual;
    throw std::invalid_argument("unknown clock mode: " + std::string(text));
}

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr long kMaxStepTicks = 1'000'000;

// Thrown for requests that are well formed but not allowed right now.
struct Conflict : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Snapshot {
    std::uint64_t seq{0};
    std::string event;
};

// A queued client command. `ticks` > 0 only for manual-clock steps.
struct Command {
    std::function<void(ClosedLoop&)> apply;
    long ticks{0};
    std::shared_ptr<std::promise<std::uint64_t>> done;
};

class Session {
public:
    Session(std::string id, ClockMode clock, TrialSetup setup, const Vec2& start,
            std::size_t max_log_rows)
        : id_(std::move(id)),
          clock_(clock),
          setup_(std::move(setup)),
          tunable_(setup_),
          start_(start),
          max_log_rows_(max_log_rows),
          loop_(make_loop_config(setup_), start) {
        LogRow initial;
        initial.position = start;
        latest_ = std::make_shared<const Snapshot>(Snapshot{0, state_event_json(initial)});
        thread_ = std::thread([this] { run(); });
    }

    ~Session() { stop(); }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    void stop() {
        {
            const std::lock_guard lock(cmd_mu_);
            stopping_ = true;
        }
        cmd_cv_.notify_all();
        snap_cv_.notify_all();
        if (thread_.joinable()) {
            thread_.join();
        }
    }

    const std::string& id() const { return id_; }
    ClockMode clock() const { return clock_; }
    const Vec2& start() const { return start_; }
    const WorkspaceConfig& rig() const { return setup_.rig; }
    double dt_s() const { return loop_.dt_s(); }
    std::uint64_t tick_count() const { return ticks_.load(); }
    bool stopping() const {
        const std::lock_guard lock(cmd_mu_);
        return stopping_;
    }

    void enqueue(Command cmd) {
        {
            const std::lock_guard lock(cmd_mu_);
            if (stopping_) {
                throw Conflict("session is closing");
            }
            commands_.push_back(std::move(cmd));
        }
        cmd_cv_.notify_all();
    }

    std::shared_ptr<const Snapshot> latest() const {
        const std::lock_guard lock(snap_mu_);
        return latest_;
    }

    /// Waits up to `timeout` for a snapshot newer than `seen`. Returns null
    /// on timeout or when the session closes.
    std::shared_ptr<const Snapshot> wait_newer(std::optional<std::uint64_t> seen,
                                               std::chrono::milliseconds timeout) {
        std::unique_lock lock(snap_mu_);
        const auto fresh = [&] { return !seen || latest_->seq != *seen; };
        snap_cv_.wait_for(lock, timeout, [&] { return fresh() || closed_.load(); });
        return fresh() ? latest_ : nullptr;
    }

    bool closed() const { return closed_.load(); }

    TrajectoryLog log_copy() const {
        TrajectoryLog log;
        log.dt_s = loop_.dt_s();
        const std::lock_guard lock(log_mu_);
        log.rows = rows_;
        return log;
    }

    // Request-side mirror of the tunable settings, so partial updates merge
    // against what the loop will hold once queued commands apply.
    std::mutex settings_mu;
    TrialSetup& settings() { return tunable_; }

private:
    void publish(const LogRow& row) {
        {
            const std::lock_guard lock(log_mu_);
            if (rows_.size() < max_log_rows_) {
                rows_.push_back(row);
            }
        }
        auto snap = std::make_shared<const Snapshot>(Snapshot{row.tick + 1, state_event_json(row)});
        {
            const std::lock_guard lock(snap_mu_);
            latest_ = std::move(snap);
        }
        ticks_.store(loop_.tick_count());
        snap_cv_.notify_all();
    }

    void tick_once() { publish(loop_.tick()); }

    // Applies queued commands in order. Steps tick inline, so a command
    // queued after a step takes effect after those ticks.
    void drain(std::deque<Command>& pending) {
        while (!pending.empty()) {
            Command cmd = std::move(pending.front());
            pending.pop_front();
            if (cmd.apply) {
                try {
                    cmd.apply(loop_);
                } catch (const std::exception&) {
                    // Commands are validated before queueing; a late failure
                    // leaves the loop unchanged.
                }
            }
            for (long k = 0; k < cmd.ticks && !stopping(); ++k) {
                tick_once();
            }
            if (cmd.done) {
                cmd.done->set_value(loop_.tick_count());
            }
        }
    }

    std::deque<Command> take(std::unique_lock<std::mutex>& lock) {
        std::deque<Command> out;
        out.swap(commands_);
        lock.unlock();
        return out;
    }

    void run() {
        const auto dt = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(loop_.dt_s()));
        auto next = Clock::now();
        for (;;) {
            std::unique_lock lock(cmd_mu_);
            if (clock_ == ClockMode::Manual) {
                cmd_cv_.wait(lock, [&] { return stopping_ || !commands_.empty(); });
            } else if (clock_ == ClockMode::Realtime) {
                cmd_cv_.wait_until(lock, next, [&] { return stopping_; });
            }
            if (stopping_) {
                break;
            }
            auto pending = take(lock);
            drain(pending);
            if (clock_ == ClockMode::Manual) {
                continue;
            }
            tick_once();
            if (clock_ == ClockMode::Realtime) {
                next += dt;
                // After a long stall, restart the schedule instead of bursting.
                if (Clock::now() - next > std::chrono::seconds(1)) {
                    next = Clock::now();
                }
            }
        }
        // Unblock anyone waiting on a step that will not run.
        std::unique_lock lock(cmd_mu_);
        for (Command& cmd : commands_) {
            if (cmd.done) {
                cmd.done->set_exception(std::make_exception_ptr(Conflict("session closed")));
            }
        }
        commands_.clear();
        closed_.store(true);
        snap_cv_.notify_all();
    }

    std::string id_;
    ClockMode clock_;
    const TrialSetup setup_;
    TrialSetup tunable_;  // guarded by settings_mu
    Vec2 start_;
    std::size_t max_log_rows_;
    ClosedLoop loop_;  // touched only by the loop thread after construction

    mutable std::mutex cmd_mu_;
    std::condition_variable cmd_cv_;
    std::deque<Command> commands_;
    bool stopping_{false};

    mutable std::mutex snap_mu_;
    std::condition_variable snap_cv_;
    std::shared_ptr<const Snapshot> latest_;

    mutable std::mutex log_mu_;
    std::vector<LogRow> rows_;

    std::atomic<std::uint64_t> ticks_{0};
    std::atomic<bool> closed_{false};
    std::thread thread_;
};

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) {
        return json::object();
    }
    json doc;
    try {
        doc = json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("request body must be a JSON object");
    }
    return doc;
}

double number(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) {
        throw std::invalid_argument(std::string(key) + " must be a number");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(key) + " must be finite");
    }
    return v;
}

Vec2 point_from(const json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw std::invalid_argument("points must be [x, y] number pairs");
    }
    const Vec2 p{v[0].get<double>(), v[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("points must be finite");
    }
    return p;
}

void check_inside(const WorkspaceConfig& rig, const Vec2& p) {
    if (!rig.contains(p)) {
        throw std::domain_error("point lies outside the workspace");
    }
}

void reply_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view message) {
    reply_json(res, json{{"error", message}}, status);
}

// Maps exceptions to status codes: malformed input 400, outside the
// workspace 422, state conflicts 409.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const std::domain_error& e) {
        reply_error(res, 422, e.what());
    } catch (const std::invalid_argument& e) {
        reply_error(res, 400, e.what());
    } catch (const json::exception& e) {
        reply_error(res, 400, e.what());
    } catch (const Conflict& e) {
        reply_error(res, 409, e.what());
    } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
    }
}

}  // namespace

struct ControlService::Impl {
    explicit Impl(ServiceOptions opts) : options(std::move(opts)), ids(std::random_device{}()) {
        options.defaults.rig.validate();
        routes();
    }

    ~Impl() { stop(); }

    std::shared_ptr<Session> find(const std::string& id) {
        const std::lock_guard lock(mu);
        const auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    std::string next_id() {
        const std::lock_guard lock(mu);
        for (;;) {
            const std::string id = fmt_id(ids());
            if (sessions.find(id) == sessions.end()) {
                return id;
            }
        }
    }

    static std::string fmt_id(std::uint64_t v) {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string s(16, '0');
        for (int i = 15; i >= 0; --i, v >>= 4) {
            s[static_cast<std::size_t>(i)] = kHex[v & 0xF];
        }
        return s;
    }

    // Registers a handler for /sessions/{id}<suffix> that resolves the session.
    template <typename Fn>
    void on_session(const char* method, const std::string& suffix, Fn fn) {
        const std::string pattern = "/sessions/([0-9a-f]{16})" + suffix;
        auto handler = [this, fn](const httplib::Request& req, httplib::Response& res) {
            auto session = find(req.matches[1]);
            if (!session) {
                reply_error(res, 404, "unknown session");
                return;
            }
            guarded(res, [&] { fn(*session, session, req, res); });
        };
        const std::string m(method);
        if (m == "GET") server.Get(pattern, handler);
        else if (m == "POST") server.Post(pattern, handler);
        else server.Delete(pattern, handler);
    }

    void create(const httplib::Request& req, httplib::Response& res) {
        json body = parse_body(req);
        ClockMode clock = options.clock;
        if (const auto it = body.find("clock"); it != body.end()) {
            if (!it->is_string()) {
                throw std::invalid_argument("clock must be a string");
            }
            clock = clock_mode_from_string(it->get<std::string>());
            body.erase("clock");
        }
        std::optional<Vec2> start;
        if (const auto it = body.find("start"); it != body.end()) {
            start = point_from(*it);
            body.erase("start");
        }
        const TrialSetup setup = trial_setup_from_json(body.dump(), options.defaults);
        const Vec2 p = start.value_or(Vec2{});
        check_inside(setup.rig, p);

        {
            const std::lock_guard lock(mu);
            if (sessions.size() >= options.max_sessions) {
                reply_error(res, 503, "session limit reached");
                return;
            }
        }
        const std::string id = next_id();
        auto session = std::make_shared<Session>(id, clock, setup, p, options.max_log_rows);
        {
            const std::lock_guard lock(mu);
            sessions.emplace(id, session);
        }
        reply_json(res, json{{"id", id}, {"clock", to_string(clock)}, {"dt_s", session->dt_s()}},
                   201);
    }

    void routes() {
        server.new_task_queue = [n = options.worker_threads] {
            return new httplib::ThreadPool(static_cast<std::size_t>(std::max(n, 2)));
        };
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        if (!options.static_dir.empty() &&
            !server.set_mount_point("/", options.static_dir.string())) {
            throw std::invalid_argument("static directory not found: " +
                                        options.static_dir.string());
        }

        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { create(req, res); });
        });

        server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            const std::lock_guard lock(mu);
            for (const auto& [id, s] : sessions) {
                list.push_back(
                    {{"id", id}, {"clock", to_string(s->clock())}, {"tick_count", s->tick_count()}});
            }
            reply_json(res, json{{"sessions", list}});
        });

        using SessionPtr = std::shared_ptr<Session>;
        using Req = httplib::Request;
        using Res = httplib::Response;

        on_session("GET", "/state", [](Session& s, const SessionPtr&, const Req&, Res& res) {
            res.set_content(s.latest()->event, "application/json");
        });

        on_session("POST", "/target", [](Session& s, const SessionPtr&, const Req& req, Res& res) {
            const json body = parse_body(req);
            const Vec2 t{number(body, "x_mm"), number(body, "y_mm")};
            check_inside(s.rig(), t);
            s.enqueue({[t](ClosedLoop& loop) { loop.set_target(t); }, 0, nullptr});
            reply_json(res, json{{"ok", true}});
        });

        on_session("POST", "/path", [](Session& s, const SessionPtr&, const Req& req, Res& res) {
            const json body = parse_body(req);
            const auto it = body.find("points");
            if (it == body.end() || !it->is_array() || it->empty()) {
                throw std::invalid_argument("points must be a non-empty array");
            }
            std::vector<Vec2> vertices;
            vertices.reserve(it->size());
            for (const json& v : *it) {
                vertices.push_back(point_from(v));
            }
            std::vector<Vec2> samples = resample_polyline(vertices);
            if (samples.empty()) {
                throw std::invalid_argument("path has no samples");
            }
            for (const Vec2& p : samples) {
                check_inside(s.rig(), p);
            }
            const std::size_t n = samples.size();
            s.enqueue({[samples = std::move(samples)](ClosedLoop& loop) { loop.set_path(samples); },
                       0, nullptr});
            reply_json(res, json{{"ok", true}, {"samples", n}});
        });

        on_session("POST", "/params", [](Session& s, const SessionPtr&, const Req& req, Res& res) {
            const json body = parse_body(req);
            const std::lock_guard lock(s.settings_mu);
            TrialSetup next = s.settings();
            bool models = false;
            for (const auto& [key, v] : body.items()) {
                if (key == "current_a") {
                    next.current_a = number(body, "current_a");
                    if (!(next.current_a >= 0.0)) {
                        throw std::invalid_argument("current_a must be non-negative");
                    }
                } else if (key == "weights") {
                    if (!v.is_object()) {
                        throw std::invalid_argument("weights must be an object");
                    }
                    next.weights = weights_from_json(v.dump(), next.weights);
                } else if (key == "preset") {
                    if (!v.is_string()) {
                        throw std::invalid_argument("preset must be a string");
                    }
                    next.preset = gain_preset_from_string(v.get<std::string>());
                    models = true;
                } else {
                    throw std::invalid_argument("unknown parameter: " + key);
                }
            }
            std::function<void(ClosedLoop&)> apply;
            if (models) {
                apply = [next, cm = controller_model_for(next),
                         pm = plant_model_for(next)](ClosedLoop& loop) {
                    loop.set_models(cm, pm);
                    loop.set_current(next.current_a);
                    loop.set_weights(next.weights);
                };
            } else {
                apply = [next](ClosedLoop& loop) {
                    loop.set_current(next.current_a);
                    loop.set_weights(next.weights);
                };
            }
            s.enqueue({std::move(apply), 0, nullptr});
            s.settings() = next;
            reply_json(res, json{{"current_a", next.current_a},
                                 {"preset", to_string(next.preset)},
                                 {"weights",
                                  {{"alpha", next.weights.alpha},
                                   {"beta", next.weights.beta},
                                   {"gamma", next.weights.gamma},
                                   {"deadband_mm", next.weights.deadband_mm},
                                   {"lookahead_mm", next.weights.lookahead_mm},
                                   {"reach_mm", next.weights.reach_mm}}}});
        });

        on_session("POST", "/pause", [](Session& s, const SessionPtr&, const Req&, Res& res) {
            s.enqueue({[](ClosedLoop& loop) { loop.pause(); }, 0, nullptr});
            reply_json(res, json{{"ok", true}});
        });

        on_session("POST", "/resume", [](Session& s, const SessionPtr&, const Req&, Res& res) {
            s.enqueue({[](ClosedLoop& loop) { loop.resume(); }, 0, nullptr});
            reply_json(res, json{{"ok", true}});
        });

        on_session("POST", "/reset", [](Session& s, const SessionPtr&, const Req& req, Res& res) {
            const json body = parse_body(req);
            Vec2 p = s.start();
            if (body.contains("x_mm") || body.contains("y_mm")) {
                p = Vec2{number(body, "x_mm"), number(body, "y_mm")};
            }
            check_inside(s.rig(), p);
            s.enqueue({[p](ClosedLoop& loop) { loop.reset(p); }, 0, nullptr});
            reply_json(res, json{{"ok", true}});
        });

        on_session("POST", "/step", [](Session& s, const SessionPtr&, const Req& req, Res& res) {
            if (s.clock() != ClockMode::Manual) {
                throw Conflict("step needs a manual-clock session");
            }
            const json body = parse_body(req);
            long ticks = 1;
            if (const auto it = body.find("ticks"); it != body.end()) {
                if (!it->is_number_integer()) {
                    throw std::invalid_argument("ticks must be an integer");
                }
                ticks = it->get<long>();
            }
            if (ticks < 1 || ticks > kMaxStepTicks) {
                throw std::invalid_argument("ticks must be in [1, 1000000]");
            }
            auto done = std::make_shared<std::promise<std::uint64_t>>();
            auto fut = done->get_future();
            s.enqueue({nullptr, ticks, done});
            reply_json(res, json{{"tick_count", fut.get()}});
        });

        on_session("GET", "/log.csv", [](Session& s, const SessionPtr&, const Req&, Res& res) {
            res.set_content(trajectory_csv(s.log_copy()), "text/csv");
        });

        on_session("GET", "/stream",
                   [this](Session&, const SessionPtr& session, const Req& req, Res& res) {
                       std::size_t limit = 0;  // 0 streams until the client leaves
                       if (req.has_param("max_events")) {
                           try {
                               limit = std::stoul(req.get_param_value("max_events"));
                           } catch (const std::exception&) {
                               throw std::invalid_argument("max_events must be an integer");
                           }
                       }
                       stream(session, limit, res);
                   });

        on_session("DELETE", "", [this](Session& s, const SessionPtr& session, const Req&, Res& res) {
            {
                const std::lock_guard lock(mu);
                sessions.erase(s.id());
            }
            session->stop();
            reply_json(res, json{{"ok", true}});
        });
    }

    // Latest-wins: each write sends whatever is newest, so a slow reader
    // skips ticks instead of queueing them.
    void stream(const std::shared_ptr<Session>& session, std::size_t limit, httplib::Response& res) {
        struct Cursor {
            std::optional<std::uint64_t> seen;
            std::size_t sent{0};
        };
        auto cursor = std::make_shared<Cursor>();
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [this, session, limit, cursor](std::size_t, httplib::DataSink& sink) {
                if (stopping.load() || session->closed() || (limit && cursor->sent >= limit)) {
                    sink.done();
                    return true;
                }
                const auto snap = session->wait_newer(cursor->seen, std::chrono::milliseconds(250));
                if (!snap) {
                    return sink.is_writable();
                }
                cursor->seen = snap->seq;
                ++cursor->sent;
                std::string line = snap->event;
                line += '\n';
                return sink.write(line.data(), line.size());
            });
    }

    int bind() {
        if (bound >= 0) {
            return bound;
        }
        if (options.port == 0) {
            bound = server.bind_to_any_port(options.host);
        } else if (server.bind_to_port(options.host, options.port)) {
            bound = options.port;
        }
        if (bound < 0) {
            throw std::runtime_error("cannot bind " + options.host + ":" +
                                     std::to_string(options.port));
        }
        return bound;
    }

    void stop() {
        stopping.store(true);
        server.stop();
        if (listener.joinable()) {
            listener.join();
        }
        std::map<std::string, std::shared_ptr<Session>> doomed;
        {
            const std::lock_guard lock(mu);
            doomed.swap(sessions);
        }
        for (auto& [id, s] : doomed) {
            s->stop();
        }
    }

    ServiceOptions options;
    httplib::Server server;
    std::mutex mu;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::mt19937_64 ids;
    std::atomic<bool> stopping{false};
    std::thread listener;
    int bound{-1};
};

ControlService::ControlService(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

ControlService::~ControlService() = default;

int ControlService::bind() { return impl_->bind(); }

void ControlService::listen() {
    impl_->bind();
    impl_->server.listen_after_bind();
}

int ControlService::start() {
    const int port = impl_->bind();
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void ControlService::stop() { impl_->stop(); }

int ControlService::port() const { return impl_->bound; }

}  // namespace ferroservo
