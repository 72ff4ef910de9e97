#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "glocal/common.hpp"

namespace glocal::rt {

struct Snapshot
{
    std::shared_ptr<const Vector> payload;
    std::uint64_t version = 0;
};

/// Single-writer versioned buffer with PUT/GET semantics.
///
/// A put publishes a complete immutable payload together with the next version
/// number; a get returns the latest published pair. Readers never observe a
/// partially written payload and versions advance by exactly one per put.
class Window
{
public:
    Window(std::size_t length, int writer)
        : m_length(length), m_writer(writer), m_data(std::make_shared<const Vector>(length, 0.0))
    {
    }

    Window(const Window&) = delete;
    Window& operator=(const Window&) = delete;

    [[nodiscard]] std::size_t length() const { return m_length; }
    [[nodiscard]] int writer() const { return m_writer; }
    [[nodiscard]] std::uint64_t version() const { return m_version.load(std::memory_order_acquire); }

    /// Returns the new version.
    std::uint64_t put(int writer, std::span<const double> payload)
    {
        if (writer != m_writer)
            throw ContractViolation("Window::put: worker " + std::to_string(writer) + " is not the writer (" +
                                    std::to_string(m_writer) + ")");
        if (payload.size() != m_length)
            throw ContractViolation("Window::put: payload length mismatch");
        auto fresh = std::make_shared<const Vector>(payload.begin(), payload.end());
        std::lock_guard lock(m_mutex);
        m_data = std::move(fresh);
        const auto v = m_version.load(std::memory_order_relaxed) + 1;
        m_version.store(v, std::memory_order_release);
        return v;
    }

    [[nodiscard]] Snapshot get() const
    {
        std::lock_guard lock(m_mutex);
        return {m_data, m_version.load(std::memory_order_relaxed)};
    }

private:
    std::size_t m_length;
    int m_writer;
    mutable std::mutex m_mutex;
    std::shared_ptr<const Vector> m_data;
    std::atomic<std::uint64_t> m_version{0};
};

/// The windows of one run plus a change counter that waiting workers can block on.
class WindowSet
{
public:
    int add(std::size_t length, int writer)
    {
        m_windows.push_back(std::make_unique<Window>(length, writer));
        return static_cast<int>(m_windows.size()) - 1;
    }

    [[nodiscard]] std::size_t size() const { return m_windows.size(); }
    Window& operator[](int i) { return *m_windows.at(static_cast<std::size_t>(i)); }
    const Window& operator[](int i) const { return *m_windows.at(static_cast<std::size_t>(i)); }

    std::uint64_t put(int window, int writer, std::span<const double> payload)
    {
        const auto v = (*this)[window].put(writer, payload);
        {
            std::lock_guard lock(m_change_mutex);
            ++m_epoch;
        }
        m_change.notify_all();
        return v;
    }

    [[nodiscard]] std::uint64_t epoch() const
    {
        std::lock_guard lock(m_change_mutex);
        return m_epoch;
    }

    /// Blocks until some put happens after `seen` or the timeout expires.
    void wait_change(std::uint64_t seen, std::chrono::microseconds timeout) const
    {
        std::unique_lock lock(m_change_mutex);
        m_change.wait_for(lock, timeout, [&] { return m_epoch != seen; });
    }

private:
    std::vector<std::unique_ptr<Window>> m_windows;
    mutable std::mutex m_change_mutex;
    mutable std::condition_variable m_change;
    std::uint64_t m_epoch = 0;
};

enum class EventKind
{
    solve_start,
    solve_end,
    put,
    get,
    converged
};

inline const char* to_string(EventKind k)
{
    switch (k)
    {
    case EventKind::solve_start: return "solve_start";
    case EventKind::solve_end: return "solve_end";
    case EventKind::put: return "put";
    case EventKind::get: return "get";
    case EventKind::converged: return "converged";
    }
    return "?";
}

struct TraceEvent
{
    double time;
    int worker;
    EventKind kind;
    std::string detail;
};

using Trace = std::vector<TraceEvent>;

/// CSV with header time,worker,event,detail.
inline void write_trace_csv(std::ostream& os, const Trace& trace)
{
    os << "time,worker,event,detail\n";
    for (const auto& e : trace)
    {
        std::ostringstream t;
        t << std::setprecision(17) << e.time;
        os << t.str() << ',' << e.worker << ',' << to_string(e.kind) << ',' << e.detail << '\n';
    }
}

/// Trace sink shared by the workers of one run.
class TraceLog
{
public:
    explicit TraceLog(std::function<double()> clock) : m_clock(std::move(clock)) {}

    void log(int worker, EventKind kind, std::string detail)
    {
        std::lock_guard lock(m_mutex);
        m_events.push_back({m_clock(), worker, kind, std::move(detail)});
    }

    Trace take()
    {
        std::lock_guard lock(m_mutex);
        return std::move(m_events);
    }

private:
    std::function<double()> m_clock;
    std::mutex m_mutex;
    Trace m_events;
};

/// What a worker program sees: its id, a clock and logged window access.
class WorkerContext
{
public:
    WorkerContext(int worker, WindowSet& windows, TraceLog& log, std::function<double()> clock)
        : m_worker(worker), m_windows(&windows), m_log(&log), m_clock(std::move(clock))
    {
    }

    [[nodiscard]] int worker() const { return m_worker; }
    [[nodiscard]] double now() const { return m_clock(); }
    [[nodiscard]] std::uint64_t version(int window) const { return (*m_windows)[window].version(); }

    Snapshot get(int window)
    {
        Snapshot s = (*m_windows)[window].get();
        m_log->log(m_worker, EventKind::get, "w" + std::to_string(window) + "@" + std::to_string(s.version));
        return s;
    }

    std::uint64_t put(int window, std::span<const double> payload)
    {
        const auto v = m_windows->put(window, m_worker, payload);
        m_log->log(m_worker, EventKind::put, "w" + std::to_string(window) + "@" + std::to_string(v));
        return v;
    }

    void log(EventKind kind, std::string detail = {}) { m_log->log(m_worker, kind, std::move(detail)); }

private:
    int m_worker;
    WindowSet* m_windows;
    TraceLog* m_log;
    std::function<double()> m_clock;
};

struct Wait
{
};
struct Exit
{
};
/// Work started at poll time. Inputs are read during poll; `run` computes and puts,
/// and is executed when the task completes.
struct Task
{
    std::function<void(WorkerContext&)> run;
};
using Action = std::variant<Wait, Exit, Task>;

/// A reactive worker: polled whenever idle, never concurrently with its own task.
class WorkerProgram
{
public:
    virtual ~WorkerProgram() = default;
    virtual Action poll(WorkerContext& ctx) = 0;
};

struct PauseWindow
{
    double time = 0.0;
    double duration = 0.0;
};

struct WorkerSpec
{
    int id = 0;
    double solve_base = 1.0; ///< virtual ms per task
    double jitter = 0.0;     ///< uniform relative jitter in [0,1)
    double latency = 0.0;    ///< added to every task
    std::vector<PauseWindow> pauses;
};

struct ExecResult
{
    Trace trace;
    bool finished = false; ///< every worker exited
    bool deadlock = false;
    bool timed_out = false;
    double end_time = 0.0;
    std::string diagnostic;
    std::vector<int> tasks_per_worker;
};

namespace detail {

inline void check_specs(std::span<const WorkerSpec> specs, std::size_t programs)
{
    require(specs.size() == programs, "executor: one spec per program required");
    for (std::size_t i = 0; i < specs.size(); ++i)
    {
        const auto& s = specs[i];
        require(s.id == static_cast<int>(i), "executor: worker specs must be ordered by id");
        require(s.solve_base >= 0.0 && s.latency >= 0.0, "executor: durations must be >= 0");
        require(s.jitter >= 0.0 && s.jitter < 1.0, "executor: jitter must lie in [0,1)");
        for (const auto& p : s.pauses)
            require(p.duration >= 0.0, "executor: pause duration must be >= 0");
    }
}

// uniform in [0,1) from the top 53 bits
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double task_duration(const WorkerSpec& s, double start, std::mt19937_64& rng)
{
    double d = s.solve_base * (1.0 + s.jitter * (2.0 * unit_uniform(rng) - 1.0)) + s.latency;
    for (const auto& p : s.pauses)
    {
        const double end = p.time + p.duration;
        if (start >= p.time && start < end)
            d += end - start;
        else if (p.time >= start && p.time < start + d)
            d += p.duration;
    }
    return std::max(d, 0.0);
}

} // namespace detail

struct VirtualOptions
{
    std::uint64_t seed = 1;
    double max_time = 1e9;
};

/// Deterministic discrete-event executor over a virtual clock.
///
/// Every round polls the idle workers in id order, then advances the clock to the
/// next task completion and runs all tasks completing at that instant (id order).
/// Same inputs and seed give a bit-identical trace.
inline ExecResult run_virtual(std::span<const WorkerSpec> specs, std::span<WorkerProgram* const> programs,
                              WindowSet& windows, const VirtualOptions& opt)
{
    require(programs.size() >= 2, "run_virtual: at least two workers required");
    detail::check_specs(specs, programs.size());
    const int nw = static_cast<int>(programs.size());

    double now = 0.0;
    TraceLog log([&now] { return now; });
    std::vector<WorkerContext> ctx;
    for (int w = 0; w < nw; ++w)
        ctx.emplace_back(w, windows, log, [&now] { return now; });

    std::mt19937_64 rng(opt.seed);
    enum class State
    {
        idle,
        busy,
        exited
    };
    std::vector<State> state(static_cast<std::size_t>(nw), State::idle);
    std::vector<std::function<void(WorkerContext&)>> pending(static_cast<std::size_t>(nw));
    using Completion = std::pair<double, int>;
    std::priority_queue<Completion, std::vector<Completion>, std::greater<>> queue;

    ExecResult res;
    res.tasks_per_worker.assign(static_cast<std::size_t>(nw), 0);
    for (;;)
    {
        for (int w = 0; w < nw; ++w)
        {
            if (state[w] != State::idle)
                continue;
            Action a = programs[w]->poll(ctx[w]);
            if (std::holds_alternative<Exit>(a))
                state[w] = State::exited;
            else if (auto* t = std::get_if<Task>(&a))
            {
                state[w] = State::busy;
                pending[w] = std::move(t->run);
                ctx[w].log(EventKind::solve_start);
                queue.emplace(now + detail::task_duration(specs[w], now, rng), w);
            }
        }

        if (queue.empty())
        {
            if (std::all_of(state.begin(), state.end(), [](State s) { return s == State::exited; }))
                res.finished = true;
            else
            {
                res.deadlock = true;
                std::ostringstream os;
                os << "deadlock at t=" << now << ": no task in flight; waiting workers:";
                for (int w = 0; w < nw; ++w)
                    if (state[w] == State::idle)
                        os << ' ' << w;
                res.diagnostic = os.str();
            }
            break;
        }
        const double next = queue.top().first;
        if (next > opt.max_time)
        {
            res.timed_out = true;
            res.diagnostic = "virtual time limit exceeded";
            break;
        }
        now = next;
        while (!queue.empty() && queue.top().first == now)
        {
            const int w = queue.top().second;
            queue.pop();
            auto run = std::move(pending[w]);
            run(ctx[w]);
            ctx[w].log(EventKind::solve_end);
            ++res.tasks_per_worker[w];
            state[w] = State::idle;
        }
    }
    res.end_time = now;
    res.trace = log.take();
    return res;
}

/// Thread cap from GLOCAL_THREADS (unset or invalid: no cap).
inline int thread_cap_from_env(int workers)
{
    if (const char* env = std::getenv("GLOCAL_THREADS"))
    {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<int>(std::min<long>(v, workers));
    }
    return workers;
}

struct ThreadedOptions
{
    double wall_timeout = 60.0; ///< seconds
    int threads = 0;            ///< 0: one thread per worker, capped by GLOCAL_THREADS
    double ms_per_unit = 0.0;   ///< optional sleep emulating the task cost model
    std::uint64_t seed = 1;
};

/// Real concurrent executor. Workers are spread round-robin over the threads;
/// the windows are the only channel between them. Times in the trace are wall ms.
inline ExecResult run_threaded(std::span<const WorkerSpec> specs, std::span<WorkerProgram* const> programs,
                               WindowSet& windows, const ThreadedOptions& opt)
{
    require(!programs.empty(), "run_threaded: no workers");
    detail::check_specs(specs, programs.size());
    const int nw = static_cast<int>(programs.size());
    const int nt = opt.threads > 0 ? std::min(opt.threads, nw) : thread_cap_from_env(nw);

    const auto t0 = std::chrono::steady_clock::now();
    auto clock = [t0] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    TraceLog log(clock);
    std::atomic<bool> abort{false};
    std::atomic<int> exited{0};
    std::vector<int> tasks(static_cast<std::size_t>(nw), 0);
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(opt.wall_timeout));

    auto thread_main = [&](int t) {
        std::vector<int> mine;
        for (int w = t; w < nw; w += nt)
            mine.push_back(w);
        std::vector<WorkerContext> ctx;
        for (int w : mine)
            ctx.emplace_back(w, windows, log, clock);
        std::vector<char> done(mine.size(), 0);
        std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(t));
        std::size_t alive = mine.size();
        while (alive > 0 && !abort.load())
        {
            if (std::chrono::steady_clock::now() > deadline)
            {
                abort = true;
                break;
            }
            const auto epoch = windows.epoch();
            bool progressed = false;
            for (std::size_t k = 0; k < mine.size(); ++k)
            {
                if (done[k])
                    continue;
                const int w = mine[k];
                Action a = programs[w]->poll(ctx[k]);
                if (std::holds_alternative<Exit>(a))
                {
                    done[k] = 1;
                    --alive;
                    ++exited;
                    progressed = true;
                }
                else if (auto* task = std::get_if<Task>(&a))
                {
                    ctx[k].log(EventKind::solve_start);
                    if (opt.ms_per_unit > 0.0)
                        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
                            opt.ms_per_unit * detail::task_duration(specs[w], clock(), rng)));
                    task->run(ctx[k]);
                    ctx[k].log(EventKind::solve_end);
                    ++tasks[w];
                    progressed = true;
                }
            }
            if (!progressed)
                windows.wait_change(epoch, std::chrono::milliseconds(2));
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back(thread_main, t);
    for (auto& th : pool)
        th.join();

    ExecResult res;
    res.finished = exited.load() == nw;
    res.timed_out = !res.finished;
    if (res.timed_out)
        res.diagnostic = "wall-clock timeout";
    res.end_time = clock();
    res.tasks_per_worker = tasks;
    res.trace = log.take();
    return res;
}

} // namespace glocal::rt
