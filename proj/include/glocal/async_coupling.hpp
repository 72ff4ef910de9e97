#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <vector>

#include "glocal/async_rt.hpp"
#include "glocal/coupling.hpp"

namespace glocal {

enum class ExecutorKind
{
    virtual_time,
    threads
};

/// Window numbering of one coupling run: a stop flag, one interface-trace window per
/// patch written by rank 0, and one q window per patch written by that patch.
/// A q window carries one extra trailing entry: the trace version the q answers.
/// Worker 0 is the global model, worker s+1 is patch s.
struct CouplingWindows
{
    int stop = 0;
    std::vector<int> trace;
    std::vector<int> load;

    static CouplingWindows create(rt::WindowSet& ws, const Models& m)
    {
        CouplingWindows cw;
        cw.stop = ws.add(1, 0);
        for (const auto& pm : m.patches)
            cw.trace.push_back(ws.add(pm.coarse_size(), 0));
        for (std::size_t s = 0; s < m.patches.size(); ++s)
            cw.load.push_back(ws.add(m.patches[s].coarse_size() + 1, static_cast<int>(s) + 1));
        return cw;
    }
};

/// Rank 0: residual assembly, convergence test, relaxation update and global solve.
///
/// With `wait_all` the program waits for a new q from every patch before assembling
/// (a barrier, i.e. the synchronous iteration expressed over windows); otherwise it
/// reacts to any new q once every patch has published at least once.
///
/// A residual below tolerance only ends the run when every q in it answers the
/// current trace. Otherwise p is held until the missing answers arrive and the
/// test is repeated, so a stale q can never certify convergence.
class GlobalWorker final : public rt::WorkerProgram
{
public:
    GlobalWorker(const Models& m, const RunConfig& cfg, const CouplingWindows& cw, bool wait_all)
        : m_models(m), m_cfg(cfg), m_windows(cw), m_wait_all(wait_all)
    {
        const auto n = m.patches.size();
        m_state.p.assign(m.global.gamma_size(), 0.0);
        m_state.omega = cfg.omega0;
        m_seen.assign(n, 0);
        m_answered.assign(n, 0);
        m_q.resize(n);
        for (std::size_t s = 0; s < n; ++s)
            m_q[s].assign(m.patches[s].coarse_size(), 0.0);
    }

    rt::Action poll(rt::WorkerContext& ctx) override
    {
        if (m_done)
            return rt::Exit{};
        if (!m_initialized)
            return rt::Task{[this](rt::WorkerContext& c) {
                m_initialized = true;
                solve_and_publish(c);
            }};

        // the first assembly waits for one q from every patch, so no update uses a missing load
        const std::size_t n = m_seen.size();
        std::size_t fresh = 0;
        for (std::size_t s = 0; s < n; ++s)
        {
            const std::uint64_t v = ctx.version(m_windows.load[s]);
            if (v == 0)
                return rt::Wait{};
            fresh += v > m_seen[s] ? 1 : 0;
        }
        if (fresh == 0 || (m_wait_all && fresh < n))
            return rt::Wait{};

        auto inputs = std::make_shared<std::vector<std::optional<rt::Snapshot>>>(n);
        for (std::size_t s = 0; s < n; ++s)
            if (ctx.version(m_windows.load[s]) > m_seen[s])
            {
                (*inputs)[s] = ctx.get(m_windows.load[s]);
                m_seen[s] = (*inputs)[s]->version;
            }
        return rt::Task{[this, inputs](rt::WorkerContext& c) { iterate(c, *inputs); }};
    }

    [[nodiscard]] const CouplingState& state() const { return m_state; }
    [[nodiscard]] bool converged() const { return m_converged; }
    [[nodiscard]] double final_residual() const { return m_final; }
    [[nodiscard]] double reference_residual() const { return m_r_ref; }
    [[nodiscard]] const Vector& u_global() const { return m_u; }
    [[nodiscard]] const std::string& status() const { return m_status; }

private:
    void solve_and_publish(rt::WorkerContext& c)
    {
        const GlobalModel& gm = m_models.global;
        m_u = global_solve(gm, m_state.p);
        for (std::size_t s = 0; s < m_models.patches.size(); ++s)
            c.put(m_windows.trace[s], patch_trace(gm, m_u, static_cast<int>(s)));
        if (gm.complement_present)
            m_lambda0 = complement_reaction(gm, m_u);
    }

    void finish(rt::WorkerContext& c, bool converged, std::string status)
    {
        m_converged = converged;
        m_status = std::move(status);
        m_done = true;
        if (converged)
            c.log(rt::EventKind::converged, m_status);
        const double flag = 1.0;
        c.put(m_windows.stop, std::span<const double>(&flag, 1));
    }

    void iterate(rt::WorkerContext& c, const std::vector<std::optional<rt::Snapshot>>& inputs)
    {
        for (std::size_t s = 0; s < inputs.size(); ++s)
            if (inputs[s])
            {
                const Vector& payload = *inputs[s]->payload;
                m_q[s].assign(payload.begin(), payload.end() - 1);
                m_answered[s] = static_cast<std::uint64_t>(payload.back());
            }
        const GlobalModel& gm = m_models.global;
        const Vector r = assemble_residual(gm, m_lambda0, m_q);
        const double nr = norm(r, m_cfg.norm);

        // the reference residual is the first one, built from a q of every patch
        if (!m_ref_set)
        {
            m_ref_set = true;
            m_r_ref = nr;
            const double floor = zero_residual_floor(
                m_lambda0 ? std::span<const double>(*m_lambda0) : std::span<const double>(), m_q, m_cfg.norm);
            if (nr <= floor)
            {
                m_final = 0.0;
                finish(c, true, "initial residual is zero");
                return;
            }
        }
        m_final = nr / m_r_ref;
        if (m_final <= m_cfg.tol)
        {
            if (answers_current_trace(c))
            {
                finish(c, true, "converged");
                return;
            }
            return; // hold p until every patch has answered the current trace
        }
        if (!std::isfinite(m_final))
        {
            finish(c, false, "diverged");
            return;
        }
        if (m_state.iter >= m_cfg.max_iter)
        {
            finish(c, false, "max iterations reached");
            return;
        }
        if (m_wait_all && m_cfg.mode == Mode::aitken && m_state.iter >= 1)
            m_state.omega = std::clamp(aitken_omega(m_r_prev, r, m_state.omega), m_cfg.omega_min, m_cfg.omega_max);
        richardson_update(m_state, r, c.now(), nr, nr / m_r_ref);
        m_r_prev = r;
        solve_and_publish(c);
    }

    [[nodiscard]] bool answers_current_trace(rt::WorkerContext& c) const
    {
        for (std::size_t s = 0; s < m_answered.size(); ++s)
            if (m_answered[s] != c.version(m_windows.trace[s]))
                return false;
        return true;
    }

    const Models& m_models;
    RunConfig m_cfg;
    CouplingWindows m_windows;
    bool m_wait_all;

    CouplingState m_state;
    std::vector<std::uint64_t> m_seen;
    std::vector<std::uint64_t> m_answered;
    std::vector<Vector> m_q;
    std::optional<Vector> m_lambda0;
    Vector m_u;
    Vector m_r_prev;
    bool m_initialized = false;
    bool m_ref_set = false;
    double m_r_ref = 0.0;
    double m_final = 0.0;
    bool m_converged = false;
    bool m_done = false;
    std::string m_status = "running";
};

/// Patch s: solves whenever a new interface trace is visible and publishes q^(s).
class PatchWorker final : public rt::WorkerProgram
{
public:
    PatchWorker(const PatchModel& pm, const CouplingWindows& cw) : m_pm(pm), m_windows(cw) {}

    rt::Action poll(rt::WorkerContext& ctx) override
    {
        if (ctx.version(m_windows.stop) > 0)
            return rt::Exit{};
        const int w = m_windows.trace[m_pm.id];
        if (ctx.version(w) <= m_seen)
            return rt::Wait{};
        auto input = std::make_shared<rt::Snapshot>(ctx.get(w));
        m_seen = input->version;
        return rt::Task{[this, input](rt::WorkerContext& c) {
            const PatchSolution sol = patch_solve(m_pm, *input->payload);
            Vector q = patch_load(m_pm, sol);
            q.push_back(static_cast<double>(input->version));
            c.put(m_windows.load[m_pm.id], q);
            m_u = sol.u;
            ++m_solves;
        }};
    }

    [[nodiscard]] int solves() const { return m_solves; }
    [[nodiscard]] const Vector& u() const { return m_u; }

private:
    const PatchModel& m_pm;
    CouplingWindows m_windows;
    std::uint64_t m_seen = 0;
    int m_solves = 0;
    Vector m_u;
};

struct AsyncRun
{
    RunReport report;
    rt::ExecResult exec;
};

/// Worker specs from the scenario cost model.
inline std::vector<rt::WorkerSpec> worker_specs(const AsyncOptions& ao, std::size_t npatch)
{
    std::vector<rt::WorkerSpec> specs(npatch + 1);
    for (std::size_t w = 0; w <= npatch; ++w)
    {
        auto& s = specs[w];
        s.id = static_cast<int>(w);
        s.jitter = ao.jitter;
        s.latency = ao.latency;
        if (w == 0)
            s.solve_base = ao.global_cost;
        else
            s.solve_base = ao.patch_cost * (ao.patch_cost_factors.empty() ? 1.0 : ao.patch_cost_factors.at(w - 1));
        for (const auto& p : ao.pauses)
            if (p.worker == static_cast<int>(w))
                s.pauses.push_back({p.time, p.duration});
    }
    return specs;
}

/// Asynchronous iterations over the window runtime. `barrier` turns rank 0 into a
/// wait-for-all program (synchronous iteration, Aitken allowed).
inline AsyncRun run_asynchronous(const Models& models, const RunConfig& cfg, ExecutorKind exec,
                                 const AsyncOptions& ao, bool barrier = false)
{
    validate(cfg);
    if (!barrier && cfg.mode == Mode::aitken)
        throw ContractViolation("run_asynchronous: no acceleration is available for asynchronous iterations");
    const auto t0 = std::chrono::steady_clock::now();

    AsyncRun out;
    if (models.patches.empty())
    {
        // nothing to couple: the global solution is the reference solution
        out.report = run_synchronous(models, RunConfig{Mode::richardson, cfg.omega0, cfg.tol, cfg.max_iter, cfg.norm});
        out.exec.finished = true;
        return out;
    }

    rt::WindowSet ws;
    const CouplingWindows cw = CouplingWindows::create(ws, models);
    GlobalWorker global(models, cfg, cw, barrier);
    std::vector<std::unique_ptr<PatchWorker>> patches;
    std::vector<rt::WorkerProgram*> programs{&global};
    for (const auto& pm : models.patches)
    {
        patches.push_back(std::make_unique<PatchWorker>(pm, cw));
        programs.push_back(patches.back().get());
    }
    const auto specs = worker_specs(ao, models.patches.size());

    if (exec == ExecutorKind::virtual_time)
        out.exec = rt::run_virtual(specs, programs, ws, {ao.seed, ao.max_virtual_time});
    else
        out.exec = rt::run_threaded(specs, programs, ws, {ao.wall_timeout, 0, 0.0, ao.seed});

    RunReport& rep = out.report;
    rep.converged = global.converged() && !out.exec.timed_out && !out.exec.deadlock;
    rep.iterations = global.state().iter;
    rep.history = global.state().history;
    const double r_ref = global.reference_residual();
    for (auto& h : rep.history)
        h.relative = r_ref > 0.0 ? h.residual / r_ref : 0.0;
    rep.final_residual = global.final_residual();
    rep.initial_residual = r_ref;
    rep.p = global.state().p;
    rep.u_global = global.u_global();
    for (const auto& pw : patches)
    {
        rep.patch_iterations.push_back(pw->solves());
        rep.u_patches.push_back(pw->u());
    }
    detail::fill_patch_stats(rep);
    rep.virtual_time = exec == ExecutorKind::virtual_time ? out.exec.end_time : 0.0;
    rep.status = out.exec.timed_out ? out.exec.diagnostic : out.exec.deadlock ? out.exec.diagnostic : global.status();
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace glocal
