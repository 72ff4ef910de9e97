#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "glocal/models.hpp"

namespace glocal {

struct HistoryEntry
{
    double time = 0.0;     ///< iteration index (sync) or executor clock (async)
    double residual = 0.0; ///< |r| in the configured norm
    double relative = 0.0; ///< |r| / |r_0|
    double omega = 0.0;    ///< relaxation applied with this residual
};

/// Rank-0 state of the coupling iteration.
struct CouplingState
{
    Vector p;
    Vector r;
    double omega = 1.0;
    int iter = 0;
    std::vector<HistoryEntry> history;
};

struct RunReport
{
    bool converged = false;
    int iterations = 0;
    std::vector<int> patch_iterations;
    int patch_iter_min = 0;
    int patch_iter_max = 0;
    double final_residual = 0.0; ///< relative
    double initial_residual = 0.0;
    Vector p;
    Vector u_global;
    std::vector<Vector> u_patches;
    double wall_time = 0.0;    ///< seconds
    double virtual_time = 0.0; ///< executor clock at termination, async only
    std::vector<HistoryEntry> history;
    std::string status;
};

/// Global solve: K^G u = f^G + T^T p, zero Dirichlet data.
inline Vector global_solve(const GlobalModel& gm, std::span<const double> p)
{
    require(p.size() == gm.gamma_size(), "global_solve: interface load has wrong size");
    Vector rhs = gm.system.f;
    for (std::size_t k = 0; k < p.size(); ++k)
        rhs[gm.gamma_trace.domain_dofs[k]] += p[k];
    const Vector g(gm.solver.dofmap().fixed_dofs.size(), 0.0);
    return gm.solver.solve(rhs, g);
}

/// Reaction of the complement elements on the global interface.
inline Vector complement_reaction(const GlobalModel& gm, std::span<const double> u)
{
    if (!gm.complement_present)
        throw ContractViolation("complement_reaction: the scenario has no complement zone");
    return reaction(gm.complement.K, gm.complement.f, u, gm.gamma_nodes, gm.solver.dofmap());
}

/// Interface values of u^G seen by patch s (A^(s)T T^G u^G).
inline Vector patch_trace(const GlobalModel& gm, std::span<const double> u, int s)
{
    const Vector on_gamma = trace(u, gm.gamma_trace);
    return restrict_from_global(on_gamma, gm.patch_maps[s]);
}

struct PatchSolution
{
    Vector u;      ///< full fine solution
    Vector lambda; ///< K u - f on the fine interface dofs
};

/// Fine Dirichlet solve with interface data J g; lambda is the interface reaction.
inline PatchSolution patch_solve(const PatchModel& pm, std::span<const double> g_coarse)
{
    if (g_coarse.size() != pm.coarse_size())
        throw std::invalid_argument("patch_solve: coarse interface data has wrong size");
    const Vector g_fine = interp_apply(pm.interp, g_coarse);
    const auto& dm = pm.solver.dofmap();
    Vector g(dm.fixed_dofs.size(), 0.0);
    for (std::size_t k = 0; k < g_fine.size(); ++k)
        g[pm.interface_fixed_slot[k]] = g_fine[k];
    PatchSolution sol;
    sol.u = pm.solver.solve(pm.system.f, g);
    sol.lambda = reaction(pm.system.K, pm.system.f, sol.u, pm.interface_nodes, dm);
    return sol;
}

/// q^(s) = J^T lambda^(s)
inline Vector patch_load(const PatchModel& pm, const PatchSolution& sol)
{
    return interp_transpose_apply(pm.interp, sol.lambda);
}

/// Residual: r = -(A0 lambda0 + sum_s A_s q_s); lambda0 omitted without complement.
inline Vector assemble_residual(const GlobalModel& gm, const std::optional<Vector>& lambda0,
                                const std::vector<Vector>& q)
{
    require(q.size() == gm.patch_maps.size(), "assemble_residual: one q per patch required");
    Vector acc(gm.gamma_size(), 0.0);
    if (lambda0)
    {
        require(lambda0->size() == acc.size(), "assemble_residual: lambda0 has wrong size");
        vec::axpy(1.0, *lambda0, acc);
    }
    for (std::size_t s = 0; s < q.size(); ++s)
        assemble_to_global(q[s], gm.patch_maps[s], acc);
    for (double& v : acc)
        v = -v;
    return acc;
}

/// Relaxed update: p <- p + omega r, recorded in the history.
inline void richardson_update(CouplingState& st, std::span<const double> r, double time = 0.0,
                              double residual = 0.0, double relative = 0.0)
{
    require(r.size() == st.p.size(), "richardson_update: size mismatch");
    vec::axpy(st.omega, r, st.p);
    st.r.assign(r.begin(), r.end());
    st.history.push_back({time, residual, relative, st.omega});
    ++st.iter;
}

/// Aitken relaxation: -omega <r_prev, r_curr - r_prev> / |r_curr - r_prev|^2.
/// Keeps omega_prev when the residual did not change.
inline double aitken_omega(std::span<const double> r_prev, std::span<const double> r_curr, double omega_prev)
{
    const Vector d = vec::sub(r_curr, r_prev);
    const double dd = vec::dot(d, d);
    if (dd == 0.0)
        return omega_prev;
    const double next = -omega_prev * vec::dot(r_prev, d) / dd;
    return std::isfinite(next) ? next : omega_prev;
}

/// Absolute residual level below which r_0 counts as zero (consistent models).
inline double zero_residual_floor(std::span<const double> lambda0, const std::vector<Vector>& q, NormKind kind)
{
    double scale = norm(lambda0, kind);
    for (const auto& v : q)
        scale = std::max(scale, norm(v, kind));
    return 1e-12 * scale;
}

namespace detail {

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn)
{
    if (threads <= 1 || n <= 1)
    {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int t = std::min(threads, n);
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&, k] {
            for (int i = k; i < n; i += t)
                fn(i);
        });
    for (auto& th : pool)
        th.join();
}

inline void fill_patch_stats(RunReport& rep)
{
    if (rep.patch_iterations.empty())
        return;
    const auto [lo, hi] = std::minmax_element(rep.patch_iterations.begin(), rep.patch_iterations.end());
    rep.patch_iter_min = *lo;
    rep.patch_iter_max = *hi;
}

} // namespace detail

/// Synchronous stationary iterations with fixed or Aitken relaxation.
inline RunReport run_synchronous(const Models& models, const RunConfig& cfg)
{
    validate(cfg);
    if (cfg.mode == Mode::async)
        throw ContractViolation("run_synchronous: mode must be richardson or aitken");
    const auto t0 = std::chrono::steady_clock::now();
    const GlobalModel& gm = models.global;
    const int npatch = static_cast<int>(models.patches.size());

    RunReport rep;
    rep.patch_iterations.assign(static_cast<std::size_t>(npatch), 0);
    CouplingState st;
    st.p.assign(gm.gamma_size(), 0.0);
    st.omega = cfg.omega0;

    Vector r_prev;
    double r_ref = 0.0;
    bool first = true;
    std::vector<Vector> q(static_cast<std::size_t>(npatch));
    std::vector<Vector> u_patch(static_cast<std::size_t>(npatch));
    for (;;)
    {
        rep.u_global = global_solve(gm, st.p);
        std::optional<Vector> lambda0;
        if (gm.complement_present)
            lambda0 = complement_reaction(gm, rep.u_global);
        detail::parallel_for(npatch, cfg.sync_threads, [&](int s) {
            const PatchSolution sol = patch_solve(models.patches[s], patch_trace(gm, rep.u_global, s));
            q[s] = patch_load(models.patches[s], sol);
            u_patch[s] = sol.u;
        });
        for (auto& n : rep.patch_iterations)
            ++n;
        const Vector r = assemble_residual(gm, lambda0, q);
        const double nr = norm(r, cfg.norm);
        if (first)
        {
            first = false;
            r_ref = nr;
            rep.initial_residual = nr;
            const double floor = zero_residual_floor(lambda0 ? std::span<const double>(*lambda0)
                                                             : std::span<const double>(), q, cfg.norm);
            if (nr <= floor)
            {
                rep.converged = true;
                rep.final_residual = 0.0;
                rep.status = "initial residual is zero";
                break;
            }
        }
        const double rel = nr / r_ref;
        rep.final_residual = rel;
        if (rel <= cfg.tol)
        {
            rep.converged = true;
            rep.status = "converged";
            break;
        }
        if (st.iter >= cfg.max_iter || !std::isfinite(rel))
        {
            rep.status = std::isfinite(rel) ? "max iterations reached" : "diverged";
            break;
        }
        if (cfg.mode == Mode::aitken && st.iter >= 1)
            st.omega = std::clamp(aitken_omega(r_prev, r, st.omega), cfg.omega_min, cfg.omega_max);
        richardson_update(st, r, st.iter, nr, rel);
        r_prev = r;
    }

    rep.iterations = st.iter;
    rep.history = std::move(st.history);
    rep.p = std::move(st.p);
    rep.u_patches = std::move(u_patch);
    detail::fill_patch_stats(rep);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace glocal
