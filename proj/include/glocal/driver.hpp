#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "glocal/async_coupling.hpp"
#include "glocal/report.hpp"
#include "glocal/scenario.hpp"

namespace glocal {

struct RunRequest
{
    RunConfig cfg;
    ExecutorKind executor = ExecutorKind::virtual_time;
    AsyncOptions async;
    bool barrier = false; ///< async mode only: rank 0 waits for every patch
};

struct RunOutcome
{
    RunReport report;
    rt::Trace trace;
};

/// Dispatches to the synchronous driver or to the asynchronous one.
inline RunOutcome run(const Models& models, const RunRequest& req)
{
    RunOutcome out;
    if (req.cfg.mode == Mode::async || req.barrier)
    {
        AsyncRun ar = run_asynchronous(models, req.cfg, req.executor, req.async, req.barrier);
        out.report = std::move(ar.report);
        out.trace = std::move(ar.exec.trace);
    }
    else
        out.report = run_synchronous(models, req.cfg);
    return out;
}

inline std::string executor_name(const RunRequest& req)
{
    if (req.cfg.mode != Mode::async && !req.barrier)
        return "sync";
    return req.executor == ExecutorKind::virtual_time ? "virtual" : "threads";
}

/// Writes report.json, history.csv and, for async runs, trace.csv into `dir`.
inline void write_run_outputs(const std::filesystem::path& dir, const RunOutcome& out, const RunMeta& meta)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "report.json");
        f << report_to_json(out.report, meta).dump(2) << '\n';
    }
    {
        std::ofstream f(dir / "history.csv");
        write_history_csv(f, out.report.history);
    }
    if (!out.trace.empty())
    {
        std::ofstream f(dir / "trace.csv");
        rt::write_trace_csv(f, out.trace);
    }
}

enum class SweepAxis
{
    grid,
    omega,
    hetero
};

inline const char* to_string(SweepAxis a)
{
    switch (a)
    {
    case SweepAxis::grid: return "grid";
    case SweepAxis::omega: return "omega";
    case SweepAxis::hetero: return "hetero";
    }
    return "?";
}

struct SweepRow
{
    double value = 0.0;
    int patches = 0;
    bool converged = false;
    int iterations = 0;
    int patch_iter_min = 0;
    int patch_iter_max = 0;
    double final_residual = 0.0;
    double wall_time = 0.0;
    double virtual_time = 0.0;
    bool best = false;
    std::string status;
    RunReport report;
};

/// Scenario with one sweep-axis value applied.
inline Scenario apply_axis(Scenario sc, SweepAxis axis, double value)
{
    switch (axis)
    {
    case SweepAxis::grid:
        if (!sc.grid)
            throw ScenarioError("grid", "--grid needs a scenario with a 'grid' block");
        require(value >= 1.0 && value == std::floor(value), "grid size must be a positive integer");
        sc.grid->n = static_cast<int>(value);
        expand_grid(sc);
        break;
    case SweepAxis::omega:
        sc.solver.omega0 = value;
        break;
    case SweepAxis::hetero:
        require(value > 0.0, "heterogeneity ratio must be positive");
        if (sc.grid)
        {
            sc.grid->ratio = value;
            expand_grid(sc);
        }
        else
            for (auto& p : sc.patches)
                for (auto& inc : p.inclusions)
                    inc.ratio = value;
        break;
    }
    if (sc.async.patch_cost_factors.size() != sc.patches.size())
        sc.async.patch_cost_factors.clear();
    return sc;
}

/// One run per axis value; failures are recorded and the sweep continues.
/// For the omega axis the converged row with the fewest global iterations is flagged best.
inline std::vector<SweepRow> sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                   const RunRequest& req_base)
{
    std::vector<SweepRow> rows;
    for (double v : values)
    {
        SweepRow row;
        row.value = v;
        try
        {
            const Scenario sc = apply_axis(base, axis, v);
            RunRequest req = req_base;
            if (axis == SweepAxis::omega)
                req.cfg.omega0 = v;
            req.async.patch_cost_factors = sc.async.patch_cost_factors;
            const Models m = build_models(sc);
            row.patches = static_cast<int>(m.patches.size());
            RunOutcome out = run(m, req);
            row.converged = out.report.converged;
            row.iterations = out.report.iterations;
            row.patch_iter_min = out.report.patch_iter_min;
            row.patch_iter_max = out.report.patch_iter_max;
            row.final_residual = out.report.final_residual;
            row.wall_time = out.report.wall_time;
            row.virtual_time = out.report.virtual_time;
            row.status = out.report.status;
            row.report = std::move(out.report);
        }
        catch (const std::exception& e)
        {
            row.status = std::string("error: ") + e.what();
        }
        rows.push_back(std::move(row));
    }
    if (axis == SweepAxis::omega)
    {
        SweepRow* best = nullptr;
        for (auto& r : rows)
            if (r.converged && (!best || r.iterations < best->iterations))
                best = &r;
        if (best)
            best->best = true;
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows)
{
    os << "axis,value,patches,converged,iterations,patch_iter_min,patch_iter_max,final_residual,wall_time,"
          "virtual_time,best,status\n";
    for (const auto& r : rows)
    {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << to_string(axis) << ',' << format_double(r.value) << ',' << r.patches << ',' << (r.converged ? 1 : 0)
           << ',' << r.iterations << ',' << r.patch_iter_min << ',' << r.patch_iter_max << ','
           << format_double(r.final_residual) << ',' << format_double(r.wall_time) << ','
           << format_double(r.virtual_time) << ',' << (r.best ? 1 : 0) << ',' << status << '\n';
    }
}

} // namespace glocal
