#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glocal/coupling.hpp"

namespace glocal {

/// Shortest round-trip representation, so identical runs give identical bytes.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV history: iter_or_time,residual,omega (residual relative to r_0).
inline void write_history_csv(std::ostream& os, const std::vector<HistoryEntry>& history)
{
    os << "iter_or_time,residual,omega\n";
    for (const auto& h : history)
        os << format_double(h.time) << ',' << format_double(h.relative) << ',' << format_double(h.omega) << '\n';
}

struct RunMeta
{
    std::string scenario_hash;
    std::string scenario_name;
    std::string executor = "sync";
    std::uint64_t seed = 0;
    RunConfig cfg;
};

inline nlohmann::json report_to_json(const RunReport& rep, const RunMeta& meta, bool include_solution = true)
{
    nlohmann::json j;
    j["scenario_hash"] = meta.scenario_hash;
    j["scenario"] = meta.scenario_name;
    j["mode"] = to_string(meta.cfg.mode);
    j["executor"] = meta.executor;
    j["seed"] = meta.seed;
    j["omega"] = meta.cfg.omega0;
    j["tol"] = meta.cfg.tol;
    j["max_iter"] = meta.cfg.max_iter;
    j["norm"] = meta.cfg.norm == NormKind::inf ? "inf" : "two";
    j["converged"] = rep.converged;
    j["status"] = rep.status;
    j["iterations"] = {{"global", rep.iterations},
                       {"patch_min", rep.patch_iter_min},
                       {"patch_max", rep.patch_iter_max},
                       {"per_patch", rep.patch_iterations}};
    j["final_residual"] = rep.final_residual;
    j["initial_residual"] = rep.initial_residual;
    j["wall_time"] = rep.wall_time;
    j["virtual_time"] = rep.virtual_time;
    if (include_solution)
    {
        j["solution"]["global"] = rep.u_global;
        j["solution"]["patches"] = rep.u_patches;
        j["solution"]["p"] = rep.p;
    }
    return j;
}

/// Iteration counts as global[min - max] over the patches.
inline std::string iteration_summary(const RunReport& rep)
{
    std::ostringstream os;
    os << rep.iterations;
    if (!rep.patch_iterations.empty())
        os << '[' << rep.patch_iter_min << " - " << rep.patch_iter_max << ']';
    return os.str();
}

struct SubdomainError
{
    std::string name;
    double error = 0.0; ///< max |u - u^R| over the subdomain nodes, divided by |u^R|_inf
};

/// Relative sup-norm distance to the reference solution, for the complement side of
/// the global model and for every patch.
inline std::vector<SubdomainError> compare_to_reference(const Models& m, std::span<const double> u_global,
                                                        const std::vector<Vector>& u_patches,
                                                        std::span<const double> u_ref)
{
    const ReferenceModel& rm = m.reference;
    const int dpn = rm.dofs_per_node;
    require(u_global.size() == static_cast<std::size_t>(m.global.mesh.num_nodes() * dpn),
            "compare: global solution has wrong size");
    require(u_patches.size() == m.patches.size(), "compare: one solution per patch required");
    double scale = vec::norm_inf(u_ref);
    if (scale == 0.0)
        scale = 1.0;

    std::vector<SubdomainError> out;
    SubdomainError g{"global", 0.0};
    for (int v = 0; v < m.global.mesh.num_nodes(); ++v)
    {
        const int r = rm.ref_of_global[v];
        if (r < 0)
            continue;
        for (int c = 0; c < dpn; ++c)
            g.error = std::max(g.error, std::abs(u_global[v * dpn + c] - u_ref[r * dpn + c]) / scale);
    }
    out.push_back(g);
    for (std::size_t s = 0; s < m.patches.size(); ++s)
    {
        const auto& u = u_patches[s];
        require(u.size() == static_cast<std::size_t>(m.patches[s].mesh.num_nodes() * dpn),
                "compare: patch solution has wrong size");
        SubdomainError e{"patch_" + std::to_string(s), 0.0};
        for (int v = 0; v < m.patches[s].mesh.num_nodes(); ++v)
        {
            const int r = rm.ref_of_fine[s][v];
            for (int c = 0; c < dpn; ++c)
                e.error = std::max(e.error, std::abs(u[v * dpn + c] - u_ref[r * dpn + c]) / scale);
        }
        out.push_back(e);
    }
    return out;
}

inline double max_error(const std::vector<SubdomainError>& errs)
{
    double m = 0.0;
    for (const auto& e : errs)
        m = std::max(m, e.error);
    return m;
}

} // namespace glocal
