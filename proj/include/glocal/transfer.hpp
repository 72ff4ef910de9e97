#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "glocal/common.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

/// Trace onto an interface: the volume dofs of the interface, in interface order.
struct TraceMap
{
    std::vector<int> domain_dofs;

    [[nodiscard]] std::size_t size() const { return domain_dofs.size(); }
};

/// Injection of one subdomain's interface dofs into the global interface vector.
struct AssemblyMap
{
    std::vector<int> local_to_global;

    [[nodiscard]] std::size_t size() const { return local_to_global.size(); }
};

/// Coarse-to-fine interface interpolation; one weight list per fine dof.
struct InterpOp
{
    struct Weight
    {
        int col;
        double w;
    };

    int num_coarse = 0;
    std::vector<std::vector<Weight>> rows;

    [[nodiscard]] int num_fine() const { return static_cast<int>(rows.size()); }
};

inline void validate(const TraceMap& t, std::size_t volume_dim)
{
    std::vector<int> sorted = t.domain_dofs;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "TraceMap: duplicate dof");
    require(sorted.empty() || (sorted.front() >= 0 && static_cast<std::size_t>(sorted.back()) < volume_dim),
            "TraceMap: dof out of range");
}

inline Vector trace(std::span<const double> u, const TraceMap& t)
{
    Vector v(t.size());
    for (std::size_t k = 0; k < t.size(); ++k)
        v[k] = u[t.domain_dofs[k]];
    return v;
}

inline Vector extend_by_zero(std::span<const double> v, const TraceMap& t, std::size_t n)
{
    require(v.size() == t.size(), "extend_by_zero: size mismatch");
    Vector u(n, 0.0);
    for (std::size_t k = 0; k < t.size(); ++k)
        u[t.domain_dofs[k]] = v[k];
    return u;
}

/// acc[local_to_global[i]] += v_s[i]
inline void assemble_to_global(std::span<const double> v_s, const AssemblyMap& a, std::span<double> acc)
{
    require(v_s.size() == a.size(), "assemble_to_global: size mismatch");
    for (std::size_t i = 0; i < v_s.size(); ++i)
        acc[a.local_to_global[i]] += v_s[i];
}

/// Gathers a subdomain's interface values out of the global interface vector (A^T).
inline Vector restrict_from_global(std::span<const double> global, const AssemblyMap& a)
{
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        v[i] = global[a.local_to_global[i]];
    return v;
}

inline void validate(const InterfaceDesc& d)
{
    require(d.gamma_nodes.size() == d.arc_coords.size(), "InterfaceDesc: length mismatch");
    for (std::size_t i = 1; i < d.arc_coords.size(); ++i)
        require(d.arc_coords[i] > d.arc_coords[i - 1], "InterfaceDesc: arc coordinates not increasing");
}

/// Nodal linear interpolation by arc coordinate, applied componentwise.
/// Fine nodes coinciding with a coarse node get a single unit weight.
inline InterpOp build_interp(const InterfaceDesc& coarse, const InterfaceDesc& fine, int dofs_per_node)
{
    validate(coarse);
    validate(fine);
    require(dofs_per_node >= 1, "build_interp: dofs_per_node must be >= 1");
    require(!coarse.arc_coords.empty() && !fine.arc_coords.empty(), "build_interp: empty interface");

    const auto& ca = coarse.arc_coords;
    const double range = ca.back() - ca.front();
    const double tol = 1e-12 * std::max(1.0, range);
    require(std::abs(fine.arc_coords.front() - ca.front()) <= tol &&
                std::abs(fine.arc_coords.back() - ca.back()) <= tol,
            "build_interp: fine and coarse interfaces span different arc ranges");

    InterpOp J;
    const int nc = static_cast<int>(ca.size());
    J.num_coarse = nc * dofs_per_node;
    J.rows.reserve(fine.arc_coords.size() * static_cast<std::size_t>(dofs_per_node));
    for (double s : fine.arc_coords)
    {
        if (s < ca.front() - tol || s > ca.back() + tol)
            throw std::invalid_argument("build_interp: fine node outside the coarse arc range");
        auto it = std::upper_bound(ca.begin(), ca.end(), s);
        int k = std::clamp(static_cast<int>(it - ca.begin()) - 1, 0, std::max(nc - 2, 0));
        std::vector<std::pair<int, double>> w;
        if (std::abs(s - ca[k]) <= tol)
            w = {{k, 1.0}};
        else if (k + 1 < nc && std::abs(s - ca[k + 1]) <= tol)
            w = {{k + 1, 1.0}};
        else
        {
            const double t = (s - ca[k]) / (ca[k + 1] - ca[k]);
            w = {{k, 1.0 - t}, {k + 1, t}};
        }
        for (int c = 0; c < dofs_per_node; ++c)
        {
            std::vector<InterpOp::Weight> row;
            for (const auto& [node, weight] : w)
                row.push_back({node * dofs_per_node + c, weight});
            J.rows.push_back(std::move(row));
        }
    }
    return J;
}

inline Vector interp_apply(const InterpOp& J, std::span<const double> v_coarse)
{
    require(static_cast<int>(v_coarse.size()) == J.num_coarse, "interp_apply: size mismatch");
    Vector out(J.rows.size(), 0.0);
    for (std::size_t i = 0; i < J.rows.size(); ++i)
        for (const auto& [col, w] : J.rows[i])
            out[i] += w * v_coarse[col];
    return out;
}

inline Vector interp_transpose_apply(const InterpOp& J, std::span<const double> w_fine)
{
    require(w_fine.size() == J.rows.size(), "interp_transpose_apply: size mismatch");
    Vector out(static_cast<std::size_t>(J.num_coarse), 0.0);
    for (std::size_t i = 0; i < J.rows.size(); ++i)
        for (const auto& [col, w] : J.rows[i])
            out[col] += w * w_fine[i];
    return out;
}

} // namespace glocal
