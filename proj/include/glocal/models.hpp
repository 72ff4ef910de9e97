#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "glocal/fem.hpp"
#include "glocal/mesh.hpp"
#include "glocal/scenario.hpp"
#include "glocal/transfer.hpp"

namespace glocal {

/// Coarse model of the whole domain, with the interface and complement data it needs.
struct GlobalModel
{
    TriMesh mesh;
    Physics physics;
    Assembled system; ///< K^G and f^G over all coarse dofs
    DirichletSolver solver;
    std::vector<int> dirichlet_nodes;

    std::vector<int> gamma_nodes; ///< coarse nodes of the global interface, sorted
    TraceMap gamma_trace;         ///< volume dofs of gamma_nodes, node-major
    std::vector<std::vector<int>> patch_coarse_nodes; ///< per patch: its interface nodes, sorted
    std::vector<AssemblyMap> patch_maps;              ///< per patch: local interface dof -> gamma index

    std::vector<int> patch_of_elem; ///< -1 for complement elements
    std::vector<int> complement_elems;
    bool complement_present = false;
    Assembled complement; ///< unconstrained operator of the complement elements only

    [[nodiscard]] int dofs_per_node() const { return physics.dofs_per_node(); }
    [[nodiscard]] std::size_t gamma_size() const { return gamma_trace.size(); }
};

/// Refined local model of one patch, solved with Dirichlet data on its interface.
struct PatchModel
{
    int id = 0;
    PatchSpec spec;
    TriMesh mesh;
    Physics physics;
    Assembled system;
    DirichletSolver solver; ///< interface and domain-Dirichlet dofs fixed
    std::vector<int> dirichlet_nodes;

    std::vector<int> interface_nodes; ///< fine interface nodes (domain-Dirichlet nodes excluded), sorted
    TraceMap fine_trace;
    InterpOp interp; ///< coarse local interface dofs -> fine interface dofs
    std::vector<int> interface_fixed_slot; ///< position of each interface dof among the fixed dofs

    /// Every fine node on an interface side (Dirichlet ones included) with its
    /// nodal interpolation weights on coarse global-mesh nodes.
    std::map<int, std::vector<std::pair<int, double>>> side_constraints;

    [[nodiscard]] int dofs_per_node() const { return physics.dofs_per_node(); }
    [[nodiscard]] std::size_t coarse_size() const { return static_cast<std::size_t>(interp.num_coarse); }
};

/// Fine patches embedded in the coarse complement. Fine interface nodes that do not
/// coincide with a coarse node are slaved to the coarse interface by nodal interpolation.
struct ReferenceModel
{
    TriMesh mesh; ///< merged mesh; node ids are reference node ids
    int dofs_per_node = 1;
    std::vector<int> ref_of_global;              ///< coarse node -> reference node, -1 if absent
    std::vector<std::vector<int>> ref_of_fine;   ///< per patch: fine node -> reference node
    std::vector<int> unknown_of_node;            ///< reference node -> reduced node, -1 if slaved
    std::vector<std::vector<std::pair<int, double>>> constraints; ///< slaved node -> (reference node, weight)
    Assembled system;                            ///< reduced K^R, f^R
    DirichletSolver solver;

    [[nodiscard]] int num_nodes() const { return mesh.num_nodes(); }
};

struct Models
{
    Scenario scenario;
    GlobalModel global;
    std::vector<PatchModel> patches;
    ReferenceModel reference;
};

namespace detail {

struct Side
{
    std::string tag; // matches build_rect_mesh tag names
    Segment seg;
    bool on_boundary;
    std::string domain_side; // domain tag when on_boundary
};

inline std::array<Side, 4> patch_sides(const Scenario& sc, const PatchSpec& p)
{
    const double ex = 1e-9 * sc.hx(), ey = 1e-9 * sc.hy();
    return {{
        {"bottom", {{p.x0, p.y0}, {p.x1, p.y0}}, std::abs(p.y0 - sc.y0) <= ey, "bottom"},
        {"right", {{p.x1, p.y0}, {p.x1, p.y1}}, std::abs(p.x1 - sc.x1) <= ex, "right"},
        {"top", {{p.x0, p.y1}, {p.x1, p.y1}}, std::abs(p.y1 - sc.y1) <= ey, "top"},
        {"left", {{p.x0, p.y0}, {p.x0, p.y1}}, std::abs(p.x0 - sc.x0) <= ex, "left"},
    }};
}

inline bool is_dirichlet_side(const Scenario& sc, const std::string& side)
{
    return std::find(sc.dirichlet.begin(), sc.dirichlet.end(), side) != sc.dirichlet.end();
}

inline std::vector<int> sorted_unique(std::vector<int> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::vector<int> node_dofs(std::span<const int> nodes, int dpn)
{
    std::vector<int> dofs;
    dofs.reserve(nodes.size() * static_cast<std::size_t>(dpn));
    for (int v : nodes)
        for (int c = 0; c < dpn; ++c)
            dofs.push_back(v * dpn + c);
    return dofs;
}

inline bool contains(std::span<const int> sorted, int v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

inline int lattice_index(double v, double origin, double h) { return static_cast<int>(std::lround((v - origin) / h)); }

inline GlobalModel build_global(const Scenario& sc)
{
    GlobalModel gm;
    gm.mesh = build_rect_mesh(sc.x0, sc.y0, sc.x1, sc.y1, sc.nx, sc.ny);
    gm.physics = sc.physics;
    gm.physics.by_tag.clear();
    const int dpn = gm.dofs_per_node();

    std::vector<int> dir;
    for (const auto& side : sc.dirichlet)
    {
        const auto& ids = gm.mesh.nodes_tagged(side);
        dir.insert(dir.end(), ids.begin(), ids.end());
    }
    gm.dirichlet_nodes = sorted_unique(std::move(dir));
    gm.system = assemble(gm.mesh, gm.physics);
    gm.solver = DirichletSolver(gm.system.K, make_dofmap(gm.mesh.num_nodes(), dpn, gm.dirichlet_nodes));

    gm.patch_of_elem.assign(static_cast<std::size_t>(gm.mesh.num_tris()), -1);
    for (int e = 0; e < gm.mesh.num_tris(); ++e)
    {
        const Point c = centroid(gm.mesh, e);
        for (std::size_t s = 0; s < sc.patches.size(); ++s)
        {
            const auto& p = sc.patches[s];
            if (c.x > p.x0 && c.x < p.x1 && c.y > p.y0 && c.y < p.y1)
                gm.patch_of_elem[e] = static_cast<int>(s);
        }
        if (gm.patch_of_elem[e] < 0)
            gm.complement_elems.push_back(e);
    }
    gm.complement_present = !gm.complement_elems.empty();
    gm.complement = assemble_elements(gm.mesh, gm.physics, gm.complement_elems);

    std::vector<int> gamma;
    for (const auto& p : sc.patches)
    {
        std::vector<int> local;
        for (const auto& side : patch_sides(sc, p))
        {
            if (side.on_boundary)
                continue;
            for (int v : nodes_on_segment(gm.mesh, side.seg.a, side.seg.b).gamma_nodes)
                if (!contains(gm.dirichlet_nodes, v))
                    local.push_back(v);
        }
        local = sorted_unique(std::move(local));
        gamma.insert(gamma.end(), local.begin(), local.end());
        gm.patch_coarse_nodes.push_back(std::move(local));
    }
    gm.gamma_nodes = sorted_unique(std::move(gamma));
    gm.gamma_trace.domain_dofs = node_dofs(gm.gamma_nodes, dpn);

    for (const auto& local : gm.patch_coarse_nodes)
    {
        AssemblyMap a;
        for (int v : local)
        {
            const int g = static_cast<int>(std::lower_bound(gm.gamma_nodes.begin(), gm.gamma_nodes.end(), v) -
                                           gm.gamma_nodes.begin());
            for (int c = 0; c < dpn; ++c)
                a.local_to_global.push_back(g * dpn + c);
        }
        gm.patch_maps.push_back(std::move(a));
    }
    return gm;
}

inline PatchModel build_patch(const Scenario& sc, const GlobalModel& gm, int s)
{
    const PatchSpec& spec = sc.patches[s];
    PatchModel pm;
    pm.id = s;
    pm.spec = spec;
    const int cx = lattice_index(spec.x1, sc.x0, sc.hx()) - lattice_index(spec.x0, sc.x0, sc.hx());
    const int cy = lattice_index(spec.y1, sc.y0, sc.hy()) - lattice_index(spec.y0, sc.y0, sc.hy());
    pm.mesh = refine_uniform(build_rect_mesh(spec.x0, spec.y0, spec.x1, spec.y1, cx, cy), spec.refine);

    pm.physics = sc.physics;
    pm.physics.by_tag.clear();
    for (std::size_t k = 0; k < spec.inclusions.size(); ++k)
    {
        const auto& inc = spec.inclusions[k];
        const std::string tag = "inclusion_" + std::to_string(k);
        pm.mesh = tag_disk(std::move(pm.mesh), inc.cx, inc.cy, inc.radius, tag);
        Material m = sc.physics.base;
        m.conductivity /= inc.ratio;
        m.young /= inc.ratio;
        pm.physics.by_tag[tag] = m;
    }
    const int dpn = pm.dofs_per_node();

    std::vector<int> dir;
    std::vector<int> iface;
    for (const auto& side : patch_sides(sc, spec))
    {
        if (side.on_boundary)
        {
            if (is_dirichlet_side(sc, side.domain_side))
            {
                const auto& ids = pm.mesh.nodes_tagged(side.tag);
                dir.insert(dir.end(), ids.begin(), ids.end());
            }
            continue;
        }
        const InterfaceDesc coarse = nodes_on_segment(gm.mesh, side.seg.a, side.seg.b);
        const InterfaceDesc fine = nodes_on_segment(pm.mesh, side.seg.a, side.seg.b);
        const InterpOp J = build_interp(coarse, fine, 1);
        for (std::size_t r = 0; r < fine.gamma_nodes.size(); ++r)
        {
            std::vector<std::pair<int, double>> w;
            for (const auto& [col, weight] : J.rows[r])
                w.emplace_back(coarse.gamma_nodes[col], weight);
            pm.side_constraints.emplace(fine.gamma_nodes[r], std::move(w));
            iface.push_back(fine.gamma_nodes[r]);
        }
    }
    pm.dirichlet_nodes = sorted_unique(std::move(dir));
    iface = sorted_unique(std::move(iface));
    for (int v : iface)
        if (!contains(pm.dirichlet_nodes, v))
            pm.interface_nodes.push_back(v);

    pm.system = assemble(pm.mesh, pm.physics);
    std::vector<int> fixed = pm.dirichlet_nodes;
    fixed.insert(fixed.end(), pm.interface_nodes.begin(), pm.interface_nodes.end());
    DofMap dm = make_dofmap(pm.mesh.num_nodes(), dpn, sorted_unique(std::move(fixed)));

    pm.fine_trace.domain_dofs = node_dofs(pm.interface_nodes, dpn);
    for (int d : pm.fine_trace.domain_dofs)
        pm.interface_fixed_slot.push_back(
            static_cast<int>(std::lower_bound(dm.fixed_dofs.begin(), dm.fixed_dofs.end(), d) - dm.fixed_dofs.begin()));

    // restricted interpolation: columns are the patch's coarse interface dofs; Dirichlet
    // masters carry zero data and are dropped
    const auto& coarse_nodes = gm.patch_coarse_nodes[s];
    pm.interp.num_coarse = static_cast<int>(coarse_nodes.size()) * dpn;
    for (int v : pm.interface_nodes)
    {
        const auto& w = pm.side_constraints.at(v);
        for (int c = 0; c < dpn; ++c)
        {
            std::vector<InterpOp::Weight> row;
            for (const auto& [cnode, weight] : w)
            {
                auto it = std::lower_bound(coarse_nodes.begin(), coarse_nodes.end(), cnode);
                if (it != coarse_nodes.end() && *it == cnode)
                    row.push_back({static_cast<int>(it - coarse_nodes.begin()) * dpn + c, weight});
            }
            pm.interp.rows.push_back(std::move(row));
        }
    }

    pm.solver = DirichletSolver(pm.system.K, std::move(dm));
    return pm;
}

inline bool is_coincident(const std::vector<std::pair<int, double>>& w)
{
    return w.size() == 1 && w[0].second == 1.0;
}

inline ReferenceModel build_reference(const Scenario& sc, const GlobalModel& gm, const std::vector<PatchModel>& pms)
{
    ReferenceModel rm;
    const int dpn = gm.dofs_per_node();
    rm.dofs_per_node = dpn;

    // coarse nodes kept: complement element nodes and every coarse node on an interface side
    std::vector<char> keep(static_cast<std::size_t>(gm.mesh.num_nodes()), 0);
    for (int e : gm.complement_elems)
        for (int v : gm.mesh.tris[e])
            keep[v] = 1;
    for (const auto& pm : pms)
        for (const auto& [fine, w] : pm.side_constraints)
            for (const auto& [cnode, weight] : w)
                keep[cnode] = 1;

    rm.ref_of_global.assign(keep.size(), -1);
    for (int v = 0; v < gm.mesh.num_nodes(); ++v)
        if (keep[v])
        {
            rm.ref_of_global[v] = rm.mesh.num_nodes();
            rm.mesh.nodes.push_back(gm.mesh.nodes[v]);
            rm.constraints.emplace_back();
        }
    for (int e : gm.complement_elems)
    {
        const auto& t = gm.mesh.tris[e];
        rm.mesh.tris.push_back({rm.ref_of_global[t[0]], rm.ref_of_global[t[1]], rm.ref_of_global[t[2]]});
    }

    std::vector<int> dirichlet_ref;
    for (int v : gm.dirichlet_nodes)
        if (rm.ref_of_global[v] >= 0)
            dirichlet_ref.push_back(rm.ref_of_global[v]);

    auto& hanging = rm.mesh.node_tags["hanging"];
    for (const auto& pm : pms)
    {
        std::vector<int> map(static_cast<std::size_t>(pm.mesh.num_nodes()), -1);
        for (int v = 0; v < pm.mesh.num_nodes(); ++v)
        {
            auto it = pm.side_constraints.find(v);
            if (it != pm.side_constraints.end() && is_coincident(it->second))
            {
                map[v] = rm.ref_of_global[it->second[0].first];
                continue;
            }
            map[v] = rm.mesh.num_nodes();
            rm.mesh.nodes.push_back(pm.mesh.nodes[v]);
            rm.constraints.emplace_back();
            if (it != pm.side_constraints.end())
            {
                for (const auto& [cnode, weight] : it->second)
                    rm.constraints.back().emplace_back(rm.ref_of_global[cnode], weight);
                hanging.push_back(map[v]);
            }
            else if (contains(pm.dirichlet_nodes, v))
                dirichlet_ref.push_back(map[v]);
        }
        auto& etag = rm.mesh.elem_tags["patch_" + std::to_string(pm.id)];
        for (const auto& t : pm.mesh.tris)
        {
            etag.push_back(rm.mesh.num_tris());
            rm.mesh.tris.push_back({map[t[0]], map[t[1]], map[t[2]]});
        }
        rm.ref_of_fine.push_back(std::move(map));
    }

    rm.unknown_of_node.assign(static_cast<std::size_t>(rm.num_nodes()), -1);
    int nunk = 0;
    for (int v = 0; v < rm.num_nodes(); ++v)
        if (rm.constraints[v].empty())
            rm.unknown_of_node[v] = nunk++;

    // dof expansion through the interpolation constraints
    auto expand = [&](int ref_node, int comp, auto&& emit) {
        if (rm.constraints[ref_node].empty())
            emit(rm.unknown_of_node[ref_node] * dpn + comp, 1.0);
        else
            for (const auto& [master, w] : rm.constraints[ref_node])
                emit(rm.unknown_of_node[master] * dpn + comp, w);
    };

    std::vector<Triplet> trip;
    Vector f(static_cast<std::size_t>(nunk * dpn), 0.0);
    auto scatter = [&](const Assembled& sys, const std::vector<int>& node_map) {
        for (int i = 0; i < sys.K.rows; ++i)
        {
            const int ri = node_map[i / dpn];
            if (ri < 0)
                continue;
            expand(ri, i % dpn, [&](int a, double wa) { f[a] += wa * sys.f[i]; });
            for (int k = sys.K.row_ptr[i]; k < sys.K.row_ptr[i + 1]; ++k)
            {
                const int j = sys.K.col_idx[k];
                const int rj = node_map[j / dpn];
                const double v = sys.K.values[k];
                expand(ri, i % dpn, [&](int a, double wa) {
                    expand(rj, j % dpn, [&](int b, double wb) { trip.push_back({a, b, wa * wb * v}); });
                });
            }
        }
    };
    scatter(gm.complement, rm.ref_of_global);
    for (std::size_t s = 0; s < pms.size(); ++s)
        scatter(pms[s].system, rm.ref_of_fine[s]);

    rm.system.K = from_triplets(nunk * dpn, std::move(trip));
    rm.system.f = std::move(f);
    std::vector<int> dir_unk;
    for (int v : sorted_unique(std::move(dirichlet_ref)))
        if (rm.unknown_of_node[v] >= 0)
            dir_unk.push_back(rm.unknown_of_node[v]);
    rm.solver = DirichletSolver(rm.system.K, make_dofmap(nunk, dpn, sorted_unique(std::move(dir_unk))));
    (void)sc;
    return rm;
}

} // namespace detail

/// Builds the global, patch and reference models of a validated scenario.
inline Models build_models(const Scenario& sc)
{
    validate(sc);
    Models m;
    m.scenario = sc;
    m.global = detail::build_global(sc);
    for (int s = 0; s < static_cast<int>(sc.patches.size()); ++s)
        m.patches.push_back(detail::build_patch(sc, m.global, s));
    m.reference = detail::build_reference(sc, m.global, m.patches);
    return m;
}

/// Direct solve of the reference problem; values on every reference mesh node (node-major).
inline Vector reference_solve(const ReferenceModel& rm)
{
    const int dpn = rm.dofs_per_node;
    const auto& dm = rm.solver.dofmap();
    const Vector g(dm.fixed_dofs.size(), 0.0);
    const Vector red = rm.solver.solve(rm.system.f, g);
    Vector u(static_cast<std::size_t>(rm.num_nodes() * dpn), 0.0);
    for (int v = 0; v < rm.num_nodes(); ++v)
        for (int c = 0; c < dpn; ++c)
        {
            if (rm.constraints[v].empty())
                u[v * dpn + c] = red[rm.unknown_of_node[v] * dpn + c];
            else
                for (const auto& [master, w] : rm.constraints[v])
                    u[v * dpn + c] += w * red[rm.unknown_of_node[master] * dpn + c];
        }
    return u;
}

} // namespace glocal
