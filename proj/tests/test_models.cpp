#include <gtest/gtest.h>

#include "glocal/coupling.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace glocal;

namespace {

bool same_point(const Point& a, const Point& b) { return std::abs(a.x - b.x) < 1e-12 && std::abs(a.y - b.y) < 1e-12; }

/// Monolithic reference solve built densely from the element lists of the coarse
/// complement and of the fine patches, with hanging nodes eliminated by C^T K C.
Vector dense_reference(const Models& m)
{
    const ReferenceModel& rm = m.reference;
    const int dpn = rm.dofs_per_node;
    const int n = rm.num_nodes() * dpn;
    oracle::Dense K(n, std::vector<double>(n, 0.0));
    Vector f(n, 0.0);
    auto scatter = [&](const TriMesh& mesh, const Physics& phys, int e, const std::vector<int>& to_ref) {
        const auto mats = element_materials(mesh, phys);
        const auto& t = mesh.tris[e];
        const ElementMatrix Ke =
            element_stiffness({mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]}, phys, mats[e]);
        const double area = tri_area(mesh, e);
        for (int a = 0; a < 3; ++a)
            for (int ca = 0; ca < dpn; ++ca)
            {
                const int I = to_ref[t[a]] * dpn + ca;
                f[I] += phys.source[ca] * area / 3.0;
                for (int b = 0; b < 3; ++b)
                    for (int cb = 0; cb < dpn; ++cb)
                        K[I][to_ref[t[b]] * dpn + cb] += Ke(a * dpn + ca, b * dpn + cb);
            }
    };
    for (int e : m.global.complement_elems)
        scatter(m.global.mesh, m.global.physics, e, rm.ref_of_global);
    for (std::size_t s = 0; s < m.patches.size(); ++s)
        for (int e = 0; e < m.patches[s].mesh.num_tris(); ++e)
            scatter(m.patches[s].mesh, m.patches[s].physics, e, rm.ref_of_fine[s]);

    // C: reference dof -> independent dofs (masters are never Dirichlet-free hanging nodes)
    std::vector<int> indep;
    std::vector<int> col_of(rm.num_nodes(), -1);
    std::set<int> dirichlet;
    for (const auto& side : m.scenario.dirichlet)
        for (int v = 0; v < rm.num_nodes(); ++v)
        {
            const Point p = rm.mesh.nodes[v];
            const bool on = (side == "left" && std::abs(p.x - m.scenario.x0) < 1e-12) ||
                            (side == "right" && std::abs(p.x - m.scenario.x1) < 1e-12) ||
                            (side == "bottom" && std::abs(p.y - m.scenario.y0) < 1e-12) ||
                            (side == "top" && std::abs(p.y - m.scenario.y1) < 1e-12);
            if (on)
                dirichlet.insert(v);
        }
    for (int v = 0; v < rm.num_nodes(); ++v)
        if (rm.constraints[v].empty() && !dirichlet.count(v))
        {
            col_of[v] = static_cast<int>(indep.size());
            indep.push_back(v);
        }
    const int nr = static_cast<int>(indep.size()) * dpn;
    oracle::Dense C(n, std::vector<double>(nr, 0.0));
    for (int v = 0; v < rm.num_nodes(); ++v)
        for (int c = 0; c < dpn; ++c)
        {
            if (col_of[v] >= 0)
                C[v * dpn + c][col_of[v] * dpn + c] = 1.0;
            else
                for (const auto& [master, w] : rm.constraints[v])
                    if (col_of[master] >= 0)
                        C[v * dpn + c][col_of[master] * dpn + c] += w;
        }
    oracle::Dense KC(n, std::vector<double>(nr, 0.0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (K[i][k] != 0.0)
                for (int j = 0; j < nr; ++j)
                    KC[i][j] += K[i][k] * C[k][j];
    oracle::Dense Kr(nr, std::vector<double>(nr, 0.0));
    Vector fr(nr, 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < nr; ++i)
            if (C[k][i] != 0.0)
            {
                fr[i] += C[k][i] * f[k];
                for (int j = 0; j < nr; ++j)
                    Kr[i][j] += C[k][i] * KC[k][j];
            }
    const Vector x = oracle::dense_solve(Kr, fr);
    Vector u(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nr; ++j)
            u[i] += C[i][j] * x[j];
    return u;
}

} // namespace

TEST(BuildModels, NoPatchReferenceEqualsGlobal)
{
    const Models m = build_models(support::thermal_box());
    EXPECT_TRUE(m.patches.empty());
    EXPECT_TRUE(m.global.complement_present);
    EXPECT_EQ(m.global.gamma_size(), 0u);
    const Vector ug = global_solve(m.global, Vector{});
    const Vector ur = reference_solve(m.reference);
    ASSERT_EQ(m.reference.num_nodes(), m.global.mesh.num_nodes());
    for (int v = 0; v < m.global.mesh.num_nodes(); ++v)
        EXPECT_NEAR(ur[m.reference.ref_of_global[v]], ug[v], 1e-12);
}

TEST(BuildModels, TwoPatchScenario)
{
    const Models m = build_models(support::two_patch());
    ASSERT_EQ(m.patches.size(), 2u);
    EXPECT_TRUE(m.global.complement_present);
    // gamma is the union of the patch images
    std::set<int> image;
    for (const auto& a : m.global.patch_maps)
        image.insert(a.local_to_global.begin(), a.local_to_global.end());
    EXPECT_EQ(image.size(), m.global.gamma_size());
    for (const auto& pm : m.patches)
    {
        EXPECT_EQ(pm.interp.num_fine(), static_cast<int>(pm.fine_trace.size()));
        EXPECT_EQ(static_cast<std::size_t>(pm.interp.num_coarse), m.global.patch_maps[pm.id].size());
        EXPECT_FALSE(pm.mesh.elem_tags.at("inclusion_0").empty());
    }
}

TEST(BuildModels, ReferenceMeshRestrictsToSubmeshes)
{
    const Models m = build_models(support::two_patch(1));
    const ReferenceModel& rm = m.reference;
    for (int e : m.global.complement_elems)
        for (int v : m.global.mesh.tris[e])
        {
            ASSERT_GE(rm.ref_of_global[v], 0);
            EXPECT_TRUE(same_point(rm.mesh.nodes[rm.ref_of_global[v]], m.global.mesh.nodes[v]));
        }
    for (std::size_t s = 0; s < m.patches.size(); ++s)
        for (int v = 0; v < m.patches[s].mesh.num_nodes(); ++v)
            EXPECT_TRUE(same_point(rm.mesh.nodes[rm.ref_of_fine[s][v]], m.patches[s].mesh.nodes[v]));
    EXPECT_EQ(rm.mesh.num_tris(),
              static_cast<int>(m.global.complement_elems.size()) + m.patches[0].mesh.num_tris() +
                  m.patches[1].mesh.num_tris());
}

TEST(BuildModels, RefinementZeroPatchStiffnessMatchesGlobal)
{
    Scenario sc = support::thermal_box();
    sc.patches.push_back({1.0, 0.5, 2.5, 1.5, 0, {}});
    const Models m = build_models(sc);
    const PatchModel& pm = m.patches[0];
    // brute force: assemble the global elements whose centroid lies in the patch
    std::vector<int> elems;
    for (int e = 0; e < m.global.mesh.num_tris(); ++e)
    {
        const Point c = centroid(m.global.mesh, e);
        if (c.x > 1.0 && c.x < 2.5 && c.y > 0.5 && c.y < 1.5)
            elems.push_back(e);
    }
    ASSERT_EQ(static_cast<int>(elems.size()), pm.mesh.num_tris());
    const auto Kg = oracle::to_dense(assemble_elements(m.global.mesh, m.global.physics, elems).K);
    const auto Kp = oracle::to_dense(pm.system.K);
    std::vector<int> g_of_p(pm.mesh.num_nodes(), -1);
    for (int v = 0; v < pm.mesh.num_nodes(); ++v)
        for (int w = 0; w < m.global.mesh.num_nodes(); ++w)
            if (same_point(pm.mesh.nodes[v], m.global.mesh.nodes[w]))
                g_of_p[v] = w;
    for (int i = 0; i < pm.mesh.num_nodes(); ++i)
        for (int j = 0; j < pm.mesh.num_nodes(); ++j)
            EXPECT_NEAR(Kp[i][j], Kg[g_of_p[i]][g_of_p[j]], 1e-14);
}

TEST(ReferenceSolve, ZeroDataGivesZero)
{
    Scenario sc = support::two_patch(1);
    sc.physics.source = {0.0, 0.0};
    const Vector u = reference_solve(build_models(sc).reference);
    EXPECT_EQ(vec::norm_inf(u), 0.0);
}

TEST(ReferenceSolve, MatchesDenseMonolithicThermal)
{
    const Models m = build_models(support::two_patch(2));
    const Vector u = reference_solve(m.reference);
    const Vector d = dense_reference(m);
    EXPECT_LE(oracle::max_abs_diff(u, d), 1e-10 * vec::norm_inf(d));
}

TEST(ReferenceSolve, MatchesDenseMonolithicElastic)
{
    Scenario sc = support::two_patch(1);
    sc.physics.kind = PhysicsKind::elasticity;
    sc.physics.base.young = 1.0;
    sc.physics.base.poisson = 0.3;
    sc.physics.source = {0.0, -1.0};
    sc.dirichlet = {"bottom"};
    const Models m = build_models(sc);
    const Vector u = reference_solve(m.reference);
    const Vector d = dense_reference(m);
    EXPECT_LE(oracle::max_abs_diff(u, d), 1e-10 * vec::norm_inf(d));
}

TEST(ReferenceSolve, HangingNodesFollowInterpolation)
{
    const Models m = build_models(support::two_patch(2));
    const ReferenceModel& rm = m.reference;
    const Vector u = reference_solve(rm);
    int hanging = 0;
    for (int v = 0; v < rm.num_nodes(); ++v)
    {
        if (rm.constraints[v].empty())
            continue;
        ++hanging;
        double s = 0.0, wsum = 0.0;
        for (const auto& [master, w] : rm.constraints[v])
        {
            s += w * u[master];
            wsum += w;
        }
        EXPECT_NEAR(wsum, 1.0, 1e-14);
        EXPECT_NEAR(u[v], s, 1e-14);
    }
    EXPECT_GT(hanging, 0);
}

TEST(BuildModels, InvalidPatchesRejected)
{
    Scenario overlap = support::thermal_box();
    overlap.patches.push_back({1.0, 0.5, 2.0, 1.5, 1, {}});
    overlap.patches.push_back({1.5, 0.5, 2.5, 1.5, 1, {}});
    EXPECT_THROW(build_models(overlap), ScenarioError);

    Scenario misaligned = support::thermal_box();
    misaligned.patches.push_back({1.1, 0.5, 2.0, 1.5, 1, {}});
    EXPECT_THROW(build_models(misaligned), ScenarioError);

    Scenario outside = support::thermal_box();
    outside.patches.push_back({3.5, 0.5, 4.5, 1.5, 1, {}});
    EXPECT_THROW(build_models(outside), ScenarioError);
}

TEST(BuildModels, TilingPatchesHaveNoComplement)
{
    const Models m = build_models(support::load("nocomplement"));
    EXPECT_FALSE(m.global.complement_present);
    EXPECT_TRUE(m.global.complement_elems.empty());
    EXPECT_THROW(complement_reaction(m.global, global_solve(m.global, Vector(m.global.gamma_size(), 0.0))),
                 ContractViolation);
}

TEST(BuildModels, MissingDirichletIsSingular)
{
    Scenario sc = support::thermal_box();
    sc.dirichlet.clear();
    EXPECT_THROW(build_models(sc), SingularMatrixError);
}
