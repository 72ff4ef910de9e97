#include <gtest/gtest.h>

#include "glocal/transfer.hpp"
#include "oracles.hpp"

using namespace glocal;

namespace {

InterfaceDesc line(std::vector<double> arcs)
{
    InterfaceDesc d;
    for (std::size_t i = 0; i < arcs.size(); ++i)
        d.gamma_nodes.push_back(static_cast<int>(i));
    d.arc_coords = std::move(arcs);
    return d;
}

InterfaceDesc uniform(int n, double length)
{
    std::vector<double> a;
    for (int i = 0; i <= n; ++i)
        a.push_back(length * i / n);
    return line(a);
}

} // namespace

TEST(Trace, GatherInInterfaceOrder)
{
    const TraceMap t{{2, 5, 8}};
    Vector u(9);
    std::iota(u.begin(), u.end(), 0.0);
    EXPECT_EQ(trace(u, t), (Vector{2, 5, 8}));
    EXPECT_EQ(trace(Vector(9, 1.0), t), (Vector{1, 1, 1}));
}

TEST(Trace, RoundTripAndZeroExtension)
{
    const TraceMap t{{7, 1, 4}};
    const Vector v{0.5, -1.0, 2.0};
    const Vector e = extend_by_zero(v, t, 9);
    EXPECT_EQ(trace(e, t), v);
    EXPECT_DOUBLE_EQ(vec::norm2(e), vec::norm2(v));
    EXPECT_EQ(extend_by_zero(Vector{0, 0, 0}, t, 9), Vector(9, 0.0));
    const Vector unit = extend_by_zero(Vector{0, 1, 0}, t, 9);
    for (int i = 0; i < 9; ++i)
        EXPECT_EQ(unit[i], i == 1 ? 1.0 : 0.0);
}

TEST(Trace, AdjointToExtension)
{
    std::mt19937_64 rng(4);
    const TraceMap t{{0, 3, 4, 9, 11}};
    for (int k = 0; k < 10; ++k)
    {
        const Vector u = oracle::random_vector(12, rng);
        const Vector v = oracle::random_vector(5, rng);
        EXPECT_NEAR(vec::dot(trace(u, t), v), vec::dot(u, extend_by_zero(v, t, 12)), 1e-14);
    }
}

TEST(Trace, InvalidMapsRejected)
{
    EXPECT_THROW(validate(TraceMap{{1, 1}}, 4), std::invalid_argument);
    EXPECT_THROW(validate(TraceMap{{4}}, 4), std::invalid_argument);
}

TEST(Assembly, DisjointPatchesConcatenate)
{
    Vector acc(4, 0.0);
    assemble_to_global(Vector{1, 2}, AssemblyMap{{0, 1}}, acc);
    assemble_to_global(Vector{3, 4}, AssemblyMap{{2, 3}}, acc);
    EXPECT_EQ(acc, (Vector{1, 2, 3, 4}));
}

TEST(Assembly, ZeroLeavesAccumulatorUnchanged)
{
    Vector acc{1, 2, 3};
    assemble_to_global(Vector{0, 0}, AssemblyMap{{2, 0}}, acc);
    EXPECT_EQ(acc, (Vector{1, 2, 3}));
}

TEST(Assembly, SharedCornerAccumulates)
{
    Vector acc(3, 0.0);
    assemble_to_global(Vector{1, 2}, AssemblyMap{{0, 1}}, acc);
    assemble_to_global(Vector{3, 7}, AssemblyMap{{1, 2}}, acc);
    EXPECT_EQ(acc[1], 5.0);
    EXPECT_EQ(restrict_from_global(acc, AssemblyMap{{2, 1}}), (Vector{7, 5}));
}

TEST(Interp, IdenticalInterfacesGiveIdentity)
{
    const InterfaceDesc d = uniform(4, 2.0);
    const InterpOp J = build_interp(d, d, 2);
    ASSERT_EQ(J.num_fine(), 10);
    for (int i = 0; i < 10; ++i)
    {
        ASSERT_EQ(J.rows[i].size(), 1u);
        EXPECT_EQ(J.rows[i][0].col, i);
        EXPECT_EQ(J.rows[i][0].w, 1.0);
    }
}

TEST(Interp, MidpointHalfWeights)
{
    const InterpOp J = build_interp(line({0, 1}), line({0, 0.5, 1}), 1);
    ASSERT_EQ(J.rows[1].size(), 2u);
    EXPECT_DOUBLE_EQ(J.rows[1][0].w, 0.5);
    EXPECT_DOUBLE_EQ(J.rows[1][1].w, 0.5);
}

TEST(Interp, AffineReproduction)
{
    const InterfaceDesc c = line({0.0, 0.4, 1.1, 2.0});
    const InterfaceDesc f = uniform(16, 2.0);
    const InterpOp J = build_interp(c, f, 1);
    Vector vc;
    for (double s : c.arc_coords)
        vc.push_back(3.0 - 1.7 * s);
    const Vector vf = interp_apply(J, vc);
    for (std::size_t i = 0; i < vf.size(); ++i)
        EXPECT_NEAR(vf[i], 3.0 - 1.7 * f.arc_coords[i], 1e-14);
}

TEST(Interp, RowSumsAndWeightRange)
{
    const InterpOp J = build_interp(uniform(3, 1.5), uniform(12, 1.5), 2);
    for (const auto& row : J.rows)
    {
        double s = 0.0;
        for (const auto& w : row)
        {
            EXPECT_GE(w.w, 0.0);
            EXPECT_LE(w.w, 1.0);
            s += w.w;
        }
        EXPECT_NEAR(s, 1.0, 1e-14);
    }
    const Vector fine = interp_apply(J, Vector(static_cast<std::size_t>(J.num_coarse), 4.25));
    for (double v : fine)
        EXPECT_NEAR(v, 4.25, 1e-14);
}

TEST(Interp, TransposeIsAdjoint)
{
    std::mt19937_64 rng(8);
    const InterpOp J = build_interp(uniform(3, 1.0), uniform(12, 1.0), 2);
    for (int k = 0; k < 10; ++k)
    {
        const Vector v = oracle::random_vector(static_cast<std::size_t>(J.num_coarse), rng);
        const Vector w = oracle::random_vector(J.rows.size(), rng);
        EXPECT_NEAR(vec::dot(interp_apply(J, v), w), vec::dot(v, interp_transpose_apply(J, w)), 1e-14);
    }
}

TEST(Interp, TotalForcePreserved)
{
    std::mt19937_64 rng(12);
    const InterpOp J = build_interp(line({0.0, 0.3, 1.0}), uniform(20, 1.0), 1);
    const Vector w = oracle::random_vector(J.rows.size(), rng);
    const Vector q = interp_transpose_apply(J, w);
    double brute_w = 0.0, brute_q = 0.0;
    for (double x : w)
        brute_w += x;
    for (double x : q)
        brute_q += x;
    EXPECT_NEAR(brute_q, brute_w, 1e-14);
}

TEST(Interp, RangeMismatchRejected)
{
    EXPECT_THROW(build_interp(uniform(2, 1.0), uniform(4, 1.5), 1), std::invalid_argument);
    EXPECT_THROW(build_interp(line({0, 1}), line({0, 0.5, 0.5, 1}), 1), std::invalid_argument);
}
