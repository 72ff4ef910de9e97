#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glocal/common.hpp"
#include "glocal/mesh.hpp"
#include "glocal/sparse.hpp"

namespace glocal {

enum class PhysicsKind
{
    thermal,
    elasticity
};

/// Per-element constitutive data. Thermal problems read `conductivity`,
/// elasticity reads `young` and `poisson`.
struct Material
{
    double conductivity = 1.0;
    double young = 1.0;
    double poisson = 0.0;
};

struct Physics
{
    PhysicsKind kind = PhysicsKind::thermal;
    Material base;
    std::map<std::string, Material> by_tag;
    /// Constant volumetric source; thermal uses source[0], elasticity the body force vector.
    std::array<double, 2> source{0.0, 0.0};

    [[nodiscard]] int dofs_per_node() const { return kind == PhysicsKind::thermal ? 1 : 2; }
};

inline void validate(const Material& m, PhysicsKind kind)
{
    if (kind == PhysicsKind::thermal)
        require(m.conductivity > 0.0, "conductivity must be positive");
    else
    {
        require(m.young > 0.0, "Young modulus must be positive");
        require(m.poisson >= 0.0 && m.poisson < 0.5, "Poisson ratio must lie in [0, 0.5)");
    }
}

/// Lame constants (lambda, mu). With these, the 2D constitutive matrix below is plane strain.
inline std::pair<double, double> lame(double young, double poisson)
{
    const double lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    const double mu = young / (2.0 * (1.0 + poisson));
    return {lambda, mu};
}

/// Dense element matrix, row-major, size x size.
struct ElementMatrix
{
    int size = 0;
    std::array<double, 36> a{};

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * size + j)]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * size + j)]; }
};

/// P1 stiffness of one triangle: 3x3 (thermal) or 6x6 (elasticity, dofs ux0,uy0,ux1,...).
inline ElementMatrix element_stiffness(const std::array<Point, 3>& p, const Physics& phys, const Material& mat)
{
    const double area = signed_area(p[0], p[1], p[2]);
    if (!(area > 0.0))
        throw std::invalid_argument("element_stiffness: degenerate or clockwise triangle");
    validate(mat, phys.kind);

    std::array<double, 3> bx{}, by{};
    for (int i = 0; i < 3; ++i)
    {
        const Point& pj = p[(i + 1) % 3];
        const Point& pk = p[(i + 2) % 3];
        bx[i] = (pj.y - pk.y) / (2.0 * area);
        by[i] = (pk.x - pj.x) / (2.0 * area);
    }

    ElementMatrix K;
    if (phys.kind == PhysicsKind::thermal)
    {
        K.size = 3;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                K(i, j) = mat.conductivity * area * (bx[i] * bx[j] + by[i] * by[j]);
        return K;
    }

    const auto [lambda, mu] = lame(mat.young, mat.poisson);
    const double d11 = lambda + 2.0 * mu, d12 = lambda, d33 = mu;
    K.size = 6;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
        {
            // B_i^T D B_j with B_i = [[bx,0],[0,by],[by,bx]]
            K(2 * i, 2 * j) = area * (d11 * bx[i] * bx[j] + d33 * by[i] * by[j]);
            K(2 * i, 2 * j + 1) = area * (d12 * bx[i] * by[j] + d33 * by[i] * bx[j]);
            K(2 * i + 1, 2 * j) = area * (d12 * by[i] * bx[j] + d33 * bx[i] * by[j]);
            K(2 * i + 1, 2 * j + 1) = area * (d11 * by[i] * by[j] + d33 * bx[i] * bx[j]);
        }
    return K;
}

/// Material of every element: base, overridden by element tags in tag-name order.
inline std::vector<Material> element_materials(const TriMesh& m, const Physics& phys)
{
    std::vector<Material> mats(static_cast<std::size_t>(m.num_tris()), phys.base);
    for (const auto& [tag, mat] : phys.by_tag)
    {
        auto it = m.elem_tags.find(tag);
        if (it == m.elem_tags.end())
            throw std::invalid_argument("assemble: unknown coefficient tag '" + tag + "'");
        for (int e : it->second)
            mats[e] = mat;
    }
    return mats;
}

struct Assembled
{
    CsrMatrix K;
    Vector f;
};

/// Assembles stiffness and load over a subset of elements; dofs are numbered over all mesh nodes.
inline Assembled assemble_elements(const TriMesh& m, const Physics& phys, std::span<const int> elements)
{
    const int dpn = phys.dofs_per_node();
    const int ndof = m.num_nodes() * dpn;
    const auto mats = element_materials(m, phys);

    std::vector<Triplet> trip;
    trip.reserve(elements.size() * static_cast<std::size_t>(9 * dpn * dpn));
    Vector f(static_cast<std::size_t>(ndof), 0.0);
    for (int e : elements)
    {
        const auto& t = m.tris[e];
        const std::array<Point, 3> p{m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]};
        const ElementMatrix Ke = element_stiffness(p, phys, mats[e]);
        const double area = signed_area(p[0], p[1], p[2]);
        for (int a = 0; a < 3; ++a)
            for (int ca = 0; ca < dpn; ++ca)
            {
                const int row = t[a] * dpn + ca;
                f[row] += phys.source[ca] * area / 3.0;
                for (int b = 0; b < 3; ++b)
                    for (int cb = 0; cb < dpn; ++cb)
                        trip.push_back({row, t[b] * dpn + cb, Ke(a * dpn + ca, b * dpn + cb)});
            }
    }
    return {from_triplets(ndof, std::move(trip)), std::move(f)};
}

inline Assembled assemble(const TriMesh& m, const Physics& phys)
{
    std::vector<int> all(static_cast<std::size_t>(m.num_tris()));
    std::iota(all.begin(), all.end(), 0);
    return assemble_elements(m, phys, all);
}

/// Partition of the dofs into Dirichlet-fixed and free sets.
struct DofMap
{
    int dofs_per_node = 1;
    int num_dofs = 0;
    std::vector<int> fixed_dofs;
    std::vector<int> free_dofs;
};

/// Every dof of the listed nodes is fixed.
inline DofMap make_dofmap(int num_nodes, int dofs_per_node, std::span<const int> fixed_nodes)
{
    DofMap dm;
    dm.dofs_per_node = dofs_per_node;
    dm.num_dofs = num_nodes * dofs_per_node;
    std::vector<char> fixed(static_cast<std::size_t>(dm.num_dofs), 0);
    for (int v : fixed_nodes)
    {
        require(v >= 0 && v < num_nodes, "make_dofmap: node out of range");
        for (int c = 0; c < dofs_per_node; ++c)
            fixed[v * dofs_per_node + c] = 1;
    }
    for (int d = 0; d < dm.num_dofs; ++d)
        (fixed[d] ? dm.fixed_dofs : dm.free_dofs).push_back(d);
    return dm;
}

/// Free-dof system after eliminating the Dirichlet dofs.
struct DirichletSplit
{
    CsrMatrix K_ff;
    CsrMatrix K_fc;
    Vector rhs_f;
};

namespace detail {

inline std::vector<int> position_in(int n, std::span<const int> subset)
{
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < subset.size(); ++k)
        pos[subset[k]] = static_cast<int>(k);
    return pos;
}

inline std::pair<CsrMatrix, CsrMatrix> split_blocks(const CsrMatrix& K, const DofMap& dm)
{
    const auto free_pos = position_in(dm.num_dofs, dm.free_dofs);
    const auto fixed_pos = position_in(dm.num_dofs, dm.fixed_dofs);
    std::vector<Triplet> ff, fc;
    for (std::size_t r = 0; r < dm.free_dofs.size(); ++r)
    {
        const int i = dm.free_dofs[r];
        for (int k = K.row_ptr[i]; k < K.row_ptr[i + 1]; ++k)
        {
            const int j = K.col_idx[k];
            if (free_pos[j] >= 0)
                ff.push_back({static_cast<int>(r), free_pos[j], K.values[k]});
            else
                fc.push_back({static_cast<int>(r), fixed_pos[j], K.values[k]});
        }
    }
    const int nf = static_cast<int>(dm.free_dofs.size());
    const int nc = static_cast<int>(dm.fixed_dofs.size());
    return {from_triplets(nf, nf, std::move(ff)), from_triplets(nf, nc, std::move(fc))};
}

} // namespace detail

/// K_ff = K restricted to free dofs, rhs_f = f_free - K_fc g.
inline DirichletSplit split_dirichlet(const CsrMatrix& K, std::span<const double> f, const DofMap& dm,
                                      std::span<const double> g)
{
    if (K.rows != dm.num_dofs || static_cast<int>(f.size()) != dm.num_dofs || g.size() != dm.fixed_dofs.size())
        throw std::invalid_argument("split_dirichlet: dimension mismatch");
    auto [K_ff, K_fc] = detail::split_blocks(K, dm);
    Vector rhs(dm.free_dofs.size());
    const Vector kg = matvec(K_fc, g);
    for (std::size_t r = 0; r < rhs.size(); ++r)
        rhs[r] = f[dm.free_dofs[r]] - kg[r];
    return {std::move(K_ff), std::move(K_fc), std::move(rhs)};
}

/// Full vector from free values and Dirichlet data.
inline Vector lift(const DofMap& dm, std::span<const double> u_free, std::span<const double> g)
{
    if (u_free.size() != dm.free_dofs.size() || g.size() != dm.fixed_dofs.size())
        throw std::invalid_argument("lift: dimension mismatch");
    Vector u(static_cast<std::size_t>(dm.num_dofs), 0.0);
    for (std::size_t k = 0; k < u_free.size(); ++k)
        u[dm.free_dofs[k]] = u_free[k];
    for (std::size_t k = 0; k < g.size(); ++k)
        u[dm.fixed_dofs[k]] = g[k];
    return u;
}

/// Factor-once Dirichlet solver: K_ff is factorized at construction and reused.
class DirichletSolver
{
public:
    DirichletSolver() = default;

    DirichletSolver(const CsrMatrix& K, DofMap dm) : m_dm(std::move(dm))
    {
        require(K.rows == m_dm.num_dofs, "DirichletSolver: dimension mismatch");
        auto [K_ff, K_fc] = detail::split_blocks(K, m_dm);
        m_factor = factorize(K_ff);
        m_K_fc = std::move(K_fc);
    }

    [[nodiscard]] const DofMap& dofmap() const { return m_dm; }

    /// Full solution for load f (all dofs) and Dirichlet values g (fixed dofs order).
    [[nodiscard]] Vector solve(std::span<const double> f, std::span<const double> g) const
    {
        if (static_cast<int>(f.size()) != m_dm.num_dofs || g.size() != m_dm.fixed_dofs.size())
            throw std::invalid_argument("DirichletSolver::solve: dimension mismatch");
        Vector rhs(m_dm.free_dofs.size());
        const Vector kg = matvec(m_K_fc, g);
        for (std::size_t r = 0; r < rhs.size(); ++r)
            rhs[r] = f[m_dm.free_dofs[r]] - kg[r];
        return lift(m_dm, glocal::solve(m_factor, rhs), g);
    }

private:
    DofMap m_dm;
    CholFactor m_factor;
    CsrMatrix m_K_fc;
};

/// (K u - f) on every dof of the listed nodes, node-major.
inline Vector reaction(const CsrMatrix& K, std::span<const double> f, std::span<const double> u,
                       std::span<const int> nodes, const DofMap& dm)
{
    if (K.rows != dm.num_dofs || static_cast<int>(u.size()) != dm.num_dofs || static_cast<int>(f.size()) != dm.num_dofs)
        throw std::invalid_argument("reaction: dimension mismatch");
    const int dpn = dm.dofs_per_node;
    Vector out;
    out.reserve(nodes.size() * static_cast<std::size_t>(dpn));
    for (int v : nodes)
    {
        if (v < 0 || (v + 1) * dpn > dm.num_dofs)
            throw std::out_of_range("reaction: node " + std::to_string(v) + " outside mesh");
        for (int c = 0; c < dpn; ++c)
        {
            const int i = v * dpn + c;
            double s = -f[i];
            for (int k = K.row_ptr[i]; k < K.row_ptr[i + 1]; ++k)
                s += K.values[k] * u[K.col_idx[k]];
            out.push_back(s);
        }
    }
    return out;
}

} // namespace glocal
