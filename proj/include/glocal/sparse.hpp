#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "glocal/common.hpp"

namespace glocal {

struct Triplet
{
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix. Square in most uses; `cols` differs from `rows`
/// only for coupling blocks such as K_fc.
struct CsrMatrix
{
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col_idx;
    std::vector<double> values;

    [[nodiscard]] int n() const { return rows; }
    [[nodiscard]] std::size_t nnz() const { return values.size(); }

    /// Entry (i,j), zero if not stored.
    [[nodiscard]] double at(int i, int j) const
    {
        const auto first = col_idx.begin() + row_ptr[i];
        const auto last = col_idx.begin() + row_ptr[i + 1];
        const auto it = std::lower_bound(first, last, j);
        return (it != last && *it == j) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
    }
};

/// Builds a rows x cols CSR matrix; duplicate (i,j) entries are summed.
inline CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries)
{
    require(rows >= 0 && cols >= 0, "from_triplets: negative dimension");
    for (const auto& t : entries)
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw std::out_of_range("from_triplets: index (" + std::to_string(t.row) + "," +
                                    std::to_string(t.col) + ") out of range");
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });

    CsrMatrix A;
    A.rows = rows;
    A.cols = cols;
    A.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
    for (std::size_t k = 0; k < entries.size();)
    {
        const int i = entries[k].row, j = entries[k].col;
        double v = 0.0;
        for (; k < entries.size() && entries[k].row == i && entries[k].col == j; ++k)
            v += entries[k].value;
        A.col_idx.push_back(j);
        A.values.push_back(v);
        ++A.row_ptr[static_cast<std::size_t>(i) + 1];
    }
    std::partial_sum(A.row_ptr.begin(), A.row_ptr.end(), A.row_ptr.begin());
    return A;
}

inline CsrMatrix from_triplets(int n, std::vector<Triplet> entries)
{
    return from_triplets(n, n, std::move(entries));
}

inline Vector matvec(const CsrMatrix& A, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != A.cols)
        throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(static_cast<std::size_t>(A.rows), 0.0);
    for (int i = 0; i < A.rows; ++i)
    {
        double s = 0.0;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            s += A.values[k] * x[A.col_idx[k]];
        y[i] = s;
    }
    return y;
}

inline bool is_structurally_symmetric(const CsrMatrix& A)
{
    if (A.rows != A.cols)
        return false;
    for (int i = 0; i < A.rows; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
        {
            const int j = A.col_idx[k];
            const auto first = A.col_idx.begin() + A.row_ptr[j];
            const auto last = A.col_idx.begin() + A.row_ptr[j + 1];
            if (!std::binary_search(first, last, i))
                return false;
        }
    return true;
}

/// Reverse Cuthill-McKee ordering of the (symmetrized) pattern of A.
/// Returns perm with perm[new] = old.
inline std::vector<int> rcm_ordering(const CsrMatrix& A)
{
    const int n = A.rows;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
        {
            const int j = A.col_idx[k];
            if (j != i)
            {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }
    for (auto& a : adj)
    {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    auto degree = [&](int v) { return static_cast<int>(adj[v].size()); };

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<char> seen(static_cast<std::size_t>(n), 0);

    // BFS levels from `root`; returns (last level nodes, depth).
    auto bfs_levels = [&](int root) {
        std::vector<int> level(static_cast<std::size_t>(n), -1);
        std::vector<int> frontier{root};
        level[root] = 0;
        int depth = 0;
        std::vector<int> last = frontier;
        while (!frontier.empty())
        {
            last = frontier;
            std::vector<int> next;
            for (int v : frontier)
                for (int w : adj[v])
                    if (level[w] < 0)
                    {
                        level[w] = level[v] + 1;
                        next.push_back(w);
                    }
            if (!next.empty())
                ++depth;
            frontier = std::move(next);
        }
        return std::make_pair(last, depth);
    };

    for (int start = 0; start < n; ++start)
    {
        if (seen[start])
            continue;
        // pseudo-peripheral root: minimum degree node of the component, then
        // jump to a min-degree node of the deepest level while depth grows
        std::vector<int> comp;
        {
            std::queue<int> q;
            std::vector<char> mark(static_cast<std::size_t>(n), 0);
            q.push(start);
            mark[start] = 1;
            while (!q.empty())
            {
                const int v = q.front();
                q.pop();
                comp.push_back(v);
                for (int w : adj[v])
                    if (!mark[w] && !seen[w])
                    {
                        mark[w] = 1;
                        q.push(w);
                    }
            }
        }
        int root = *std::min_element(comp.begin(), comp.end(), [&](int a, int b) {
            return std::make_pair(degree(a), a) < std::make_pair(degree(b), b);
        });
        auto [last, depth] = bfs_levels(root);
        for (int guard = 0; guard < 8; ++guard)
        {
            const int cand = *std::min_element(last.begin(), last.end(), [&](int a, int b) {
                return std::make_pair(degree(a), a) < std::make_pair(degree(b), b);
            });
            auto [last2, depth2] = bfs_levels(cand);
            if (depth2 <= depth)
                break;
            root = cand;
            last = std::move(last2);
            depth = depth2;
        }

        std::queue<int> q;
        q.push(root);
        seen[root] = 1;
        while (!q.empty())
        {
            const int v = q.front();
            q.pop();
            order.push_back(v);
            std::vector<int> nbrs;
            for (int w : adj[v])
                if (!seen[w])
                    nbrs.push_back(w);
            std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
                return std::make_pair(degree(a), a) < std::make_pair(degree(b), b);
            });
            for (int w : nbrs)
            {
                seen[w] = 1;
                q.push(w);
            }
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

/// Cholesky factor P A P^T = L L^T, with P from reverse Cuthill-McKee.
struct CholFactor
{
    std::vector<int> permutation; ///< permutation[new] = old
    CsrMatrix L;

    [[nodiscard]] int n() const { return L.rows; }
};

/// Envelope (profile) Cholesky on the RCM-permuted matrix.
/// Throws SingularMatrixError when a pivot is not positive.
inline CholFactor factorize(const CsrMatrix& A)
{
    require(A.rows == A.cols, "factorize: matrix must be square");
    const int n = A.rows;
    CholFactor F;
    F.permutation = rcm_ordering(A);
    std::vector<int> inv(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        inv[F.permutation[k]] = k;

    // envelope start of each permuted row (lower triangle)
    std::vector<int> first(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        first[i] = i;
        const int old = F.permutation[i];
        for (int k = A.row_ptr[old]; k < A.row_ptr[old + 1]; ++k)
            first[i] = std::min(first[i], inv[A.col_idx[k]]);
    }
    std::vector<std::size_t> start(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        start[i + 1] = start[i] + static_cast<std::size_t>(i - first[i] + 1);
    std::vector<double> env(start[n], 0.0);
    auto entry = [&](int i, int j) -> double& { return env[start[i] + static_cast<std::size_t>(j - first[i])]; };

    for (int i = 0; i < n; ++i)
    {
        const int old = F.permutation[i];
        for (int k = A.row_ptr[old]; k < A.row_ptr[old + 1]; ++k)
        {
            const int j = inv[A.col_idx[k]];
            if (j <= i)
                entry(i, j) += A.values[k];
        }
    }

    for (int i = 0; i < n; ++i)
    {
        const double diag_in = entry(i, i);
        for (int j = first[i]; j <= i; ++j)
        {
            double s = entry(i, j);
            const int k0 = std::max(first[i], first[j]);
            const double* li = &env[start[i] + static_cast<std::size_t>(k0 - first[i])];
            const double* lj = &env[start[j] + static_cast<std::size_t>(k0 - first[j])];
            for (int k = k0; k < j; ++k)
                s -= (*li++) * (*lj++);
            if (j < i)
            {
                entry(i, j) = s / entry(j, j);
            }
            else
            {
                if (!(s > 1e-14 * std::abs(diag_in)) || !std::isfinite(s))
                    throw SingularMatrixError("factorize: non-positive pivot at row " + std::to_string(i) +
                                              " (matrix singular or indefinite; missing Dirichlet conditions?)");
                entry(i, i) = std::sqrt(s);
            }
        }
    }

    F.L.rows = n;
    F.L.cols = n;
    F.L.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    F.L.col_idx.reserve(env.size());
    F.L.values.reserve(env.size());
    for (int i = 0; i < n; ++i)
    {
        for (int j = first[i]; j <= i; ++j)
        {
            const double v = entry(i, j);
            if (v != 0.0 || j == i)
            {
                F.L.col_idx.push_back(j);
                F.L.values.push_back(v);
            }
        }
        F.L.row_ptr[i + 1] = static_cast<int>(F.L.values.size());
    }
    return F;
}

/// Solves A x = b with a factor of A. Thread-safe for a shared factor.
inline Vector solve(const CholFactor& F, std::span<const double> b)
{
    const int n = F.n();
    if (static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve: dimension mismatch");
    const auto& L = F.L;
    Vector y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        y[i] = b[F.permutation[i]];
    for (int i = 0; i < n; ++i)
    {
        double s = y[i];
        const int diag = L.row_ptr[i + 1] - 1;
        for (int k = L.row_ptr[i]; k < diag; ++k)
            s -= L.values[k] * y[L.col_idx[k]];
        y[i] = s / L.values[diag];
    }
    for (int i = n - 1; i >= 0; --i)
    {
        const int diag = L.row_ptr[i + 1] - 1;
        y[i] /= L.values[diag];
        const double xi = y[i];
        for (int k = L.row_ptr[i]; k < diag; ++k)
            y[L.col_idx[k]] -= L.values[k] * xi;
    }
    Vector x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        x[F.permutation[i]] = y[i];
    return x;
}

} // namespace glocal
