#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "glocal/common.hpp"

namespace glocal {

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

struct Segment
{
    Point a;
    Point b;
};

using Tri = std::array<int, 3>;

/// Triangulation of one 2D region with named node and element sets.
///
/// Node tags may carry the straight segments they were defined on
/// (`tag_lines`); refinement uses them to decide which edge midpoints
/// inherit a tag.
struct TriMesh
{
    std::vector<Point> nodes;
    std::vector<Tri> tris;
    std::map<std::string, std::vector<int>> node_tags;
    std::map<std::string, std::vector<int>> elem_tags;
    std::map<std::string, std::vector<Segment>> tag_lines;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(nodes.size()); }
    [[nodiscard]] int num_tris() const { return static_cast<int>(tris.size()); }

    [[nodiscard]] const std::vector<int>& nodes_tagged(const std::string& tag) const
    {
        auto it = node_tags.find(tag);
        if (it == node_tags.end())
            throw std::invalid_argument("unknown node tag '" + tag + "'");
        return it->second;
    }
};

/// Interface polyline: node ids in order along the line with their arc coordinate.
struct InterfaceDesc
{
    std::vector<int> gamma_nodes;
    std::vector<double> arc_coords;
};

inline double signed_area(const Point& a, const Point& b, const Point& c)
{
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

inline double tri_area(const TriMesh& m, int e)
{
    const auto& t = m.tris[e];
    return signed_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
}

inline Point centroid(const TriMesh& m, int e)
{
    const auto& t = m.tris[e];
    return {(m.nodes[t[0]].x + m.nodes[t[1]].x + m.nodes[t[2]].x) / 3.0,
            (m.nodes[t[0]].y + m.nodes[t[1]].y + m.nodes[t[2]].y) / 3.0};
}

inline double total_area(const TriMesh& m)
{
    double a = 0.0;
    for (int e = 0; e < m.num_tris(); ++e)
        a += tri_area(m, e);
    return a;
}

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Distance from p to the closed segment s.
inline double distance_to_segment(const Point& p, const Segment& s)
{
    const double dx = s.b.x - s.a.x;
    const double dy = s.b.y - s.a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0)
        return distance(p, s.a);
    double t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, {s.a.x + t * dx, s.a.y + t * dy});
}

/// Checks the TriMesh invariants; throws std::invalid_argument on the first violation.
inline void validate(const TriMesh& m)
{
    const int n = m.num_nodes();
    for (int e = 0; e < m.num_tris(); ++e)
    {
        for (int v : m.tris[e])
            require(v >= 0 && v < n, "triangle " + std::to_string(e) + " references a missing node");
        require(tri_area(m, e) > 0.0, "triangle " + std::to_string(e) + " has non-positive area");
    }
    for (const auto& [tag, ids] : m.node_tags)
    {
        for (std::size_t i = 0; i < ids.size(); ++i)
        {
            require(ids[i] >= 0 && ids[i] < n, "node tag '" + tag + "' out of range");
            require(i == 0 || ids[i - 1] < ids[i], "node tag '" + tag + "' not sorted/unique");
        }
    }
    for (const auto& [tag, ids] : m.elem_tags)
        for (int e : ids)
            require(e >= 0 && e < m.num_tris(), "element tag '" + tag + "' out of range");
}

/// Structured mesh of [x0,x1]x[y0,y1] with nx*ny cells, each split along its SW-NE diagonal.
/// Node (i,j) has index j*(nx+1)+i.
inline TriMesh build_rect_mesh(double x0, double y0, double x1, double y1, int nx, int ny)
{
    require(x1 > x0 && y1 > y0, "build_rect_mesh: degenerate extents");
    require(nx >= 1 && ny >= 1, "build_rect_mesh: cell counts must be >= 1");

    TriMesh m;
    m.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
        {
            // exact end coordinates so that neighbouring meshes share lattice lines bit-for-bit
            const double x = i == nx ? x1 : x0 + (x1 - x0) * i / nx;
            const double y = j == ny ? y1 : y0 + (y1 - y0) * j / ny;
            m.nodes.push_back({x, y});
        }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    m.tris.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
        {
            const int sw = id(i, j), se = id(i + 1, j), ne = id(i + 1, j + 1), nw = id(i, j + 1);
            m.tris.push_back({sw, se, ne});
            m.tris.push_back({sw, ne, nw});
        }

    auto& left = m.node_tags["left"];
    auto& right = m.node_tags["right"];
    for (int j = 0; j <= ny; ++j)
    {
        left.push_back(id(0, j));
        right.push_back(id(nx, j));
    }
    auto& bottom = m.node_tags["bottom"];
    auto& top = m.node_tags["top"];
    for (int i = 0; i <= nx; ++i)
    {
        bottom.push_back(id(i, 0));
        top.push_back(id(i, ny));
    }
    m.tag_lines["left"] = {{{x0, y0}, {x0, y1}}};
    m.tag_lines["right"] = {{{x1, y0}, {x1, y1}}};
    m.tag_lines["bottom"] = {{{x0, y0}, {x1, y0}}};
    m.tag_lines["top"] = {{{x0, y1}, {x1, y1}}};
    return m;
}

namespace detail {

inline std::set<std::pair<int, int>> boundary_edges(const TriMesh& m)
{
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.tris)
        for (int k = 0; k < 3; ++k)
        {
            const int a = t[k], b = t[(k + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    std::set<std::pair<int, int>> out;
    for (const auto& [e, c] : count)
        if (c == 1)
            out.insert(e);
    return out;
}

inline double length_scale(const TriMesh& m)
{
    double s = 0.0;
    for (const auto& p : m.nodes)
        s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return std::max(s, 1.0);
}

inline TriMesh refine_once(const TriMesh& m)
{
    TriMesh out;
    out.nodes = m.nodes;
    out.tag_lines = m.tag_lines;

    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end())
            return it->second;
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({0.5 * (m.nodes[a].x + m.nodes[b].x), 0.5 * (m.nodes[a].y + m.nodes[b].y)});
        midpoint.emplace(key, id);
        return id;
    };

    out.tris.reserve(m.tris.size() * 4);
    for (const auto& t : m.tris)
    {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.tris.push_back({a, ab, ca});
        out.tris.push_back({ab, b, bc});
        out.tris.push_back({ca, bc, c});
        out.tris.push_back({ab, bc, ca});
    }

    for (const auto& [tag, ids] : m.elem_tags)
    {
        auto& dst = out.elem_tags[tag];
        dst.reserve(ids.size() * 4);
        for (int e : ids)
            for (int k = 0; k < 4; ++k)
                dst.push_back(4 * e + k);
    }

    const double tol = 1e-12 * length_scale(m);
    std::set<std::pair<int, int>> bnd;
    bool bnd_ready = false;
    for (const auto& [tag, ids] : m.node_tags)
    {
        std::vector<char> has(m.nodes.size(), 0);
        for (int v : ids)
            has[v] = 1;
        std::vector<int> tagged = ids;
        const auto lines = m.tag_lines.find(tag);
        for (const auto& [edge, id] : midpoint)
        {
            if (!has[edge.first] || !has[edge.second])
                continue;
            bool on_line = false;
            if (lines != m.tag_lines.end())
            {
                for (const auto& s : lines->second)
                    on_line = on_line || distance_to_segment(out.nodes[id], s) <= tol;
            }
            else
            {
                // tags without recorded geometry are treated as boundary polylines
                if (!bnd_ready)
                {
                    bnd = boundary_edges(m);
                    bnd_ready = true;
                }
                on_line = bnd.count(edge) > 0;
            }
            if (on_line)
                tagged.push_back(id);
        }
        std::sort(tagged.begin(), tagged.end());
        out.node_tags[tag] = std::move(tagged);
    }
    return out;
}

} // namespace detail

/// Splits every triangle into four by its edge midpoints, `levels` times.
inline TriMesh refine_uniform(const TriMesh& m, int levels)
{
    require(levels >= 0, "refine_uniform: levels must be >= 0");
    TriMesh out = m;
    for (int l = 0; l < levels; ++l)
        out = detail::refine_once(out);
    return out;
}

/// Tags the elements whose centroid lies strictly inside the disk.
inline TriMesh tag_disk(TriMesh m, double cx, double cy, double r, const std::string& tag)
{
    require(r > 0.0, "tag_disk: radius must be positive");
    auto& ids = m.elem_tags[tag];
    ids.clear();
    for (int e = 0; e < m.num_tris(); ++e)
    {
        const Point c = centroid(m, e);
        if ((c.x - cx) * (c.x - cx) + (c.y - cy) * (c.y - cy) < r * r)
            ids.push_back(e);
    }
    return m;
}

/// All mesh nodes on the segment a->b, ordered by distance from a.
inline InterfaceDesc nodes_on_segment(const TriMesh& m, const Point& a, const Point& b)
{
    const double tol = 1e-10 * detail::length_scale(m);
    std::vector<std::pair<double, int>> hits;
    for (int v = 0; v < m.num_nodes(); ++v)
        if (distance_to_segment(m.nodes[v], {a, b}) <= tol)
            hits.emplace_back(distance(a, m.nodes[v]), v);
    std::sort(hits.begin(), hits.end());
    InterfaceDesc d;
    for (const auto& [s, v] : hits)
    {
        d.gamma_nodes.push_back(v);
        d.arc_coords.push_back(s);
    }
    return d;
}

} // namespace glocal
