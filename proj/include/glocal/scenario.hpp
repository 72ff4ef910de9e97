#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

#include "glocal/fem.hpp"

namespace glocal {

/// Invalid scenario document; the message starts with the offending field path.
class ScenarioError : public std::runtime_error
{
public:
    ScenarioError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), m_path(path)
    {
    }
    [[nodiscard]] const std::string& path() const { return m_path; }

private:
    std::string m_path;
};

enum class Mode
{
    richardson,
    aitken,
    async
};

inline const char* to_string(Mode m)
{
    switch (m)
    {
    case Mode::richardson: return "richardson";
    case Mode::aitken: return "aitken";
    case Mode::async: return "async";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s)
{
    if (s == "richardson")
        return Mode::richardson;
    if (s == "aitken")
        return Mode::aitken;
    if (s == "async")
        return Mode::async;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

struct RunConfig
{
    Mode mode = Mode::aitken;
    double omega0 = 1.0;
    double tol = 1e-8;
    int max_iter = 200;
    NormKind norm = NormKind::inf;
    /// Aitken relaxation is clamped to [omega_min, omega_max].
    double omega_min = 1e-4;
    double omega_max = 10.0;
    /// Worker threads for the patch solves of one synchronous iteration.
    int sync_threads = 1;
};

inline void validate(const RunConfig& cfg)
{
    require(cfg.tol > 0.0, "tol must be positive");
    require(cfg.max_iter >= 1, "max_iter must be >= 1");
}

/// A period during which one worker makes no progress.
struct Pause
{
    int worker = 0;
    double time = 0.0;
    double duration = 0.0;
};

/// Task cost model for the asynchronous executors (virtual milliseconds).
struct AsyncOptions
{
    std::uint64_t seed = 1;
    double global_cost = 1.0;
    double patch_cost = 1.0;
    std::vector<double> patch_cost_factors; ///< per patch multiplier on patch_cost, default 1
    double jitter = 0.0;                    ///< uniform relative jitter on every task duration
    double latency = 0.0;                   ///< added to every task (get + put)
    std::vector<Pause> pauses;
    double max_virtual_time = 1e7;
    double wall_timeout = 60.0; ///< seconds, threaded executor
};

struct Inclusion
{
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double ratio = 1.0; ///< base coefficient / inclusion coefficient
};

struct PatchSpec
{
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    int refine = 0;
    std::vector<Inclusion> inclusions;
};

/// n x n unit patches tiling [0,n]^2, each with a centred inclusion.
struct GridSpec
{
    int n = 2;
    int cells_per_patch = 2;
    int refine = 2;
    double inclusion_radius = 0.3;
    double ratio = 10.0;
};

struct Scenario
{
    std::string name;
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    int nx = 1, ny = 1;
    Physics physics;
    std::vector<std::string> dirichlet{"bottom"};
    std::vector<PatchSpec> patches;
    std::optional<GridSpec> grid;
    RunConfig solver;
    AsyncOptions async;

    [[nodiscard]] double hx() const { return (x1 - x0) / nx; }
    [[nodiscard]] double hy() const { return (y1 - y0) / ny; }
};

/// Replaces the patch list and domain with the tiling described by `grid`.
inline void expand_grid(Scenario& sc)
{
    if (!sc.grid)
        return;
    const GridSpec& g = *sc.grid;
    require(g.n >= 1 && g.cells_per_patch >= 1 && g.refine >= 0, "grid: invalid sizes");
    sc.x0 = sc.y0 = 0.0;
    sc.x1 = sc.y1 = g.n;
    sc.nx = sc.ny = g.n * g.cells_per_patch;
    sc.patches.clear();
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
        {
            PatchSpec p{double(i), double(j), double(i + 1), double(j + 1), g.refine, {}};
            if (g.inclusion_radius > 0.0)
                p.inclusions.push_back({i + 0.5, j + 0.5, g.inclusion_radius, g.ratio});
            sc.patches.push_back(p);
        }
}

/// Checks geometry: patches inside the domain, aligned with the global lattice, non-overlapping.
inline void validate(const Scenario& sc)
{
    if (!(sc.x1 > sc.x0 && sc.y1 > sc.y0))
        throw ScenarioError("domain", "degenerate extents");
    if (sc.nx < 1 || sc.ny < 1)
        throw ScenarioError("global_cells", "cell counts must be >= 1");
    for (const auto& d : sc.dirichlet)
        if (d != "left" && d != "right" && d != "bottom" && d != "top")
            throw ScenarioError("dirichlet", "unknown side '" + d + "'");
    try
    {
        validate(sc.physics.base, sc.physics.kind);
    }
    catch (const std::invalid_argument& e)
    {
        throw ScenarioError("physics", e.what());
    }
    try
    {
        validate(sc.solver);
    }
    catch (const std::invalid_argument& e)
    {
        throw ScenarioError("solver", e.what());
    }

    const double hx = sc.hx(), hy = sc.hy();
    auto aligned = [](double v, double origin, double h) {
        const double k = (v - origin) / h;
        return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
    };
    for (std::size_t s = 0; s < sc.patches.size(); ++s)
    {
        const auto& p = sc.patches[s];
        const std::string path = "patches[" + std::to_string(s) + "]";
        if (!(p.x1 > p.x0 && p.y1 > p.y0))
            throw ScenarioError(path + ".rect", "degenerate patch");
        const double eps = 1e-9 * std::max(hx, hy);
        if (p.x0 < sc.x0 - eps || p.y0 < sc.y0 - eps || p.x1 > sc.x1 + eps || p.y1 > sc.y1 + eps)
            throw ScenarioError(path + ".rect", "patch leaves the domain");
        if (!aligned(p.x0, sc.x0, hx) || !aligned(p.x1, sc.x0, hx) || !aligned(p.y0, sc.y0, hy) ||
            !aligned(p.y1, sc.y0, hy))
            throw ScenarioError(path + ".rect", "patch not aligned with the global grid");
        if (p.refine < 0)
            throw ScenarioError(path + ".refine", "must be >= 0");
        for (std::size_t k = 0; k < p.inclusions.size(); ++k)
        {
            const auto& inc = p.inclusions[k];
            const std::string ipath = path + ".inclusions[" + std::to_string(k) + "]";
            if (!(inc.radius > 0.0))
                throw ScenarioError(ipath + ".radius", "must be positive");
            if (!(inc.ratio > 0.0))
                throw ScenarioError(ipath + ".ratio", "must be positive");
        }
        for (std::size_t t = 0; t < s; ++t)
        {
            const auto& q = sc.patches[t];
            const double ox = std::min(p.x1, q.x1) - std::max(p.x0, q.x0);
            const double oy = std::min(p.y1, q.y1) - std::max(p.y0, q.y0);
            if (ox > eps && oy > eps)
                throw ScenarioError(path + ".rect", "overlaps patches[" + std::to_string(t) + "]");
        }
    }
}

namespace detail {

// Typed access into a JSON object that reports the field path on failure.
class JsonFields
{
public:
    JsonFields(const nlohmann::json& j, std::string path) : m_j(j), m_path(std::move(path))
    {
        if (!m_j.is_object())
            throw ScenarioError(m_path.empty() ? "<root>" : m_path, "expected an object");
    }

    [[nodiscard]] std::string at(const std::string& key) const { return m_path.empty() ? key : m_path + "." + key; }
    [[nodiscard]] bool has(const std::string& key) const { return m_j.contains(key); }
    [[nodiscard]] const nlohmann::json& raw(const std::string& key) const { return m_j.at(key); }

    [[nodiscard]] double number(const std::string& key, std::optional<double> fallback = std::nullopt) const
    {
        if (!m_j.contains(key))
        {
            if (fallback)
                return *fallback;
            throw ScenarioError(at(key), "missing required number");
        }
        const auto& v = m_j.at(key);
        if (!v.is_number())
            throw ScenarioError(at(key), "expected a number");
        return v.get<double>();
    }

    [[nodiscard]] int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const
    {
        if (!m_j.contains(key))
        {
            if (fallback)
                return *fallback;
            throw ScenarioError(at(key), "missing required integer");
        }
        const auto& v = m_j.at(key);
        if (!v.is_number_integer())
            throw ScenarioError(at(key), "expected an integer");
        return v.get<int>();
    }

    [[nodiscard]] std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const
    {
        if (!m_j.contains(key))
        {
            if (fallback)
                return *fallback;
            throw ScenarioError(at(key), "missing required string");
        }
        const auto& v = m_j.at(key);
        if (!v.is_string())
            throw ScenarioError(at(key), "expected a string");
        return v.get<std::string>();
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key, std::size_t expected = 0) const
    {
        const auto& v = m_j.at(key);
        if (!v.is_array())
            throw ScenarioError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number())
                throw ScenarioError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        if (expected && out.size() != expected)
            throw ScenarioError(at(key), "expected " + std::to_string(expected) + " numbers");
        return out;
    }

    [[nodiscard]] const nlohmann::json& array(const std::string& key) const
    {
        const auto& v = m_j.at(key);
        if (!v.is_array())
            throw ScenarioError(at(key), "expected an array");
        return v;
    }

private:
    nlohmann::json m_j;
    std::string m_path;
};

inline Material parse_material(const JsonFields& f, PhysicsKind kind)
{
    Material m;
    if (kind == PhysicsKind::thermal)
        m.conductivity = f.number("conductivity", 1.0);
    else
    {
        m.young = f.number("young", 1.0);
        m.poisson = f.number("poisson", 0.3);
    }
    return m;
}

} // namespace detail

/// Builds a Scenario from its JSON document (schema in docs/scenario.md).
inline Scenario parse_scenario(const nlohmann::json& j)
{
    using detail::JsonFields;
    const JsonFields root(j, "");
    Scenario sc;
    sc.name = root.string("name", std::string("unnamed"));

    {
        const JsonFields ph(root.has("physics") ? root.raw("physics") : nlohmann::json::object(), "physics");
        const std::string kind = ph.string("kind", std::string("thermal"));
        if (kind == "thermal")
            sc.physics.kind = PhysicsKind::thermal;
        else if (kind == "elasticity")
            sc.physics.kind = PhysicsKind::elasticity;
        else
            throw ScenarioError("physics.kind", "expected 'thermal' or 'elasticity'");
        sc.physics.base = detail::parse_material(ph, sc.physics.kind);
        if (sc.physics.kind == PhysicsKind::thermal)
            sc.physics.source = {ph.number("source", 1.0), 0.0};
        else if (ph.has("body_force"))
        {
            const auto bf = ph.numbers("body_force", 2);
            sc.physics.source = {bf[0], bf[1]};
        }
        else
            sc.physics.source = {0.0, -1.0};
    }

    if (root.has("dirichlet"))
    {
        sc.dirichlet.clear();
        const auto& arr = root.array("dirichlet");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            if (!arr[i].is_string())
                throw ScenarioError("dirichlet[" + std::to_string(i) + "]", "expected a string");
            sc.dirichlet.push_back(arr[i].get<std::string>());
        }
    }

    if (root.has("grid"))
    {
        if (root.has("patches"))
            throw ScenarioError("grid", "'grid' and 'patches' are mutually exclusive");
        const JsonFields g(root.raw("grid"), "grid");
        GridSpec gs;
        gs.n = g.integer("n", 2);
        gs.cells_per_patch = g.integer("cells_per_patch", 2);
        gs.refine = g.integer("refine", 2);
        gs.inclusion_radius = g.number("inclusion_radius", 0.3);
        gs.ratio = g.number("ratio", 10.0);
        if (gs.n < 1)
            throw ScenarioError("grid.n", "must be >= 1");
        if (gs.cells_per_patch < 1)
            throw ScenarioError("grid.cells_per_patch", "must be >= 1");
        if (gs.refine < 0)
            throw ScenarioError("grid.refine", "must be >= 0");
        if (!(gs.ratio > 0.0))
            throw ScenarioError("grid.ratio", "must be positive");
        sc.grid = gs;
        expand_grid(sc);
    }
    else
    {
        const JsonFields d(root.has("domain") ? root.raw("domain") : nlohmann::json::object(), "domain");
        sc.x0 = d.number("x0", 0.0);
        sc.y0 = d.number("y0", 0.0);
        sc.x1 = d.number("x1");
        sc.y1 = d.number("y1");
        if (!root.has("global_cells"))
            throw ScenarioError("global_cells", "missing [nx, ny]");
        const auto& gc = root.array("global_cells");
        if (gc.size() != 2 || !gc[0].is_number_integer() || !gc[1].is_number_integer())
            throw ScenarioError("global_cells", "expected two integers [nx, ny]");
        sc.nx = gc[0].get<int>();
        sc.ny = gc[1].get<int>();

        if (root.has("patches"))
        {
            const auto& arr = root.array("patches");
            for (std::size_t s = 0; s < arr.size(); ++s)
            {
                const std::string path = "patches[" + std::to_string(s) + "]";
                const JsonFields p(arr[s], path);
                PatchSpec ps;
                if (!p.has("rect"))
                    throw ScenarioError(path + ".rect", "missing [x0, y0, x1, y1]");
                const auto r = p.numbers("rect", 4);
                ps.x0 = r[0];
                ps.y0 = r[1];
                ps.x1 = r[2];
                ps.y1 = r[3];
                ps.refine = p.integer("refine", 0);
                if (p.has("inclusions"))
                {
                    const auto& inc = p.array("inclusions");
                    for (std::size_t k = 0; k < inc.size(); ++k)
                    {
                        const JsonFields f(inc[k], path + ".inclusions[" + std::to_string(k) + "]");
                        const auto c = f.numbers("center", 2);
                        ps.inclusions.push_back({c[0], c[1], f.number("radius"), f.number("ratio")});
                    }
                }
                sc.patches.push_back(ps);
            }
        }
    }

    if (root.has("solver"))
    {
        const JsonFields s(root.raw("solver"), "solver");
        try
        {
            sc.solver.mode = parse_mode(s.string("mode", std::string("aitken")));
        }
        catch (const std::invalid_argument& e)
        {
            throw ScenarioError("solver.mode", e.what());
        }
        sc.solver.omega0 = s.number("omega", 1.0);
        if (!(sc.solver.omega0 > 0.0))
            throw ScenarioError("solver.omega", "must be positive");
        sc.solver.tol = s.number("tol", 1e-8);
        if (!(sc.solver.tol > 0.0))
            throw ScenarioError("solver.tol", "must be positive");
        sc.solver.max_iter = s.integer("max_iter", 200);
        if (sc.solver.max_iter < 1)
            throw ScenarioError("solver.max_iter", "must be at least 1");
        const std::string nk = s.string("norm", std::string("inf"));
        if (nk == "inf")
            sc.solver.norm = NormKind::inf;
        else if (nk == "two")
            sc.solver.norm = NormKind::two;
        else
            throw ScenarioError("solver.norm", "expected 'inf' or 'two'");
    }

    if (root.has("async"))
    {
        const JsonFields a(root.raw("async"), "async");
        auto& ao = sc.async;
        ao.seed = static_cast<std::uint64_t>(a.integer("seed", 1));
        ao.global_cost = a.number("global_cost", 1.0);
        ao.patch_cost = a.number("patch_cost", 1.0);
        if (a.has("patch_cost_factors"))
            ao.patch_cost_factors = a.numbers("patch_cost_factors");
        ao.jitter = a.number("jitter", 0.0);
        ao.latency = a.number("latency", 0.0);
        ao.max_virtual_time = a.number("max_virtual_time", 1e7);
        ao.wall_timeout = a.number("wall_timeout", 60.0);
        if (ao.global_cost < 0.0 || ao.patch_cost < 0.0 || ao.latency < 0.0)
            throw ScenarioError("async", "durations must be >= 0");
        if (ao.jitter < 0.0 || ao.jitter >= 1.0)
            throw ScenarioError("async.jitter", "must lie in [0, 1)");
        for (std::size_t i = 0; i < ao.patch_cost_factors.size(); ++i)
            if (!(ao.patch_cost_factors[i] >= 0.0))
                throw ScenarioError("async.patch_cost_factors[" + std::to_string(i) + "]", "must be >= 0");
        if (a.has("pauses"))
        {
            const auto& arr = a.array("pauses");
            for (std::size_t k = 0; k < arr.size(); ++k)
            {
                const JsonFields p(arr[k], "async.pauses[" + std::to_string(k) + "]");
                Pause ps{p.integer("worker"), p.number("time"), p.number("duration")};
                if (ps.duration < 0.0)
                    throw ScenarioError(p.at("duration"), "must be >= 0");
                ao.pauses.push_back(ps);
            }
        }
    }

    validate(sc);
    if (!sc.async.patch_cost_factors.empty() && sc.async.patch_cost_factors.size() != sc.patches.size())
        throw ScenarioError("async.patch_cost_factors", "needs one factor per patch");
    return sc;
}

/// Parses JSON text; syntax errors are reported as ScenarioError at "<root>".
inline nlohmann::json parse_json_text(const std::string& text)
{
    try
    {
        return nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ScenarioError("<root>", std::string("malformed JSON: ") + e.what());
    }
}

/// SHA-256 (hex) of the canonical serialization: keys sorted, no whitespace.
inline std::string scenario_hash(const nlohmann::json& j)
{
    const std::string canon = j.dump();
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(canon.data()), canon.size(), digest);
    std::ostringstream os;
    for (unsigned char c : digest)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    return os.str();
}

} // namespace glocal
