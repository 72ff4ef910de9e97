#pragma once

// Debug dump of a TriMesh. The layout is informal and may change.

#include <nlohmann/json.hpp>

#include "glocal/mesh.hpp"

namespace glocal {

inline nlohmann::json mesh_to_json(const TriMesh& m)
{
    nlohmann::json j;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& p : m.nodes)
        nodes.push_back({p.x, p.y});
    auto& tris = j["tris"] = nlohmann::json::array();
    for (const auto& t : m.tris)
        tris.push_back({t[0], t[1], t[2]});
    j["node_tags"] = m.node_tags;
    j["elem_tags"] = m.elem_tags;
    return j;
}

} // namespace glocal
