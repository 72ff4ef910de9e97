#pragma once

// Scenario builders shared by the test files.

#include <fstream>
#include <sstream>
#include <string>

#include "glocal/scenario.hpp"

#ifndef GLOCAL_SCENARIO_DIR
#define GLOCAL_SCENARIO_DIR "scenarios"
#endif

namespace support {

inline glocal::Scenario thermal_box(int nx = 8, int ny = 4, double w = 4.0, double h = 2.0)
{
    glocal::Scenario sc;
    sc.name = "test";
    sc.x0 = 0;
    sc.y0 = 0;
    sc.x1 = w;
    sc.y1 = h;
    sc.nx = nx;
    sc.ny = ny;
    sc.physics.kind = glocal::PhysicsKind::thermal;
    sc.physics.base.conductivity = 1.0;
    sc.physics.source = {1.0, 0.0};
    sc.dirichlet = {"left", "right", "bottom", "top"};
    return sc;
}

/// Two separated patches with soft inclusions on an 8x4 lattice over [0,4]x[0,2].
inline glocal::Scenario two_patch(int refine = 2, double ratio = 10.0)
{
    glocal::Scenario sc = thermal_box();
    sc.patches.push_back({1.0, 0.5, 2.0, 1.5, refine, {{1.5, 1.0, 0.25, ratio}}});
    sc.patches.push_back({2.5, 0.5, 3.5, 1.5, refine, {{3.0, 1.0, 0.25, ratio}}});
    return sc;
}

inline glocal::Scenario load(const std::string& name)
{
    std::ifstream in(std::string(GLOCAL_SCENARIO_DIR) + "/" + name + ".json");
    std::stringstream ss;
    ss << in.rdbuf();
    return glocal::parse_scenario(glocal::parse_json_text(ss.str()));
}

} // namespace support
