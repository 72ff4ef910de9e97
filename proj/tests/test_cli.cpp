#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glocal/driver.hpp"
#include "test_support.hpp"

#ifndef GLOCAL_CLI
#define GLOCAL_CLI "glocal"
#endif

namespace fs = std::filesystem;
using namespace glocal;

namespace {

struct CliResult
{
    int code;
    std::string out;
};

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("glocal_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CliResult cli(const std::string& args, const fs::path& dir)
{
    const fs::path log = dir / "cli.log";
    const std::string cmd = std::string(GLOCAL_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string scenario(const std::string& name) { return std::string(GLOCAL_SCENARIO_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line))
    {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST(ScenarioParse, FieldPathInErrors)
{
    auto error_path = [](const std::string& text) {
        try
        {
            parse_scenario(parse_json_text(text));
        }
        catch (const ScenarioError& e)
        {
            return e.path();
        }
        return std::string("no error");
    };
    EXPECT_EQ(error_path("{\"domain\": {\"x0\": \"a\"}}"), "domain.x0");
    EXPECT_EQ(error_path("{\"physics\": {\"kind\": \"magnetic\"}}"), "physics.kind");
    const std::string domain = "\"domain\": {\"x0\": 0, \"y0\": 0, \"x1\": 2, \"y1\": 2}, \"global_cells\": [2, 2]";
    EXPECT_EQ(error_path("{" + domain + ", \"patches\": [{\"rect\": [0, 0, 0.5]}]}"), "patches[0].rect");
    EXPECT_EQ(error_path("{" + domain + ", \"solver\": {\"tol\": -1}}"), "solver.tol");
    EXPECT_EQ(error_path("{\"dirichlet\": [3]}"), "dirichlet[0]");
    EXPECT_EQ(error_path("{\"name\": "), "<root>");
}

TEST(ScenarioParse, BundledScenariosLoad)
{
    for (const char* name :
         {"twopatch_thermal", "twopatch_elastic", "grid_nxn_inclusions", "nocomplement", "identical_patch"})
    {
        const Scenario sc = support::load(name);
        EXPECT_EQ(sc.name, name);
        EXPECT_NO_THROW(validate(sc));
    }
    EXPECT_EQ(support::load("grid_nxn_inclusions").patches.size(), 4u);
    EXPECT_EQ(support::load("twopatch_elastic").physics.kind, PhysicsKind::elasticity);
}

TEST(ScenarioParse, HashIgnoresKeyOrderAndWhitespace)
{
    const auto a = parse_json_text("{\"name\": \"x\", \"global_cells\": [2, 2]}");
    const auto b = parse_json_text("{ \"global_cells\":[2,2],\n \"name\":\"x\" }");
    const auto c = parse_json_text("{\"name\": \"y\", \"global_cells\": [2, 2]}");
    EXPECT_EQ(scenario_hash(a), scenario_hash(b));
    EXPECT_NE(scenario_hash(a), scenario_hash(c));
    EXPECT_EQ(scenario_hash(a).size(), 64u);
}

TEST(Cli, RunAitkenWritesReport)
{
    const fs::path dir = scratch("run");
    const CliResult r = cli("run " + scenario("twopatch_thermal") + " --mode aitken --out " + (dir / "o").string(), dir);
    EXPECT_EQ(r.code, 0) << r.out;
    ASSERT_TRUE(fs::exists(dir / "o" / "report.json"));
    const auto rep = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
    EXPECT_TRUE(rep["converged"].get<bool>());
    EXPECT_EQ(rep["mode"], "aitken");
    // one history row per global iteration
    EXPECT_EQ(count_lines(slurp(dir / "o" / "history.csv")) - 1, rep["iterations"]["global"].get<int>());
    EXPECT_FALSE(fs::exists(dir / "o" / "trace.csv"));
}

TEST(Cli, MalformedScenarioNamesField)
{
    const fs::path dir = scratch("bad");
    write(dir / "bad.json", "{\"name\": \"bad\", \"domain\": {\"x0\": 0, \"y0\": 0, \"x1\": 1, \"y1\": 1}, "
                           "\"global_cells\": [4, \"x\"]}");
    const CliResult r = cli("run " + (dir / "bad.json").string() + " --out " + (dir / "o").string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("global_cells"), std::string::npos) << r.out;

    write(dir / "broken.json", "{\"name\": ");
    EXPECT_EQ(cli("run " + (dir / "broken.json").string(), dir).code, 1);
    EXPECT_EQ(cli("run " + (dir / "missing.json").string(), dir).code, 1);
    EXPECT_EQ(cli("run " + scenario("twopatch_thermal") + " --mode fancy", dir).code, 1);
}

TEST(Cli, IterationCapGivesExitTwo)
{
    const fs::path dir = scratch("cap");
    const CliResult r = cli("run " + scenario("twopatch_thermal") + " --mode richardson --max-iter 1 --out " +
                                (dir / "o").string(),
                            dir);
    EXPECT_EQ(r.code, 2) << r.out;
    const auto rep = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
    EXPECT_FALSE(rep["converged"].get<bool>());
}

TEST(Cli, AsyncRunWritesTraceAndIsReproducible)
{
    const fs::path dir = scratch("async");
    for (const char* o : {"a", "b"})
    {
        const CliResult r = cli("run " + scenario("twopatch_thermal") + " --mode async --omega 0.3 --seed 4 --out " +
                                    (dir / o).string(),
                                dir);
        EXPECT_EQ(r.code, 0) << r.out;
    }
    EXPECT_EQ(slurp(dir / "a" / "history.csv"), slurp(dir / "b" / "history.csv"));
    EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
    EXPECT_EQ(slurp(dir / "a" / "trace.csv").rfind("time,worker,event,detail\n", 0), 0u);
}

TEST(Cli, CompareConvergedRun)
{
    const fs::path dir = scratch("cmp");
    ASSERT_EQ(cli("run " + scenario("twopatch_elastic") + " --out " + (dir / "o").string(), dir).code, 0);
    const CliResult r = cli("compare " + scenario("twopatch_elastic") + " " + (dir / "o" / "report.json").string(), dir);
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("patch_1"), std::string::npos);
}

TEST(Cli, CompareNoPatchScenarioIsExact)
{
    const fs::path dir = scratch("nopatch");
    write(dir / "np.json", R"({"name": "np", "domain": {"x0": 0, "y0": 0, "x1": 2, "y1": 1},
        "global_cells": [4, 2], "dirichlet": ["left"]})");
    ASSERT_EQ(cli("run " + (dir / "np.json").string() + " --out " + (dir / "o").string(), dir).code, 0);
    const CliResult r = cli("compare " + (dir / "np.json").string() + " " + (dir / "o" / "report.json").string(), dir);
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("max,0 "), std::string::npos) << r.out;
}

TEST(Cli, CompareDivergedRunFails)
{
    const fs::path dir = scratch("div");
    // find an omega large enough to diverge
    std::string omega;
    for (const char* w : {"2", "3", "5", "8"})
    {
        const CliResult r = cli("run " + scenario("twopatch_thermal") + " --mode richardson --max-iter 30 --omega " +
                                    w + " --out " + (dir / "o").string(),
                                dir);
        if (r.code == 2)
        {
            omega = w;
            break;
        }
    }
    ASSERT_FALSE(omega.empty());
    const CliResult r = cli("compare " + scenario("twopatch_thermal") + " " + (dir / "o" / "report.json").string(), dir);
    EXPECT_NE(r.code, 0);
}

TEST(Cli, CompareRejectsOtherScenario)
{
    const fs::path dir = scratch("hash");
    ASSERT_EQ(cli("run " + scenario("nocomplement") + " --out " + (dir / "o").string(), dir).code, 0);
    const CliResult r = cli("compare " + scenario("twopatch_thermal") + " " + (dir / "o" / "report.json").string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("hash"), std::string::npos);
}

TEST(Cli, SweepGridCountsPatches)
{
    const fs::path dir = scratch("grid");
    const CliResult r =
        cli("sweep " + scenario("grid_nxn_inclusions") + " --grid 2,3,4 --out " + (dir / "o").string(), dir);
    EXPECT_EQ(r.code, 0) << r.out;
    const auto rows = read_csv(dir / "o" / "sweep.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[1][2], "4");
    EXPECT_EQ(rows[2][2], "9");
    EXPECT_EQ(rows[3][2], "16");
    EXPECT_TRUE(fs::exists(dir / "o" / "point_2" / "report.json"));
}

TEST(Cli, SweepHeterogeneityNondecreasing)
{
    const fs::path dir = scratch("het");
    const CliResult r = cli("sweep " + scenario("grid_nxn_inclusions") +
                                " --hetero-list 10,100 --mode richardson --omega 1 --out " + (dir / "o").string(),
                            dir);
    EXPECT_EQ(r.code, 0) << r.out;
    const auto rows = read_csv(dir / "o" / "sweep.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LE(std::stoi(rows[1][4]), std::stoi(rows[2][4]));
}

TEST(Cli, SweepOmegaFlagsBest)
{
    const fs::path dir = scratch("omega");
    const CliResult r = cli("sweep " + scenario("twopatch_thermal") +
                                " --omega-list 0.5,1.0,1.25,20 --mode richardson --max-iter 100 --out " +
                                (dir / "o").string(),
                            dir);
    EXPECT_EQ(r.code, 0) << r.out;
    const auto rows = read_csv(dir / "o" / "sweep.csv");
    ASSERT_EQ(rows.size(), 5u);
    int best_row = -1, best_iter = 1 << 30, flagged = 0;
    for (int i = 1; i < 5; ++i)
    {
        if (rows[i][3] == "1" && std::stoi(rows[i][4]) < best_iter)
        {
            best_iter = std::stoi(rows[i][4]);
            best_row = i;
        }
        flagged += rows[i][10] == "1" ? 1 : 0;
    }
    EXPECT_EQ(flagged, 1);
    ASSERT_GT(best_row, 0);
    EXPECT_EQ(rows[best_row][10], "1");
    EXPECT_EQ(rows[4][3], "0"); // omega 20 diverges and is recorded, the sweep goes on
}

TEST(Cli, SweepNeedsExactlyOneAxis)
{
    const fs::path dir = scratch("axis");
    EXPECT_EQ(cli("sweep " + scenario("grid_nxn_inclusions") + " --out " + (dir / "o").string(), dir).code, 1);
    EXPECT_EQ(cli("sweep " + scenario("grid_nxn_inclusions") + " --grid 2 --omega-list 1 --out " + (dir / "o").string(),
                  dir)
                  .code,
              1);
}

TEST(Cli, MeshDump)
{
    const fs::path dir = scratch("mesh");
    const CliResult r = cli("mesh " + scenario("twopatch_thermal") + " --out " + (dir / "o").string(), dir);
    EXPECT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir / "o" / "patch_0_mesh.json"));
    EXPECT_TRUE(j.contains("nodes"));
    EXPECT_TRUE(j.contains("tris"));
}
