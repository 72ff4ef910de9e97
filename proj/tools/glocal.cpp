// Command-line front end: run, compare, sweep, mesh.
//
// Exit codes: 0 success/converged, 1 input error, 2 not converged (run) or
// error above threshold (compare).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "glocal/driver.hpp"
#include "glocal/mesh_json.hpp"

namespace fs = std::filesystem;
using namespace glocal;

namespace {

struct LoadedScenario
{
    nlohmann::json doc;
    Scenario scenario;
    std::string hash;
};

LoadedScenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    LoadedScenario ls;
    ls.doc = parse_json_text(ss.str());
    ls.scenario = parse_scenario(ls.doc);
    ls.hash = scenario_hash(ls.doc);
    return ls;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        if (item.empty())
            continue;
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size())
            throw std::invalid_argument("bad list entry '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty list");
    return out;
}

struct RunFlags
{
    std::string mode;
    double omega = std::numeric_limits<double>::quiet_NaN();
    double tol = std::numeric_limits<double>::quiet_NaN();
    int max_iter = 0;
    std::string executor = "virtual";
    long long seed = -1;
    bool barrier = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    cmd->add_option("--mode", f.mode, "richardson | aitken | async (default: scenario)")
        ->check(CLI::IsMember({"richardson", "aitken", "async"}));
    cmd->add_option("--omega", f.omega, "initial / fixed relaxation");
    cmd->add_option("--tol", f.tol, "relative residual tolerance");
    cmd->add_option("--max-iter", f.max_iter, "maximum global iterations");
    cmd->add_option("--executor", f.executor, "async executor: virtual | threads")
        ->check(CLI::IsMember({"virtual", "threads"}));
    cmd->add_option("--seed", f.seed, "seed of the virtual executor jitter");
    cmd->add_flag("--barrier", f.barrier, "run rank 0 as a wait-for-all program over the windows");
}

RunRequest make_request(const Scenario& sc, const RunFlags& f)
{
    RunRequest req;
    req.cfg = sc.solver;
    req.async = sc.async;
    if (!f.mode.empty())
        req.cfg.mode = parse_mode(f.mode);
    if (!std::isnan(f.omega))
        req.cfg.omega0 = f.omega;
    if (!std::isnan(f.tol))
        req.cfg.tol = f.tol;
    if (f.max_iter > 0)
        req.cfg.max_iter = f.max_iter;
    if (f.seed >= 0)
        req.async.seed = static_cast<std::uint64_t>(f.seed);
    req.executor = f.executor == "threads" ? ExecutorKind::threads : ExecutorKind::virtual_time;
    req.barrier = f.barrier;
    validate(req.cfg);
    return req;
}

int cmd_run(const std::string& scenario_path, const RunFlags& flags, const std::string& out_dir)
{
    const LoadedScenario ls = load_scenario(scenario_path);
    const RunRequest req = make_request(ls.scenario, flags);
    const Models models = build_models(ls.scenario);
    const RunOutcome out = run(models, req);
    RunMeta meta{ls.hash, ls.scenario.name, executor_name(req), req.async.seed, req.cfg};
    write_run_outputs(out_dir, out, meta);
    std::cout << ls.scenario.name << " mode=" << to_string(req.cfg.mode) << " executor=" << meta.executor
              << " converged=" << (out.report.converged ? "yes" : "no")
              << " iterations=" << iteration_summary(out.report)
              << " residual=" << format_double(out.report.final_residual) << " (" << out.report.status << ")\n";
    return out.report.converged ? 0 : 2;
}

int cmd_compare(const std::string& scenario_path, const std::string& report_path)
{
    const LoadedScenario ls = load_scenario(scenario_path);
    std::ifstream in(report_path);
    if (!in)
        throw std::runtime_error("cannot open report '" + report_path + "'");
    const nlohmann::json rep = nlohmann::json::parse(in);
    if (rep.value("scenario_hash", std::string()) != ls.hash)
        throw std::runtime_error("report was produced from a different scenario (hash mismatch)");
    if (!rep.contains("solution"))
        throw std::runtime_error("report has no solution block");

    const Models models = build_models(ls.scenario);
    const Vector u_ref = reference_solve(models.reference);
    const Vector u_global = rep["solution"]["global"].get<Vector>();
    const auto u_patches = rep["solution"]["patches"].get<std::vector<Vector>>();
    const auto errs = compare_to_reference(models, u_global, u_patches, u_ref);

    const double tol = rep.value("tol", 1e-8);
    const double threshold = 10.0 * tol;
    std::cout << "subdomain,rel_error_inf\n";
    for (const auto& e : errs)
        std::cout << e.name << ',' << format_double(e.error) << '\n';
    const double worst = max_error(errs);
    std::cout << "max," << format_double(worst) << " (threshold " << format_double(threshold) << ")\n";
    return worst <= threshold ? 0 : 2;
}

int cmd_sweep(const std::string& scenario_path, const RunFlags& flags, const std::string& grid,
              const std::string& omegas, const std::string& hetero, const std::string& out_dir)
{
    const int axes = !grid.empty() + !omegas.empty() + !hetero.empty();
    if (axes != 1)
        throw std::invalid_argument("sweep needs exactly one of --grid, --omega-list, --hetero-list");
    const LoadedScenario ls = load_scenario(scenario_path);
    const RunRequest req = make_request(ls.scenario, flags);
    SweepAxis axis = SweepAxis::grid;
    std::vector<double> values;
    if (!grid.empty())
        values = parse_list(grid);
    else if (!omegas.empty())
    {
        axis = SweepAxis::omega;
        values = parse_list(omegas);
    }
    else
    {
        axis = SweepAxis::hetero;
        values = parse_list(hetero);
    }

    const auto rows = sweep(ls.scenario, axis, values, req);
    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < rows.size(); ++k)
    {
        if (rows[k].status.rfind("error", 0) == 0)
            continue;
        RunMeta meta{ls.hash, ls.scenario.name, executor_name(req), req.async.seed, req.cfg};
        if (axis == SweepAxis::omega)
            meta.cfg.omega0 = rows[k].value;
        RunOutcome out{rows[k].report, {}};
        write_run_outputs(fs::path(out_dir) / ("point_" + std::to_string(k)), out, meta);
    }
    std::ofstream csv(fs::path(out_dir) / "sweep.csv");
    write_sweep_csv(csv, axis, rows);
    write_sweep_csv(std::cout, axis, rows);
    return 0;
}

int cmd_mesh(const std::string& scenario_path, const std::string& out_dir)
{
    const LoadedScenario ls = load_scenario(scenario_path);
    const Models models = build_models(ls.scenario);
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "global_mesh.json") << mesh_to_json(models.global.mesh).dump() << '\n';
    for (const auto& pm : models.patches)
        std::ofstream(fs::path(out_dir) / ("patch_" + std::to_string(pm.id) + "_mesh.json"))
            << mesh_to_json(pm.mesh).dump() << '\n';
    std::ofstream(fs::path(out_dir) / "reference_mesh.json") << mesh_to_json(models.reference.mesh).dump() << '\n';
    std::cout << "global nodes=" << models.global.mesh.num_nodes() << " gamma dofs=" << models.global.gamma_size()
              << " patches=" << models.patches.size() << " reference nodes=" << models.reference.num_nodes() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Global-local coupling driver"};
    app.require_subcommand(1);

    std::string scenario, out_dir = "out", report, grid, omegas, hetero;
    RunFlags run_flags, sweep_flags;

    auto* run_cmd = app.add_subcommand("run", "run one coupling solve");
    run_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    add_run_flags(run_cmd, run_flags);
    run_cmd->add_option("--out", out_dir, "output directory");

    auto* cmp_cmd = app.add_subcommand("compare", "compare a run report with the reference solution");
    cmp_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    cmp_cmd->add_option("report", report, "report.json from 'run'")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
    sweep_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    sweep_cmd->add_option("--grid", grid, "comma separated grid sizes n");
    sweep_cmd->add_option("--omega-list", omegas, "comma separated relaxations");
    sweep_cmd->add_option("--hetero-list", hetero, "comma separated inclusion ratios");
    add_run_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--out", out_dir, "output directory");

    auto* mesh_cmd = app.add_subcommand("mesh", "dump the meshes of a scenario as JSON");
    mesh_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    mesh_cmd->add_option("--out", out_dir, "output directory");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (*run_cmd)
            return cmd_run(scenario, run_flags, out_dir);
        if (*cmp_cmd)
            return cmd_compare(scenario, report);
        if (*sweep_cmd)
            return cmd_sweep(scenario, sweep_flags, grid, omegas, hetero, out_dir);
        if (*mesh_cmd)
            return cmd_mesh(scenario, out_dir);
    }
    catch (const ScenarioError& e)
    {
        std::cerr << "scenario error: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
