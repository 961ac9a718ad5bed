// Command-line front end: validate | solve | trace | mesh.
//
// Exit codes: 0 success, 2 validation failure, 3 grid too coarse for the
// requested tolerance, 4 iteration cap reached, 1 anything else.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refractor/io.hpp"
#include "refractor/refractor.hpp"

namespace {

using namespace refractor;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitQuantization = 3;
constexpr int kExitMaxGroups = 4;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::H1Violated:
    case ErrorKind::H2Violated:
    case ErrorKind::R0TooLarge:
    case ErrorKind::InvalidScene:
    case ErrorKind::EnergyMismatch:
    case ErrorKind::InadmissibleVector:
        return kExitValidation;
    case ErrorKind::QuantizationTooCoarse:
        return kExitQuantization;
    case ErrorKind::MaxGroupsExceeded:
        return kExitMaxGroups;
    default:
        return kExitOther;
    }
}

struct GridSize {
    std::size_t n_theta{256};
    std::size_t n_phi{256};
};

GridSize parse_grid(const std::string& s) {
    GridSize g;
    char x = 0;
    std::istringstream in(s);
    if (!(in >> g.n_theta >> x >> g.n_phi) || (x != 'x' && x != 'X') || !in.eof()) {
        throw Error(ErrorKind::InvalidArgument, "grid must look like NxM, got '" + s + "'");
    }
    return g;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    out << text;
}

template <class Writer>
void write_with(const std::string& path, Writer&& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    w(out);
}

/// b comes from a result file's b_final or from a comma separated list.
BVector load_b(const Scene& scene, const std::string& from_result, const std::string& b_list) {
    std::vector<double> values;
    if (!from_result.empty()) {
        const json j = io::read_json_file(from_result);
        if (!j.contains("b_final")) throw Error(ErrorKind::InvalidArgument, from_result + " has no b_final");
        values = j.at("b_final").get<std::vector<double>>();
    } else if (!b_list.empty()) {
        std::istringstream in(b_list);
        std::string item;
        while (std::getline(in, item, ',')) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) throw Error(ErrorKind::InvalidArgument, "bad b coordinate '" + item + "'");
            values.push_back(v);
        }
    } else {
        throw Error(ErrorKind::InvalidArgument, "pass --from-result or --b");
    }
    return BVector::make(scene, std::move(values));
}

struct ValidateArgs {
    std::string scene;
    std::string grid{"256x256"};
    std::string out;
};

int run_validate(const ValidateArgs& a) {
    const SceneSpec spec = io::load_scene(a.scene);
    json report;
    report["scene"] = a.scene;
    Scene scene = [&] {
        try {
            return Scene::validate(spec);
        } catch (const Error& e) {
            report["status"] = "fail";
            report["condition"] = to_string(e.kind());
            report["message"] = e.what();
            std::cout << report.dump(2) << '\n';
            throw;
        }
    }();
    const GridSize gs = parse_grid(a.grid);
    const QuadratureGrid grid(scene.cap(), gs.n_theta, gs.n_phi);
    const EnergyField field = energy_field(scene, grid);

    report["tau_max"] = scene.tau_max();
    report["tau"] = scene.tau();
    report["tau_defaulted"] = scene.tau_defaulted();
    report["h1"] = "ok";
    report["h2"] = "ok";
    report["r0"] = scene.r0();
    report["r0_defaulted"] = scene.r0_defaulted();
    report["b1"] = scene.b1();
    report["b1_defaulted"] = scene.b1_defaulted();
    report["alpha"] = alpha_bound(scene);
    report["c0"] = scene.c0();
    json margins = json::array();
    for (const auto& m : scene.structural_margins()) {
        margins.push_back({{"i", m.i + 1}, {"j", m.j + 1}, {"margin", m.margin}});
    }
    report["structural_margins"] = margins;
    report["structural"] = scene.structural_ok() ? "ok" : "warn";
    report["grid"] = {gs.n_theta, gs.n_phi};
    report["total_energy"] = field.total();
    report["sum_weights"] = scene.sum_weights();
    report["normalize_weights"] = scene.normalize_weights();
    report["max_node_energy"] = field.max_node();
    try {
        const auto g = target_energies(scene, grid, field);
        report["target_energies"] = g;
    } catch (const Error& e) {
        report["status"] = "fail";
        report["condition"] = to_string(e.kind());
        report["message"] = e.what();
        std::cout << report.dump(2) << '\n';
        throw;
    }
    report["status"] = "ok";
    if (!scene.structural_ok()) {
        std::cerr << "warning: a target pair's plane through the origin meets the cap; the termination bound is "
                     "not backed by the Lipschitz estimate\n";
    }
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!a.out.empty()) write_text(a.out, text);
    return kExitOk;
}

struct SolveArgs {
    std::string scene;
    std::string grid{"512x512"};
    std::optional<double> epsilon;
    double rel_epsilon{1e-3};
    std::optional<double> delta;
    std::size_t max_groups{100000};
    double bracket_tol{1e-12};
    std::string out;
    std::string log;
    std::string cells;
};

int run_solve(const SolveArgs& a) {
    const Scene scene = Scene::validate(io::load_scene(a.scene));
    const GridSize gs = parse_grid(a.grid);
    const QuadratureGrid grid(scene.cap(), gs.n_theta, gs.n_phi);
    const double total = energy_field(scene, grid).total();

    SolverConfig cfg;
    cfg.epsilon = a.epsilon.value_or(a.rel_epsilon * total);
    cfg.delta = a.delta;
    cfg.max_groups = a.max_groups;
    cfg.bracket_tol = a.bracket_tol;

    const auto t0 = std::chrono::steady_clock::now();
    RefractorSolution sol = [&] {
        try {
            return solve_refractor(scene, grid, cfg);
        } catch (const SolverError& e) {
            if (e.trace() && !a.log.empty()) {
                write_with(a.log, [&](std::ostream& os) { io::write_convergence_csv(*e.trace(), os); });
            }
            throw;
        }
    }();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const json result = io::result_json(sol, {gs.n_theta, gs.n_phi, wall});
    const std::string text = result.dump(2) + "\n";
    if (!a.out.empty()) {
        write_text(a.out, text);
    } else {
        std::cout << text;
    }
    if (!a.log.empty()) write_with(a.log, [&](std::ostream& os) { io::write_convergence_csv(sol.trace, os); });
    if (!a.cells.empty()) {
        const CellAssignment cells = assign_cells(scene, sol.b, grid);
        write_with(a.cells, [&](std::ostream& os) { io::write_cells_csv(scene, grid, cells, os); });
    }
    if (!sol.trace.bound_ok) {
        std::cerr << "warning: " << sol.trace.group_count() << " groups exceed " << kBoundSafetyFactor
                  << "x the termination bound from the sampled Lipschitz constant\n";
    }
    for (std::size_t i = 0; i < sol.g.size(); ++i) {
        if (std::abs(sol.H.H[i] - sol.g[i]) > sol.epsilon) {
            std::cerr << "target " << i + 1 << " misses its energy by more than epsilon\n";
            return kExitOther;
        }
    }
    return kExitOk;
}

struct TraceArgs {
    std::string scene;
    std::string from_result;
    std::string b;
    std::string grid{"512x512"};
    double tol{1e-6};
    bool absolute{false};
    std::string out;
    std::string rays;
};

int run_trace(const TraceArgs& a) {
    const Scene scene = Scene::validate(io::load_scene(a.scene));
    const BVector b = load_b(scene, a.from_result, a.b);
    const GridSize gs = parse_grid(a.grid);
    const QuadratureGrid grid(scene.cap(), gs.n_theta, gs.n_phi);
    TraceOptions opt;
    opt.tol = a.tol;
    opt.relative = !a.absolute;
    opt.keep_rays = !a.rays.empty();
    const TraceReport rep = validate_transport(scene, b, grid, opt);
    json j = io::trace_report_json(rep);
    j["grid"] = {gs.n_theta, gs.n_phi};
    const std::string text = j.dump(2) + "\n";
    if (!a.out.empty()) {
        write_text(a.out, text);
    } else {
        std::cout << text;
    }
    if (!a.rays.empty()) write_with(a.rays, [&](std::ostream& os) { io::write_rays_csv(rep, os); });
    return kExitOk;
}

struct MeshArgs {
    std::string scene;
    std::string from_result;
    std::string b;
    std::string resolution{"64x128"};
    std::string out;
};

int run_mesh(const MeshArgs& a) {
    const Scene scene = Scene::validate(io::load_scene(a.scene));
    const BVector b = load_b(scene, a.from_result, a.b);
    const GridSize gs = parse_grid(a.resolution);
    const SurfaceMesh mesh = export_mesh(scene, b, gs.n_theta, gs.n_phi);
    if (!a.out.empty()) {
        write_with(a.out, [&](std::ostream& os) { io::write_obj(mesh, os); });
    } else {
        io::write_obj(mesh, std::cout);
    }
    std::cerr << "max vertex radius " << mesh.max_radius << " (r0 = " << scene.r0() << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    configure_workers_from_env();

    CLI::App app{"Poly-oval near-field refractor solver"};
    app.require_subcommand(1);

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Check a scene and report derived constants");
    validate->add_option("scene", va.scene, "Scene JSON")->required();
    validate->add_option("--grid", va.grid, "Quadrature grid NxM for the energy check");
    validate->add_option("--out", va.out, "Also write the report here");

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Find b so every target receives its energy within epsilon");
    solve_cmd->add_option("scene", sa.scene, "Scene JSON")->required();
    solve_cmd->add_option("--grid", sa.grid, "Quadrature grid NxM");
    solve_cmd->add_option("--epsilon", sa.epsilon, "Absolute energy tolerance");
    solve_cmd->add_option("--rel-epsilon", sa.rel_epsilon, "Tolerance as a fraction of total energy");
    solve_cmd->add_option("--delta", sa.delta, "Per-coordinate band (default epsilon/N)");
    solve_cmd->add_option("--max-groups", sa.max_groups, "Cap on coordinate sweeps");
    solve_cmd->add_option("--bracket-tol", sa.bracket_tol, "Smallest bisection bracket");
    solve_cmd->add_option("--out", sa.out, "Result JSON (stdout if omitted)");
    solve_cmd->add_option("--log", sa.log, "Convergence CSV");
    solve_cmd->add_option("--cells", sa.cells, "Per-node cell labels CSV");

    TraceArgs ta;
    auto* trace_cmd = app.add_subcommand("trace", "Forward-trace source rays through S(b)");
    trace_cmd->add_option("scene", ta.scene, "Scene JSON")->required();
    auto* tr_from = trace_cmd->add_option("--from-result", ta.from_result, "Result JSON from solve");
    auto* tr_b = trace_cmd->add_option("--b", ta.b, "Comma separated b vector");
    tr_from->excludes(tr_b);
    trace_cmd->add_option("--grid", ta.grid, "Ray grid NxM");
    trace_cmd->add_option("--tol", ta.tol, "Miss tolerance (relative to |P_i| unless --absolute-tol)");
    trace_cmd->add_flag("--absolute-tol", ta.absolute, "Interpret --tol in length units");
    trace_cmd->add_option("--out", ta.out, "Report JSON (stdout if omitted)");
    trace_cmd->add_option("--rays", ta.rays, "Per-ray CSV");

    MeshArgs ma;
    auto* mesh_cmd = app.add_subcommand("mesh", "Export S(b) as a Wavefront OBJ mesh");
    mesh_cmd->add_option("scene", ma.scene, "Scene JSON")->required();
    auto* me_from = mesh_cmd->add_option("--from-result", ma.from_result, "Result JSON from solve");
    auto* me_b = mesh_cmd->add_option("--b", ma.b, "Comma separated b vector");
    me_from->excludes(me_b);
    mesh_cmd->add_option("--resolution", ma.resolution, "Vertex grid NxM");
    mesh_cmd->add_option("--out", ma.out, "OBJ file (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return run_validate(va);
        if (*solve_cmd) return run_solve(sa);
        if (*trace_cmd) return run_trace(ta);
        if (*mesh_cmd) return run_mesh(ma);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (e.kind() == ErrorKind::QuantizationTooCoarse) {
            std::cerr << "hint: pass a finer --grid or a larger --epsilon\n";
        }
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
