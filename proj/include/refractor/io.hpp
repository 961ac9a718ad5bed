#pragma once

// File formats: scene JSON in, result/trace-report JSON, convergence and
// per-node CSV, Wavefront OBJ out.

#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refractor/measure.hpp"
#include "refractor/raytrace.hpp"
#include "refractor/refractor_solve.hpp"
#include "refractor/scene.hpp"
#include "refractor/solver.hpp"

namespace refractor::io {

using json = nlohmann::json;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {
inline Vec3 read_vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorKind::InvalidScene, std::string(what) + " must be a 3-element array");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace detail

/// Keys: kappa, cap{axis[3], half_angle_deg}, intensity{kind, amplitude,
/// width_deg?}, targets[{point[3], weight}], and optionally tau, r0, b1,
/// normalize_weights.
inline SceneSpec parse_scene(const json& j) {
    try {
        SceneSpec spec;
        spec.kappa = j.at("kappa").get<double>();
        const json& cap = j.at("cap");
        spec.cap = CapDomain(UnitVec::normalize(detail::read_vec3(cap.at("axis"), "cap.axis")),
                             deg2rad(cap.at("half_angle_deg").get<double>()));
        if (j.contains("intensity")) {
            const json& in = j.at("intensity");
            const std::string kind = in.value("kind", std::string("constant"));
            if (kind == "constant") {
                spec.intensity.kind = IntensitySpec::Kind::Constant;
            } else if (kind == "axial-gaussian") {
                spec.intensity.kind = IntensitySpec::Kind::AxialGaussian;
                spec.intensity.width = deg2rad(in.at("width_deg").get<double>());
            } else {
                throw Error(ErrorKind::InvalidScene, "unknown intensity kind '" + kind + "'");
            }
            spec.intensity.amplitude = in.value("amplitude", 1.0);
        }
        for (const json& t : j.at("targets")) {
            spec.targets.push_back({detail::read_vec3(t.at("point"), "target point"), t.at("weight").get<double>()});
        }
        if (j.contains("tau")) spec.tau = j.at("tau").get<double>();
        if (j.contains("r0")) spec.r0 = j.at("r0").get<double>();
        if (j.contains("b1")) spec.b1 = j.at("b1").get<double>();
        spec.normalize_weights = j.value("normalize_weights", true);
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidScene, e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) throw Error(ErrorKind::InvalidScene, e.what());
        throw;
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
    }
}

inline SceneSpec load_scene(const std::string& path) {
    try {
        return parse_scene(read_json_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) throw Error(ErrorKind::InvalidScene, e.what());
        throw;
    }
}

struct RunInfo {
    std::size_t n_theta{0};
    std::size_t n_phi{0};
    double wall_time{0};
};

/// Result document of a solve. Everything except wall_time is a pure
/// function of the scene, grid and solver settings.
inline json result_json(const RefractorSolution& sol, const RunInfo& info) {
    const SolverTrace& t = sol.trace;
    std::vector<double> residuals(sol.g.size());
    for (std::size_t i = 0; i < sol.g.size(); ++i) residuals[i] = std::abs(sol.H.H[i] - sol.g[i]);
    json j;
    j["b_final"] = std::vector<double>(sol.b.values().begin(), sol.b.values().end());
    j["H"] = sol.H.H;
    j["g"] = sol.g;
    j["residuals"] = residuals;
    j["epsilon"] = sol.epsilon;
    j["delta"] = t.delta;
    j["alpha"] = sol.alpha;
    j["total_energy"] = sol.H.total;
    j["grid"] = {info.n_theta, info.n_phi};
    j["groups_used"] = t.group_count();
    j["oracle_evaluations"] = t.oracle_evaluations;
    j["empirical_lipschitz"] = t.lipschitz_estimate;
    j["lipschitz_probe"] = std::isfinite(t.lipschitz_probe) ? json(t.lipschitz_probe) : json(nullptr);
    j["bound_value"] = t.bound_value;
    j["bound_check"] = t.bound_ok ? "pass" : "warn";
    j["bound_supported"] = t.bound_supported;
    j["wall_time"] = info.wall_time;
    return j;
}

/// group, step, coordinate (1-based), b_old, b_new, G_target_before, G_target_after, oracle_evals
inline void write_convergence_csv(const SolverTrace& trace, std::ostream& os) {
    os << "group,step,coordinate,b_old,b_new,G_target_before,G_target_after,oracle_evals\n";
    for (const auto& g : trace.groups) {
        for (const auto& s : g.steps) {
            os << s.group << ',' << s.step << ',' << (s.coordinate + 1) << ',' << fmt_g17(s.b_old) << ','
               << fmt_g17(s.b_new) << ',' << fmt_g17(s.g_before) << ',' << fmt_g17(s.g_after) << ','
               << s.oracle_evals << '\n';
        }
    }
}

/// node_index, theta, phi, weight, f, label (1-based)
inline void write_cells_csv(const Scene& scene, const QuadratureGrid& grid, const CellAssignment& cells,
                            std::ostream& os) {
    os << "node_index,theta,phi,weight,f,label\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& n = grid[k];
        os << k << ',' << fmt_g17(n.theta) << ',' << fmt_g17(n.phi) << ',' << fmt_g17(n.weight) << ','
           << fmt_g17(scene.f(n.x.vec())) << ',' << (cells.label[k] + 1) << '\n';
    }
}

/// v / vn / f records, 1-based indices, vertices in θ-major grid order.
inline void write_obj(const SurfaceMesh& mesh, std::ostream& os) {
    char buf[128];
    os << "# refractor surface: " << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " faces\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.12g %.12g %.12g\n", v.x, v.y, v.z);
        os << buf;
    }
    for (const auto& n : mesh.normals) {
        std::snprintf(buf, sizeof buf, "vn %.12g %.12g %.12g\n", n.x, n.y, n.z);
        os << buf;
    }
    for (const auto& f : mesh.faces) {
        std::snprintf(buf, sizeof buf, "f %u//%u %u//%u %u//%u\n", f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1,
                      f[2] + 1, f[2] + 1);
        os << buf;
    }
}

inline json trace_report_json(const TraceReport& rep) {
    json j;
    j["traced"] = rep.traced;
    j["boundary_excluded"] = rep.boundary_excluded;
    j["within_tol"] = rep.within_tol;
    j["tol"] = rep.tol;
    j["tol_relative_to_target_distance"] = rep.relative;
    j["fraction_within"] = rep.fraction_within;
    j["max_miss"] = rep.max_miss;
    j["ray_energy"] = rep.ray_energy;
    j["cell_energy"] = rep.cell_energy;
    j["ray_energy_matches_cells"] = rep.ray_energy == rep.cell_energy;
    return j;
}

/// node_index, target (1-based), miss, boundary flag, hit point, refracted direction
inline void write_rays_csv(const TraceReport& rep, std::ostream& os) {
    os << "node_index,target,miss,boundary,px,py,pz,mx,my,mz\n";
    for (const auto& r : rep.rays) {
        os << r.node << ',' << (r.target + 1) << ',' << fmt_g17(r.miss) << ',' << (r.boundary ? 1 : 0) << ','
           << fmt_g17(r.surface_point.x) << ',' << fmt_g17(r.surface_point.y) << ',' << fmt_g17(r.surface_point.z)
           << ',' << fmt_g17(r.refracted.x()) << ',' << fmt_g17(r.refracted.y()) << ',' << fmt_g17(r.refracted.z())
           << '\n';
    }
}

}  // namespace refractor::io
