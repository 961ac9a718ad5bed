#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "refractor/measure.hpp"
#include "refractor/oval.hpp"
#include "refractor/scene.hpp"
#include "refractor/snell.hpp"

namespace refractor {

struct RayRecord {
    std::size_t node{0};
    UnitVec direction;
    Vec3 surface_point;
    UnitVec refracted;
    std::size_t target{0};  // 0-based oval owning the direction
    double miss{0};         // distance from the refracted half-line to P_target
    bool boundary{false};   // inside the crease band, excluded from the aggregate
};

struct TraceReport {
    std::vector<RayRecord> rays;  // filled only on request
    std::size_t traced{0};
    std::size_t boundary_excluded{0};
    std::size_t within_tol{0};
    double tol{0};
    bool relative{true};
    double fraction_within{0};  // over non-boundary rays
    double max_miss{0};         // over non-boundary rays
    std::vector<double> ray_energy;   // Σ f·w of non-boundary rays landing within tol, credited to the nearest target
    std::vector<double> cell_energy;  // H_i restricted to non-boundary nodes
};

/// Distance from the half-line {origin + s·dir, s ≥ 0} to p.
inline double ray_point_distance(const Vec3& origin, const Vec3& dir, const Vec3& p) {
    const Vec3 v = p - origin;
    const double s = std::max(0.0, dot(v, dir));
    return norm(v - s * dir);
}

namespace detail {

inline std::optional<RayRecord> trace_ray_impl(const Scene& scene, std::span<const double> b, const UnitVec& x) {
    const auto r = rho(scene, b, x.vec());
    const OvalParams oval = scene.oval(r.index, b[r.index]);
    const UnitVec nu = oval_normal(x, oval);
    const auto refr = refract(x, nu, scene.kappa());
    if (!refr) return std::nullopt;
    RayRecord rec;
    rec.direction = x;
    rec.surface_point = r.radius * x.vec();
    rec.refracted = refr->m;
    rec.target = r.index;
    rec.miss = ray_point_distance(rec.surface_point, refr->m.vec(), oval.focus());
    return rec;
}

}  // namespace detail

/// Sends x through S(b): hit point ρ(x)x, normal of the owning oval, Snell refraction.
inline RayRecord trace_ray(const Scene& scene, std::span<const double> b, const UnitVec& x) {
    auto rec = detail::trace_ray_impl(scene, b, x);
    if (!rec) throw Error(ErrorKind::TotalInternalReflection, "ray totally reflected at the refractor");
    return *rec;
}

/// Nodes within `band` grid cells (θ clamped, φ periodic) of a label change, plus tie nodes.
inline std::vector<std::uint8_t> crease_band(const QuadratureGrid& grid, const CellAssignment& cells,
                                             std::size_t band = 2) {
    const std::size_t nt = grid.n_theta();
    const std::size_t np = grid.n_phi();
    std::vector<std::uint8_t> out(grid.size(), 0);
    const auto b = static_cast<std::ptrdiff_t>(band);
    for (std::size_t it = 0; it < nt; ++it) {
        for (std::size_t ip = 0; ip < np; ++ip) {
            const std::size_t k = grid.index(it, ip);
            if (cells.tie[k]) {
                out[k] = 1;
                continue;
            }
            for (std::ptrdiff_t dt = -b; dt <= b && !out[k]; ++dt) {
                const auto jt = static_cast<std::ptrdiff_t>(it) + dt;
                if (jt < 0 || jt >= static_cast<std::ptrdiff_t>(nt)) continue;
                for (std::ptrdiff_t dp = -b; dp <= b; ++dp) {
                    const auto jp = (static_cast<std::ptrdiff_t>(ip) + dp + static_cast<std::ptrdiff_t>(np)) %
                                    static_cast<std::ptrdiff_t>(np);
                    if (cells.label[grid.index(static_cast<std::size_t>(jt), static_cast<std::size_t>(jp))] !=
                        cells.label[k]) {
                        out[k] = 1;
                        break;
                    }
                }
            }
        }
    }
    return out;
}

inline constexpr std::size_t kCreaseBand = 2;

struct TraceOptions {
    double tol{1e-6};
    bool relative{true};  // tolerance for target i is tol·|P_i|
    bool keep_rays{false};
};

/// Traces every grid node. A ray counts as a hit when its miss distance is
/// strictly below the tolerance. A totally reflected ray counts as an infinite miss.
inline TraceReport validate_transport(const Scene& scene, std::span<const double> b, const QuadratureGrid& grid,
                                      const TraceOptions& opt = {}) {
    const double tol = opt.tol;
    auto tol_for = [&](std::size_t i) { return opt.relative ? tol * scene.focus_norm(i) : tol; };
    MeasureModel model(scene, grid);
    const CellAssignment cells = model.assign(b);
    const auto crease = crease_band(grid, cells, kCreaseBand);
    const EnergyField& energy = model.energies();
    const std::size_t n = scene.size();

    TraceReport rep;
    rep.tol = tol;
    rep.relative = opt.relative;
    rep.ray_energy.assign(n, 0.0);
    rep.cell_energy.assign(n, 0.0);
    std::vector<RayRecord> rays(grid.size());
    for_each_block(grid.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t k = begin; k < end; ++k) {
            auto rec = detail::trace_ray_impl(scene, b, grid[k].x);
            if (!rec) {
                rec = RayRecord{};
                rec->direction = grid[k].x;
                rec->target = cells.label[k];
                rec->miss = std::numeric_limits<double>::infinity();
            }
            rec->node = k;
            rec->boundary = crease[k] != 0;
            rays[k] = *rec;
        }
    });

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const RayRecord& r = rays[k];
        ++rep.traced;
        if (r.boundary) {
            ++rep.boundary_excluded;
            continue;
        }
        rep.max_miss = std::max(rep.max_miss, r.miss);
        if (r.miss < tol_for(r.target)) ++rep.within_tol;
        rep.cell_energy[cells.label[k]] += energy[k];
        if (!std::isfinite(r.miss)) continue;
        std::optional<std::size_t> landed;
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = ray_point_distance(r.surface_point, r.refracted.vec(), scene.targets()[i].point);
            if (d < tol_for(i) && d < closest) {
                closest = d;
                landed = i;
            }
        }
        if (landed) rep.ray_energy[*landed] += energy[k];
    }
    const std::size_t counted = rep.traced - rep.boundary_excluded;
    rep.fraction_within = counted ? static_cast<double>(rep.within_tol) / static_cast<double>(counted) : 0.0;
    if (opt.keep_rays) rep.rays = std::move(rays);
    return rep;
}

}  // namespace refractor
