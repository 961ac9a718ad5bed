#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "refractor/oval.hpp"
#include "refractor/parallel.hpp"
#include "refractor/scene.hpp"
#include "refractor/vecgeom.hpp"

namespace refractor {

/// Per-node energies f(x)·w snapped to a common power-of-two lattice whose
/// spacing leaves every partial sum an exact double. Any partition of the
/// nodes therefore sums back to `total()` bit for bit, in any order.
class EnergyField {
public:
    template <class Intensity>
    EnergyField(const QuadratureGrid& grid, Intensity&& f) : energy_(grid.size()) {
        double max_raw = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            energy_[k] = f(grid[k].x.vec()) * grid[k].weight;
            max_raw = std::max(max_raw, energy_[k]);
        }
        int exp_max = 0;
        std::frexp(max_raw, &exp_max);
        const int node_bits = static_cast<int>(std::ceil(std::log2(static_cast<double>(grid.size()))));
        unit_ = std::ldexp(1.0, exp_max - (52 - node_bits));
        total_ = 0.0;
        max_ = 0.0;
        for (auto& e : energy_) {
            e = std::nearbyint(e / unit_) * unit_;
            total_ += e;
            max_ = std::max(max_, e);
        }
    }

    double operator[](std::size_t k) const { return energy_[k]; }
    std::size_t size() const { return energy_.size(); }
    double total() const { return total_; }
    /// Largest single-node energy: the biggest jump H can make when one node changes cell.
    double max_node() const { return max_; }
    double unit() const { return unit_; }

private:
    std::vector<double> energy_;
    double total_{0};
    double max_{0};
    double unit_{1};
};

inline EnergyField energy_field(const Scene& scene, const QuadratureGrid& grid) {
    return EnergyField(grid, [&](const Vec3& x) { return scene.f(x); });
}

/// Σ f(node)·weight(node) on the energy lattice.
template <class Intensity>
double total_energy(const QuadratureGrid& grid, Intensity&& f) {
    return EnergyField(grid, std::forward<Intensity>(f)).total();
}

struct RhoResult {
    double radius;
    std::size_t index;  // 0-based, smallest index among minimizers
};

/// Min-envelope radius ρ(x) = min_i h(x, P_i, b_i) and its minimizing oval.
inline RhoResult rho(const Scene& scene, std::span<const double> b, const Vec3& x) {
    RhoResult best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const double h = oval_radius_from_dot(dot(x, scene.targets()[i].point), b[i], scene.focus_norm(i),
                                              scene.kappa());
        if (h < best.radius) best = {h, i};
    }
    return best;
}

inline constexpr double kTieRelTol = 1e-12;

struct CellAssignment {
    std::vector<std::uint32_t> label;  // 0-based target index per node
    std::vector<std::uint8_t> tie;     // two smallest radii within kTieRelTol·ρ

    std::size_t size() const { return label.size(); }
};

struct MeasureVector {
    std::vector<double> H;
    double total{0};
};

/// Refractor measure over a fixed grid. Caches the per-node dot products x·P_i
/// and, between calls, the radii of each oval for its last b_i, so an
/// evaluation that moves one coordinate recomputes a single oval. The cache
/// makes evaluate() non-const; one instance serves one caller at a time.
class MeasureModel {
public:
    MeasureModel(const Scene& scene, const QuadratureGrid& grid)
        : kappa_(scene.kappa()),
          n_targets_(scene.size()),
          n_nodes_(grid.size()),
          energy_(energy_field(scene, grid)),
          dots_(n_targets_ * n_nodes_),
          radii_(n_targets_ * n_nodes_),
          cached_b_(n_targets_, std::numeric_limits<double>::quiet_NaN()) {
        for (std::size_t i = 0; i < n_targets_; ++i) {
            norms_.push_back(scene.focus_norm(i));
            const Vec3& p = scene.targets()[i].point;
            for (std::size_t k = 0; k < n_nodes_; ++k) dots_[i * n_nodes_ + k] = dot(grid[k].x.vec(), p);
        }
    }

    std::size_t targets() const { return n_targets_; }
    std::size_t nodes() const { return n_nodes_; }
    const EnergyField& energies() const { return energy_; }
    double total() const { return energy_.total(); }

    MeasureVector evaluate(std::span<const double> b) {
        refresh(b);
        const std::size_t blocks = (n_nodes_ + kBlockSize - 1) / kBlockSize;
        std::vector<double> partial(blocks * n_targets_, 0.0);
        for_each_block(n_nodes_, [&](std::size_t begin, std::size_t end, std::size_t block) {
            double* acc = &partial[block * n_targets_];
            for (std::size_t k = begin; k < end; ++k) acc[argmin(k).first] += energy_[k];
        });
        MeasureVector out{std::vector<double>(n_targets_, 0.0), energy_.total()};
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            for (std::size_t i = 0; i < n_targets_; ++i) out.H[i] += partial[blk * n_targets_ + i];
        }
        return out;
    }

    std::vector<double> operator()(std::span<const double> b) { return evaluate(b).H; }

    CellAssignment assign(std::span<const double> b) {
        refresh(b);
        CellAssignment out{std::vector<std::uint32_t>(n_nodes_), std::vector<std::uint8_t>(n_nodes_)};
        for_each_block(n_nodes_, [&](std::size_t begin, std::size_t end, std::size_t) {
            for (std::size_t k = begin; k < end; ++k) {
                const auto [label, tie] = argmin(k);
                out.label[k] = static_cast<std::uint32_t>(label);
                out.tie[k] = tie ? 1 : 0;
            }
        });
        return out;
    }

private:
    void refresh(std::span<const double> b) {
        if (b.size() != n_targets_) throw Error(ErrorKind::InvalidArgument, "b has the wrong dimension");
        for (std::size_t i = 0; i < n_targets_; ++i) {
            if (b[i] == cached_b_[i]) continue;
            const double bi = b[i];
            const double p = norms_[i];
            for_each_block(n_nodes_, [&](std::size_t begin, std::size_t end, std::size_t) {
                for (std::size_t k = begin; k < end; ++k) {
                    radii_[i * n_nodes_ + k] = oval_radius_from_dot(dots_[i * n_nodes_ + k], bi, p, kappa_);
                }
            });
            cached_b_[i] = bi;
        }
    }

    std::pair<std::size_t, bool> argmin(std::size_t k) const {
        double best = radii_[k];
        double second = std::numeric_limits<double>::infinity();
        std::size_t label = 0;
        for (std::size_t i = 1; i < n_targets_; ++i) {
            const double h = radii_[i * n_nodes_ + k];
            if (h < best) {
                second = best;
                best = h;
                label = i;
            } else if (h < second) {
                second = h;
            }
        }
        return {label, second - best < kTieRelTol * best};
    }

    double kappa_;
    std::size_t n_targets_;
    std::size_t n_nodes_;
    EnergyField energy_;
    std::vector<double> norms_;
    std::vector<double> dots_;
    std::vector<double> radii_;
    std::vector<double> cached_b_;
};

inline CellAssignment assign_cells(const Scene& scene, std::span<const double> b, const QuadratureGrid& grid) {
    return MeasureModel(scene, grid).assign(b);
}

/// H_i(b) = Σ over nodes labeled i of f·w.
inline MeasureVector refractor_measure(const Scene& scene, std::span<const double> b, const QuadratureGrid& grid) {
    return MeasureModel(scene, grid).evaluate(b);
}

/// Target energies the solver aims for. With normalize_weights the g_i are
/// rescaled to sum to the grid energy; otherwise their sum must already agree
/// with it to within ten times the quadrature area error times max f.
inline std::vector<double> target_energies(const Scene& scene, const QuadratureGrid& grid, const EnergyField& field) {
    std::vector<double> g;
    const double sum = scene.sum_weights();
    if (scene.normalize_weights()) {
        for (const auto& t : scene.targets()) g.push_back(t.weight / sum * field.total());
        return g;
    }
    const double tol = 10.0 * std::abs(grid.total_weight() - grid.cap().area()) * scene.intensity().max_value();
    if (std::abs(sum - field.total()) > tol) {
        throw Error(ErrorKind::EnergyMismatch, "sum of weights " + std::to_string(sum) +
                                                   " differs from source energy " + std::to_string(field.total()));
    }
    for (const auto& t : scene.targets()) g.push_back(t.weight);
    return g;
}

struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
    std::vector<std::array<std::uint32_t, 3>> faces;  // 0-based
    double max_radius{0};
};

/// Samples S(b) at the midpoint grid of the cap: vertex ρ(x)x with the normal
/// of the oval owning x (smaller index on creases). Rings of the θ-major grid
/// are stitched with two triangles per quad, φ wraps around, and the
/// innermost ring is closed with a fan.
inline SurfaceMesh export_mesh(const Scene& scene, std::span<const double> b, std::size_t n_theta,
                               std::size_t n_phi) {
    const QuadratureGrid grid(scene.cap(), n_theta, n_phi);
    SurfaceMesh mesh;
    mesh.vertices.reserve(grid.size());
    mesh.normals.reserve(grid.size());
    for (const auto& node : grid.nodes()) {
        const auto r = rho(scene, b, node.x.vec());
        mesh.vertices.push_back(r.radius * node.x.vec());
        mesh.normals.push_back(oval_normal(node.x, scene.oval(r.index, b[r.index])).vec());
        mesh.max_radius = std::max(mesh.max_radius, r.radius);
    }
    auto id = [&](std::size_t it, std::size_t ip) { return static_cast<std::uint32_t>(grid.index(it, ip % n_phi)); };
    for (std::size_t ip = 1; ip + 1 < n_phi; ++ip) mesh.faces.push_back({id(0, 0), id(0, ip), id(0, ip + 1)});
    for (std::size_t it = 0; it + 1 < n_theta; ++it) {
        for (std::size_t ip = 0; ip < n_phi; ++ip) {
            mesh.faces.push_back({id(it, ip), id(it + 1, ip), id(it + 1, ip + 1)});
            mesh.faces.push_back({id(it, ip), id(it + 1, ip + 1), id(it, ip + 1)});
        }
    }
    return mesh;
}

}  // namespace refractor
