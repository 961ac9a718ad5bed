#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "refractor/measure.hpp"
#include "refractor/scene.hpp"
#include "refractor/solver.hpp"

namespace refractor {

struct RefractorSolution {
    BVector b;
    MeasureVector H;
    std::vector<double> g;  // target energies actually used (normalized if requested)
    double alpha{0};
    double epsilon{0};
    SolverTrace trace;
};

/// The refractor measure seen through the oracle box of the abstract solver:
/// α_i = κ|P_i|, β_i = (1+κ)r0 + κ|P_i|, C_i = total source energy.
inline MonotoneOracleSpec refractor_oracle_spec(const Scene& scene, double total) {
    MonotoneOracleSpec spec;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        spec.lower.push_back(scene.lower(i));
        spec.upper.push_back(scene.upper(i));
        spec.limit.push_back(total);
    }
    return spec;
}

/// Default Lipschitz probe step: a thousandth of the narrowest bisection bracket.
inline double default_lipschitz_probe(const MonotoneOracleSpec& spec, std::span<const double> floors) {
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < spec.size(); ++j) width = std::min(width, spec.upper[j] - floors[j]);
    return std::isfinite(width) ? 1e-3 * width : 0.0;
}

/// Solves for b with |H_i(b) − g_i| ≤ ε on the given grid. `config.epsilon`
/// is an absolute energy; `config.guard` is replaced by α, the floor every
/// admissible vector respects.
inline RefractorSolution solve_refractor(const Scene& scene, const QuadratureGrid& grid, SolverConfig config) {
    MeasureModel model(scene, grid);
    const std::vector<double> g = target_energies(scene, grid, model.energies());
    const std::size_t n = scene.size();
    const double delta = config.delta_for(n);
    if (n > 1 && model.energies().max_node() > delta / 4.0) {
        throw SolverError(ErrorKind::QuantizationTooCoarse,
                          "largest node energy " + std::to_string(model.energies().max_node()) +
                              " exceeds delta/4 = " + std::to_string(delta / 4.0) +
                              "; use a finer grid or a larger epsilon");
    }
    const double alpha = alpha_bound(scene);
    config.guard = alpha;
    const MonotoneOracleSpec spec = refractor_oracle_spec(scene, model.total());
    const BVector b0 = initial_admissible_vector(scene);

    SolveResult result = solve(model, spec, g, config, b0.values());

    SolverTrace& trace = result.trace;
    if (n > 1) {
        const double t_probe = config.lipschitz_probe.value_or(default_lipschitz_probe(spec, trace.floors));
        trace.lipschitz_probe = t_probe;
        trace.lipschitz_estimate =
            estimate_lipschitz(model, spec, trace.floors, scene.b1(), config.lipschitz_samples, t_probe, config.seed);
        trace.bound_value = termination_bound(trace.lipschitz_estimate, delta, trace.b_start, trace.floors);
        trace.bound_ok = static_cast<double>(trace.group_count()) <= kBoundSafetyFactor * trace.bound_value;
    } else {
        trace.lipschitz_estimate = 0.0;
        trace.bound_value = 0.0;
        trace.bound_ok = true;
    }
    trace.bound_supported = scene.structural_ok();

    MeasureVector H = model.evaluate(result.b);
    return {BVector::make(scene, result.b), std::move(H), g, alpha, config.epsilon,
            std::move(trace)};
}

}  // namespace refractor
