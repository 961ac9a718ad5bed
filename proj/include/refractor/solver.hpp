#pragma once

// Monotone coordinate equilibration for a vector-valued oracle G on a box
// ∏(α_i, β_i). Requirements on G:
//   (a) continuous, or a fine enough step function (see QuantizationTooCoarse),
//   (b) G_i non-increasing in b_i and non-decreasing in b_j for j ≠ i,
//   (c) G_i → C_i as b_i → α_i⁺.
// Coordinate 1 stays pinned; coordinates 2..N only ever move down.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "refractor/error.hpp"

namespace refractor {

template <class O>
concept MeasureOracle = requires(O& o, std::span<const double> b) {
    { o(b) } -> std::convertible_to<std::vector<double>>;
};

struct MonotoneOracleSpec {
    std::vector<double> lower;  // α_i
    std::vector<double> upper;  // β_i
    std::vector<double> limit;  // C_i

    std::size_t size() const { return lower.size(); }
};

struct SolverConfig {
    double epsilon{0.0};
    std::optional<double> delta;  // defaults to epsilon / N
    double bracket_tol{1e-12};
    std::size_t max_groups{100000};
    double guard{0.0};  // bisection floor is α_j + guard
    std::size_t lipschitz_samples{32};
    std::optional<double> lipschitz_probe;
    std::uint64_t seed{20240521};

    double delta_for(std::size_t n) const { return delta.value_or(epsilon / static_cast<double>(n)); }
};

struct StepRecord {
    std::size_t group{0};  // 1-based
    std::size_t step{0};   // 1-based position inside the group
    std::size_t coordinate{0};  // 0-based
    double b_old{0}, b_new{0};
    double g_before{0}, g_after{0};  // G_coordinate before/after
    std::size_t oracle_evals{0};
    std::size_t bisection_evals{0};
    bool changed{false};
    std::vector<double> b;  // vector after the step
    std::vector<double> G;  // oracle value at b
};

struct GroupRecord {
    std::vector<StepRecord> steps;
    bool changed{false};
};

struct SolverTrace {
    std::vector<double> b_start;
    std::vector<double> G_start;
    std::vector<double> floors;
    std::vector<GroupRecord> groups;
    std::vector<double> b_final;
    std::vector<double> G_final;
    std::vector<double> residuals;
    double delta{0};
    std::size_t oracle_evaluations{0};
    double lipschitz_estimate{std::nan("")};
    double lipschitz_probe{std::nan("")};
    double bound_value{std::nan("")};
    bool bound_ok{false};
    bool bound_supported{true};

    std::size_t group_count() const { return groups.size(); }
};

class SolverError : public Error {
public:
    SolverError(ErrorKind kind, const std::string& what, std::shared_ptr<const SolverTrace> trace = nullptr)
        : Error(kind, what), trace_(std::move(trace)) {}
    const SolverTrace* trace() const { return trace_.get(); }

private:
    std::shared_ptr<const SolverTrace> trace_;
};

struct AdjustOutcome {
    std::vector<double> b;
    std::vector<double> G;
    StepRecord record;
};

/// One step of the sweep: if G_j(b) ≥ f_j − δ, b is kept. Otherwise b_j is
/// lowered by bisection on [floor_j, b_j] until G_j lands in [f_j, f_j + δ].
/// `G_at_b` is the oracle value at b, so the no-op branch costs nothing.
template <MeasureOracle Oracle>
AdjustOutcome adjust_coordinate(Oracle& oracle, std::size_t j, std::vector<double> b, std::vector<double> G_at_b,
                                double f_j, double delta, double floor_j, double bracket_tol) {
    AdjustOutcome out;
    out.record.coordinate = j;
    out.record.b_old = b[j];
    out.record.g_before = G_at_b[j];
    if (G_at_b[j] >= f_j - delta) {
        out.record.b_new = b[j];
        out.record.g_after = G_at_b[j];
        out.b = std::move(b);
        out.G = std::move(G_at_b);
        return out;
    }

    auto probe = [&](double value) {
        std::vector<double> trial = b;
        trial[j] = value;
        std::vector<double> g = oracle(std::span<const double>(trial));
        ++out.record.oracle_evals;
        return std::pair{std::move(trial), std::move(g)};
    };
    auto land = [&](std::pair<std::vector<double>, std::vector<double>> hit) {
        out.record.b_new = hit.first[j];
        out.record.g_after = hit.second[j];
        out.record.changed = true;
        out.b = std::move(hit.first);
        out.G = std::move(hit.second);
        return out;
    };

    auto at_floor = probe(floor_j);
    if (at_floor.second[j] < f_j) {
        throw SolverError(ErrorKind::FloorReached, "coordinate " + std::to_string(j + 1) + ": G at floor " +
                                                       std::to_string(at_floor.second[j]) + " < target " +
                                                       std::to_string(f_j));
    }
    if (at_floor.second[j] <= f_j + delta) return land(std::move(at_floor));

    // Invariant: G_j(lo) > f_j + δ and G_j(hi) < f_j.
    double lo = floor_j;
    double hi = b[j];
    while (hi - lo > bracket_tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        auto trial = probe(mid);
        ++out.record.bisection_evals;
        const double g = trial.second[j];
        if (g >= f_j && g <= f_j + delta) return land(std::move(trial));
        if (g > f_j + delta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw SolverError(ErrorKind::QuantizationTooCoarse,
                      "coordinate " + std::to_string(j + 1) + ": bracket [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "] closed without G entering [f, f+delta]; the oracle steps by more "
                          "than delta (refine the grid or enlarge epsilon)");
}

struct SolveResult {
    std::vector<double> b;
    std::vector<double> G;
    SolverTrace trace;
};

/// Sweeps coordinates 2..N in groups until a whole group leaves b unchanged.
/// With δ = ε/N and a conserving oracle (Σ G_i = Σ f_i) the result satisfies
/// |G_i − f_i| ≤ ε for every i.
template <MeasureOracle Oracle>
SolveResult solve(Oracle& oracle, const MonotoneOracleSpec& spec, std::span<const double> f,
                  const SolverConfig& config, std::span<const double> b_start) {
    const std::size_t n = spec.size();
    if (f.size() != n || b_start.size() != n || spec.upper.size() != n || spec.limit.size() != n || n == 0) {
        throw Error(ErrorKind::InvalidArgument, "solver inputs have inconsistent dimensions");
    }
    const double delta = config.delta_for(n);
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");

    auto trace = std::make_shared<SolverTrace>();
    trace->delta = delta;
    trace->b_start.assign(b_start.begin(), b_start.end());
    trace->floors.resize(n);
    for (std::size_t j = 0; j < n; ++j) trace->floors[j] = spec.lower[j] + config.guard;

    for (std::size_t j = 1; j < n; ++j) {
        if (!(f[j] - delta > 0.0 && spec.limit[j] > f[j])) {
            throw Error(ErrorKind::InvalidArgument,
                        "coordinate " + std::to_string(j + 1) + " needs C_j > f_j > f_j - delta > 0");
        }
        if (!(b_start[j] >= trace->floors[j] && b_start[j] <= spec.upper[j])) {
            throw Error(ErrorKind::InadmissibleVector,
                        "start coordinate " + std::to_string(j + 1) + " lies outside [floor, beta]");
        }
    }

    std::vector<double> b = trace->b_start;
    std::vector<double> G = oracle(std::span<const double>(b));
    trace->oracle_evaluations = 1;
    trace->G_start = G;
    for (std::size_t j = 1; j < n; ++j) {
        if (G[j] > f[j] + delta) {
            throw Error(ErrorKind::InadmissibleVector, "start vector overshoots target " + std::to_string(j + 1));
        }
    }

    auto finish = [&] {
        trace->b_final = b;
        trace->G_final = G;
        trace->residuals.resize(n);
        for (std::size_t i = 0; i < n; ++i) trace->residuals[i] = std::abs(G[i] - f[i]);
    };

    for (std::size_t group = 1; group <= config.max_groups; ++group) {
        GroupRecord rec;
        for (std::size_t j = 1; j < n; ++j) {
            AdjustOutcome step;
            try {
                step = adjust_coordinate(oracle, j, b, G, f[j], delta, trace->floors[j], config.bracket_tol);
            } catch (const SolverError& e) {
                trace->groups.push_back(std::move(rec));
                finish();
                throw SolverError(e.kind(), e.what(), trace);
            }
            trace->oracle_evaluations += step.record.oracle_evals;
            b = std::move(step.b);
            G = std::move(step.G);
            step.record.group = group;
            step.record.step = j;
            step.record.b = b;
            step.record.G = G;
            rec.changed = rec.changed || step.record.changed;
            rec.steps.push_back(std::move(step.record));
        }
        const bool changed = rec.changed;
        trace->groups.push_back(std::move(rec));
        if (!changed) {
            finish();
            return {b, G, std::move(*trace)};
        }
    }
    finish();
    throw SolverError(ErrorKind::MaxGroupsExceeded,
                      "no stable group after " + std::to_string(config.max_groups) + " groups", trace);
}

/// Largest observed one-sided slope (G_i(b − t e_i) − G_i(b)) / t over random
/// b with coordinates 2..N drawn uniformly from [floor_i + t, β_i] and
/// coordinate 1 held at `pinned`. Deterministic for a fixed seed.
template <MeasureOracle Oracle>
double estimate_lipschitz(Oracle& oracle, const MonotoneOracleSpec& spec, std::span<const double> floors,
                          double pinned, std::size_t n_samples, double t_probe, std::uint64_t seed = 20240521) {
    const std::size_t n = spec.size();
    std::mt19937_64 rng(seed);
    double best = 0.0;
    std::vector<double> b(n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        b[0] = pinned;
        for (std::size_t j = 1; j < n; ++j) {
            std::uniform_real_distribution<double> dist(floors[j] + t_probe, spec.upper[j]);
            b[j] = dist(rng);
        }
        const std::vector<double> base = oracle(std::span<const double>(b));
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<double> moved = b;
            moved[i] -= t_probe;
            const std::vector<double> g = oracle(std::span<const double>(moved));
            best = std::max(best, (g[i] - base[i]) / t_probe);
        }
    }
    return best;
}

/// (M/δ)·max_j (b_j⁰ − floor_j), the group-count bound for a Lipschitz constant M.
inline double termination_bound(double lipschitz, double delta, std::span<const double> b_start,
                                 std::span<const double> floors) {
    double span = 0.0;
    for (std::size_t j = 1; j < b_start.size(); ++j) span = std::max(span, b_start[j] - floors[j]);
    return lipschitz / delta * span;
}

inline constexpr double kBoundSafetyFactor = 2.0;

}  // namespace refractor
