#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "refractor/solver.hpp"
#include "test_support.hpp"

using namespace refractor;
using namespace refractor::testing;

namespace {

// G_j = C_j(β_j − b_j)/(β_j − α_j) for j ≥ 2; G_1 takes the rest of `total`.
struct LinearOracle {
    MonotoneOracleSpec spec;
    double total;
    std::size_t calls{0};

    std::vector<double> operator()(std::span<const double> b) {
        ++calls;
        std::vector<double> g(b.size());
        double rest = total;
        for (std::size_t j = 1; j < b.size(); ++j) {
            g[j] = spec.limit[j] * (spec.upper[j] - b[j]) / (spec.upper[j] - spec.lower[j]);
            rest -= g[j];
        }
        g[0] = rest;
        return g;
    }
    double slope(std::size_t j) const { return spec.limit[j] / (spec.upper[j] - spec.lower[j]); }
    double preimage(std::size_t j, double f) const { return spec.upper[j] - f / slope(j); }
};

// G_j = a(β − b_j) − c·Σ_{k≥2, k≠j}(β − b_k): raising a neighbour's b raises G_j.
struct CoupledOracle {
    std::size_t n;
    double a, c, beta, total;

    std::vector<double> operator()(std::span<const double> b) const {
        std::vector<double> g(n);
        double rest = total;
        for (std::size_t j = 1; j < n; ++j) {
            double v = a * (beta - b[j]);
            for (std::size_t k = 1; k < n; ++k) {
                if (k != j) v -= c * (beta - b[k]);
            }
            g[j] = std::max(0.0, v);
            rest -= g[j];
        }
        g[0] = rest;
        return g;
    }
};

// Staircase: G_j takes only multiples of `step`.
struct StepOracle {
    double step, beta, total;
    std::vector<double> operator()(std::span<const double> b) const {
        const double g1 = step * std::floor((beta - b[1]) / step);
        return {total - g1, g1};
    }
};

LinearOracle linear_oracle(std::size_t n) {
    LinearOracle o;
    for (std::size_t j = 0; j < n; ++j) {
        o.spec.lower.push_back(1.0 + 0.1 * j);
        o.spec.upper.push_back(2.0 + 0.2 * j);
        o.spec.limit.push_back(10.0);
    }
    o.total = 10.0;
    return o;
}

void check_invariants(const SolverTrace& t, std::span<const double> f, double delta) {
    std::vector<double> prev = t.b_start;
    for (const auto& grp : t.groups) {
        for (const auto& s : grp.steps) {
            for (std::size_t k = 0; k < prev.size(); ++k) {
                if (k == s.coordinate) {
                    ASSERT_LE(s.b[k], prev[k]);  // only downward
                } else {
                    ASSERT_EQ(s.b[k], prev[k]);  // one coordinate per step
                }
            }
            if (s.changed) {
                ASSERT_GT(s.g_after - s.g_before, delta);  // strict progress
                ASSERT_GE(s.b_new, t.floors[s.coordinate]);
            }
            for (std::size_t i = 1; i < f.size(); ++i) ASSERT_LE(s.G[i], f[i] + delta);  // stays in W
            prev = s.b;
        }
    }
    ASSERT_EQ(prev, t.b_final);
}

TEST(AdjustCoordinate, NoOpInBand) {
    LinearOracle o = linear_oracle(3);
    const std::vector<double> b{1.0, 1.5, 1.6};
    const auto G = o(b);
    o.calls = 0;
    const auto out = adjust_coordinate(o, 1, b, G, G[1] + 0.05, 0.1, 1.2, 1e-12);
    EXPECT_EQ(o.calls, 0u);
    EXPECT_EQ(out.b, b);
    EXPECT_FALSE(out.record.changed);
}

TEST(AdjustCoordinate, LinearPreimageAndEvaluationCount) {
    LinearOracle o = linear_oracle(2);
    const std::vector<double> b{1.0, 2.15};
    const double f = 6.0, delta = 1e-6, floor = 1.1 + 0.01, tol = 1e-12;
    const auto out = adjust_coordinate(o, 1, b, o(b), f, delta, floor, tol);
    EXPECT_TRUE(out.record.changed);
    EXPECT_GE(out.G[1], f);
    EXPECT_LE(out.G[1], f + delta);
    // band [f, f+δ] pulls back to an interval of width δ/slope ending at the preimage
    EXPECT_LE(out.b[1], o.preimage(1, f) + tol);
    EXPECT_GE(out.b[1], o.preimage(1, f) - delta / o.slope(1) - tol);
    const auto cap = static_cast<std::size_t>(std::ceil(std::log2((b[1] - floor) / tol)));
    EXPECT_LE(out.record.bisection_evals, cap);
    EXPECT_EQ(out.record.oracle_evals, out.record.bisection_evals + 1);
}

TEST(AdjustCoordinate, FloorReached) {
    LinearOracle o = linear_oracle(2);
    const std::vector<double> b{1.0, 2.15};
    // G at the floor 1.9 is 10·0.3/1.1 ≈ 2.7 < 5
    try {
        adjust_coordinate(o, 1, b, o(b), 5.0, 0.01, 1.9, 1e-12);
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FloorReached);
    }
}

TEST(AdjustCoordinate, QuantizationTooCoarse) {
    StepOracle o{0.5, 2.0, 10.0};
    const std::vector<double> b{1.0, 2.0};
    try {
        adjust_coordinate(o, 1, b, o(b), 3.2, 0.1, -2.0, 1e-12);  // no multiple of 0.5 in [3.2, 3.3]
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::QuantizationTooCoarse);
    }
}

TEST(Solve, SeparableConvergesInOneGroup) {
    for (std::size_t n : {2u, 3u, 5u}) {
        LinearOracle o = linear_oracle(n);
        std::vector<double> f(n, o.total / n);
        std::vector<double> b0 = o.spec.upper;
        SolverConfig cfg;
        cfg.epsilon = 1e-6;
        const auto res = solve(o, o.spec, f, cfg, b0);
        // the adjusting group plus the confirming group
        ASSERT_EQ(res.trace.group_count(), 2u);
        EXPECT_TRUE(res.trace.groups[0].changed);
        EXPECT_FALSE(res.trace.groups[1].changed);
        const double delta = cfg.delta_for(n);
        for (std::size_t j = 1; j < n; ++j) {
            EXPECT_LE(res.b[j], o.preimage(j, f[j]) + cfg.bracket_tol);
            EXPECT_GE(res.b[j], o.preimage(j, f[j]) - delta / o.slope(j) - cfg.bracket_tol);
        }
        for (double r : res.trace.residuals) EXPECT_LE(r, cfg.epsilon);
        check_invariants(res.trace, f, delta);
    }
}

TEST(Solve, CoupledOracleConverges) {
    const std::size_t n = 4;
    CoupledOracle o{n, 3.0, 0.4, 2.0, 3.0};
    MonotoneOracleSpec spec;
    spec.lower.assign(n, 1.0);
    spec.upper.assign(n, 2.0);
    spec.limit.assign(n, 3.0);
    const std::vector<double> f{0.9, 0.7, 0.8, 0.6};
    SolverConfig cfg;
    cfg.epsilon = 1e-6;
    const std::vector<double> b0(n, 2.0);
    const auto res = solve(o, spec, f, cfg, b0);
    EXPECT_GT(res.trace.group_count(), 2u);  // coupling forces revisits
    const double delta = cfg.delta_for(n);
    for (std::size_t j = 1; j < n; ++j) EXPECT_LE(std::abs(res.G[j] - f[j]), delta);
    EXPECT_LE(std::abs(res.G[0] - f[0]), n * delta);
    check_invariants(res.trace, f, delta);

    // fixed point of the linear system: (a+c)u_j − cΣu_k = f_j with u = β − b
    const double a = 3.0, c = 0.4;
    const double s = (f[1] + f[2] + f[3]) / (a - 2 * c);
    for (std::size_t j = 1; j < n; ++j) {
        const double u = (f[j] + c * s) / (a + c);
        EXPECT_NEAR(2.0 - res.b[j], u, 3 * delta);
    }
}

TEST(Solve, SingleCoordinateReturnsImmediately) {
    LinearOracle o = linear_oracle(1);
    const std::vector<double> f{o.total};
    SolverConfig cfg;
    cfg.epsilon = 1e-6;
    const std::vector<double> b0{1.5};
    const auto res = solve(o, o.spec, f, cfg, b0);
    EXPECT_EQ(res.b, b0);
    EXPECT_EQ(res.trace.residuals[0], 0.0);
    EXPECT_EQ(res.trace.oracle_evaluations, 1u);
}

TEST(Solve, MaxGroupsCarriesTrace) {
    const std::size_t n = 4;
    CoupledOracle o{n, 3.0, 0.4, 2.0, 3.0};
    MonotoneOracleSpec spec{std::vector<double>(n, 1.0), std::vector<double>(n, 2.0), std::vector<double>(n, 3.0)};
    const std::vector<double> f{0.9, 0.7, 0.8, 0.6};
    SolverConfig cfg;
    cfg.epsilon = 1e-6;
    cfg.max_groups = 1;
    try {
        solve(o, spec, f, cfg, std::vector<double>(n, 2.0));
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MaxGroupsExceeded);
        ASSERT_NE(e.trace(), nullptr);
        EXPECT_EQ(e.trace()->group_count(), 1u);
    }
}

TEST(Solve, RejectsStartOutsideW) {
    LinearOracle o = linear_oracle(2);
    const std::vector<double> f{5.0, 5.0};
    SolverConfig cfg;
    cfg.epsilon = 1e-3;
    EXPECT_THROW(solve(o, o.spec, f, cfg, std::vector<double>{1.0, 1.2}), Error);  // G_2 ≈ 9.1 > f + δ
    EXPECT_THROW(solve(o, o.spec, std::vector<double>{0.0, 10.5}, cfg, std::vector<double>{1.0, 2.2}), Error);
}

TEST(EstimateLipschitz, ConstantAndLinear) {
    MonotoneOracleSpec spec{{1.0, 1.0, 1.0}, {2.0, 2.0, 3.0}, {4.0, 4.0, 6.0}};
    auto constant = [](std::span<const double>) { return std::vector<double>{1.0, 2.0, 3.0}; };
    const std::vector<double> floors{1.0, 1.1, 1.1};
    EXPECT_EQ(estimate_lipschitz(constant, spec, floors, 1.0, 16, 1e-3), 0.0);

    LinearOracle o;
    o.spec = spec;
    o.total = 6.0;
    const double m = estimate_lipschitz(o, spec, floors, 1.0, 16, 1e-3);
    EXPECT_NEAR(m, std::max(o.slope(1), o.slope(2)), 1e-12);
    EXPECT_EQ(m, estimate_lipschitz(o, spec, floors, 1.0, 16, 1e-3));
}

TEST(TerminationBound, Arithmetic) {
    const std::vector<double> b0{1, 2.0, 3.0}, floors{1, 1.5, 1.0};
    EXPECT_DOUBLE_EQ(termination_bound(4.0, 0.5, b0, floors), 4.0 / 0.5 * 2.0);
}

}  // namespace
