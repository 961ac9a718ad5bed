#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "refractor/measure.hpp"
#include "refractor/scene.hpp"
#include "test_support.hpp"

using namespace refractor;
using namespace refractor::testing;

namespace {

ErrorKind kind_of(const SceneSpec& spec) {
    try {
        Scene::validate(spec);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "scene validated";
    return ErrorKind::InvalidArgument;
}

TEST(ValidateH1, AxisAlignedTarget) {
    SceneSpec s = canonical_spec();
    s.targets = {{{0, 0, 5}, 1.0}};
    EXPECT_NEAR(validate_h1(s), std::cos(rad(10.0)) - 0.3, 1e-15);
    EXPECT_NEAR(validate_h1(s), 0.684808, 1e-6);
}

TEST(ValidateH1, OrthogonalTargetFails) {
    SceneSpec s = canonical_spec();
    s.targets.push_back({{5, 0, 0}, 1.0});
    EXPECT_THROW(validate_h1(s), Error);
    EXPECT_EQ(kind_of(s), ErrorKind::H1Violated);
}

TEST(ValidateH1, CanonicalAcceptsTau) {
    const SceneSpec s = canonical_spec();
    const double tau_max = validate_h1(s);
    EXPECT_GE(tau_max, 0.2);
    // brute force over the cap: the worst target's cosine equals κ + τ*
    std::mt19937_64 rng(1);
    double worst = 1.0;
    for (int k = 0; k < 200000; ++k) {
        const UnitVec x = random_in_cap(rng, s.cap);
        for (const auto& t : s.targets) worst = std::min(worst, dot(x.vec(), t.point) / norm(t.point));
    }
    EXPECT_GE(worst, 0.3 + tau_max - 1e-12);
    EXPECT_LT(worst - (0.3 + tau_max), 1e-3);
}

TEST(ValidateH1, TauAboveMaximumFails) {
    SceneSpec s = canonical_spec();
    s.tau = validate_h1(s) + 1e-3;
    EXPECT_EQ(kind_of(s), ErrorKind::H1Violated);
}

TEST(ValidateH2, CollinearTargets) {
    SceneSpec s = canonical_spec();
    s.targets = {{plane_point(0.0, 5.0), 1.0}, {plane_point(0.0, 10.0), 1.0}};
    EXPECT_EQ(kind_of(s), ErrorKind::H2Violated);
}

TEST(ValidateH2, CanonicalChordDistances) {
    const SceneSpec s = canonical_spec();
    EXPECT_NO_THROW(validate_h2(s, 0.2, 0.5));
    const double d = line_origin_distance(plane_point(-30.0), plane_point(30.0));
    EXPECT_NEAR(d, 5 * std::cos(rad(30.0)), 1e-12);
}

TEST(ValidateH2, R0TooLarge) {
    SceneSpec s = canonical_spec();
    s.r0 = 0.8;  // above 0.2/1.3·5 ≈ 0.769
    EXPECT_EQ(kind_of(s), ErrorKind::R0TooLarge);
    s.r0 = 0.76;
    s.b1 = std::nullopt;
    EXPECT_NO_THROW(Scene::validate(s));
}

TEST(Structural, CanonicalMargin) {
    const auto margins = validate_structural(canonical_spec());
    ASSERT_EQ(margins.size(), 6u);
    for (const auto& m : margins) EXPECT_NEAR(m.margin, 0.5 - std::sin(rad(10.0)), 1e-12);
    EXPECT_NEAR(margins[0].margin, 0.326352, 1e-6);
    EXPECT_TRUE(canonical_scene().structural_ok());
}

TEST(Structural, PlaneThroughAxisWarnsOnly) {
    SceneSpec s = canonical_spec();
    // both targets in the x–z plane: ν = ±y ⊥ axis
    s.targets = {{{1, 0, 5}, 1.0}, {{-1, 0, 5}, 1.0}};
    s.tau = std::nullopt;
    s.r0 = std::nullopt;
    s.b1 = std::nullopt;
    const auto m = validate_structural(s);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].margin, -std::sin(rad(10.0)), 1e-15);
    const Scene scene = Scene::validate(s);
    EXPECT_FALSE(scene.structural_ok());
}

TEST(Structural, SamplingOracleAgreesWithMargin) {
    std::mt19937_64 rng(3);
    const CapDomain cap(UnitVec::normalize({0, 0, 1}), rad(10.0));
    for (double tilt_deg : {60.0, 85.0, 95.0}) {
        // plane normal at tilt_deg to the axis
        const Vec3 nu{std::sin(rad(tilt_deg)), 0, std::cos(rad(tilt_deg))};
        const double margin = std::abs(nu.z) - std::sin(cap.half_angle());
        double min_abs = 1.0;
        bool sign_change = false;
        double first = 0.0;
        for (int k = 0; k < 1000000; ++k) {
            const double d = dot(random_in_cap(rng, cap).vec(), nu);
            if (k == 0) first = d;
            if (d * first <= 0) sign_change = true;
            min_abs = std::min(min_abs, std::abs(d));
        }
        EXPECT_EQ(margin > 0, !sign_change) << tilt_deg;
        if (margin > 0) { EXPECT_GT(min_abs, 0.0); }
    }
}

TEST(DefaultB1, ArithmeticAndBounds) {
    EXPECT_NEAR(default_b1(0.3, 5.0, 0.5), 1.669615, 1e-6);
    EXPECT_LT(default_b1(0.3, 5.0, 0.5), 1.5 + 0.7 * 0.5);
    EXPECT_GT(default_b1(0.3, 5.0, 0.5), 1.5);
    SceneSpec s = canonical_spec();
    s.b1 = std::nullopt;
    const Scene scene = Scene::validate(s);
    EXPECT_TRUE(scene.b1_defaulted());
    EXPECT_DOUBLE_EQ(scene.b1(), default_b1(0.3, 5.0, 0.5));
}

TEST(DefaultB1, OutOfRangeRejected) {
    SceneSpec s = canonical_spec();
    s.b1 = 1.5;
    EXPECT_EQ(kind_of(s), ErrorKind::InvalidScene);
    s.b1 = 1.5 + 0.5 * 0.49 / 1.3 + 1e-9;
    EXPECT_EQ(kind_of(s), ErrorKind::InvalidScene);
}

TEST(DefaultR0, ComputedWhenMissing) {
    SceneSpec s = canonical_spec();
    s.r0 = std::nullopt;
    s.b1 = std::nullopt;
    const Scene scene = Scene::validate(s);
    EXPECT_TRUE(scene.r0_defaulted());
    EXPECT_NEAR(scene.r0(), 0.9 * 0.2 / 1.3 * 5.0, 1e-12);
    s.tau = std::nullopt;
    const Scene scene2 = Scene::validate(s);
    EXPECT_NEAR(scene2.tau(), 0.9 * scene2.tau_max(), 1e-15);
}

TEST(AlphaBound, Arithmetic) {
    const Scene scene = canonical_scene();
    EXPECT_NEAR(alpha_bound(scene), 0.7 / 1.3 * 0.1, 1e-14);
    EXPECT_NEAR(alpha_bound(scene), 0.053846, 1e-6);
    EXPECT_LT(alpha_bound(scene), 1.3 * scene.r0());
}

TEST(InitialVector, ConstructionValues) {
    const Scene scene = canonical_scene();
    const BVector b = initial_admissible_vector(scene);
    ASSERT_EQ(b.size(), 4u);
    EXPECT_DOUBLE_EQ(b[0], 1.6);
    const double sigma = 0.1 / (0.7 * 0.5);
    EXPECT_NEAR(sigma, 0.285714, 1e-6);
    for (std::size_t j = 1; j < 4; ++j) {
        EXPECT_NEAR(b[j], 1.685714, 1e-6);
        EXPECT_GT(b[j], scene.lower(j));
        EXPECT_LE(b[j], scene.upper(j));
    }
}

TEST(InitialVector, FirstOvalBelowOthersOnSphere) {
    const Scene scene = canonical_scene();
    const BVector b = initial_admissible_vector(scene);
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20000; ++k) {
        const Vec3 x = random_unit(rng).vec();
        const double h1 = oval_radius(x, scene.oval(0, b[0]));
        for (std::size_t j = 1; j < 4; ++j) ASSERT_LE(h1, oval_radius(x, scene.oval(j, b[j])) * (1 + 1e-14));
    }
}

TEST(BVector, RangeAndPin) {
    const Scene scene = canonical_scene();
    EXPECT_THROW(BVector::make(scene, {1.6, 1.5, 1.6, 1.6}), Error);         // b_2 = κ|P_2|
    EXPECT_NO_THROW(BVector::make(scene, {1.6, 1.5 + 0.65, 1.6, 1.6}));       // closed upper end
    EXPECT_THROW(BVector::make(scene, {1.6, 1.5 + 0.65 + 1e-9, 1.6, 1.6}), Error);
    EXPECT_THROW(BVector::make(scene, {1.59, 1.6, 1.6, 1.6}), Error);         // b_1 not pinned
    EXPECT_THROW(BVector::make(scene, {1.6, 1.6}), Error);
}

TEST(SceneInvariants, BoundaryBStillRefractsWholeCap) {
    const Scene scene = canonical_scene();
    const QuadratureGrid grid = build_quadrature(scene.cap(), 128, 128);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const double b = scene.upper(i);
        for (const auto& n : grid.nodes()) ASSERT_GE(dot(n.x.vec(), scene.targets()[i].point), b);
    }
}

TEST(SceneInvariants, DiscriminantFloorAndGradientBound) {
    const Scene scene = canonical_scene();
    EXPECT_GT(scene.c0(), 0.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
        const UnitVec x = random_in_cap(rng, scene.cap());
        const std::size_t i = k % scene.size();
        const double b = scene.lower(i) + (scene.upper(i) - scene.lower(i)) * (1e-9 + (1 - 1e-9) * u(rng));
        const OvalParams o = scene.oval(i, b);
        const double p = scene.focus_norm(i);
        ASSERT_GE(delta(dot(x.vec(), o.focus()), b, p, 0.3), scene.c0() * (1 - 1e-9));
        // |∇h| = κ²h|P|/√Δ with κ²h ≤ |P|, so C_κ = 1 suffices
        ASSERT_LE(norm(oval_gradient(x.vec(), o)), p * p / std::sqrt(scene.c0()));
    }
}

TEST(TargetEnergies, NormalizedOrChecked) {
    const Scene scene = canonical_scene();
    const QuadratureGrid grid = build_quadrature(scene.cap(), 64, 64);
    const EnergyField field = energy_field(scene, grid);
    const auto g = target_energies(scene, grid, field);
    double sum = 0.0;
    for (double v : g) sum += v;
    EXPECT_NEAR(sum, field.total(), 1e-15);
    EXPECT_DOUBLE_EQ(g[0], g[3]);

    SceneSpec s = canonical_spec();
    s.normalize_weights = false;
    EXPECT_THROW(target_energies(Scene::validate(s), grid, field), Error);  // weights 1 ≠ area 0.095
    const double a = scene.cap().area() / 4;
    for (auto& t : s.targets) t.weight = a;
    EXPECT_NO_THROW(target_energies(Scene::validate(s), grid, field));
}

TEST(SceneJsonFree, InvalidInputs) {
    SceneSpec s = canonical_spec();
    s.kappa = 1.0;
    EXPECT_EQ(kind_of(s), ErrorKind::InvalidScene);
    s = canonical_spec();
    s.targets[1].weight = 0.0;
    EXPECT_EQ(kind_of(s), ErrorKind::InvalidScene);
    s = canonical_spec();
    s.targets[1] = s.targets[0];
    EXPECT_EQ(kind_of(s), ErrorKind::InvalidScene);
}

}  // namespace
