#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refractor/error.hpp"
#include "refractor/oval.hpp"
#include "refractor/vecgeom.hpp"

namespace refractor {

struct TargetPoint {
    Vec3 point;
    double weight;
};

/// Source intensity f on the cap; strictly positive everywhere on it.
struct IntensitySpec {
    enum class Kind { Constant, AxialGaussian };

    Kind kind{Kind::Constant};
    double amplitude{1.0};
    double width{0.0};  // radians, AxialGaussian only

    /// f(x) = amplitude, or amplitude·exp(−(θ/w)²) with θ the angle to the cap axis.
    double operator()(const Vec3& x, const CapDomain& cap) const {
        if (kind == Kind::Constant) return amplitude;
        const double theta = angle_between(x, cap.axis().vec());
        return amplitude * std::exp(-(theta / width) * (theta / width));
    }

    double max_value() const { return amplitude; }
};

/// Unvalidated scene description as read from a config file; the optional
/// fields get computed defaults during validation.
struct SceneSpec {
    double kappa{0.0};
    CapDomain cap{UnitVec{}, 0.1};
    IntensitySpec intensity{};
    std::vector<TargetPoint> targets;
    std::optional<double> tau;
    std::optional<double> r0;
    std::optional<double> b1;
    bool normalize_weights{true};
};

struct PairMargin {
    std::size_t i;
    std::size_t j;
    double margin;  // |axis·ν_ij| − sin ψ; positive means the plane through O, P_i, P_j misses the cap
};

/// Largest τ for which x·P_i ≥ (κ+τ)|P_i| holds over the whole cap:
/// τ* = min_i cap_min_dot(cap, P̂_i) − κ. Throws H1Violated naming the worst
/// target when τ* ≤ 0 or when the requested τ exceeds it.
inline double validate_h1(const SceneSpec& spec) {
    double tau_max = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        const double t = cap_min_dot(spec.cap, UnitVec::normalize(spec.targets[i].point)) - spec.kappa;
        if (t < tau_max) {
            tau_max = t;
            worst = i;
        }
    }
    if (!(tau_max > 0.0)) {
        throw Error(ErrorKind::H1Violated, "target " + std::to_string(worst + 1) +
                                               " is not seen at angle cos >= kappa from every cap direction");
    }
    if (spec.tau && *spec.tau > tau_max) {
        throw Error(ErrorKind::H1Violated, "tau=" + std::to_string(*spec.tau) + " exceeds tau*=" +
                                               std::to_string(tau_max) + " (target " +
                                               std::to_string(worst + 1) + ")");
    }
    return tau_max;
}

/// Distance from the origin to the line through a and b.
inline double line_origin_distance(const Vec3& a, const Vec3& b) {
    return norm(cross(a, b)) / norm(a - b);
}

inline double min_target_distance(std::span<const TargetPoint> targets) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& t : targets) d = std::min(d, norm(t.point));
    return d;
}

/// Conservative visibility check for point targets: no line through two
/// targets comes within r0 of the origin, and r0 < τ/(1+κ)·dist(O, D).
inline void validate_h2(const SceneSpec& spec, double tau, double r0) {
    const auto& tg = spec.targets;
    const double limit = tau / (1.0 + spec.kappa) * min_target_distance(tg);
    if (!(r0 > 0.0)) throw Error(ErrorKind::R0TooLarge, "r0 must be positive");
    if (!(r0 < limit)) {
        throw Error(ErrorKind::R0TooLarge,
                    "r0=" + std::to_string(r0) + " must be below tau/(1+kappa)*dist(O,D)=" + std::to_string(limit));
    }
    for (std::size_t i = 0; i < tg.size(); ++i) {
        for (std::size_t j = i + 1; j < tg.size(); ++j) {
            const double d = line_origin_distance(tg[i].point, tg[j].point);
            if (!(d >= r0)) {
                throw Error(ErrorKind::H2Violated, "targets " + std::to_string(i + 1) + " and " +
                                                       std::to_string(j + 1) + ": line passes within " +
                                                       std::to_string(d) + " of the origin (r0=" +
                                                       std::to_string(r0) + ")");
            }
        }
    }
}

/// Per-pair margin of the condition that the plane through O, P_i, P_j does
/// not meet the cap. Requires no pair collinear with O.
inline std::vector<PairMargin> validate_structural(const SceneSpec& spec) {
    std::vector<PairMargin> out;
    const double s = std::sin(spec.cap.half_angle());
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.targets.size(); ++j) {
            const Vec3 n = cross(spec.targets[i].point, spec.targets[j].point);
            const double c = std::abs(dot(spec.cap.axis().vec(), n)) / norm(n);
            out.push_back({i, j, c - s});
        }
    }
    return out;
}

/// κ|P_1| + 0.9·r0(1−κ)²/(1+κ)
inline double default_b1(double kappa, double p1_norm, double r0) {
    return kappa * p1_norm + 0.9 * r0 * (1.0 - kappa) * (1.0 - kappa) / (1.0 + kappa);
}

/// Fraction of the H2 limits used when r0 is omitted.
inline constexpr double kDefaultR0Fraction = 0.9;
inline constexpr double kDefaultTauFraction = 0.9;

/// Validated, immutable problem instance.
class Scene {
public:
    static Scene validate(const SceneSpec& spec);

    double kappa() const { return kappa_; }
    const CapDomain& cap() const { return cap_; }
    const IntensitySpec& intensity() const { return intensity_; }
    const std::vector<TargetPoint>& targets() const { return targets_; }
    std::size_t size() const { return targets_.size(); }
    double tau() const { return tau_; }
    double tau_max() const { return tau_max_; }
    double r0() const { return r0_; }
    double b1() const { return b1_; }
    bool normalize_weights() const { return normalize_weights_; }
    bool r0_defaulted() const { return r0_defaulted_; }
    bool b1_defaulted() const { return b1_defaulted_; }
    bool tau_defaulted() const { return tau_defaulted_; }
    const std::vector<PairMargin>& structural_margins() const { return margins_; }
    /// True when every pair satisfies the plane/cap separation condition.
    bool structural_ok() const {
        return std::all_of(margins_.begin(), margins_.end(), [](const PairMargin& m) { return m.margin > 0.0; });
    }
    /// Sampled lower bound of Δ(x·P_j, b, |P_j|) over the cap and the admissible b range.
    double c0() const { return c0_; }

    double focus_norm(std::size_t i) const { return norms_[i]; }
    /// Open lower end κ|P_i| of the admissible b range.
    double lower(std::size_t i) const { return kappa_ * norms_[i]; }
    /// Closed upper end (1+κ)r0 + κ|P_i|.
    double upper(std::size_t i) const { return (1.0 + kappa_) * r0_ + kappa_ * norms_[i]; }
    OvalParams oval(std::size_t i, double b) const { return OvalParams(targets_[i].point, b, kappa_); }
    double f(const Vec3& x) const { return intensity_(x, cap_); }
    double sum_weights() const {
        double s = 0.0;
        for (const auto& t : targets_) s += t.weight;
        return s;
    }

private:
    Scene() = default;

    double kappa_{};
    CapDomain cap_{UnitVec{}, 0.1};
    IntensitySpec intensity_{};
    std::vector<TargetPoint> targets_;
    std::vector<double> norms_;
    double tau_{}, tau_max_{}, r0_{}, b1_{}, c0_{};
    bool normalize_weights_{true};
    bool r0_defaulted_{false}, b1_defaulted_{false}, tau_defaulted_{false};
    std::vector<PairMargin> margins_;
};

namespace detail {

inline void check_basic(const SceneSpec& spec) {
    if (!(spec.kappa > 0.0 && spec.kappa < 1.0)) throw Error(ErrorKind::InvalidScene, "kappa must lie in (0, 1)");
    if (spec.targets.empty()) throw Error(ErrorKind::InvalidScene, "at least one target is required");
    const auto& in = spec.intensity;
    if (!(in.amplitude > 0.0)) throw Error(ErrorKind::InvalidScene, "intensity amplitude must be positive");
    if (in.kind == IntensitySpec::Kind::AxialGaussian && !(in.width > 0.0)) {
        throw Error(ErrorKind::InvalidScene, "axial-gaussian intensity needs a positive width");
    }
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        const auto& t = spec.targets[i];
        if (!(t.weight > 0.0)) {
            throw Error(ErrorKind::InvalidScene, "target " + std::to_string(i + 1) + " weight must be positive");
        }
        if (!(norm(t.point) > 0.0)) {
            throw Error(ErrorKind::InvalidScene, "target " + std::to_string(i + 1) + " sits at the origin");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (spec.targets[j].point == t.point) {
                throw Error(ErrorKind::InvalidScene,
                            "targets " + std::to_string(j + 1) + " and " + std::to_string(i + 1) + " coincide");
            }
        }
    }
}

/// Δ is a quadratic in (t, b); a dense sample of the rectangle is enough to
/// expose a non-positive minimum.
inline double sample_c0(const SceneSpec& spec, double r0) {
    constexpr int kSamples = 65;
    double c0 = std::numeric_limits<double>::infinity();
    for (const auto& tg : spec.targets) {
        const double p = norm(tg.point);
        const UnitVec dir = UnitVec::normalize(tg.point);
        const double t_lo = cap_min_dot(spec.cap, dir) * p;
        const double t_hi = cap_max_dot(spec.cap, dir) * p;
        const double b_lo = spec.kappa * p;
        const double b_hi = (1.0 + spec.kappa) * r0 + spec.kappa * p;
        for (int a = 0; a < kSamples; ++a) {
            const double t = t_lo + (t_hi - t_lo) * a / (kSamples - 1);
            for (int c = 0; c < kSamples; ++c) {
                const double b = b_lo + (b_hi - b_lo) * c / (kSamples - 1);
                c0 = std::min(c0, delta(t, b, p, spec.kappa));
            }
        }
    }
    return c0;
}

}  // namespace detail

/// Default r0: a fixed fraction of the tighter of the two H2 limits.
inline double default_r0(const SceneSpec& spec, double tau) {
    double limit = tau / (1.0 + spec.kappa) * min_target_distance(spec.targets);
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.targets.size(); ++j) {
            limit = std::min(limit, line_origin_distance(spec.targets[i].point, spec.targets[j].point));
        }
    }
    return kDefaultR0Fraction * limit;
}

inline Scene Scene::validate(const SceneSpec& spec) {
    detail::check_basic(spec);
    Scene s;
    s.kappa_ = spec.kappa;
    s.cap_ = spec.cap;
    s.intensity_ = spec.intensity;
    s.targets_ = spec.targets;
    s.normalize_weights_ = spec.normalize_weights;
    for (const auto& t : spec.targets) s.norms_.push_back(norm(t.point));

    s.tau_max_ = validate_h1(spec);
    s.tau_defaulted_ = !spec.tau.has_value();
    s.tau_ = spec.tau.value_or(kDefaultTauFraction * s.tau_max_);
    if (!(s.tau_ > 0.0 && s.tau_ < 1.0 - spec.kappa)) {
        throw Error(ErrorKind::H1Violated, "tau must lie in (0, 1-kappa)");
    }

    s.r0_defaulted_ = !spec.r0.has_value();
    s.r0_ = spec.r0.value_or(default_r0(spec, s.tau_));
    validate_h2(spec, s.tau_, s.r0_);

    const double p1 = s.norms_[0];
    s.b1_defaulted_ = !spec.b1.has_value();
    s.b1_ = spec.b1.value_or(default_b1(spec.kappa, p1, s.r0_));
    const double b1_hi = spec.kappa * p1 + s.r0_ * (1.0 - spec.kappa) * (1.0 - spec.kappa) / (1.0 + spec.kappa);
    if (!(s.b1_ > spec.kappa * p1 && s.b1_ <= b1_hi)) {
        throw Error(ErrorKind::InvalidScene, "b1=" + std::to_string(s.b1_) + " outside (kappa|P1|, " +
                                                 std::to_string(b1_hi) + "]");
    }

    s.margins_ = validate_structural(spec);
    s.c0_ = detail::sample_c0(spec, s.r0_);
    if (!(s.c0_ > 0.0)) throw Error(ErrorKind::InvalidScene, "discriminant lower bound C0 is not positive");
    return s;
}

/// Admissible parameter vector: b_i ∈ (κ|P_i|, (1+κ)r0 + κ|P_i|], first
/// coordinate pinned to the scene's b1.
class BVector {
public:
    static BVector make(const Scene& scene, std::vector<double> values) {
        if (values.size() != scene.size()) {
            throw Error(ErrorKind::InadmissibleVector, "expected " + std::to_string(scene.size()) +
                                                           " coordinates, got " + std::to_string(values.size()));
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > scene.lower(i) && values[i] <= scene.upper(i))) {
                throw Error(ErrorKind::InadmissibleVector,
                            "b_" + std::to_string(i + 1) + "=" + std::to_string(values[i]) + " outside (" +
                                std::to_string(scene.lower(i)) + ", " + std::to_string(scene.upper(i)) + "]");
            }
        }
        if (values[0] != scene.b1()) {
            throw Error(ErrorKind::InadmissibleVector, "b_1 must equal the scene's pinned b1");
        }
        return BVector(std::move(values));
    }

    std::span<const double> values() const { return values_; }
    operator std::span<const double>() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

private:
    explicit BVector(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

/// (1−κ)/(1+κ)·(b1 − κ|P_1|): every vector whose coordinates 2..N keep
/// their measures within g_i + δ has b_i ≥ κ|P_i| + α.
inline double alpha_bound(const Scene& scene) {
    return (1.0 - scene.kappa()) / (1.0 + scene.kappa()) * (scene.b1() - scene.lower(0));
}

/// Starting vector whose first oval lies below every other oval on the whole
/// sphere: σ = (b1 − κ|P_1|)/((1−κ)r0), b_j = κ|P_j| + σ(1+κ)r0.
inline BVector initial_admissible_vector(const Scene& scene) {
    const double sigma = (scene.b1() - scene.lower(0)) / ((1.0 - scene.kappa()) * scene.r0());
    std::vector<double> b(scene.size());
    b[0] = scene.b1();
    for (std::size_t j = 1; j < scene.size(); ++j) {
        b[j] = scene.lower(j) + sigma * (1.0 + scene.kappa()) * scene.r0();
    }
    return BVector::make(scene, std::move(b));
}

}  // namespace refractor
