#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "refractor/error.hpp"
#include "refractor/vecgeom.hpp"

namespace refractor {

/// Descartes oval {X : |X| + κ|X − P| = b} around the origin with focus P.
/// Admissible parameters satisfy κ|P| < b < |P|.
class OvalParams {
public:
    OvalParams(const Vec3& focus, double b, double kappa)
        : focus_(focus), focus_norm_(norm(focus)), b_(b), kappa_(kappa) {
        if (!(kappa > 0.0 && kappa < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "kappa must lie in (0, 1)");
        }
        if (!(focus_norm_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "oval focus at the origin");
        if (!(kappa * focus_norm_ < b && b < focus_norm_)) {
            throw Error(ErrorKind::InvalidArgument,
                        "oval parameter b=" + std::to_string(b) + " outside (kappa|P|, |P|)");
        }
    }

    const Vec3& focus() const { return focus_; }
    double focus_norm() const { return focus_norm_; }
    double b() const { return b_; }
    double kappa() const { return kappa_; }

private:
    Vec3 focus_;
    double focus_norm_;
    double b_;
    double kappa_;
};

/// Discriminant κ²((b − t)² + (1 − κ²)(|P|² − t²)) with t = x·P.
inline double delta(double t, double b, double p_norm, double kappa) {
    const double k2 = kappa * kappa;
    return k2 * ((b - t) * (b - t) + (1.0 - k2) * (p_norm * p_norm - t * t));
}

/// Smaller root of (1−κ²)h² − 2(b−κ²t)h + (b²−κ²|P|²) = 0, written in the
/// rationalized form c / (A + √Δ) to avoid cancellation. A = b − κ²t > 0 for
/// admissible b, so the denominator never vanishes.
inline double oval_radius_from_dot(double t, double b, double p_norm, double kappa) {
    const double k2 = kappa * kappa;
    const double disc = delta(t, b, p_norm, kappa);
    if (!(disc > 0.0)) {
        throw Error(ErrorKind::NonPositiveDiscriminant,
                    "Delta=" + std::to_string(disc) + " at t=" + std::to_string(t) + ", b=" + std::to_string(b));
    }
    const double a = b - k2 * t;
    return (b * b - k2 * p_norm * p_norm) / (a + std::sqrt(disc));
}

inline double oval_radius(const Vec3& x, const OvalParams& oval) {
    return oval_radius_from_dot(dot(x, oval.focus()), oval.b(), oval.focus_norm(), oval.kappa());
}

/// Ambient gradient of the radius extended off the sphere: (κ²h/√Δ) P.
inline Vec3 oval_gradient(const Vec3& x, const OvalParams& oval) {
    const double t = dot(x, oval.focus());
    const double h = oval_radius_from_dot(t, oval.b(), oval.focus_norm(), oval.kappa());
    const double disc = delta(t, oval.b(), oval.focus_norm(), oval.kappa());
    const double k2 = oval.kappa() * oval.kappa();
    return (k2 * h / std::sqrt(disc)) * oval.focus();
}

/// ∂h/∂b = 1/(1−κ²) + κ²(x·P − b) / ((1−κ²)√Δ).
inline double oval_db(const Vec3& x, const OvalParams& oval) {
    const double t = dot(x, oval.focus());
    const double disc = delta(t, oval.b(), oval.focus_norm(), oval.kappa());
    if (!(disc > 0.0)) throw Error(ErrorKind::NonPositiveDiscriminant, "Delta <= 0 in oval_db");
    const double k2 = oval.kappa() * oval.kappa();
    return (1.0 + k2 * (t - oval.b()) / std::sqrt(disc)) / (1.0 - k2);
}

struct OvalExtrema {
    double min;
    double max;
};

/// Radius over the whole sphere ranges over [(b−κ|P|)/(1+κ), (b−κ|P|)/(1−κ)],
/// attained at x antiparallel and parallel to P respectively.
inline OvalExtrema oval_extrema(const OvalParams& oval) {
    const double excess = oval.b() - oval.kappa() * oval.focus_norm();
    return {excess / (1.0 + oval.kappa()), excess / (1.0 - oval.kappa())};
}

/// Unit normal at h(x)x pointing into the target medium, built so that Snell
/// refraction of x sends the ray to the focus: ν ∝ x − κm, m = unit(P − h x).
/// Valid in the refracting regime x·P ≥ b.
inline UnitVec oval_normal(const UnitVec& x, const OvalParams& oval) {
    const double h = oval_radius(x.vec(), oval);
    const Vec3 to_focus = oval.focus() - h * x.vec();
    const Vec3 m = to_focus / norm(to_focus);
    const Vec3 n = x.vec() - oval.kappa() * m;
    if (norm(n) < 1e-12) throw Error(ErrorKind::DegenerateNormal, "|x - kappa m| vanished");
    return UnitVec::normalize(n);
}

}  // namespace refractor
