#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "refractor/vecgeom.hpp"

namespace refractor {

struct RefractionResult {
    UnitVec m;      // refracted direction
    double lambda;  // x − κ m = λ ν
};

/// Smallest x·ν that still refracts when κ < 1.
inline double critical_cos(double kappa) { return std::sqrt(1.0 - kappa * kappa); }

/// Vector Snell law for a ray with direction x hitting a surface with unit
/// normal nu (pointing into the second medium), index ratio kappa = n2/n1 < 1.
/// Returns nullopt on total internal reflection; x·ν equal to the critical
/// cosine is treated as refracting.
/// Requires 0 < kappa < 1 and x·nu > 0.
inline std::optional<RefractionResult> refract(const UnitVec& x, const UnitVec& nu, double kappa) {
    const double c = dot(x.vec(), nu.vec());
    if (c < critical_cos(kappa)) return std::nullopt;
    const double radicand = std::max(0.0, 1.0 - (1.0 - c * c) / (kappa * kappa));
    const double lambda = c - kappa * std::sqrt(radicand);
    const Vec3 m = (x.vec() - lambda * nu.vec()) / kappa;
    return RefractionResult{UnitVec::assume_unit(m), lambda};
}

}  // namespace refractor
