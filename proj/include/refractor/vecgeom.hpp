#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "refractor/error.hpp"

namespace refractor {

struct Vec3 {
    double x{0}, y{0}, z{0};

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Direction on the unit sphere. Construction normalizes, so the unit-length
/// invariant holds for every instance.
class UnitVec {
public:
    UnitVec() : v_{0, 0, 1} {}

    static UnitVec normalize(const Vec3& v) {
        const double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero or non-finite vector");
        }
        return UnitVec(v / n);
    }

    /// Wraps a vector already known to be unit length (up to rounding).
    static UnitVec assume_unit(const Vec3& v) { return UnitVec(v); }

    const Vec3& vec() const { return v_; }
    operator const Vec3&() const { return v_; }
    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }

private:
    explicit UnitVec(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0));
}

/// Spherical cap {x : angle(x, axis) <= half_angle} with a deterministic
/// tangent frame: the first tangent comes from the coordinate axis along which
/// `axis` has its smallest absolute component (lowest index on ties).
class CapDomain {
public:
    CapDomain(const UnitVec& axis, double half_angle) : axis_(axis), half_angle_(half_angle) {
        if (!(half_angle > 0.0 && half_angle < std::numbers::pi / 2)) {
            throw Error(ErrorKind::InvalidArgument, "cap half angle must lie in (0, pi/2)");
        }
        const Vec3& a = axis_.vec();
        const double c[3] = {std::abs(a.x), std::abs(a.y), std::abs(a.z)};
        int k = 0;
        if (c[1] < c[k]) k = 1;
        if (c[2] < c[k]) k = 2;
        Vec3 e{};
        (k == 0 ? e.x : k == 1 ? e.y : e.z) = 1.0;
        tangent1_ = UnitVec::normalize(e - dot(e, a) * a);
        tangent2_ = UnitVec::normalize(cross(a, tangent1_.vec()));
    }

    const UnitVec& axis() const { return axis_; }
    double half_angle() const { return half_angle_; }
    const UnitVec& tangent1() const { return tangent1_; }
    const UnitVec& tangent2() const { return tangent2_; }

    /// 2π(1 − cos ψ)
    double area() const { return 2.0 * std::numbers::pi * (1.0 - std::cos(half_angle_)); }

    bool contains(const Vec3& x, double slack = 1e-12) const {
        return dot(x, axis_.vec()) >= std::cos(half_angle_) - slack;
    }

private:
    UnitVec axis_;
    double half_angle_;
    UnitVec tangent1_;
    UnitVec tangent2_;
};

inline UnitVec dir_from_spherical(double theta, double phi, const CapDomain& frame) {
    const double s = std::sin(theta);
    const Vec3 v = std::cos(theta) * frame.axis().vec() +
                   s * (std::cos(phi) * frame.tangent1().vec() + std::sin(phi) * frame.tangent2().vec());
    return UnitVec::assume_unit(v);
}

/// min over the closed cap of x·v, in closed form.
inline double cap_min_dot(const CapDomain& cap, const UnitVec& v) {
    const double gamma = angle_between(cap.axis().vec(), v.vec());
    const double worst = gamma + cap.half_angle();
    return worst <= std::numbers::pi ? std::cos(worst) : -1.0;
}

/// max over the closed cap of x·v.
inline double cap_max_dot(const CapDomain& cap, const UnitVec& v) {
    const double gamma = angle_between(cap.axis().vec(), v.vec());
    return std::cos(std::max(0.0, gamma - cap.half_angle()));
}

struct QuadratureNode {
    UnitVec x;
    double theta;
    double phi;
    double weight;
};

/// Midpoint tensor grid over (θ, φ) ∈ [0, ψ] × [0, 2π), θ-major.
/// Node (it, ip) lives at index it * n_phi + ip.
class QuadratureGrid {
public:
    QuadratureGrid(const CapDomain& cap, std::size_t n_theta, std::size_t n_phi)
        : cap_(cap), n_theta_(n_theta), n_phi_(n_phi) {
        if (n_theta < 2 || n_phi < 2) {
            throw Error(ErrorKind::InvalidArgument, "quadrature needs at least 2 nodes per direction");
        }
        const double d_theta = cap.half_angle() / static_cast<double>(n_theta);
        const double d_phi = 2.0 * std::numbers::pi / static_cast<double>(n_phi);
        nodes_.reserve(n_theta * n_phi);
        for (std::size_t it = 0; it < n_theta; ++it) {
            const double theta = (static_cast<double>(it) + 0.5) * d_theta;
            const double w = std::sin(theta) * d_theta * d_phi;
            for (std::size_t ip = 0; ip < n_phi; ++ip) {
                const double phi = (static_cast<double>(ip) + 0.5) * d_phi;
                nodes_.push_back({dir_from_spherical(theta, phi, cap), theta, phi, w});
            }
        }
    }

    const CapDomain& cap() const { return cap_; }
    std::size_t n_theta() const { return n_theta_; }
    std::size_t n_phi() const { return n_phi_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<QuadratureNode>& nodes() const { return nodes_; }
    const QuadratureNode& operator[](std::size_t k) const { return nodes_[k]; }
    std::size_t index(std::size_t it, std::size_t ip) const { return it * n_phi_ + ip; }

    double total_weight() const {
        double s = 0.0;
        for (const auto& n : nodes_) s += n.weight;
        return s;
    }

    double max_weight() const {
        // sin θ is increasing on [0, π/2), so the last ring carries the largest weight.
        return nodes_.back().weight;
    }

private:
    CapDomain cap_;
    std::size_t n_theta_;
    std::size_t n_phi_;
    std::vector<QuadratureNode> nodes_;
};

inline QuadratureGrid build_quadrature(const CapDomain& cap, std::size_t n_theta, std::size_t n_phi) {
    return QuadratureGrid(cap, n_theta, n_phi);
}

}  // namespace refractor
