#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <ostream>

#include "rr/errors.hpp"

namespace rr {

/// Minkowski four-vector, metric diag(1,-1,-1,-1), natural units c = 1.
///
/// Components are stored contravariant by convention (index 0 time-like);
/// covariant component sets are produced on demand with lower_index() and are
/// held in the same type.  The metric is its own inverse, so lower_index()
/// doubles as the raising map.
struct FourVector {
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};

    FourVector() = default;
    FourVector(double t, double x, double y, double z) : c{t, x, y, z} {}

    double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    FourVector& operator+=(const FourVector& o) {
        for (int i = 0; i < 4; ++i) c[i] += o.c[i];
        return *this;
    }
    FourVector& operator-=(const FourVector& o) {
        for (int i = 0; i < 4; ++i) c[i] -= o.c[i];
        return *this;
    }
    FourVector& operator*=(double k) {
        for (auto& v : c) v *= k;
        return *this;
    }

    friend FourVector operator+(FourVector a, const FourVector& b) { return a += b; }
    friend FourVector operator-(FourVector a, const FourVector& b) { return a -= b; }
    friend FourVector operator*(FourVector a, double k) { return a *= k; }
    friend FourVector operator*(double k, FourVector a) { return a *= k; }
    friend FourVector operator/(FourVector a, double k) { return a *= 1.0 / k; }
    friend FourVector operator-(const FourVector& a) {
        return {-a.c[0], -a.c[1], -a.c[2], -a.c[3]};
    }
    friend bool operator==(const FourVector& a, const FourVector& b) { return a.c == b.c; }

    bool is_finite() const {
        return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]) &&
               std::isfinite(c[3]);
    }

    double max_abs() const {
        return std::max(std::max(std::abs(c[0]), std::abs(c[1])),
                        std::max(std::abs(c[2]), std::abs(c[3])));
    }
};

inline std::ostream& operator<<(std::ostream& os, const FourVector& v) {
    return os << "(" << v[0] << ", " << v[1] << ", " << v[2] << ", " << v[3] << ")";
}

/// a.b = a0 b0 - a1 b1 - a2 b2 - a3 b3.  Valid for any pair of same-variance
/// component sets (the diagonal metric is its own inverse).
inline double minkowski_dot(const FourVector& a, const FourVector& b) {
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
}

/// Metric contraction: flips the sign of the spatial part.  Involution.
inline FourVector lower_index(const FourVector& a) {
    return {a[0], -a[1], -a[2], -a[3]};
}

/// Same map as lower_index; named for call sites that start covariant.
inline FourVector raise_index(const FourVector& a) { return lower_index(a); }

/// Rescales a time-like u so that u.u = 1, direction unchanged.
/// Throws NonTimelikeVelocity when u.u <= 0.
inline FourVector renormalize_velocity(const FourVector& u) {
    const double uu = minkowski_dot(u, u);
    if (!(uu > 0.0)) {
        throw NonTimelikeVelocity("renormalize_velocity: u.u = " + std::to_string(uu) +
                                  " is not time-like");
    }
    return u * (1.0 / std::sqrt(uu));
}

/// Four-velocity with unit time direction and the given spatial part,
/// u0 = sqrt(1 + |us|^2).
inline FourVector four_velocity_from_spatial(double ux, double uy, double uz) {
    return {std::sqrt(1.0 + ux * ux + uy * uy + uz * uz), ux, uy, uz};
}

} // namespace rr
