#pragma once

#include <array>
#include <cmath>

#include "rr/fourvector.hpp"

namespace rr {

/// Antisymmetric Faraday tensor F_{mu nu}, both indices covariant.
///
/// Only the six independent entries are stored, so F_{mu nu} = -F_{nu mu}
/// holds exactly for every instance.  Sign conventions (metric +---):
///   F_{0i} = E_i,   F_{ij} = -eps_{ijk} B_k.
class FaradayTensor {
  public:
    FaradayTensor() = default;

    static FaradayTensor from_components(double f01, double f02, double f03, double f12,
                                         double f13, double f23) {
        FaradayTensor t;
        t.e_ = {f01, f02, f03, f12, f13, f23};
        return t;
    }

    static FaradayTensor from_electric_magnetic(const std::array<double, 3>& E,
                                                const std::array<double, 3>& B) {
        // F_{12} = -B_z, F_{13} = +B_y, F_{23} = -B_x.
        return from_components(E[0], E[1], E[2], -B[2], B[1], -B[0]);
    }

    /// F_{mu nu} with full antisymmetric index handling.
    double operator()(int mu, int nu) const {
        if (mu == nu) return 0.0;
        const bool flip = mu > nu;
        if (flip) std::swap(mu, nu);
        double v = 0.0;
        if (mu == 0) v = e_[nu - 1];          // f01 f02 f03
        else if (mu == 1) v = e_[nu + 1];     // f12 f13  (nu = 2,3)
        else v = e_[5];                       // f23
        return flip ? -v : v;
    }

    /// w_mu = F_{mu nu} u^nu  (covariant result from a contravariant input).
    FourVector contract(const FourVector& u) const {
        FourVector w;
        for (int mu = 0; mu < 4; ++mu) {
            double s = 0.0;
            for (int nu = 0; nu < 4; ++nu) s += (*this)(mu, nu) * u[nu];
            w[mu] = s;
        }
        return w;
    }

    FaradayTensor& operator+=(const FaradayTensor& o) {
        for (int i = 0; i < 6; ++i) e_[i] += o.e_[i];
        return *this;
    }
    FaradayTensor& operator-=(const FaradayTensor& o) {
        for (int i = 0; i < 6; ++i) e_[i] -= o.e_[i];
        return *this;
    }
    FaradayTensor& operator*=(double k) {
        for (auto& v : e_) v *= k;
        return *this;
    }
    friend FaradayTensor operator+(FaradayTensor a, const FaradayTensor& b) { return a += b; }
    friend FaradayTensor operator-(FaradayTensor a, const FaradayTensor& b) { return a -= b; }
    friend FaradayTensor operator*(FaradayTensor a, double k) { return a *= k; }
    friend FaradayTensor operator*(double k, FaradayTensor a) { return a *= k; }

    /// max |F_{mu nu}| over the independent entries.
    double max_abs() const {
        double m = 0.0;
        for (double v : e_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Invariant F_{mu nu} F^{mu nu} = 2(B^2 - E^2).
    double invariant() const {
        const double E2 = e_[0] * e_[0] + e_[1] * e_[1] + e_[2] * e_[2];
        const double B2 = e_[3] * e_[3] + e_[4] * e_[4] + e_[5] * e_[5];
        return 2.0 * (B2 - E2);
    }

  private:
    std::array<double, 6> e_{};  // f01 f02 f03 f12 f13 f23
};

/// T_{mu nu} = x_mu y_nu - x_nu y_mu from two covariant vectors.
inline FaradayTensor antisymmetric_outer(const FourVector& x, const FourVector& y) {
    return FaradayTensor::from_components(
        x[0] * y[1] - x[1] * y[0], x[0] * y[2] - x[2] * y[0], x[0] * y[3] - x[3] * y[0],
        x[1] * y[2] - x[2] * y[1], x[1] * y[3] - x[3] * y[1], x[2] * y[3] - x[3] * y[2]);
}

/// d[l] holds the coordinate gradient slice del_l F_{mu nu}.
struct FaradayGradient {
    std::array<FaradayTensor, 4> d{};

    FaradayGradient& operator*=(double k) {
        for (auto& t : d) t *= k;
        return *this;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& t : d) m = std::max(m, t.max_abs());
        return m;
    }
};

/// d2[l][m] = del_l del_m F_{mu nu}.
struct FaradaySecondGradient {
    std::array<std::array<FaradayTensor, 4>, 4> d2{};
};

} // namespace rr
