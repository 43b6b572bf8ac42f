#pragma once

#include <array>
#include <cmath>
#include <variant>

#include "rr/errors.hpp"
#include "rr/faraday.hpp"
#include "rr/fourvector.hpp"

namespace rr {

/// Everything a force evaluation needs at one spacetime point.
struct FieldSample {
    FourVector potential;   // A_mu, covariant
    FaradayTensor faraday;  // F_{mu nu}
    FaradayGradient grad;   // del_l F_{mu nu}
};

namespace detail {

/// Quintic smoothstep on [0,1], clamped outside, with derivatives.
/// C2 at both ends: value and first two derivatives vanish at 0 and match
/// the plateau at 1.
struct Smoothstep {
    double v, d1, d2, d3;
    explicit Smoothstep(double x) {
        if (x <= 0.0) {
            v = d1 = d2 = d3 = 0.0;
        } else if (x >= 1.0) {
            v = 1.0;
            d1 = d2 = d3 = 0.0;
        } else {
            const double x2 = x * x;
            v = ((6.0 * x - 15.0) * x + 10.0) * x2 * x;
            d1 = ((30.0 * x - 60.0) * x + 30.0) * x2;
            d2 = ((120.0 * x - 180.0) * x + 60.0) * x;
            d3 = (360.0 * x - 360.0) * x + 60.0;
        }
    }
};

/// C2 window: rises over the first half of [0,1], falls over the second,
/// identically zero outside.  Built as S(2t) * S(2(1-t)) from clamped
/// quintic smoothsteps, so compact support is exact.
struct Window {
    double v, d1, d2, d3;  // derivatives with respect to t
    explicit Window(double t) {
        const Smoothstep a(2.0 * t);
        const Smoothstep b(2.0 * (1.0 - t));
        // chain rule with inner factors +2 and -2
        const double a1 = 2.0 * a.d1, a2 = 4.0 * a.d2, a3 = 8.0 * a.d3;
        const double b1 = -2.0 * b.d1, b2 = 4.0 * b.d2, b3 = -8.0 * b.d3;
        v = a.v * b.v;
        d1 = a1 * b.v + a.v * b1;
        d2 = a2 * b.v + 2.0 * a1 * b1 + a.v * b2;
        d3 = a3 * b.v + 3.0 * a2 * b1 + 3.0 * a1 * b2 + a.v * b3;
    }
};

} // namespace detail

struct ZeroField {};

/// Static uniform electric field; gauge A_0 = -E.x.
struct UniformElectricField {
    std::array<double, 3> E{};
};

/// Static uniform magnetic field; symmetric gauge A = (B x r)/2.
struct UniformMagneticField {
    std::array<double, 3> B{};
};

/// Linearly polarized plane-wave pulse A_mu = amplitude * eps_mu * w(phase)
/// with phase = k.r and a C2 window of exact compact support
/// [phase_start, phase_start + phase_width].
///
/// Requires a null wave vector and a transverse polarization (eps.k = 0),
/// which keeps the Lorenz gauge condition exact.
struct PlaneWavePulse {
    double amplitude = 0.0;
    FourVector wave_vector;   // k^mu, contravariant, null
    double phase_start = 0.0;
    double phase_width = 1.0;
    FourVector polarization;  // eps_mu, covariant, transverse
};

/// Prescribed analytic external EM field.  Immutable after construction;
/// evaluation is pure and thread-safe.
///
/// Model assumption: the equation of motion couples to the shell-averaged
/// external potential.  For these smooth analytic models the average is
/// taken equal to the center-point value; the discrepancy is
/// O(sigma^2 d^2 F) and sits below every shipped test tolerance.
class ExternalFieldModel {
  public:
    using Variant =
        std::variant<ZeroField, UniformElectricField, UniformMagneticField, PlaneWavePulse>;

    ExternalFieldModel() : model_(ZeroField{}) {}

    static ExternalFieldModel zero() { return ExternalFieldModel(ZeroField{}); }

    static ExternalFieldModel uniform_electric(const std::array<double, 3>& E) {
        return ExternalFieldModel(UniformElectricField{E});
    }

    static ExternalFieldModel uniform_magnetic(const std::array<double, 3>& B) {
        return ExternalFieldModel(UniformMagneticField{B});
    }

    static ExternalFieldModel plane_wave_pulse(double amplitude, const FourVector& k,
                                               double phase_start, double phase_width,
                                               const FourVector& polarization_cov) {
        std::vector<std::string> issues;
        const double kscale = std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]) + std::abs(k[3]);
        if (kscale == 0.0) issues.push_back("plane_wave_pulse: wave vector must be nonzero");
        if (std::abs(minkowski_dot(k, k)) > 1e-10 * kscale * kscale)
            issues.push_back("plane_wave_pulse: wave vector must be null (k.k = 0)");
        // eps_mu k^mu with eps covariant: plain contraction
        double ek = 0.0;
        for (int i = 0; i < 4; ++i) ek += polarization_cov[i] * k[i];
        if (std::abs(ek) > 1e-10 * kscale)
            issues.push_back("plane_wave_pulse: polarization must be transverse (eps.k = 0)");
        if (!(phase_width > 0.0)) issues.push_back("plane_wave_pulse: phase_width must be > 0");
        if (!issues.empty()) throw ValidationError(issues);
        return ExternalFieldModel(PlaneWavePulse{amplitude, k, phase_start, phase_width,
                                                 polarization_cov});
    }

    const Variant& variant() const { return model_; }

    /// A_mu(r), covariant.
    FourVector potential(const FourVector& r) const {
        return std::visit([&](const auto& m) { return potential_of(m, r); }, model_);
    }

    FaradayTensor faraday(const FourVector& r) const {
        return std::visit([&](const auto& m) { return faraday_of(m, r); }, model_);
    }

    FaradayGradient faraday_gradient(const FourVector& r) const {
        return std::visit([&](const auto& m) { return gradient_of(m, r); }, model_);
    }

    FaradaySecondGradient faraday_second_gradient(const FourVector& r) const {
        return std::visit([&](const auto& m) { return second_gradient_of(m, r); }, model_);
    }

    FieldSample eval(const FourVector& r) const {
        return {potential(r), faraday(r), faraday_gradient(r)};
    }

    bool is_zero() const { return std::holds_alternative<ZeroField>(model_); }

  private:
    explicit ExternalFieldModel(Variant v) : model_(std::move(v)) {}
    Variant model_;

    // -- Zero ------------------------------------------------------------
    static FourVector potential_of(const ZeroField&, const FourVector&) { return {}; }
    static FaradayTensor faraday_of(const ZeroField&, const FourVector&) { return {}; }
    static FaradayGradient gradient_of(const ZeroField&, const FourVector&) { return {}; }
    static FaradaySecondGradient second_gradient_of(const ZeroField&, const FourVector&) {
        return {};
    }

    // -- Uniform E --------------------------------------------------------
    static FourVector potential_of(const UniformElectricField& m, const FourVector& r) {
        const double ex = m.E[0] * r[1] + m.E[1] * r[2] + m.E[2] * r[3];
        return {-ex, 0.0, 0.0, 0.0};
    }
    static FaradayTensor faraday_of(const UniformElectricField& m, const FourVector&) {
        return FaradayTensor::from_electric_magnetic(m.E, {0.0, 0.0, 0.0});
    }
    static FaradayGradient gradient_of(const UniformElectricField&, const FourVector&) {
        return {};
    }
    static FaradaySecondGradient second_gradient_of(const UniformElectricField&,
                                                    const FourVector&) {
        return {};
    }

    // -- Uniform B --------------------------------------------------------
    static FourVector potential_of(const UniformMagneticField& m, const FourVector& r) {
        // spatial vector potential (B x r)/2, stored covariant (sign flip)
        const double ax = 0.5 * (m.B[1] * r[3] - m.B[2] * r[2]);
        const double ay = 0.5 * (m.B[2] * r[1] - m.B[0] * r[3]);
        const double az = 0.5 * (m.B[0] * r[2] - m.B[1] * r[1]);
        return {0.0, -ax, -ay, -az};
    }
    static FaradayTensor faraday_of(const UniformMagneticField& m, const FourVector&) {
        return FaradayTensor::from_electric_magnetic({0.0, 0.0, 0.0}, m.B);
    }
    static FaradayGradient gradient_of(const UniformMagneticField&, const FourVector&) {
        return {};
    }
    static FaradaySecondGradient second_gradient_of(const UniformMagneticField&,
                                                    const FourVector&) {
        return {};
    }

    // -- Plane-wave pulse ---------------------------------------------------
    // A_mu = amp * eps_mu * w(t), t = (k.r - phase_start)/phase_width.
    // F_{mu nu} = (k_mu eps_nu - k_nu eps_mu) * amp * w'(t)/W, and each extra
    // coordinate gradient brings another k_l/W and one more window derivative.
    struct PulseEval {
        double w, w1, w2, w3;  // window derivatives with respect to phase
        explicit PulseEval(const PlaneWavePulse& m, const FourVector& r) {
            const double phase = minkowski_dot(m.wave_vector, r);  // k_mu r^mu
            const double t = (phase - m.phase_start) / m.phase_width;
            const detail::Window win(t);
            const double iw = 1.0 / m.phase_width;
            w = win.v;
            w1 = win.d1 * iw;
            w2 = win.d2 * iw * iw;
            w3 = win.d3 * iw * iw * iw;
        }
    };

    static FourVector potential_of(const PlaneWavePulse& m, const FourVector& r) {
        const PulseEval p(m, r);
        return m.polarization * (m.amplitude * p.w);
    }
    static FaradayTensor faraday_of(const PlaneWavePulse& m, const FourVector& r) {
        const PulseEval p(m, r);
        const FourVector k_cov = lower_index(m.wave_vector);
        return antisymmetric_outer(k_cov, m.polarization) * (m.amplitude * p.w1);
    }
    static FaradayGradient gradient_of(const PlaneWavePulse& m, const FourVector& r) {
        const PulseEval p(m, r);
        const FourVector k_cov = lower_index(m.wave_vector);
        const FaradayTensor base = antisymmetric_outer(k_cov, m.polarization);
        FaradayGradient g;
        for (int l = 0; l < 4; ++l) g.d[l] = base * (m.amplitude * p.w2 * k_cov[l]);
        return g;
    }
    static FaradaySecondGradient second_gradient_of(const PlaneWavePulse& m,
                                                    const FourVector& r) {
        const PulseEval p(m, r);
        const FourVector k_cov = lower_index(m.wave_vector);
        const FaradayTensor base = antisymmetric_outer(k_cov, m.polarization);
        FaradaySecondGradient g;
        for (int l = 0; l < 4; ++l)
            for (int mth = 0; mth < 4; ++mth)
                g.d2[l][mth] = base * (m.amplitude * p.w3 * k_cov[l] * k_cov[mth]);
        return g;
    }
};

/// First right-hand-side term of the equation of motion divided by m0:
/// (q/m0) F_{mu nu} u^nu, covariant.  Orthogonal to u by antisymmetry.
inline FourVector lorentz_force(const FaradayTensor& faraday, const FourVector& u, double q,
                                double m0) {
    return faraday.contract(u) * (q / m0);
}

} // namespace rr
