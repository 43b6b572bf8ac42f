#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "rr/errors.hpp"
#include "rr/faraday.hpp"
#include "rr/fields.hpp"
#include "rr/fourvector.hpp"
#include "rr/selfforce.hpp"

namespace rr {

using Matrix4 = std::array<std::array<double, 4>, 4>;          // [l][mu] = del_l V^mu
using Tensor2 = std::array<std::array<double, 4>, 4>;          // [mu][nu], contravariant
using Tensor3 = std::array<Tensor2, 4>;                        // [l][mu][nu] = del_l P^{mu nu}
using Tensor4 = std::array<Tensor3, 4>;                        // [l][m][mu][nu]

/// Analytic fluid-state callbacks: velocity, density and pressure fields
/// with the gradients the asymptotic formulas need.  U must be normalized
/// everywhere sampled; n must stay bounded away from zero (the Euler form
/// divides by it).
struct FluidField {
    std::function<FourVector(const FourVector&)> velocity;   // U^mu(r)
    std::function<Matrix4(const FourVector&)> grad_velocity; // del_l U^mu
    std::function<std::array<Matrix4, 4>(const FourVector&)> grad2_velocity; // [m][l][mu]
    std::function<double(const FourVector&)> density;
    std::function<std::array<double, 4>(const FourVector&)> grad_density;  // del_l n
    std::function<Tensor2(const FourVector&)> pressure;      // P^{mu nu}
    std::function<Tensor3(const FourVector&)> grad_pressure;
    std::function<Tensor4(const FourVector&)> grad2_pressure;

    /// Fills any missing gradient callbacks with 4th-order central
    /// differences of the value callbacks.
    void fill_missing_gradients(double step = 1e-3);
};

namespace detail {

template <typename F>
auto central4(const F& f, const FourVector& r, int l, double h) {
    FourVector e;
    e[l] = 1.0;
    auto p1 = f(r + e * h), m1 = f(r - e * h);
    auto p2 = f(r + e * (2 * h)), m2 = f(r - e * (2 * h));
    using V = decltype(p1);
    if constexpr (std::is_same_v<V, double>) {
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    } else if constexpr (std::is_same_v<V, FourVector>) {
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    } else {
        V out{};
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < out[i].size(); ++j)
                out[i][j] = (8.0 * (p1[i][j] - m1[i][j]) - (p2[i][j] - m2[i][j])) / (12.0 * h);
        return out;
    }
}

} // namespace detail

inline void FluidField::fill_missing_gradients(double step) {
    if (!grad_velocity && velocity) {
        auto v = velocity;
        grad_velocity = [v, step](const FourVector& r) {
            Matrix4 g{};
            for (int l = 0; l < 4; ++l) {
                const FourVector d = detail::central4(v, r, l, step);
                for (int mu = 0; mu < 4; ++mu) g[static_cast<std::size_t>(l)][static_cast<std::size_t>(mu)] = d[mu];
            }
            return g;
        };
    }
    if (!grad2_velocity && grad_velocity) {
        auto gv = grad_velocity;
        grad2_velocity = [gv, step](const FourVector& r) {
            std::array<Matrix4, 4> g{};
            for (int m = 0; m < 4; ++m) g[static_cast<std::size_t>(m)] = detail::central4(gv, r, m, step);
            return g;
        };
    }
    if (!grad_density && density) {
        auto n = density;
        grad_density = [n, step](const FourVector& r) {
            std::array<double, 4> g{};
            for (int l = 0; l < 4; ++l) g[static_cast<std::size_t>(l)] = detail::central4(n, r, l, step);
            return g;
        };
    }
    if (!grad_pressure && pressure) {
        auto P = pressure;
        grad_pressure = [P, step](const FourVector& r) {
            Tensor3 g{};
            for (int l = 0; l < 4; ++l) g[static_cast<std::size_t>(l)] = detail::central4(P, r, l, step);
            return g;
        };
    }
    if (!grad2_pressure && grad_pressure) {
        auto gP = grad_pressure;
        grad2_pressure = [gP, step](const FourVector& r) {
            Tensor4 g{};
            for (int l = 0; l < 4; ++l) {
                FourVector e;
                e[l] = 1.0;
                const Tensor3 p1 = gP(r + e * step), m1 = gP(r - e * step);
                const Tensor3 p2 = gP(r + e * (2 * step)), m2 = gP(r - e * (2 * step));
                for (int m = 0; m < 4; ++m)
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            g[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                                (8.0 * (p1[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] - m1[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) -
                                 (p2[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] - m2[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)])) /
                                (12.0 * step);
            }
            return g;
        };
    }
}

// ---------------------------------------------------------------------------
// Catalogue
// ---------------------------------------------------------------------------

/// Uniform flow with constant density and pressure tensor.
inline FluidField uniform_fluid(const FourVector& U, double n, const Tensor2& P = {}) {
    FluidField f;
    f.velocity = [U](const FourVector&) { return U; };
    f.grad_velocity = [](const FourVector&) { return Matrix4{}; };
    f.grad2_velocity = [](const FourVector&) { return std::array<Matrix4, 4>{}; };
    f.density = [n](const FourVector&) { return n; };
    f.grad_density = [](const FourVector&) { return std::array<double, 4>{}; };
    f.pressure = [P](const FourVector&) { return P; };
    f.grad_pressure = [](const FourVector&) { return Tensor3{}; };
    f.grad2_pressure = [](const FourVector&) { return Tensor4{}; };
    return f;
}

/// Rigid rotation about the z axis at angular rate Omega:
/// U = gamma(rho) (1, -Omega y, Omega x, 0), normalized for Omega rho < 1.
/// Lagrangian paths are the circular world-lines.  Gradients are filled by
/// finite differences.
inline FluidField rigid_rotor_fluid(double Omega, double n = 1.0) {
    FluidField f;
    f.velocity = [Omega](const FourVector& r) {
        const double vx = -Omega * r[2], vy = Omega * r[1];
        const double v2 = vx * vx + vy * vy;
        if (v2 >= 1.0) throw DomainError("rigid_rotor_fluid: superluminal at this radius");
        const double g = 1.0 / std::sqrt(1.0 - v2);
        return FourVector{g, g * vx, g * vy, 0.0};
    };
    f.density = [n](const FourVector&) { return n; };
    f.pressure = [](const FourVector&) { return Tensor2{}; };
    f.fill_missing_gradients(1e-3);
    return f;
}

/// Projector onto the subspace orthogonal to U:
/// Delta^{mu nu} = eta^{mu nu} - U^mu U^nu.
inline Tensor2 delta_projector(const FourVector& U) {
    Tensor2 d{};
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            const double eta = (mu == nu) ? (mu == 0 ? 1.0 : -1.0) : 0.0;
            d[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] = eta - U[mu] * U[nu];
        }
    return d;
}

/// Isothermal Maxwellian-consistent closure: P^{mu nu} = -p Delta^{mu nu}
/// with p = n(r) T, density given as an analytic callback.
inline FluidField isothermal_maxwellian_fluid(std::function<double(const FourVector&)> n_of_r,
                                              double T,
                                              std::function<FourVector(const FourVector&)> U_of_r) {
    FluidField f;
    f.velocity = std::move(U_of_r);
    f.density = std::move(n_of_r);
    auto nf = f.density;
    auto uf = f.velocity;
    f.pressure = [nf, uf, T](const FourVector& r) {
        const Tensor2 d = delta_projector(uf(r));
        Tensor2 P{};
        const double p = nf(r) * T;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) P[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = -p * d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        return P;
    };
    f.fill_missing_gradients(1e-3);
    return f;
}

// ---------------------------------------------------------------------------
// Convective derivatives along Lagrangian paths
// ---------------------------------------------------------------------------

namespace detail {

/// Velocity callbacks must stay on the mass shell wherever sampled.
inline FourVector checked_velocity(const FluidField& f, const FourVector& r) {
    const FourVector U = f.velocity(r);
    if (std::abs(minkowski_dot(U, U) - 1.0) > 1e-6)
        throw DomainError("fluid velocity field is not normalized at the sampled point");
    return U;
}

/// DU^mu/Ds = U^l del_l U^mu at r.
inline FourVector convective_derivative(const FluidField& f, const FourVector& r) {
    const FourVector U = f.velocity(r);
    const Matrix4 g = f.grad_velocity(r);
    FourVector out;
    for (int mu = 0; mu < 4; ++mu) {
        double s = 0.0;
        for (int l = 0; l < 4; ++l) s += U[l] * g[static_cast<std::size_t>(l)][static_cast<std::size_t>(mu)];
        out[mu] = s;
    }
    return out;
}

/// D2U^mu/Ds2 = U^l del_l (U^k del_k U^mu), expanded with the second
/// velocity gradient.
inline FourVector second_convective_derivative(const FluidField& f, const FourVector& r) {
    const FourVector U = f.velocity(r);
    const Matrix4 g = f.grad_velocity(r);
    const auto g2 = f.grad2_velocity(r);
    FourVector out;
    for (int mu = 0; mu < 4; ++mu) {
        double s = 0.0;
        for (int l = 0; l < 4; ++l) {
            // (U^k del_k U^l)(del_l U^mu)
            double dUl = 0.0;
            for (int k = 0; k < 4; ++k) dUl += U[k] * g[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
            s += dUl * g[static_cast<std::size_t>(l)][static_cast<std::size_t>(mu)];
            for (int k = 0; k < 4; ++k)
                s += U[l] * U[k] * g2[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)][static_cast<std::size_t>(mu)];
        }
        out[mu] = s;
    }
    return out;
}

/// Walks the Lagrangian path through r backwards by delay (RK4 on
/// dr/ds = U(r)), returning the retarded path point.
inline FourVector backtrack_lagrangian_path(const FluidField& f, const FourVector& r,
                                            double delay, int steps = 8) {
    FourVector x = r;
    const double h = -delay / steps;
    for (int i = 0; i < steps; ++i) {
        const FourVector k1 = f.velocity(x);
        const FourVector k2 = f.velocity(x + k1 * (h / 2));
        const FourVector k3 = f.velocity(x + k2 * (h / 2));
        const FourVector k4 = f.velocity(x + k3 * h);
        x += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    }
    return x;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Present-time and retarded-time fluid self quantities
// ---------------------------------------------------------------------------

/// Present-time leading form of the retarded self-potential on a Lagrangian
/// path (covariant): A_mu|_s = q [ (1/sigma) U_mu - D U_mu / Ds ].
inline FourVector fluid_self_potential_present(const FluidField& f, const FourVector& r,
                                               double sigma, double q) {
    const FourVector U = detail::checked_velocity(f, r);
    const FourVector dU = detail::convective_derivative(f, r);
    return lower_index(U * (1.0 / sigma) - dU) * q;
}

/// Present-time fluid RR force per unit mass (covariant):
///   K_mu|_s = -(1/sigma)(q^2/m0) DU_mu/Ds
///             + (2/3)(q^2/m0) [ D2U_mu/Ds2 - U_mu U^k D2U_k/Ds2 ].
inline FourVector fluid_self_force_present(const FluidField& f, const FourVector& r,
                                           double sigma, double q, double m0) {
    const FourVector U = detail::checked_velocity(f, r);
    const FourVector dU = detail::convective_derivative(f, r);
    const FourVector d2U = detail::second_convective_derivative(f, r);
    const double proj = minkowski_dot(U, d2U);
    const double q2m = q * q / m0;
    return lower_index(dU) * (-q2m / sigma) +
           lower_index(d2U - U * proj) * (2.0 / 3.0 * q2m);
}

/// Retarded-time forms evaluated at the path point a delay sigma back along
/// the Lagrangian path (the delay root is sigma to leading order):
///   A_mu|_s' = (q/sigma) U_mu(s'),
///   K_mu|_s' = -(q^2/(sigma m0)) DU_mu/Ds'
///              - (1/3)(q^2/m0) [ D2U_mu/Ds'2 - U_mu U^k D2U_k/Ds'2 ].
struct FluidRetardedSelf {
    FourVector potential;      // covariant
    FourVector force_per_mass; // covariant
    FourVector retarded_point;
};

inline FluidRetardedSelf fluid_self_force_retarded(const FluidField& f, const FourVector& r,
                                                   double sigma, double q, double m0) {
    const FourVector rp = detail::backtrack_lagrangian_path(f, r, sigma);
    const FourVector Up = detail::checked_velocity(f, rp);
    const FourVector dU = detail::convective_derivative(f, rp);
    const FourVector d2U = detail::second_convective_derivative(f, rp);
    const double proj = minkowski_dot(Up, d2U);
    const double q2m = q * q / m0;
    FluidRetardedSelf out;
    out.retarded_point = rp;
    out.potential = lower_index(Up) * (q / sigma);
    out.force_per_mass = lower_index(dU) * (-q2m / sigma) +
                         lower_index(d2U - Up * proj) * (-1.0 / 3.0 * q2m);
    return out;
}

// ---------------------------------------------------------------------------
// LL-iterated fluid force with pressure terms
// ---------------------------------------------------------------------------

/// Term-by-term result of the iterated second convective derivative
///   D2U^nu/Ds2 = del_l F^{nu mu} U_mu U^l
///              + F^{nu mu}(F_{mu l} U^l - (1/n) del_l P_mu^l)
///              + (1/n) del_mu P^{mu nu} U^l del_l ln n
///              - (1/n) U^l del_l del_mu P^{mu nu},
/// where F here is the rescaled external tensor (q/m0) F_ext.
struct IteratedAcceleration {
    FourVector gradient_term;
    FourVector field_field_term;
    FourVector pressure_density_term;
    FourVector pressure_second_term;
    FourVector total() const {
        return gradient_term + field_field_term + pressure_density_term + pressure_second_term;
    }
};

namespace detail {

/// del_mu P^{mu nu} as a contravariant vector (P symmetric).
inline FourVector pressure_divergence(const Tensor3& gP) {
    FourVector v;
    for (int nu = 0; nu < 4; ++nu) {
        double s = 0.0;
        for (int mu = 0; mu < 4; ++mu) s += gP[static_cast<std::size_t>(mu)][static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)];
        v[nu] = s;
    }
    return v;
}

/// U^l del_l del_mu P^{mu nu}.
inline FourVector pressure_divergence_convected(const Tensor4& g2P, const FourVector& U) {
    FourVector v;
    for (int nu = 0; nu < 4; ++nu) {
        double s = 0.0;
        for (int l = 0; l < 4; ++l)
            for (int mu = 0; mu < 4; ++mu)
                s += U[l] * g2P[static_cast<std::size_t>(l)][static_cast<std::size_t>(mu)][static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)];
        v[nu] = s;
    }
    return v;
}

} // namespace detail

inline IteratedAcceleration ll_iterated_acceleration(const FluidField& fluid,
                                                     const ExternalFieldModel& field,
                                                     const FourVector& r,
                                                     const ParticleParams& p) {
    const FourVector U = detail::checked_velocity(fluid, r);
    const double n = fluid.density(r);
    if (!(n > 0.0)) throw DomainError("ll_iterated_acceleration: density must stay positive");
    const double qm = p.q / p.m0;

    const FieldSample fs = field.eval(r);
    const Tensor3 gP = fluid.grad_pressure(r);
    const Tensor4 g2P = fluid.grad2_pressure(r);
    const std::array<double, 4> gn = fluid.grad_density(r);

    IteratedAcceleration out;

    // del_l F^{nu mu} U_mu U^l, raised on nu
    FourVector grad_cov;
    for (int l = 0; l < 4; ++l) grad_cov += fs.grad.d[l].contract(U) * U[l];
    out.gradient_term = raise_index(grad_cov) * qm;

    // F^{nu mu}(F_{mu l} U^l - (1/n) del_l P_mu^l):
    // w_mu = F_{mu l} U^l; pressure part lowers the first index of del P
    const FourVector w_cov = fs.faraday.contract(U) * qm;       // (q/m0) F U, covariant
    const FourVector divP = detail::pressure_divergence(gP);    // contravariant
    const FourVector inner_cov = w_cov - lower_index(divP) * (1.0 / n);
    out.field_field_term = raise_index(fs.faraday.contract(raise_index(inner_cov))) * qm;

    // (1/n) del_mu P^{mu nu} (U^l del_l ln n)
    double dlnn = 0.0;
    for (int l = 0; l < 4; ++l) dlnn += U[l] * gn[static_cast<std::size_t>(l)] / n;
    out.pressure_density_term = divP * (dlnn / n);

    // -(1/n) U^l del_l del_mu P^{mu nu}
    out.pressure_second_term = detail::pressure_divergence_convected(g2P, U) * (-1.0 / n);

    return out;
}

/// The two projected bracket pieces of the fluid LL force, exposed for
/// inspection: h1 carries the pure-field terms, h2 every pressure-coupled
/// term.  Both are covariant.
struct FluidLLForce {
    FourVector force;      // covariant, as a force (m0 times the per-mass form)
    FourVector mass_term;  // covariant force contribution of the 1/sigma piece
    FourVector h1;
    FourVector h2;
};

/// Fluid analogue of the LL self-force (Landau-Lifshitz iterated), with the
/// mass-renormalization term retained:
///   K_mu|_s = (q^2/m0) { -(1/sigma)[(q/m0) F_{mu nu} U^nu - (1/n) del_nu P_mu^nu]
///                        + (2 q/(3 m0)) h1_mu + (2/3) h2_mu }.
/// Returned as a force, m0 K.  With P = 0 and uniform n this coincides with
/// the single-particle LL model.
inline FluidLLForce fluid_ll_force(const FluidField& fluid, const ExternalFieldModel& field,
                                   const FourVector& r, const ParticleParams& p) {
    const FourVector U = detail::checked_velocity(fluid, r);
    const double n = fluid.density(r);
    if (!(n > 0.0)) throw DomainError("fluid_ll_force: density must stay positive");
    const double qm = p.q / p.m0;
    const double q2 = p.q * p.q;

    const FieldSample fs = field.eval(r);
    const Tensor3 gP = fluid.grad_pressure(r);
    const Tensor4 g2P = fluid.grad2_pressure(r);
    const std::array<double, 4> gn = fluid.grad_density(r);

    const FourVector w_cov = fs.faraday.contract(U);            // F_{mu nu} U^nu
    const FourVector divP = detail::pressure_divergence(gP);    // contravariant
    const FourVector divP_cov = lower_index(divP);
    const FourVector conv_divP = detail::pressure_divergence_convected(g2P, U);
    double dlnn = 0.0;
    for (int l = 0; l < 4; ++l) dlnn += U[l] * gn[static_cast<std::size_t>(l)] / n;

    FluidLLForce out;

    // h1 = del F U U + (q/m0)[F F U + (F U . F U) U]
    out.h1 = ll_h1(fs, U, p);

    // h2, all six terms of the pressure-coupled bracket
    const FourVector FdivP = fs.faraday.contract(divP);  // F_{mu beta} (del_l P^{l beta})
    const double U_FdivP = [&] {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += U[k] * FdivP[k];
        return s;
    }();
    const double U_divP = [&] {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += U[k] * divP_cov[k];
        return s;
    }();
    const double U_convdivP = [&] {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += U[k] * lower_index(conv_divP)[k];
        return s;
    }();
    const FourVector U_cov = lower_index(U);
    out.h2 = FdivP * (-qm / n) + divP_cov * (dlnn / n) - lower_index(conv_divP) * (1.0 / n) +
             U_cov * (qm / n * U_FdivP) - U_cov * (U_divP * dlnn / n) +
             U_cov * (U_convdivP / n);

    out.mass_term = (w_cov * qm - divP_cov * (1.0 / n)) * (-q2 / p.sigma);
    out.force = out.mass_term + out.h1 * (q2 * 2.0 * p.q / (3.0 * p.m0)) +
                out.h2 * (q2 * 2.0 / 3.0);
    return out;
}

} // namespace rr
