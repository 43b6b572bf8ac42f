#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <vector>

#include "rr/bessel.hpp"
#include "rr/errors.hpp"
#include "rr/faraday.hpp"
#include "rr/fields.hpp"
#include "rr/fourvector.hpp"

namespace rr {

/// Relativistic Maxwellian parameters, f ~ exp[(mu - P.U)/T].
struct MaxwellianParams {
    double mu = 0.0;          // chemical potential
    double T = 1.0;           // temperature, energy units
    FourVector U{1, 0, 0, 0}; // fluid 4-velocity, normalized
    double m = 1.0;           // particle mass
    double hbar_scale = 1.0;  // scale of the (2 pi hbar)^3 normalization

    void validate() const {
        std::vector<std::string> issues;
        if (!(T > 0.0)) issues.push_back("temperature must be > 0");
        if (!(m > 0.0)) issues.push_back("mass must be > 0");
        if (std::abs(minkowski_dot(U, U) - 1.0) > 1e-9)
            issues.push_back("fluid velocity must be normalized (U.U = 1)");
        if (!issues.empty()) throw ValidationError(issues);
    }
};

struct EnsembleParticle {
    FourVector r;
    FourVector u;
    double weight = 1.0;
};

/// Sampling bookkeeping: the rejection statistics double as a Monte-Carlo
/// estimate of the Juettner normalization integral (see accept_rate_integral).
struct SamplingStats {
    std::uint64_t proposals = 0;
    std::uint64_t accepts = 0;
    double envelope_bound = 0.0;  // sup over gamma of f/g, envelope-normalized
};

struct KineticEnsemble {
    std::vector<EnsembleParticle> particles;
    double total_weight = 0.0;
    SamplingStats stats;
};

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; keeps the stream layout
/// independent of library internals.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// log of the Juettner gamma-density kernel f(g) = g sqrt(g^2-1) e^{-(g-1)/theta}
/// (rest energy shifted out so the cold limit stays representable).
inline double log_juettner_kernel(double g, double theta) {
    return std::log(g) + 0.5 * std::log(g * g - 1.0) - (g - 1.0) / theta;
}

} // namespace detail

/// Draws `count` four-velocities from the relativistic Maxwellian in the
/// fluid rest frame and boosts them by U.  Rejection sampling on gamma with
/// a shifted-exponential envelope of scale 2 theta; the kernel is
/// log-concave, so the envelope ratio is bounded and located by Newton on
/// its unique interior maximum.  Deterministic under a fixed seed.
///
/// Positions are left at the origin; callers place particles separately.
/// Each particle carries weight total_weight_target / count.
inline KineticEnsemble sample_maxwellian(const MaxwellianParams& params, std::size_t count,
                                         std::uint64_t seed,
                                         double total_weight_target = 1.0) {
    params.validate();
    if (count == 0) throw ValidationError("sample_maxwellian: count must be > 0");
    const double theta = params.T / params.m;
    const double env_scale = 2.0 * theta;

    // sup over g >= 1 of w(g) = g sqrt(g^2-1) exp(-(g-1)/theta + (g-1)/env_scale)
    //                        = g sqrt(g^2-1) exp(-(g-1)/(2 theta)).
    // log w is concave with a single interior maximum g*.
    const auto log_w = [&](double g) {
        return std::log(g) + 0.5 * std::log(g * g - 1.0) - (g - 1.0) / env_scale;
    };
    // solve d/dg log w = 1/g + g/(g^2-1) - 1/(2 theta) = 0 by bisection
    double lo = 1.0 + 1e-14, hi = 1.0 + 10.0 * (env_scale + env_scale * env_scale);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double d = 1.0 / mid + mid / (mid * mid - 1.0) - 1.0 / env_scale;
        (d > 0.0 ? lo : hi) = mid;
    }
    const double log_bound = log_w(0.5 * (lo + hi));

    std::mt19937_64 rng(seed);
    KineticEnsemble out;
    out.particles.reserve(count);
    out.stats.envelope_bound = std::exp(log_bound);

    // boost matrix columns: lab-frame image of the rest-frame basis
    const FourVector& U = params.U;
    const double g0 = U[0];
    std::array<double, 3> n{U[1], U[2], U[3]};

    const double w_each = total_weight_target / static_cast<double>(count);
    while (out.particles.size() < count) {
        ++out.stats.proposals;
        const double g = 1.0 - env_scale * std::log1p(-detail::uniform01(rng));
        const double log_accept = log_w(g) - log_bound;
        if (std::log(detail::uniform01(rng) + 1e-300) >= log_accept) continue;
        ++out.stats.accepts;

        // isotropic direction in the rest frame
        const double cz = 2.0 * detail::uniform01(rng) - 1.0;
        const double phi = 2.0 * M_PI * detail::uniform01(rng);
        const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        const double umag = std::sqrt(std::max(0.0, g * g - 1.0));
        const std::array<double, 3> ur{umag * sz * std::cos(phi), umag * sz * std::sin(phi),
                                       umag * cz};

        // boost to the lab frame: u0' = g0 g + n.ur, spatial gains the
        // aberration along n
        double n_dot_ur = n[0] * ur[0] + n[1] * ur[1] + n[2] * ur[2];
        FourVector u;
        u[0] = g0 * g + n_dot_ur;
        const double coef = g + n_dot_ur / (1.0 + g0);
        for (int i = 0; i < 3; ++i) u[i + 1] = ur[static_cast<std::size_t>(i)] + n[static_cast<std::size_t>(i)] * coef;
        out.particles.push_back({FourVector{}, renormalize_velocity(u), w_each});
    }
    out.total_weight = total_weight_target;
    return out;
}

/// Rejection-rate estimate of the Juettner normalization integral
///   I = int_1^inf g sqrt(g^2-1) exp(-(g-1)/theta) dg = theta K2(1/theta) e^{1/theta},
/// reconstructed from accepts/proposals times the envelope mass.  Used to
/// cross-check the K2 closed form against the sampler Monte-Carlo.
inline double juettner_norm_estimate(const KineticEnsemble& e, const MaxwellianParams& params) {
    const double theta = params.T / params.m;
    const double envelope_mass = 2.0 * theta;  // int_1^inf exp(-(g-1)/(2 theta)) dg
    const double rate = static_cast<double>(e.stats.accepts) /
                        static_cast<double>(e.stats.proposals);
    return rate * e.stats.envelope_bound * envelope_mass;
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct SymmetricTensor4 {
    // row-major upper triangle of a symmetric 4x4
    std::array<double, 10> t{};
    static int idx(int mu, int nu) {
        if (mu > nu) std::swap(mu, nu);
        static constexpr int base[4] = {0, 4, 7, 9};
        return base[mu] + (nu - mu);
    }
    double operator()(int mu, int nu) const { return t[static_cast<std::size_t>(idx(mu, nu))]; }
    double& at(int mu, int nu) { return t[static_cast<std::size_t>(idx(mu, nu))]; }
    double trace_minkowski() const {
        return (*this)(0, 0) - (*this)(1, 1) - (*this)(2, 2) - (*this)(3, 3);
    }
};

struct FluidMoments {
    double n = 0.0;
    FourVector N;
    SymmetricTensor4 T_tensor;
};

namespace detail {

/// Fixed-shape pairwise reduction: the summation tree depends only on the
/// element count, so results are bit-identical for a given input order.
template <typename T, typename Get>
T pairwise_sum(const Get& get, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    if (n == 1) return get(begin);
    if (n == 2) return get(begin) + get(begin + 1);
    const std::size_t mid = begin + n / 2;
    return pairwise_sum<T>(get, begin, mid) + pairwise_sum<T>(get, mid, end);
}

} // namespace detail

/// Velocity moments of an ensemble at a point: n = sum w, N = sum w u,
/// T = sum w u u.  The mass-shell delta of the underlying integrals is
/// realized by the samples living on u.u = 1.
inline FluidMoments compute_moments(const KineticEnsemble& ensemble) {
    if (ensemble.particles.empty())
        throw EmptyEnsemble("compute_moments: ensemble has no particles");
    const auto& ps = ensemble.particles;
    FluidMoments out;
    out.n = detail::pairwise_sum<double>([&](std::size_t i) { return ps[i].weight; }, 0,
                                         ps.size());
    for (int mu = 0; mu < 4; ++mu)
        out.N[mu] = detail::pairwise_sum<double>(
            [&](std::size_t i) { return ps[i].weight * ps[i].u[mu]; }, 0, ps.size());
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu; nu < 4; ++nu)
            out.T_tensor.at(mu, nu) = detail::pairwise_sum<double>(
                [&](std::size_t i) { return ps[i].weight * ps[i].u[mu] * ps[i].u[nu]; }, 0,
                ps.size());
    return out;
}

/// Closed-form Maxwellian fluid scalars (c = 1):
///   n0 = 4 pi m^2 T / (2 pi hbar_scale)^3 * K2(m/T) * exp[mu/T - q (A_ext.U)/T]
///   n1 = -2 q (A_self.U)/T * n0
///   p0 = n0 T,  p1 = n1 T
///   e  = m K3(m/T)/K2(m/T) - T
struct MaxwellianClosedForm {
    double n0, n1, p0, p1, e;
};

inline MaxwellianClosedForm maxwellian_closed_form(const MaxwellianParams& params, double q,
                                                   double A_ext_dot_U, double A_self_dot_U) {
    if (!(params.T > 0.0)) throw DomainError("maxwellian_closed_form: requires T > 0");
    const double z = params.m / params.T;
    const double k2 = bessel_k(2, z);
    const double norm = std::pow(2.0 * M_PI * params.hbar_scale, 3);
    MaxwellianClosedForm out{};
    out.n0 = 4.0 * M_PI * params.m * params.m * params.T / norm * k2 *
             std::exp(params.mu / params.T - q * A_ext_dot_U / params.T);
    out.n1 = -2.0 * q * A_self_dot_U / params.T * out.n0;
    out.p0 = out.n0 * params.T;
    out.p1 = out.n1 * params.T;
    out.e = params.m * bessel_k(3, z) / k2 - params.T;
    return out;
}

/// Mean gamma of the Juettner distribution, K1(z)/K2(z) + 3/z with z = m/T.
inline double juettner_mean_gamma(const MaxwellianParams& params) {
    const double z = params.m / params.T;
    return bessel_k(1, z) / bessel_k(2, z) + 3.0 / z;
}

// ---------------------------------------------------------------------------
// Ensemble I/O
// ---------------------------------------------------------------------------

inline void dump_ensemble_csv(const KineticEnsemble& e, std::ostream& os) {
    os << "weight,r0,r1,r2,r3,u0,u1,u2,u3\n";
    for (const auto& p : e.particles) {
        os << p.weight;
        for (int i = 0; i < 4; ++i) os << ',' << p.r[i];
        for (int i = 0; i < 4; ++i) os << ',' << p.u[i];
        os << '\n';
    }
}

inline KineticEnsemble load_ensemble_csv(std::istream& is) {
    KineticEnsemble out;
    std::string line;
    if (!std::getline(is, line)) throw ParseError("ensemble csv: missing header");
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        EnsembleParticle p;
        double v[9];
        std::size_t pos = 0;
        for (int k = 0; k < 9; ++k) {
            const std::size_t next = line.find(',', pos);
            const std::string tok = line.substr(pos, next == std::string::npos
                                                         ? std::string::npos
                                                         : next - pos);
            try {
                v[k] = std::stod(tok);
            } catch (...) {
                throw ParseError("ensemble csv line " + std::to_string(lineno) +
                                 ": bad number \"" + tok + "\"");
            }
            if (next == std::string::npos && k < 8)
                throw ParseError("ensemble csv line " + std::to_string(lineno) +
                                 ": expected 9 columns");
            pos = next + 1;
        }
        p.weight = v[0];
        for (int i = 0; i < 4; ++i) p.r[i] = v[1 + i];
        for (int i = 0; i < 4; ++i) p.u[i] = v[5 + i];
        if (!(p.weight > 0.0))
            throw ValidationError("ensemble csv line " + std::to_string(lineno) +
                                  ": weights must be positive");
        if (std::abs(minkowski_dot(p.u, p.u) - 1.0) > 1e-6)
            throw ValidationError("ensemble csv line " + std::to_string(lineno) +
                                  ": velocity is not on the mass shell");
        out.particles.push_back(p);
        out.total_weight += p.weight;
    }
    return out;
}

} // namespace rr
