#pragma once

#include <cmath>
#include <string>

#include "rr/errors.hpp"
#include "rr/faraday.hpp"
#include "rr/fields.hpp"
#include "rr/fourvector.hpp"
#include "rr/worldline.hpp"

namespace rr {

/// Shell-particle parameters.  The charge is spread on a rigid sphere of
/// radius sigma, which keeps the retarded self-potential finite everywhere.
struct ParticleParams {
    double q = 0.0;      // charge
    double m0 = 1.0;     // rest mass
    double sigma = 0.1;  // shell radius, > 0

    /// Leading-order electromagnetic mass q^2 / sigma (c = 1).
    double em_mass() const { return q * q / sigma; }

    void validate() const {
        std::vector<std::string> issues;
        if (!(sigma > 0.0)) issues.push_back("sigma must be > 0");
        if (!(m0 > 0.0)) issues.push_back("m0 must be > 0");
        if (!issues.empty()) throw ValidationError(issues);
    }
};

/// Self-interaction model used by the integrator.
enum class SelfForceModelKind { None, Exact, RetardedHamiltonian, PresentTime, LLIterative };

inline std::string to_string(SelfForceModelKind k) {
    switch (k) {
        case SelfForceModelKind::None: return "none";
        case SelfForceModelKind::Exact: return "exact";
        case SelfForceModelKind::RetardedHamiltonian: return "retarded_hamiltonian";
        case SelfForceModelKind::PresentTime: return "present_time";
        case SelfForceModelKind::LLIterative: return "ll";
    }
    return "none";
}

inline SelfForceModelKind self_force_model_from_string(const std::string& s) {
    if (s == "none") return SelfForceModelKind::None;
    if (s == "exact") return SelfForceModelKind::Exact;
    if (s == "retarded_hamiltonian") return SelfForceModelKind::RetardedHamiltonian;
    if (s == "present_time") return SelfForceModelKind::PresentTime;
    if (s == "ll") return SelfForceModelKind::LLIterative;
    throw ValidationError("unknown self-force model \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Exact retarded quantities
// ---------------------------------------------------------------------------

/// Retarded self 4-potential, covariant components:
///   A_mu = q u_mu(s') / |R.u(s')|   at  s' = s - s_ret,
/// with R = r(s) - r(s').  At rest this is the Coulomb value (q/sigma, 0,0,0)
/// on the shell.
inline FourVector self_potential_exact(const WorldlineHistory& history, double s,
                                       const ParticleParams& p) {
    const double s_ret = find_retarded_time(history, s, p.sigma);
    const WorldlineSample past = history.interpolate(s - s_ret);
    const FourVector R = history.interpolate(s).r - past.r;
    const double w = minkowski_dot(R, past.u);
    return lower_index(past.u) * (p.q / std::abs(w));
}

namespace detail {

/// Core of the exact self Faraday tensor for an arbitrary present event.
/// With N_{mu k} = u'_mu R_k - u'_k R_mu and w = R.u' the full retarded-time
/// derivative expands to
///   dX/ds' = (a'_mu R_k - a'_k R_mu)/w - N (R.a' - u'.u')/w^2,
/// using dR/ds' = -u', and the tensor is
///   F^(self)_{mu k} = -2q dX/ds' / |w|.
/// Every term carries either a' or the deviation of R from s_ret u', so an
/// inertial past gives zero.  u'.u' is kept explicit so the expression stays
/// the exact derivative for the slightly off-shell trajectories of the
/// volume diagnostics.
inline FaradayTensor self_faraday_at(const WorldlineHistory& history, double s_now,
                                     const FourVector& r_now, double q, double sigma) {
    const double s_ret = retarded_delay(history, s_now, r_now, sigma);
    const WorldlineSample past = history.interpolate(s_now - s_ret);
    const FourVector R = r_now - past.r;
    const double w = minkowski_dot(R, past.u);

    const FourVector u_cov = lower_index(past.u);
    const FourVector a_cov = lower_index(past.a);
    const FourVector R_cov = lower_index(R);

    const FaradayTensor dN = antisymmetric_outer(a_cov, R_cov);
    const FaradayTensor N = antisymmetric_outer(u_cov, R_cov);
    const double dw = minkowski_dot(R, past.a) - minkowski_dot(past.u, past.u);

    const double inv_w = 1.0 / w;
    FaradayTensor dX = dN * inv_w - N * (dw * inv_w * inv_w);
    return dX * (-2.0 * q / std::abs(w));
}

} // namespace detail

/// Exact retarded self Faraday tensor F^(self)_{mu nu} at proper time s.
/// Identically zero whenever the past at and before s' is inertial.
inline FaradayTensor self_faraday_exact(const WorldlineHistory& history, double s,
                                        const ParticleParams& p) {
    return detail::self_faraday_at(history, s, history.interpolate(s).r, p.q, p.sigma);
}

/// Exact RR self-force, covariant: G_mu = q F^(self)_{mu k} u^k(s).
/// Orthogonal to u(s) to machine precision by antisymmetry.
inline FourVector self_force_exact(const WorldlineHistory& history, double s,
                                   const ParticleParams& p) {
    const WorldlineSample now = history.interpolate(s);
    return self_faraday_exact(history, s, p).contract(now.u) * p.q;
}

/// Stage-level variant: present position and velocity supplied explicitly
/// (they are not yet part of the history during a sub-stage).
inline FourVector self_force_exact_at(const WorldlineHistory& history, double s_now,
                                      const FourVector& r_now, const FourVector& u_now,
                                      const ParticleParams& p) {
    return detail::self_faraday_at(history, s_now, r_now, p.q, p.sigma).contract(u_now) * p.q;
}

// ---------------------------------------------------------------------------
// Short delay-time asymptotic models
// ---------------------------------------------------------------------------

/// Mass-correction and bracket pieces of an asymptotic self-force, kept
/// separate so that mass renormalization can move the first term into an
/// effective inertia instead.
struct SelfForceTerms {
    FourVector mass_term;     // covariant
    FourVector bracket_term;  // covariant
    FourVector total() const { return mass_term + bracket_term; }
};

namespace detail {

/// Second derivative of the 4-velocity at s_eval by central differencing of
/// the history interpolant.  Step defaults to the local sample spacing; it
/// shrinks near the prehistory boundary so the stencil never straddles the
/// kink at s0.
inline FourVector u_second_derivative(const WorldlineHistory& history, double s_eval) {
    double h = history.step_hint();
    if (h <= 0.0)
        throw InsufficientHistory("u_second_derivative: need at least two stored samples");
    if (s_eval > history.start() && s_eval - h < history.start()) {
        h = std::max(s_eval - history.start(), h / 64.0);
    }
    if (s_eval + h > history.frontier()) {
        // one-sided backward stencil at the frontier, second order
        const FourVector u0 = history.interpolate(s_eval).u;
        const FourVector u1 = history.interpolate(s_eval - h).u;
        const FourVector u2 = history.interpolate(s_eval - 2.0 * h).u;
        const FourVector u3 = history.interpolate(s_eval - 3.0 * h).u;
        return (2.0 * u0 - 5.0 * u1 + 4.0 * u2 - 1.0 * u3) / (h * h);
    }
    const FourVector up = history.interpolate(s_eval + h).u;
    const FourVector um = history.interpolate(s_eval - h).u;
    const FourVector uc = history.interpolate(s_eval).u;
    return (up - 2.0 * uc + um) / (h * h);
}

/// Projected jerk bracket [udd_mu - u_mu (u.udd)], covariant inputs raised
/// internally; u contravariant, udd contravariant.
inline FourVector projected_bracket(const FourVector& u, const FourVector& udd) {
    const double u_dot_udd = minkowski_dot(u, udd);
    return lower_index(udd - u * u_dot_udd);
}

} // namespace detail

/// Retarded-time Hamiltonian approximation of the self-force (covariant
/// force), evaluated at s' = s - s_ret:
///   g_mu = -m_EM du_mu/ds'  - (1/3) q^2 [ u''_mu - u_mu (u.u'') ]
/// with m_EM = q^2/sigma.  Zero whenever s' falls in the inertial
/// prehistory, which reproduces the turn-on transient property.
///
/// The _at form takes the present position explicitly so integrator
/// sub-stages (whose position is not yet committed) can solve the delay
/// equation; all evaluations then happen at s' < frontier.
inline SelfForceTerms self_force_retarded_hamiltonian_terms_at(const WorldlineHistory& history,
                                                               double s_now,
                                                               const FourVector& r_now,
                                                               const ParticleParams& p) {
    const double s_ret = detail::retarded_delay(history, s_now, r_now, p.sigma);
    const double s_prime = s_now - s_ret;
    if (s_prime <= history.start()) {
        return {};  // inertial prehistory: du/ds' and u'' vanish identically
    }
    const WorldlineSample past = history.interpolate(s_prime);
    const FourVector udd = detail::u_second_derivative(history, s_prime);
    SelfForceTerms t;
    t.mass_term = lower_index(past.a) * (-p.em_mass());
    t.bracket_term = detail::projected_bracket(past.u, udd) * (-p.q * p.q / 3.0);
    return t;
}

inline SelfForceTerms self_force_retarded_hamiltonian_terms(const WorldlineHistory& history,
                                                            double s,
                                                            const ParticleParams& p) {
    return self_force_retarded_hamiltonian_terms_at(history, s, history.interpolate(s).r, p);
}

inline FourVector self_force_retarded_hamiltonian(const WorldlineHistory& history, double s,
                                                  const ParticleParams& p) {
    return self_force_retarded_hamiltonian_terms(history, s, p).total();
}

/// Present-time expansion of the self-force (covariant force), evaluated at
/// the present proper time s:
///   m0 K|_s = -(q^2/sigma) du_mu/ds + (2/3) q^2 [ u''_mu - u_mu (u.u'') ].
/// Note the coefficient +2/3 here against -1/3 in the retarded variant;
/// both orderings agree to O(eps) only.
inline SelfForceTerms self_force_present_time_terms(const WorldlineHistory& history, double s,
                                                    const ParticleParams& p) {
    const WorldlineSample now = history.interpolate(s);
    const FourVector udd = detail::u_second_derivative(history, s);
    SelfForceTerms t;
    t.mass_term = lower_index(now.a) * (-p.q * p.q / p.sigma);
    t.bracket_term = detail::projected_bracket(now.u, udd) * (2.0 * p.q * p.q / 3.0);
    return t;
}

inline FourVector self_force_present_time(const WorldlineHistory& history, double s,
                                          const ParticleParams& p) {
    return self_force_present_time_terms(history, s, p).total();
}

// ---------------------------------------------------------------------------
// Landau-Lifshitz iterated local model (zero-pressure, single particle)
// ---------------------------------------------------------------------------

/// h^(1) of the iterated reduction, covariant:
///   h1_mu = del_l F_{mu nu} u^nu u^l
///         + (q/m0) F_{mu nu} F^{nu l} u_l
///         + (q/m0) (F_{kl} u^l)(F^{k nu} u_nu) u_mu.
/// The last two terms make the vector exactly orthogonal to u; they form the
/// projection of the iterated second derivative onto the mass shell.
inline FourVector ll_h1(const FieldSample& field, const FourVector& u,
                        const ParticleParams& p) {
    FourVector grad_term;
    for (int l = 0; l < 4; ++l) grad_term += field.grad.d[l].contract(u) * u[l];

    const FourVector w_cov = field.faraday.contract(u);       // F_{mu nu} u^nu
    const FourVector ffu = field.faraday.contract(raise_index(w_cov));  // F_{mu nu} w^nu
    const double w_sq = minkowski_dot(w_cov, w_cov);           // w_mu w^mu

    const double qm = p.q / p.m0;
    return grad_term + qm * (ffu + w_sq * lower_index(u));
}

/// Fully local LL-iterated self-force (covariant force):
///   m0 K_mu|_s = q^2 { -(1/sigma)(q/m0) F_{mu nu} u^nu + (2q/(3 m0)) h1_mu }.
/// No history needed.
inline SelfForceTerms self_force_ll_iterative_terms(const ExternalFieldModel& field_model,
                                                    const FourVector& r, const FourVector& u,
                                                    const ParticleParams& p) {
    const FieldSample field = field_model.eval(r);
    SelfForceTerms t;
    const double q2 = p.q * p.q;
    t.mass_term = field.faraday.contract(u) * (-q2 * p.q / (p.m0 * p.sigma));
    t.bracket_term = ll_h1(field, u, p) * (q2 * 2.0 * p.q / (3.0 * p.m0));
    return t;
}

inline FourVector self_force_ll_iterative(const ExternalFieldModel& field_model,
                                          const FourVector& r, const FourVector& u,
                                          const ParticleParams& p) {
    return self_force_ll_iterative_terms(field_model, r, u, p).total();
}

// ---------------------------------------------------------------------------
// Effective canonical momentum
// ---------------------------------------------------------------------------

/// Effective canonical momentum, covariant:
///   P_mu = m0 u_mu + q [ A^(ext)_mu + 2 A^(self)_mu ].
/// The factor 2 on the self-potential is the structural signature of the
/// effective Hamiltonian form; the plain canonical momentum carries factor 1.
inline FourVector effective_momentum(const FourVector& u, const FourVector& A_ext_cov,
                                     const FourVector& A_self_cov, const ParticleParams& p) {
    return lower_index(u) * p.m0 + (A_ext_cov + A_self_cov * 2.0) * p.q;
}

/// H_eff = (1/(2 m0)) (P - q A_eff).(P - q A_eff), with
/// A_eff = A_ext + 2 A_self.  Equals m0/2 on-shell.
inline double effective_hamiltonian(const FourVector& P_cov, const FourVector& A_ext_cov,
                                    const FourVector& A_self_cov, const ParticleParams& p) {
    const FourVector d = P_cov - (A_ext_cov + A_self_cov * 2.0) * p.q;
    return minkowski_dot(d, d) / (2.0 * p.m0);
}

} // namespace rr
