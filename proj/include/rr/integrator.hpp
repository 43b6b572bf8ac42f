#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rr/errors.hpp"
#include "rr/fields.hpp"
#include "rr/fourvector.hpp"
#include "rr/selfforce.hpp"
#include "rr/worldline.hpp"

namespace rr {

enum class ConstraintMode { Projection, None };

/// Method-of-steps configuration.  The step bound h <= sigma/4 keeps at
/// least four samples inside every delay interval, so the delayed argument
/// of the self-force never enters the current step's unknowns and an
/// explicit stepper is legitimate.
struct IntegratorConfig {
    double step = 0.0;
    double span = 0.0;
    ConstraintMode constraint = ConstraintMode::Projection;
    SelfForceModelKind model = SelfForceModelKind::None;
    ExternalFieldModel field;
    ParticleParams particle;
    bool renormalize_mass = false;
    double history_horizon_factor = 12.0;  // retention in units of sigma

    void validate() const {
        std::vector<std::string> issues;
        try {
            particle.validate();
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues.begin(), e.issues.end());
        }
        if (!(step > 0.0)) issues.push_back("step must be > 0");
        if (!(span >= 0.0) || !std::isfinite(span)) issues.push_back("span must be finite and >= 0");
        const bool needs_delay = model == SelfForceModelKind::Exact ||
                                 model == SelfForceModelKind::RetardedHamiltonian;
        if (needs_delay && step > particle.sigma / 4.0 + 1e-15)
            issues.push_back("step must satisfy h <= sigma/4 for delayed self-force models");
        if (!issues.empty()) throw ValidationError(issues);
    }
};

/// Per-step diagnostics emitted by run_scenario.
struct DiagnosticsRow {
    double s;
    double uu_drift;          // u.u - 1 before projection
    double force_ext_mag;     // max-norm of the covariant external force
    double force_self_mag;
    double work_ext;          // cumulative integral of f_ext,0 ds
    double work_self;
};

struct RunResult {
    WorldlineHistory history;
    std::vector<DiagnosticsRow> diagnostics;
};

namespace detail {

/// Covariant self-force for the configured model at a sub-stage point.
/// Delayed models read the committed history only; s* - s_ret stays behind
/// the frontier because h <= sigma/4.
class SelfForceEvaluator {
  public:
    SelfForceEvaluator(const IntegratorConfig& cfg, const WorldlineHistory& history)
        : cfg_(cfg), history_(history) {}

    /// Called once per step at the frontier; the present-time model freezes
    /// its force vector here (its stencil cannot reach past the frontier).
    void begin_step(double s_frontier) {
        if (cfg_.model == SelfForceModelKind::PresentTime) {
            frozen_ = terms(s_frontier, history_.interpolate(s_frontier).r,
                            history_.interpolate(s_frontier).u);
        }
    }

    SelfForceTerms terms(double s, const FourVector& r, const FourVector& u) const {
        const auto& p = cfg_.particle;
        switch (cfg_.model) {
            case SelfForceModelKind::None:
                return {};
            case SelfForceModelKind::Exact: {
                SelfForceTerms t;
                t.bracket_term = self_force_exact_at(history_, s, r, u, p);
                return t;
            }
            case SelfForceModelKind::RetardedHamiltonian:
                return self_force_retarded_hamiltonian_terms_at(history_, s, r, p);
            case SelfForceModelKind::PresentTime:
                return frozen_;
            case SelfForceModelKind::LLIterative:
                return self_force_ll_iterative_terms(cfg_.field, r, u, p);
        }
        return {};
    }

    /// Covariant force entering the equation of motion, with the
    /// mass-correction term either kept explicit or absorbed into the
    /// effective inertia.
    FourVector force(double s, const FourVector& r, const FourVector& u) const {
        const SelfForceTerms t = terms(s, r, u);
        return cfg_.renormalize_mass ? t.bracket_term : t.total();
    }

    double effective_mass() const {
        if (cfg_.renormalize_mass && cfg_.model != SelfForceModelKind::None &&
            cfg_.model != SelfForceModelKind::Exact)
            return cfg_.particle.m0 + cfg_.particle.em_mass();
        return cfg_.particle.m0;
    }

  private:
    const IntegratorConfig& cfg_;
    const WorldlineHistory& history_;
    SelfForceTerms frozen_;
};

struct StateDeriv {
    FourVector dr;
    FourVector du;
};

inline StateDeriv rhs(const IntegratorConfig& cfg, const SelfForceEvaluator& self, double s,
                      const FourVector& r, const FourVector& u) {
    const FourVector f_ext = cfg.field.faraday(r).contract(u) * cfg.particle.q;
    const FourVector f_self = self.force(s, r, u);
    return {u, raise_index(f_ext + f_self) / self.effective_mass()};
}

} // namespace detail

/// One classical 4th-order step from the history frontier.  Delayed
/// quantities are interpolated from the committed history at each sub-stage;
/// in projection mode the velocity is renormalized afterwards and the
/// acceleration recomputed before the sample is appended.
inline WorldlineSample step(WorldlineHistory& history, const IntegratorConfig& cfg) {
    const WorldlineSample y0 = history.samples().back();
    const double h = cfg.step;
    const double s = y0.s;

    detail::SelfForceEvaluator self(cfg, history);
    self.begin_step(s);

    const auto k1 = detail::rhs(cfg, self, s, y0.r, y0.u);
    const auto k2 = detail::rhs(cfg, self, s + h / 2, y0.r + k1.dr * (h / 2), y0.u + k1.du * (h / 2));
    const auto k3 = detail::rhs(cfg, self, s + h / 2, y0.r + k2.dr * (h / 2), y0.u + k2.du * (h / 2));
    const auto k4 = detail::rhs(cfg, self, s + h, y0.r + k3.dr * h, y0.u + k3.du * h);

    WorldlineSample y1;
    y1.s = s + h;
    y1.r = y0.r + (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr) * (h / 6.0);
    y1.u = y0.u + (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du) * (h / 6.0);
    if (cfg.constraint == ConstraintMode::Projection) y1.u = renormalize_velocity(y1.u);
    y1.a = detail::rhs(cfg, self, y1.s, y1.r, y1.u).du;

    history.append(y1);
    history.prune(y1.s - cfg.history_horizon_factor * cfg.particle.sigma);
    return y1;
}

/// Integrates a full trajectory from an inertial prehistory.  The initial
/// 4-velocity doubles as the prehistory velocity; diagnostics rows are
/// emitted per step.
inline RunResult run_scenario(const FourVector& r0, const FourVector& u0,
                              const IntegratorConfig& cfg) {
    cfg.validate();
    const FourVector u_init = renormalize_velocity(u0);
    WorldlineHistory history({0.0, r0, u_init, FourVector{}}, u_init);
    {
        detail::SelfForceEvaluator self(cfg, history);
        self.begin_step(0.0);
        history.set_last_acceleration(detail::rhs(cfg, self, 0.0, r0, u_init).du);
    }

    RunResult out{std::move(history), {}};
    const long n_steps = std::lround(cfg.span / cfg.step);
    out.diagnostics.reserve(static_cast<std::size_t>(n_steps) + 1);

    double work_ext = 0.0, work_self = 0.0;
    const auto log_row = [&](const WorldlineSample& w) {
        detail::SelfForceEvaluator self(cfg, out.history);
        self.begin_step(w.s);
        const FourVector f_ext = cfg.field.faraday(w.r).contract(w.u) * cfg.particle.q;
        const FourVector f_self = self.force(w.s, w.r, w.u);
        out.diagnostics.push_back({w.s, minkowski_dot(w.u, w.u) - 1.0,
                                   f_ext.max_abs(), f_self.max_abs(), work_ext, work_self});
    };

    log_row(out.history.samples().back());
    for (long i = 0; i < n_steps; ++i) {
        try {
            const WorldlineSample before = out.history.samples().back();
            const WorldlineSample w = step(out.history, cfg);
            // trapezoid on the time component of the covariant forces
            detail::SelfForceEvaluator self(cfg, out.history);
            self.begin_step(w.s);
            const FourVector fe0 = cfg.field.faraday(before.r).contract(before.u) * cfg.particle.q;
            const FourVector fe1 = cfg.field.faraday(w.r).contract(w.u) * cfg.particle.q;
            const FourVector fs0 = self.force(before.s, before.r, before.u);
            const FourVector fs1 = self.force(w.s, w.r, w.u);
            work_ext += 0.5 * cfg.step * (fe0[0] + fe1[0]);
            work_self += 0.5 * cfg.step * (fs0[0] + fs1[0]);
            log_row(w);
        } catch (Error& e) {
            throw Error(std::string(e.what()) + " (at proper time s = " +
                        std::to_string(out.history.frontier()) + ")");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Phase-space volume diagnostics
// ---------------------------------------------------------------------------

enum class JacobianCoords { Canonical, Velocity };

/// Maps an integrated state to the coordinates in which the flow Jacobian is
/// assembled.  Canonical coordinates use the effective momentum: factor 2 on
/// the self-potential for the exact model; for the asymptotic and
/// field-free Hamiltonian variants the canonical momentum reduces to
/// m0 u + q A_ext.  Velocity coordinates are (r, u) as integrated.
inline std::array<double, 8> phase_coordinates(const WorldlineHistory& history, double s,
                                               const IntegratorConfig& cfg,
                                               JacobianCoords coords) {
    const WorldlineSample w = history.interpolate(s);
    std::array<double, 8> y{};
    for (int i = 0; i < 4; ++i) y[static_cast<std::size_t>(i)] = w.r[i];
    if (coords == JacobianCoords::Velocity) {
        for (int i = 0; i < 4; ++i) y[static_cast<std::size_t>(4 + i)] = w.u[i];
        return y;
    }
    const FourVector A_ext = cfg.field.potential(w.r);
    FourVector P;
    if (cfg.model == SelfForceModelKind::Exact) {
        const FourVector A_self = self_potential_exact(history, s, cfg.particle);
        P = effective_momentum(w.u, A_ext, A_self, cfg.particle);
    } else {
        P = lower_index(w.u) * cfg.particle.m0 + A_ext * cfg.particle.q;
    }
    for (int i = 0; i < 4; ++i) y[static_cast<std::size_t>(4 + i)] = P[i];
    return y;
}

/// Inverse of phase_coordinates at the initial time, where the prehistory is
/// inertial.  For an inertial prehistory with velocity u the exact
/// self-potential is q u_mu / (sigma sqrt(u.u)), so
///   P - q A_ext = u_cov (m0 + 2 q^2/(sigma beta)),   beta = sqrt(u.u),
/// which inverts in closed form through |P - q A_ext| = beta m0 + 2 q^2/sigma.
/// The map stays the exact inverse slightly off the mass shell, which the
/// volume diagnostics rely on.
inline std::pair<FourVector, FourVector> initial_state_from_coordinates(
    const std::array<double, 8>& y, const IntegratorConfig& cfg, JacobianCoords coords) {
    FourVector r{y[0], y[1], y[2], y[3]};
    FourVector second{y[4], y[5], y[6], y[7]};
    if (coords == JacobianCoords::Velocity) return {r, second};
    const FourVector A_ext = cfg.field.potential(r);
    const FourVector kin = second - A_ext * cfg.particle.q;  // covariant
    if (cfg.model == SelfForceModelKind::Exact) {
        const double m_em2 = 2.0 * cfg.particle.q * cfg.particle.q / cfg.particle.sigma;
        const double norm = std::sqrt(minkowski_dot(kin, kin));
        const double beta = (norm - m_em2) / cfg.particle.m0;
        const FourVector u_cov = kin / (cfg.particle.m0 + m_em2 / beta);
        return {r, raise_index(u_cov)};
    }
    return {r, raise_index(kin / cfg.particle.m0)};
}

namespace detail {

/// Determinant by LU with partial pivoting; the matrices are 8x8.
inline double determinant(std::array<std::array<double, 8>, 8> m) {
    double det = 1.0;
    for (int col = 0; col < 8; ++col) {
        int piv = col;
        for (int row = col + 1; row < 8; ++row)
            if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        if (m[piv][col] == 0.0) return 0.0;
        if (piv != col) {
            std::swap(m[piv], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (int row = col + 1; row < 8; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int k = col; k < 8; ++k) m[row][k] -= f * m[col][k];
        }
    }
    return det;
}

} // namespace detail

struct VolumeCheckpoint {
    double s;
    double determinant;
};

/// Finite-difference Jacobian determinant of the flow y0 -> y(s).
///
/// Each of the 8 phase-space directions is perturbed by +-delta at s = 0 and
/// integrated without constraint projection (projection would collapse the
/// off-shell perturbation directions).  The perturbed prehistories follow
/// their own initial velocities, which keeps the delay terms consistent with
/// the perturbed data.  For Hamiltonian variants in canonical coordinates
/// the determinant stays at 1 up to O(delta^2) + O(h^4).
inline std::vector<VolumeCheckpoint> liouville_volume_series(
    const FourVector& r0, const FourVector& u0, const IntegratorConfig& cfg_in, double delta,
    int checkpoints, JacobianCoords coords = JacobianCoords::Canonical) {
    IntegratorConfig cfg = cfg_in;
    cfg.constraint = ConstraintMode::None;
    cfg.validate();
    const long n_steps = std::lround(cfg.span / cfg.step);
    const int n_checks = std::max(1, checkpoints);
    std::vector<long> check_steps;
    for (int c = 1; c <= n_checks; ++c)
        check_steps.push_back(n_steps * c / n_checks);

    const FourVector u_init = renormalize_velocity(u0);
    WorldlineHistory center({0.0, r0, u_init, FourVector{}}, u_init);
    const std::array<double, 8> y0 = phase_coordinates(center, 0.0, cfg, coords);

    // integrate the 16 perturbed trajectories, recording coordinates at the
    // checkpoints
    std::array<std::array<std::vector<std::array<double, 8>>, 2>, 8> rec;
    for (int dir = 0; dir < 8; ++dir) {
        for (int sgn = 0; sgn < 2; ++sgn) {
            std::array<double, 8> yp = y0;
            yp[static_cast<std::size_t>(dir)] += (sgn == 0 ? delta : -delta);
            auto [rp, up] = initial_state_from_coordinates(yp, cfg, coords);

            WorldlineHistory hist({0.0, rp, up, FourVector{}}, up);
            hist.set_interpolation_projection(false);
            {
                detail::SelfForceEvaluator self(cfg, hist);
                self.begin_step(0.0);
                hist.set_last_acceleration(detail::rhs(cfg, self, 0.0, rp, up).du);
            }
            std::size_t next_check = 0;
            for (long i = 1; i <= n_steps; ++i) {
                step(hist, cfg);
                if (next_check < check_steps.size() && i == check_steps[next_check]) {
                    rec[dir][sgn].push_back(
                        phase_coordinates(hist, hist.frontier(), cfg, coords));
                    ++next_check;
                }
            }
        }
    }

    std::vector<VolumeCheckpoint> out;
    for (std::size_t c = 0; c < check_steps.size(); ++c) {
        std::array<std::array<double, 8>, 8> jac{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                jac[i][j] = (rec[j][0][c][static_cast<std::size_t>(i)] -
                             rec[j][1][c][static_cast<std::size_t>(i)]) /
                            (2.0 * delta);
        out.push_back({static_cast<double>(check_steps[c]) * cfg.step,
                       detail::determinant(jac)});
    }
    return out;
}

/// Divergence of the per-unit-mass equation-of-motion right-hand side over
/// the four velocity components, d F^mu / d u^mu, by central differences.
/// For the Lorentz force alone this is zero; the LL self-force makes it
/// generally negative (velocity-space contraction), quantifying the
/// non-Hamiltonian character of the local approximation.
inline double velocity_divergence_ll(const ExternalFieldModel& field, const FourVector& r,
                                     const FourVector& u, const ParticleParams& p,
                                     double delta = 1e-6) {
    if (p.q == 0.0) return 0.0;
    const auto accel = [&](const FourVector& uu) {
        const FourVector f = field.faraday(r).contract(uu) * p.q +
                             self_force_ll_iterative(field, r, uu, p);
        return raise_index(f) / p.m0;
    };
    double div = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        FourVector e;
        e[mu] = delta;
        const FourVector fp = accel(u + e);
        const FourVector fm = accel(u - e);
        div += (fp[mu] - fm[mu]) / (2.0 * delta);
    }
    return div;
}

} // namespace rr
