#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>

#include "rr/errors.hpp"
#include "rr/fourvector.hpp"

namespace rr {

/// One stored point of a world-line: proper time, position, 4-velocity and
/// 4-acceleration (du/ds).  u.u = 1 and u.a = 0 are maintained by the
/// producers (integrator or analytic sampling).
struct WorldlineSample {
    double s = 0.0;
    FourVector r;
    FourVector u;
    FourVector a;
};

/// Dense world-line record with an inertial prehistory.
///
/// Samples are strictly increasing in s.  Queries below the first stored
/// proper time s0 resolve analytically from the inertial prehistory
///   r(s) = r(s0) + (s - s0) u_pre,   u = u_pre,   a = 0,
/// which extends to s = -infinity.  Between samples, position is cubic
/// Hermite on (r, u) nodes and velocity is cubic Hermite on (u, a) nodes
/// (renormalized); acceleration is the derivative of the u interpolant.
///
/// Single-writer: one integrator appends; concurrent reads of committed
/// samples are safe.
class WorldlineHistory {
  public:
    WorldlineHistory(const WorldlineSample& initial, const FourVector& prehistory_velocity)
        : s0_(initial.s), r0_(initial.r), u_pre_(prehistory_velocity) {
        samples_.push_back(initial);
    }

    /// The velocity interpolant is projected back onto the mass shell by
    /// default.  The volume diagnostics integrate deliberately off-shell
    /// trajectories and switch the projection off.
    void set_interpolation_projection(bool on) { project_u_ = on; }

    double start() const { return s0_; }
    double frontier() const { return samples_.back().s; }
    double oldest_retained() const { return samples_.front().s; }
    const FourVector& prehistory_velocity() const { return u_pre_; }
    const std::deque<WorldlineSample>& samples() const { return samples_; }

    /// Typical local step near the frontier; used to size finite-difference
    /// stencils on interpolated data.
    double step_hint() const {
        const auto n = samples_.size();
        if (n < 2) return 0.0;
        return samples_[n - 1].s - samples_[n - 2].s;
    }

    void append(const WorldlineSample& sample) {
        if (!(sample.s > samples_.back().s))
            throw Error("WorldlineHistory::append: proper time must increase strictly");
        samples_.push_back(sample);
    }

    /// The initial acceleration is only known once the force at s0 has been
    /// evaluated against the freshly built history.
    void set_last_acceleration(const FourVector& a) { samples_.back().a = a; }

    /// Drops samples older than keep_from.  The prehistory anchor (s0, r0)
    /// is kept separately, so queries at s <= s0 stay exact.
    void prune(double keep_from) {
        while (samples_.size() > 2 && samples_[1].s <= keep_from) samples_.pop_front();
    }

    WorldlineSample interpolate(double s_query) const {
        if (s_query <= s0_) {
            WorldlineSample out;
            out.s = s_query;
            out.r = r0_ + (s_query - s0_) * u_pre_;
            out.u = u_pre_;
            out.a = FourVector{};
            return out;
        }
        if (s_query > frontier()) {
            throw FutureQuery("interpolate: s = " + std::to_string(s_query) +
                              " is beyond the stored frontier " + std::to_string(frontier()));
        }
        if (s_query < samples_.front().s) {
            throw InsufficientHistory("interpolate: s = " + std::to_string(s_query) +
                                      " is older than the retained window");
        }
        // locate interval [i, i+1] containing s_query
        auto it = std::lower_bound(samples_.begin(), samples_.end(), s_query,
                                   [](const WorldlineSample& a, double s) { return a.s < s; });
        if (it->s == s_query) return *it;
        const WorldlineSample& hi = *it;
        const WorldlineSample& lo = *(it - 1);
        return hermite(lo, hi, s_query, project_u_);
    }

  private:
    static WorldlineSample hermite(const WorldlineSample& lo, const WorldlineSample& hi,
                                   double s, bool project_u) {
        const double h = hi.s - lo.s;
        const double t = (s - lo.s) / h;
        const double t2 = t * t, t3 = t2 * t;
        // value basis
        const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        const double h10 = t3 - 2.0 * t2 + t;
        const double h01 = -2.0 * t3 + 3.0 * t2;
        const double h11 = t3 - t2;
        // derivative basis (d/ds = (1/h) d/dt)
        const double g00 = (6.0 * t2 - 6.0 * t) / h;
        const double g10 = (3.0 * t2 - 4.0 * t + 1.0) / h;
        const double g01 = (-6.0 * t2 + 6.0 * t) / h;
        const double g11 = (3.0 * t2 - 2.0 * t) / h;

        WorldlineSample out;
        out.s = s;
        out.r = h00 * lo.r + (h10 * h) * lo.u + h01 * hi.r + (h11 * h) * hi.u;
        const FourVector u_raw =
            h00 * lo.u + (h10 * h) * lo.a + h01 * hi.u + (h11 * h) * hi.a;
        out.u = project_u ? renormalize_velocity(u_raw) : u_raw;
        out.a = g00 * lo.u + (g10 * h) * lo.a + g01 * hi.u + (g11 * h) * hi.a;
        return out;
    }

    double s0_;
    FourVector r0_;
    FourVector u_pre_;
    bool project_u_ = true;
    std::deque<WorldlineSample> samples_;
};

namespace detail {

/// Causal root of the delay-time equation for an arbitrary present event
/// (s_now, r_now), which during an integration sub-stage is not yet part of
/// the history.  Returns s_ret = s_now - s' > 0 with
/// |R.R - sigma^2| < tol * sigma^2, R = r_now - r(s').
///
/// g(d) = R.R - sigma^2 runs from -sigma^2 at d -> 0+ through zero near
/// d = sigma for time-like world-lines; the bracket is expanded
/// geometrically up to the horizon 10 sigma, then the root is polished by
/// safeguarded Newton (g' = 2 R.u(s')) with bisection fallback.
inline double retarded_delay(const WorldlineHistory& history, double s_now,
                             const FourVector& r_now, double sigma,
                             double tol = 1e-12) {
    const double horizon = 10.0 * sigma;
    const auto g = [&](double d) {
        const FourVector R = r_now - history.interpolate(s_now - d).r;
        return minkowski_dot(R, R) - sigma * sigma;
    };
    const auto gprime = [&](double d) {
        const WorldlineSample past = history.interpolate(s_now - d);
        const FourVector R = r_now - past.r;
        return 2.0 * minkowski_dot(R, past.u);
    };

    // bracket: start around the excellent guess d = sigma
    double a = 0.5 * sigma, b = 1.5 * sigma;
    double ga = g(a), gb = g(b);
    while (ga > 0.0) {  // root closer than a: shrink
        b = a;
        gb = ga;
        a *= 0.5;
        ga = g(a);
        if (a < 1e-8 * sigma)
            throw RootNotBracketed("retarded_delay: no sign change below d = " +
                                   std::to_string(b));
    }
    while (gb < 0.0) {  // root beyond b: expand
        a = b;
        ga = gb;
        b *= 1.6;
        if (b > horizon)
            throw RootNotBracketed(
                "retarded_delay: no sign change within the 10-sigma horizon at s = " +
                std::to_string(s_now));
        gb = g(b);
    }

    // safeguarded Newton from the midpoint; a crossing with non-positive
    // slope would mean multiple causal roots inside the bracket, which the
    // engine treats as a corrupted history rather than guessing
    double d = 0.5 * (a + b);
    double gd = g(d);
    const double tol_abs = tol * sigma * sigma;
    for (int it = 0; it < 64; ++it) {
        const double slope = gprime(d);
        if (std::abs(gd) < tol_abs) {
            if (!(slope > 0.0))
                throw RootNotBracketed("retarded_delay: non-monotone crossing of the "
                                       "delay equation (multiple roots?)");
            return d;
        }
        if (gd < 0.0) a = d;
        else b = d;
        double next = (slope != 0.0) ? d - gd / slope : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        d = next;
        gd = g(d);
    }
    if (std::abs(gd) < tol_abs * 16.0 && gprime(d) > 0.0) return d;
    throw RootNotBracketed("retarded_delay: root polish failed to converge");
}

} // namespace detail

/// Proper-time delay s_ret = s - s' > 0 solving R.R = sigma^2 with
/// R = r(s) - r(s'); the causal root per the Einstein causality principle.
inline double find_retarded_time(const WorldlineHistory& history, double s, double sigma) {
    return detail::retarded_delay(history, s, history.interpolate(s).r, sigma);
}

/// Trajectory dump, one row per stored sample.
inline void dump_csv(const WorldlineHistory& history, std::ostream& os) {
    os << "s,r0,r1,r2,r3,u0,u1,u2,u3,a0,a1,a2,a3\n";
    const auto row = [&](const WorldlineSample& w) {
        os << w.s;
        for (int i = 0; i < 4; ++i) os << ',' << w.r[i];
        for (int i = 0; i < 4; ++i) os << ',' << w.u[i];
        for (int i = 0; i < 4; ++i) os << ',' << w.a[i];
        os << '\n';
    };
    for (const auto& w : history.samples()) row(w);
}

} // namespace rr
