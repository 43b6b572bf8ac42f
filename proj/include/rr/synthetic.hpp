#pragma once

#include <cmath>
#include <functional>

#include "rr/fourvector.hpp"
#include "rr/worldline.hpp"

namespace rr {

/// Closed-form world-line with analytic derivatives; used to build
/// integration-error-free histories for convergence studies.
struct AnalyticWorldline {
    std::function<FourVector(double)> r;
    std::function<FourVector(double)> u;
    std::function<FourVector(double)> a;
};

/// Circular motion in the x-y plane: radius R, proper angular rate Omega,
/// u0 = sqrt(1 + R^2 Omega^2) so that u.u = 1.
inline AnalyticWorldline circular_worldline(double R, double Omega) {
    const double u0 = std::sqrt(1.0 + R * R * Omega * Omega);
    AnalyticWorldline w;
    w.r = [=](double s) {
        return FourVector{u0 * s, R * std::cos(Omega * s), R * std::sin(Omega * s), 0.0};
    };
    w.u = [=](double s) {
        return FourVector{u0, -R * Omega * std::sin(Omega * s), R * Omega * std::cos(Omega * s),
                          0.0};
    };
    w.a = [=](double s) {
        return FourVector{0.0, -R * Omega * Omega * std::cos(Omega * s),
                          -R * Omega * Omega * std::sin(Omega * s), 0.0};
    };
    return w;
}

/// Uniform proper acceleration k: u = (cosh ks, sinh ks, 0, 0).
inline AnalyticWorldline hyperbolic_worldline(double k) {
    AnalyticWorldline w;
    w.r = [=](double s) {
        return FourVector{std::sinh(k * s) / k, std::cosh(k * s) / k, 0.0, 0.0};
    };
    w.u = [=](double s) { return FourVector{std::cosh(k * s), std::sinh(k * s), 0.0, 0.0}; };
    w.a = [=](double s) {
        return FourVector{k * std::sinh(k * s), k * std::cosh(k * s), 0.0, 0.0};
    };
    return w;
}

/// Samples an analytic world-line on [s_begin, s_end] with step h.  The
/// prehistory velocity is u(s_begin); callers must keep delayed queries away
/// from the prehistory boundary unless the motion is inertial there.
inline WorldlineHistory sample_history(const AnalyticWorldline& w, double s_begin,
                                       double s_end, double h) {
    WorldlineHistory hist({s_begin, w.r(s_begin), w.u(s_begin), w.a(s_begin)}, w.u(s_begin));
    for (double s = s_begin + h; s < s_end + 0.5 * h; s += h)
        hist.append({s, w.r(s), w.u(s), w.a(s)});
    return hist;
}

} // namespace rr
