#pragma once

#include <cmath>
#include <string>

#include "rr/errors.hpp"

namespace rr {

namespace detail {

/// Adaptive Simpson on [a,b] with absolute tolerance, recursing on the
/// classic |S2 - S| criterion.  Templated on the float type so the test
/// suite can instantiate a long double oracle of the same quadrature.
template <typename Real, typename F>
Real adaptive_simpson(const F& f, Real a, Real b, Real fa, Real fm, Real fb, Real whole,
                      Real tol, int depth) {
    const Real m = (a + b) / 2;
    const Real lm = (a + m) / 2, rm = (m + b) / 2;
    const Real flm = f(lm), frm = f(rm);
    const Real left = (m - a) / 6 * (fa + 4 * flm + fm);
    const Real right = (b - m) / 6 * (fm + 4 * frm + fb);
    const Real delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <typename Real, typename F>
Real integrate(const F& f, Real a, Real b, Real tol) {
    const Real m = (a + b) / 2;
    const Real fa = f(a), fm = f(m), fb = f(b);
    const Real whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace detail

/// Modified Bessel function of the second kind for integer order, from the
/// integral representation
///   K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt,
/// evaluated as exp(-x) * int exp(-x (cosh t - 1)) cosh(nu t) dt so the
/// integrand never underflows.  Relative accuracy is better than 1e-10 over
/// the orders and arguments the engine uses (nu <= 3, x up to several
/// hundred).
template <typename Real = double>
Real bessel_k(int nu, Real x) {
    if (!(x > Real(0))) throw DomainError("bessel_k: requires x > 0, got " + std::to_string((double)x));
    if (nu < 0) nu = -nu;  // K_{-nu} = K_nu

    // Truncation point: x (cosh t - 1) - nu t > 60 makes the tail negligible
    // relative to the integral, which is >= the t ~ 0 contribution of O(1).
    Real t_max = std::acosh(Real(1) + Real(80) / x);
    while (x * (std::cosh(t_max) - 1) - nu * t_max < Real(60)) t_max *= Real(1.25);

    const auto f = [&](Real t) {
        return std::exp(-x * (std::cosh(t) - Real(1))) * std::cosh(Real(nu) * t);
    };
    // the integrand is O(1) near 0, so an absolute tolerance acts as relative
    const Real tol = Real(1e-14) * t_max;
    const Real scaled = detail::integrate<Real>(f, Real(0), t_max, tol);
    return std::exp(-x) * scaled;
}

} // namespace rr
