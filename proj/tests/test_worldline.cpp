#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rr/worldline.hpp"
#include "test_helpers.hpp"

using rr::FourVector;
using rr::WorldlineHistory;
using rr::WorldlineSample;
using rr::find_retarded_time;

TEST_CASE("interpolation is exact on inertial histories") {
    const FourVector u = rr::four_velocity_from_spatial(0.6, -0.2, 0.1);
    const FourVector r0{0.0, 1.0, 2.0, -1.0};
    const auto hist = rrtest::make_inertial_history(r0, u, 0.0, 5.0, 0.25);

    for (double s : {0.1, 0.33, 2.71, 4.999, -3.0, -100.0}) {
        const auto w = hist.interpolate(s);
        CHECK(rrtest::max_abs_diff(w.r, r0 + s * u) < 1e-13 * (1.0 + std::abs(s)));
        CHECK(rrtest::max_abs_diff(w.u, u) < 1e-14);
        CHECK(rrtest::max_abs(w.a) < 1e-14);
    }
}

TEST_CASE("node queries return the stored sample exactly") {
    const auto wl = rrtest::circular_worldline(1.0, 0.3);
    const auto hist = rrtest::make_history(wl, 0.0, 4.0, 0.2);
    const auto& smp = hist.samples()[7];
    const auto w = hist.interpolate(smp.s);
    CHECK(rrtest::max_abs_diff(w.r, smp.r) == 0.0);
    CHECK(rrtest::max_abs_diff(w.u, smp.u) == 0.0);
    CHECK(rrtest::max_abs_diff(w.a, smp.a) == 0.0);
}

TEST_CASE("queries beyond the frontier throw FutureQuery") {
    const auto hist = rrtest::make_inertial_history({0, 0, 0, 0}, {1, 0, 0, 0}, 0.0, 1.0, 0.25);
    CHECK_THROWS_AS(hist.interpolate(1.2601), rr::FutureQuery);
}

TEST_CASE("interpolation is 4th-order accurate on the circular world-line") {
    const auto wl = rrtest::circular_worldline(1.0, 1.0);
    std::vector<double> errs;
    for (const double h : {0.2, 0.1, 0.05}) {
        const auto hist = rrtest::make_history(wl, 0.0, 2.0, h);
        double emax = 0.0;
        for (double s = 0.5 * h; s < 2.0 - h; s += h) {  // midpoints
            emax = std::max(emax, rrtest::max_abs_diff(hist.interpolate(s).r, wl.r(s)));
        }
        errs.push_back(emax);
    }
    CHECK(errs[0] / errs[1] > 10.0);
    CHECK(errs[0] / errs[1] < 24.0);
    CHECK(errs[1] / errs[2] > 10.0);
    CHECK(errs[1] / errs[2] < 24.0);
}

TEST_CASE("retarded time for rest and inertial world-lines is sigma") {
    const double sigma = 0.37;
    SECTION("at rest") {
        const auto hist =
            rrtest::make_inertial_history({0, 0, 0, 0}, {1, 0, 0, 0}, 0.0, 6.0, 0.05);
        const double s_ret = find_retarded_time(hist, 5.0, sigma);
        CHECK(rrtest::rel_err(s_ret, sigma) < 1e-10);
    }
    SECTION("boosted") {
        const FourVector u = rr::four_velocity_from_spatial(1.2, -0.4, 0.25);
        const auto hist = rrtest::make_inertial_history({0, 2, 0, 1}, u, 0.0, 6.0, 0.05);
        const double s_ret = find_retarded_time(hist, 5.0, sigma);
        CHECK(rrtest::rel_err(s_ret, sigma) < 1e-10);
    }
}

TEST_CASE("retarded time on circular motion matches a brute-force scan") {
    const double R = 1.0, Omega = 0.5, sigma = 0.08;
    const auto wl = rrtest::circular_worldline(R, Omega);
    const auto hist = rrtest::make_history(wl, 0.0, 10.0, sigma / 4.0);
    const double s = 9.0;

    const double s_ret = find_retarded_time(hist, s, sigma);

    // exhaustive fine-grid scan of R.R - sigma^2 over the delay, then bisect
    const auto g = [&](double d) {
        const FourVector R4 = wl.r(s) - wl.r(s - d);
        return rr::minkowski_dot(R4, R4) - sigma * sigma;
    };
    const double step = sigma * 1e-6;
    double lo = step, hi = 0.0;
    for (double d = step; d < 3.0 * sigma; d += step) {
        if (g(d) > 0.0) {
            hi = d;
            lo = d - step;
            break;
        }
    }
    REQUIRE(hi > 0.0);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    const double s_ret_oracle = 0.5 * (lo + hi);
    CHECK(std::abs(s_ret - s_ret_oracle) < 1e-9 * sigma);
    CHECK(s_ret > 0.0);
}

TEST_CASE("leading-order delay law s_ret = sigma + O(eps^2)") {
    // |s_ret - sigma| should scale like sigma^3 under sigma halving
    const auto wl = rrtest::circular_worldline(1.0, 0.8);
    std::vector<double> errs;
    for (double sigma : {0.2, 0.1, 0.05, 0.025}) {
        const auto hist = rrtest::make_history(wl, 0.0, 8.0, sigma / 4.0);
        const double s_ret = find_retarded_time(hist, 7.0, sigma);
        errs.push_back(std::abs(s_ret - sigma));
    }
    const double slope = rrtest::fitted_slope(errs);
    CHECK(slope > 2.5);
    CHECK(slope < 3.5);
}

TEST_CASE("root search reports a corrupted bracket") {
    // a history that never separates from the present point: space-like
    // queries cannot reach R.R = sigma^2 within the horizon if sigma is
    // larger than the whole stored span allows
    const auto hist = rrtest::make_inertial_history({0, 0, 0, 0}, {1, 0, 0, 0}, 0.0, 1.0, 0.05);
    // horizon is 10*sigma; the root sits at s_ret = sigma = 40, but the
    // prehistory is inertial so the root exists; instead corrupt by asking
    // at huge sigma with a bounded-depth history -> root exists analytically.
    // The genuine no-root case: delay equation with sigma exceeding any
    // achievable interval separation is impossible for time-like motion, so
    // simulate corruption via a non-monotone hand-built history.
    WorldlineHistory bad({0.0, {0, 0, 0, 0}, {1, 0, 0, 0}, {}}, {1, 0, 0, 0});
    // samples that jump far in space: R.R stays negative (space-like), no root
    for (int i = 1; i <= 40; ++i) {
        const double s = 0.05 * i;
        bad.append({s, {s * 1e-3, 3.0 * s, 0, 0}, {1, 0, 0, 0}, {}});
    }
    CHECK_THROWS_AS(find_retarded_time(bad, 2.0, 0.1), rr::RootNotBracketed);
}

TEST_CASE("pruning keeps the delay window and the prehistory anchor") {
    const FourVector u = rr::four_velocity_from_spatial(0.3, 0, 0);
    auto hist = rrtest::make_inertial_history({0, 0, 0, 0}, u, 0.0, 20.0, 0.1);
    hist.prune(15.0);
    CHECK(hist.oldest_retained() >= 14.9);
    // recent queries fine
    CHECK_NOTHROW(hist.interpolate(16.0));
    // prehistory queries still exact
    const auto w = hist.interpolate(-2.0);
    CHECK(rrtest::max_abs_diff(w.r, FourVector{0, 0, 0, 0} + (-2.0) * u) < 1e-12);
    // the pruned-out middle is reported, not silently wrong
    CHECK_THROWS_AS(hist.interpolate(5.0), rr::InsufficientHistory);
}

TEST_CASE("append requires strictly increasing proper time") {
    WorldlineHistory hist({0.0, {0, 0, 0, 0}, {1, 0, 0, 0}, {}}, {1, 0, 0, 0});
    CHECK_THROWS(hist.append({0.0, {0, 0, 0, 0}, {1, 0, 0, 0}, {}}));
}
