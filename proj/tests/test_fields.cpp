#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rr/fields.hpp"
#include "test_helpers.hpp"

using rr::ExternalFieldModel;
using rr::FaradayTensor;
using rr::FourVector;
using rr::lorentz_force;
using rr::minkowski_dot;

namespace {

/// Central-difference antisymmetrized gradient of the potential,
/// del_mu A_nu - del_nu A_mu, fourth order.
FaradayTensor fd_faraday(const ExternalFieldModel& m, const FourVector& r, double h) {
    auto dA = [&](int mu) {
        FourVector e;
        e[mu] = 1.0;
        const FourVector p1 = m.potential(r + e * h), m1 = m.potential(r - e * h);
        const FourVector p2 = m.potential(r + e * (2 * h)), m2 = m.potential(r - e * (2 * h));
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    };
    std::array<FourVector, 4> g{dA(0), dA(1), dA(2), dA(3)};
    return FaradayTensor::from_components(
        g[0][1] - g[1][0], g[0][2] - g[2][0], g[0][3] - g[3][0],
        g[1][2] - g[2][1], g[1][3] - g[3][1], g[2][3] - g[3][2]);
}

ExternalFieldModel test_pulse() {
    const FourVector k{1.0, 0.0, 0.0, 1.0};      // null, along z
    const FourVector eps{0.0, 0.3, 0.0, 0.0};    // transverse, covariant
    return ExternalFieldModel::plane_wave_pulse(1.0, k, 2.0, 8.0, eps);
}

} // namespace

TEST_CASE("zero model evaluates to zeros everywhere") {
    const auto m = ExternalFieldModel::zero();
    const FourVector r{3.0, -1.0, 2.0, 0.5};
    CHECK(rrtest::max_abs(m.potential(r)) == 0.0);
    CHECK(m.faraday(r).max_abs() == 0.0);
    CHECK(m.faraday_gradient(r).max_abs() == 0.0);
}

TEST_CASE("uniform magnetic field in symmetric gauge") {
    const double Bz = 1.7;
    const auto m = ExternalFieldModel::uniform_magnetic({0.0, 0.0, Bz});
    const FourVector r{0.0, 0.4, -0.9, 2.0};
    const auto F = m.faraday(r);
    CHECK(F(1, 2) == -Bz);
    CHECK(F(2, 1) == Bz);
    CHECK(F(0, 1) == 0.0);
    CHECK(m.faraday_gradient(r).max_abs() == 0.0);
    // hand differentiation of the symmetric-gauge potential
    const auto Ffd = fd_faraday(m, r, 1e-3);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(std::abs(Ffd(a, b) - F(a, b)) < 1e-10);
}

TEST_CASE("faraday equals the antisymmetrized potential gradient") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    const std::array<ExternalFieldModel, 3> models = {
        ExternalFieldModel::uniform_electric({0.8, -0.3, 0.1}),
        ExternalFieldModel::uniform_magnetic({0.2, 1.1, -0.7}),
        test_pulse(),
    };
    for (const auto& m : models) {
        for (int i = 0; i < 100; ++i) {
            const FourVector r{d(rng) + 4.0, d(rng), d(rng), d(rng)};
            const auto F = m.faraday(r);
            const auto Ffd = fd_faraday(m, r, 1e-3);
            const double scale = std::max(F.max_abs(), 1e-3);
            CHECK((Ffd - F).max_abs() < 1e-6 * scale);
        }
    }
}

TEST_CASE("pulse vanishes identically outside its window") {
    const auto m = test_pulse();
    // phase = t - z; outside [2, 10]
    for (const auto& r : {FourVector{0.0, 5.0, 1.0, 0.0}, FourVector{40.0, 0.0, 0.0, 2.0}}) {
        CHECK(rrtest::max_abs(m.potential(r)) == 0.0);
        CHECK(m.faraday(r).max_abs() == 0.0);
        CHECK(m.faraday_gradient(r).max_abs() == 0.0);
    }
    // inside the window the field is nonzero (off the peak, where w' = 0)
    const FourVector inside{4.0, 0.0, 0.0, 0.0};
    CHECK(m.faraday(inside).max_abs() > 0.0);
}

TEST_CASE("pulse is C2 at the window edges") {
    const auto m = test_pulse();
    // walk the phase across the leading edge: A, F, dF must all go to zero
    // continuously (they carry w, w', w'')
    const double eps = 1e-7;
    const FourVector just_in{2.0 + eps, 0, 0, 0};
    const FourVector just_out{2.0 - eps, 0, 0, 0};
    CHECK(rrtest::max_abs(m.potential(just_in)) < 1e-18);
    CHECK(m.faraday(just_in).max_abs() < 1e-11);
    CHECK(m.faraday_gradient(just_in).max_abs() < 1e-4);
    CHECK(rrtest::max_abs(m.potential(just_out)) == 0.0);
}

TEST_CASE("pulse second gradient matches differentiated first gradient") {
    const auto m = test_pulse();
    const FourVector r{5.0, 0.2, -0.1, 0.4};  // inside the window
    const auto g2 = m.faraday_second_gradient(r);
    const double h = 1e-3;
    for (int l = 0; l < 4; ++l) {
        FourVector e;
        e[l] = 1.0;
        for (int mth = 0; mth < 4; ++mth) {
            const auto p1 = m.faraday_gradient(r + e * h).d[static_cast<std::size_t>(mth)];
            const auto m1 = m.faraday_gradient(r - e * h).d[static_cast<std::size_t>(mth)];
            const auto fd = (p1 - m1) * (1.0 / (2.0 * h));
            CHECK((fd - g2.d2[static_cast<std::size_t>(l)][static_cast<std::size_t>(mth)]).max_abs() < 1e-5);
        }
    }
    // uniform fields have no second gradient
    const auto mb = ExternalFieldModel::uniform_magnetic({0, 1, 0});
    CHECK(mb.faraday_second_gradient(r).d2[1][2].max_abs() == 0.0);
}

TEST_CASE("pulse construction validates wave vector and polarization") {
    CHECK_THROWS_AS(ExternalFieldModel::plane_wave_pulse(1.0, {1, 0, 0, 0.5}, 0, 1,
                                                         {0, 1, 0, 0}),
                    rr::ValidationError);
    CHECK_THROWS_AS(ExternalFieldModel::plane_wave_pulse(1.0, {1, 0, 0, 1}, 0, 1,
                                                         {0.5, 0, 0, 0.5}),
                    rr::ValidationError);
}

TEST_CASE("slow-variation ordering: field change over lag sigma scales as sigma/W") {
    // at rest the phase advances at rate k0; sample |F(s) - F(s - sigma)|
    const double sigma = 0.05;
    double prev_var = 0.0;
    for (const double width : {8.0, 16.0, 32.0}) {
        const auto m = ExternalFieldModel::plane_wave_pulse(1.0, {1, 0, 0, 1}, 0.0, width,
                                                            {0, 0.3, 0, 0});
        const FourVector r1{0.30 * width, 0, 0, 0};
        const FourVector r0{0.30 * width - sigma, 0, 0, 0};
        const double var = (m.faraday(r1) - m.faraday(r0)).max_abs() / m.faraday(r1).max_abs();
        if (prev_var > 0.0) {
            const double ratio = prev_var / var;  // halving 1/W halves the variation
            CHECK(ratio > 1.6);
            CHECK(ratio < 2.4);
        }
        prev_var = var;
    }
}

TEST_CASE("lorentz_force") {
    const FourVector u{1, 0, 0, 0};
    SECTION("zero tensor gives zero force") {
        CHECK(rrtest::max_abs(lorentz_force(FaradayTensor{}, u, 2.0, 1.0)) == 0.0);
    }
    SECTION("rest particle in uniform E along x") {
        const auto m = ExternalFieldModel::uniform_electric({2.5, 0, 0});
        const FourVector f = lorentz_force(m.faraday({0, 0, 0, 0}), u, 0.5, 1.0);
        // covariant components: f_1 = -q E_x, time component zero
        CHECK(f[0] == 0.0);
        CHECK(f[1] == Catch::Approx(-0.5 * 2.5));
        CHECK(f[2] == 0.0);
        CHECK(f[3] == 0.0);
    }
    SECTION("orthogonality f.u = 0 for random antisymmetric F") {
        std::mt19937_64 rng(31);
        for (int i = 0; i < 200; ++i) {
            const auto F = rrtest::random_faraday(rng);
            const FourVector v = rrtest::random_timelike_velocity(rng);
            // covariant force against contravariant velocity: plain contraction
            const FourVector f = lorentz_force(F, v, 1.3, 0.7);
            double fu = 0.0;
            for (int k = 0; k < 4; ++k) fu += f[k] * v[k];
            CHECK(std::abs(fu) < 1e-13);
        }
    }
}
