#include <doctest.h>

#include <cmath>

#include "eklab/compensation.hpp"

using namespace eklab;

TEST_SUITE("compensation") {
    TEST_CASE("Xi spot value, symmetries and closed form") {
        const TestKernel s = TestKernel::sine();
        CHECK(xi_phi(s, -kPi / 4, kPi / 4, XiMethod::double_quadrature) == doctest::Approx(32.0 / 9.0).epsilon(1e-9));
        const TestKernel k = TestKernel::power(3.0);
        const double a = xi_phi(k, 0.3, 1.4, XiMethod::double_quadrature);
        CHECK(std::abs(xi_phi(k, 1.4, 0.3, XiMethod::double_quadrature) - a) < 1e-8);
        CHECK(std::abs(xi_phi(k, 0.3 + 2.1, 1.4 + 2.1, XiMethod::double_quadrature) - a) < 1e-8);
        CHECK(std::abs(xi_phi(k, 0.3, 1.4, XiMethod::closed_form) - a) < 1e-8);
        CHECK(xi_phi(k, 0.8, 0.8, XiMethod::double_quadrature) == 0.0);
        CHECK_THROWS_AS(xi_closed(k, 2.0), PreconditionError);
    }

    TEST_CASE("omega_phi for the cubic kernel") {
        const TestKernel k = TestKernel::power(3.0);
        CHECK(omega_phi(k, 1.0) == doctest::Approx(1.0 / 5120.0).epsilon(1e-15));
        const TestKernel s = TestKernel::sine();
        // t int_0^{t/4} s sin 2s ds
        const double t = 1.6, u = t / 4;
        CHECK(omega_phi(s, t) == doctest::Approx(t * (std::sin(2 * u) / 4 - u * std::cos(2 * u) / 2)).epsilon(1e-12));
        CHECK_THROWS_AS(omega_phi(k, 2.5), PreconditionError);
    }

    TEST_CASE("coercivity constant is positive and stable") {
        const CoercivityReport r = coercivity_report(TestKernel::power(3.0), 128);
        CHECK(r.c > 0.0);
        CHECK(r.beta.size() == 128);
        CHECK(coercivity_report(TestKernel::power(3.0), 256).c <= r.c * (1 + 1e-12));
    }

    TEST_CASE("G and H forms") {
        const TestKernel s = TestKernel::sine();
        CHECK(h_func(s, 0.0, kPi / 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        // G(1, e^{i theta}) with phi' = 2 cos 2t
        const double th = 0.4;
        const double oracle = quad::integrate([&](double t) { return 2 * std::cos(2 * t) * std::sin(t); }, th - kPi / 2,
                                              th + kPi / 2);
        CHECK(g_func(s, 0.0, th) == doctest::Approx(oracle).epsilon(1e-12));
        for (double beta : {0.2, 0.9, 1.5}) {
            CHECK(gh_identity_check(s, 0.3, beta) < 1e-10);
            CHECK(gh_identity_check(TestKernel::power(3.0), -1.1, beta) < 1e-8);
        }
    }

    TEST_CASE("Delta from Xi matches the defining double integral") {
        const Grid2 g = Grid2::square(12, -1, 1);
        CanonicalSpec spec;
        spec.kind = CanonicalSpec::Kind::vortex;
        spec.center = {0.13, -0.07};
        const AngleField m = make_canonical_field(spec, g, Mask(g, true));
        const TestKernel k = TestKernel::power(3.0);
        const Vec2 h{2 * g.hx, g.hy};
        const ScalarField a = delta_field(m, k, h), b = delta_field_direct(m, k, h);
        REQUIRE(a.mask == b.mask);
        double worst = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) {
            if (a.mask[c]) worst = std::max(worst, std::abs(a.values[c] - b.values[c]));
        }
        CHECK(worst <= 1e-6);
    }

    TEST_CASE("identity residual decreases under refinement") {
        const TestKernel k = TestKernel::power(3.0);
        std::vector<double> res;
        for (int n : {64, 128}) {
            const Grid2 g = Grid2::square(n, 0.0, kTwoPi);
            const KineticPair pair = builtin_kinetic_pair(g, 2 * n);
            res.push_back(comp_identity_residual(pair.chi, pair.sigma, k, TestFunction::radial({kPi, kPi}, 0.3, 1.0),
                                                 TestFunction::bump1d(0.0, 0.5), 0.5)
                              .residual);
        }
        CHECK(res[0] / res[1] > 1.7);
    }

    TEST_CASE("bootstrap rejects tau beyond r0") {
        const Grid2 g = Grid2::square(64, -1, 1);
        CanonicalSpec spec;
        spec.kind = CanonicalSpec::Kind::vortex;
        const AngleField m = make_canonical_field(spec, g, Mask(g, true));
        const RegionSpec rs = RegionSpec::make(g, Shape::plane(), Shape::disk({0, 0}, 0.5), Shape::disk({0, 0}, 0.2));
        const TestFunction eta = TestFunction::radial({0, 0}, 0.5, 0.7);
        const BootstrapReport ok = besov_bootstrap(m, std::nullopt, 2.0, rs, eta, {0.05});
        REQUIRE(ok.rows.size() == 1);
        CHECK(ok.rows[0].tau == doctest::Approx(std::lround(0.05 / g.hx) * g.hx));
        CHECK(ok.gamma == doctest::Approx(3.0));
        CHECK_THROWS_AS(besov_bootstrap(m, std::nullopt, 2.0, rs, eta, {ok.r0 + 0.1}), PreconditionError);
        CHECK_THROWS_AS(besov_bootstrap(m, std::nullopt, 2.5, rs, eta, {0.05}), PreconditionError);
    }
}
