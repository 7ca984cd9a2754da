#include <doctest.h>

#include <cmath>
#include <vector>

#include "eklab/kinetic.hpp"

using namespace eklab;

TEST_SUITE("kinetic") {
    TEST_CASE("indicator is a cell average and integrates to 2m") {
        const Grid2 g = Grid2::square(16, -1, 1);
        CanonicalSpec spec;
        spec.kind = CanonicalSpec::Kind::vortex;
        const AngleField m = make_canonical_field(spec, g, Mask(g, true));
        const KineticField chi = chi_field(m, 512);
        const double ds = chi.sgrid().ds();
        for (std::size_t c = 0; c < g.size(); c += 7) {
            Vec2 acc;
            double total = 0.0;
            for (int k = 0; k < 512; ++k) {
                const double v = chi.value(k, c);
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                acc += v * ds * unit(chi.sgrid().node(k));
                total += v * ds;
            }
            CHECK(total == doctest::Approx(kPi).epsilon(1e-12));
            CHECK(norm(acc - 2.0 * m.m(c)) < 1e-4);
        }
    }

    TEST_CASE("parametric sigma pairing against the closed form") {
        // theta = 0, zeta = sin 2s w(x): <d_s sigma, zeta> = 4 int w F
        const Grid2 g = Grid2::square(64, -1, 1);
        const Mask all(g, true);
        AngleField th(g, all);
        std::fill(th.theta.begin(), th.theta.end(), 0.0);
        ScalarField F(g, all, 0.0);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) F.at(i, j) = 1.0 + g.center(i, j).x;
        const TestFunction w = TestFunction::radial({0, 0}, 0.2, 0.8);
        const KineticTest zeta = KineticTest::product([](double s) { return std::sin(2 * s); },
                                                      [](double s) { return 2 * std::cos(2 * s); }, w);
        double oracle = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) oracle += 4 * w.value(g.center(i, j)) * F.at(i, j) * g.cell_area();
        CHECK(sigma_pairing(KineticDensity::parametric(th, F), zeta) == doctest::Approx(oracle).epsilon(1e-12));
    }

    TEST_CASE("builtin pair satisfies the kinetic equation weakly") {
        const Grid2 g = Grid2::square(128, 0.0, kTwoPi);
        const KineticPair pair = builtin_kinetic_pair(g, 256);
        const TestFunction w = TestFunction::radial({kPi, kPi}, 0.5, 2.0);
        for (int mode = 1; mode <= 3; ++mode) {
            const KineticTest zeta = KineticTest::product([mode](double s) { return std::cos(mode * s) + std::sin(2 * s); },
                                                          [mode](double s) { return -mode * std::sin(mode * s) + 2 * std::cos(2 * s); }, w);
            const double t = theta_pairing(pair.chi, zeta), s = sigma_pairing(pair.sigma, zeta);
            CHECK(std::abs(t - s) <= 1e-3 * std::max(1.0, std::abs(t)));
        }
    }

    TEST_CASE("synthetic pair: compatibility and the c-only sigma") {
        const Grid2 g = Grid2::square(64, -1, 1);
        const Mask all(g, true);
        ScalarField zero(g, all, 0.0), c(g, all), bad(g, all);
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const Vec2 x = g.center(i, j);
                c.at(i, j) = x.x * x.x + 0.5 * x.y;
                bad.at(i, j) = x.x;
            }
        }
        const int ns = 512;
        const KineticPair pair = synthetic_kinetic_pair(zero, zero, c, ns);
        const SGrid sg(ns);
        const double s0 = sg.node(0);
        for (int i : {5, 30, 50}) {
            const std::size_t cell = g.index(i, 20);
            const double c1 = 2 * g.center(i, 20).x, c2 = 0.5;
            for (int k : {0, 100, 300, 511}) {
                const double s = sg.node(k);
                const double want = c1 * (std::sin(s) - std::sin(s0)) + c2 * (std::cos(s0) - std::cos(s));
                CHECK(std::abs(pair.sigma.value(k, cell) - want) < 1e-4);
            }
        }
        try {
            synthetic_kinetic_pair(bad, zero, zero, ns);
            FAIL("compatibility defect not detected");
        } catch (const CompatibilityError& e) {
            CHECK(lp_norm(e.defect, INFINITY) == doctest::Approx(1.0));
        }
    }

    TEST_CASE("test support must stay inside the field") {
        const Grid2 g = Grid2::square(32, -1, 1);
        CanonicalSpec spec;
        const AngleField m = make_canonical_field(spec, g, Shape::disk({0, 0}, 0.5).mask(g));
        const KineticTest zeta = KineticTest::product([](double s) { return std::cos(s); },
                                                      [](double s) { return -std::sin(s); },
                                                      TestFunction::radial({0, 0}, 0.2, 0.9));
        CHECK_THROWS_AS(theta_pairing(chi_field(m, 64), zeta), PreconditionError);
    }
}
