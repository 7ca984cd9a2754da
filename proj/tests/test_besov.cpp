#include <doctest.h>

#include <cmath>

#include "eklab/besov.hpp"

using namespace eklab;

TEST_SUITE("besov") {
    TEST_CASE("dyadic ladder") {
        const auto l = dyadic_ladder(0.5, 2, 4);
        REQUIRE(l.size() == 3);
        CHECK(l[0] == 0.125);
        CHECK(l[2] == 0.03125);
        CHECK_THROWS_AS(dyadic_ladder(0.5, 4, 2), PreconditionError);
        CHECK_THROWS_AS(dyadic_ladder(-1.0), PreconditionError);
    }

    TEST_CASE("constant field has zero seminorm") {
        const Grid2 g = Grid2::square(64, -1, 1);
        CanonicalSpec spec;
        spec.theta0 = 0.4;
        const AngleField m = make_canonical_field(spec, g, Mask(g, true));
        const Mask U = Shape::disk({0, 0}, 0.5).mask(g);
        CHECK(besov_seminorm(m, 2.0, U, dyadic_ladder(0.5)).seminorm == 0.0);
    }

    TEST_CASE("vortex structure exponent is 1/3 at q = 6 and isotropic") {
        const Grid2 g = Grid2::square(512, -1, 1);
        CanonicalSpec spec;
        spec.kind = CanonicalSpec::Kind::vortex;
        const AngleField m = make_canonical_field(spec, g, Shape::disk({0, 0}, 0.9).mask(g));
        const StructureReport r = structure_exponent(m, 6.0, Shape::disk({0, 0}, 0.5).mask(g), dyadic_ladder(0.5, 2, 6));
        CHECK(r.slope == doctest::Approx(1.0 / 3.0).epsilon(0.15));
        for (double s : r.direction_slopes) CHECK(std::abs(s - r.slope) < 0.02);
    }

    TEST_CASE("ladder reaching past the domain is rejected") {
        const Grid2 g = Grid2::square(64, -1, 1);
        CanonicalSpec spec;
        spec.kind = CanonicalSpec::Kind::vortex;
        const AngleField m = make_canonical_field(spec, g, Shape::disk({0, 0}, 0.6).mask(g));
        CHECK_THROWS_AS(structure_exponent(m, 6.0, Shape::disk({0, 0}, 0.5).mask(g), dyadic_ladder(0.5, 1, 5)),
                        PreconditionError);
        CHECK_THROWS_AS(structure_exponent(m, 6.0, Shape::disk({0, 0}, 0.2).mask(g), {0.1, 0.2, 0.05, 0.01}),
                        PreconditionError);
    }
}
