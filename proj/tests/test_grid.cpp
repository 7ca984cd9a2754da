#include <doctest.h>

#include <cmath>

#include "eklab/grid.hpp"

using namespace eklab;

namespace {

AngleField vortex_on(const Grid2& g, const Mask& mask) {
    CanonicalSpec s;
    s.kind = CanonicalSpec::Kind::vortex;
    return make_canonical_field(s, g, mask);
}

}  // namespace

TEST_SUITE("grid") {
    TEST_CASE("grid validation") {
        CHECK_THROWS_AS(Grid2::square(2, 0, 1).validate(), PreconditionError);
        CHECK_NOTHROW(Grid2::square(8, 0, 1).validate());
        const Grid2 g = Grid2::square(4, 0, 1);
        CHECK(g.center(0, 0).x == doctest::Approx(0.125));
        CHECK(g.cell_area() == doctest::Approx(1.0 / 16));
    }

    TEST_CASE("vortex sampled at (1, 0) points along e2") {
        // cell centers x, y in {-1, 0, 1, 2}
        const Grid2 g = Grid2::box(4, 4, -1.5, 2.5, -1.5, 2.5);
        const AngleField m = vortex_on(g, excise_disk(Mask(g, true), {0, 0}, 0.1));
        CHECK_FALSE(m.mask.at(1, 1));
        CHECK(m.at(2, 1) == doctest::Approx(kPi / 2));
        CHECK(m.m(2, 1).x == doctest::Approx(0.0));
        CHECK(m.m(2, 1).y == doctest::Approx(1.0));
        CHECK_THROWS_AS(vortex_on(g, Mask(g, true)), PreconditionError);
    }

    TEST_CASE("mask algebra and erosion") {
        const Grid2 g = Grid2::square(10, 0, 1);
        const Mask all(g, true), none(g, false);
        CHECK(all.count() == 100);
        CHECK((all & none).empty());
        CHECK((all | none) == all);
        CHECK(all.eroded(1).count() == 64);
        CHECK(all.eroded(2).subset_of(all.eroded(1)));
        CHECK(all.minus(all.eroded(1)).count() == 36);
        CHECK(all.shifted_intersection(3, 0).count() == 70);
        CHECK(all.distance_to_complement(all) == doctest::Approx(g.hx));
        const Mask disk = Shape::disk({0.5, 0.5}, 0.3).mask(g);
        CHECK(disk.eroded(1).distance_to_complement(disk) >= g.hx - 1e-12);
    }

    TEST_CASE("product rule for finite differences holds cellwise") {
        const Grid2 g = Grid2::square(16, 0, 1);
        const Mask all(g, true);
        ScalarField f(g, all), h(g, all);
        for (int j = 0; j < 16; ++j) {
            for (int i = 0; i < 16; ++i) {
                const Vec2 x = g.center(i, j);
                f.at(i, j) = std::sin(3 * x.x) + x.y;
                h.at(i, j) = std::cos(2 * x.y) * x.x;
            }
        }
        ScalarField fh(g, all);
        for (std::size_t k = 0; k < fh.values.size(); ++k) fh.values[k] = f.values[k] * h.values[k];
        const Vec2 shift{2 * g.hx, g.hy};
        const ScalarField lhs = finite_difference(fh, shift, DiffMode::D);
        const ScalarField dg = finite_difference(h, shift, DiffMode::D);
        const ScalarField tg = finite_difference(h, shift, DiffMode::T);
        const ScalarField df = finite_difference(f, shift, DiffMode::D);
        int checked = 0;
        for (std::size_t k = 0; k < lhs.values.size(); ++k) {
            if (!lhs.mask[k]) continue;
            CHECK(lhs.values[k] == doctest::Approx(f.values[k] * dg.values[k] + tg.values[k] * df.values[k]).epsilon(1e-13));
            ++checked;
        }
        CHECK(checked == 14 * 15);
    }

    TEST_CASE("central divergence and curl are exact on linear fields") {
        const Grid2 g = Grid2::square(12, -1, 1);
        VectorField2 v(g, Mask(g, true));
        for (int j = 0; j < 12; ++j) {
            for (int i = 0; i < 12; ++i) {
                const Vec2 x = g.center(i, j);
                v.put(i, j, {2 * x.x + 3 * x.y, -x.x + 5 * x.y});
            }
        }
        const ScalarField d = divergence(v), c = curl(v);
        CHECK(d.mask.count() == 100);
        for (std::size_t k = 0; k < d.values.size(); ++k) {
            if (!d.mask[k]) continue;
            CHECK(d.values[k] == doctest::Approx(7.0));
            CHECK(c.values[k] == doctest::Approx(-4.0));
        }
    }

    TEST_CASE("vortex divergence and gradient norm on the annulus") {
        double prev = 0.0;
        for (int n : {64, 128, 256}) {
            const Grid2 g = Grid2::square(n, -1, 1);
            const Mask ann = Shape::annulus({0, 0}, 0.25, 1.0).mask(g);
            const AngleField m = vortex_on(g, ann);
            const double dv = lp_norm(divergence(m.vectors()), 2.0);
            if (prev > 0) CHECK(prev / dv > 3.0);
            prev = dv;
        }
        // ||grad m||^2 over the annulus r in [1/4, 1] -> 2 pi ln 4
        const Grid2 g = Grid2::square(512, -1, 1);
        const Mask ann = Shape::annulus({0, 0}, 0.25, 1.0).mask(g);
        const ScalarField gn = grad_norm_sq(vortex_on(g, ann));
        const double area_missing = ann.area() - gn.mask.area();
        CHECK(area_missing > 0.0);
        CHECK(integral(gn) == doctest::Approx(kTwoPi * std::log(4.0)).epsilon(0.03));
    }

    TEST_CASE("norms and integrals") {
        const Grid2 g = Grid2::square(20, 0, 2);
        const ScalarField one(g, Mask(g, true), 1.0);
        CHECK(integral(one) == doctest::Approx(4.0));
        CHECK(lp_norm(one, 2.0) == doctest::Approx(2.0));
        CHECK(lp_norm(one, INFINITY) == doctest::Approx(1.0));
        CHECK(lp_norm(one, 1.0, Shape::disk({1, 1}, 0.5).mask(g)) == doctest::Approx(Shape::disk({1, 1}, 0.5).mask(g).area()));
    }

    TEST_CASE("mollified wall keeps the tangential total variation") {
        const Grid2 g = Grid2::box(400, 4, -1, 1, 0, 0.02);
        CanonicalSpec s;
        s.kind = CanonicalSpec::Kind::mollified_wall;
        s.alpha = kPi / 3;
        s.width = 0.05;
        const AngleField m = make_canonical_field(s, g, Mask(g, true));
        double tv = 0.0;
        for (int i = 1; i < g.nx; ++i) tv += std::abs(m.m(i, 1).y - m.m(i - 1, 1).y);
        CHECK(tv == doctest::Approx(2 * std::sin(kPi / 3)).epsilon(1e-6));
    }

    TEST_CASE("wall field jumps at the line") {
        const Grid2 g = Grid2::square(8, -1, 1);
        CanonicalSpec s;
        s.kind = CanonicalSpec::Kind::wall;
        s.alpha = kPi / 4;
        const AngleField m = make_canonical_field(s, g, Mask(g, true));
        CHECK(m.at(3, 0) == doctest::Approx(-kPi / 4));
        CHECK(m.at(4, 0) == doctest::Approx(kPi / 4));
        CHECK_FALSE(m.smooth);
        s.alpha = 2.0;
        CHECK_THROWS_AS(make_canonical_field(s, g, Mask(g, true)), PreconditionError);
    }

    TEST_CASE("test functions") {
        const TestFunction eta = TestFunction::radial({0, 0}, 0.2, 0.5);
        CHECK(eta.value({0.1, 0.0}) == doctest::Approx(1.0));
        CHECK(eta.value({0.6, 0.0}) == 0.0);
        const double t = 0.35, e = 1e-6;
        const double fd = (eta.value({t + e, 0.0}) - eta.value({t - e, 0.0})) / (2 * e);
        CHECK(eta.gradient({t, 0.0}).x == doctest::Approx(fd).epsilon(1e-6));
        CHECK(eta.grad_sup() >= std::abs(fd));
        const TestFunction rho = TestFunction::bump1d(0.0, 1.0);
        CHECK(rho.value(0.0) == 0.0);
        CHECK(rho.value(1.0) == 0.0);
        CHECK(rho.value(0.5) > 0.0);
        const double fr = (rho.value(0.3 + e) - rho.value(0.3 - e)) / (2 * e);
        CHECK(rho.derivative(0.3) == doctest::Approx(fr).epsilon(1e-6));
    }

    TEST_CASE("mollify preserves constants and rescale samples m(r x)") {
        const Grid2 g = Grid2::square(32, -1, 1);
        const ScalarField one(g, Mask(g, true), 3.0);
        const ScalarField mo = mollify(one, 0.2);
        for (std::size_t k = 0; k < mo.values.size(); ++k) {
            if (mo.mask[k]) CHECK(mo.values[k] == doctest::Approx(3.0));
        }
        const Grid2 big = Grid2::square(64, -2, 2);
        const AngleField m = vortex_on(big, excise_disk(Mask(big, true), {0, 0}, 0.05));
        const AngleField r = rescale_field(m, 2.0, g, excise_disk(Mask(g, true), {0, 0}, 0.1));
        // the vortex is 0-homogeneous
        for (int j = 0; j < 32; j += 5) {
            for (int i = 0; i < 32; i += 5) {
                if (!r.mask.at(i, j)) continue;
                CHECK(std::abs(wrap_angle(r.at(i, j) - (std::atan2(g.center(i, j).y, g.center(i, j).x) + kPi / 2))) < 1e-5);
            }
        }
    }

    TEST_CASE("region spec nesting is validated") {
        const Grid2 g = Grid2::square(32, -1, 1);
        CHECK_NOTHROW(RegionSpec::make(g, Shape::disk({0, 0}, 0.9), Shape::disk({0, 0}, 0.5), Shape::disk({0, 0}, 0.2)));
        CHECK_THROWS_AS(RegionSpec::make(g, Shape::disk({0, 0}, 0.3), Shape::disk({0, 0}, 0.5), Shape::disk({0, 0}, 0.2)),
                        PreconditionError);
    }
}
