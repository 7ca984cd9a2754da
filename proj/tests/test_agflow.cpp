#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eklab/agflow.hpp"

using namespace eklab;

TEST_SUITE("agflow") {
    TEST_CASE("constant unit field has zero energy") {
        const Grid2 g = Grid2::square(32, -1, 1);
        const Mask all(g, true);
        VectorField2 m(g, all);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) m.put(i, j, unit(0.7));
        CHECK(ag_energy(m, 0.1, all) < 1e-28);
    }

    TEST_CASE("optimal wall profile has energy 4/3 sin^3 alpha per length") {
        const double eps = 0.05, h = eps / 16;
        for (double alpha : {kPi / 6, kPi / 3}) {
            const double s = std::sin(alpha);
            const int nx = 2 * static_cast<int>(std::ceil(12 * eps / s / h)), rows = 4;
            const Grid2 g = Grid2::box(nx, rows, -0.5 * nx * h, 0.5 * nx * h, 0.0, rows * h);
            const Mask all(g, true);
            VectorField2 m(g, all);
            for (int j = 0; j < rows; ++j)
                for (int i = 0; i < nx; ++i) m.put(i, j, {std::cos(alpha), s * std::tanh(s * g.center(i, j).x / eps)});
            CHECK(ag_energy(m, eps, all) / (rows * h) == doctest::Approx(4.0 / 3.0 * s * s * s).epsilon(0.01));
        }
    }

    TEST_CASE("vortex on an annulus has gradient energy eps pi ln(R/r)") {
        const Grid2 g = Grid2::square(512, -1, 1);
        const Mask ann = Shape::annulus({0, 0}, 0.2, 0.9).mask(g);
        VectorField2 m(g, ann);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!ann[k]) continue;
            const Vec2 x = g.center(static_cast<int>(k % 512), static_cast<int>(k / 512));
            const Vec2 u = (1.0 / norm(x)) * x;
            m.vx[k] = u.x;
            m.vy[k] = u.y;
        }
        const double eps = 0.1;
        CHECK(ag_energy(m, eps, ann) == doctest::Approx(eps * kPi * std::log(0.9 / 0.2)).epsilon(0.02));
    }

    TEST_CASE("domain construction") {
        const Grid2 g = Grid2::square(64, -1.4, 1.4);
        CHECK_THROWS_AS(AgDomain::make(g, Shape::disk({0, 0}, 1.0), g.hx), PreconditionError);
        CHECK_THROWS_AS(AgDomain::make(Grid2::square(64, -1.05, 1.05), Shape::disk({0, 0}, 1.0), 4 * g.hx),
                        PreconditionError);
        const AgDomain d = AgDomain::make(g, Shape::disk({0, 0}, 1.0), 4 * g.hx);
        CHECK(d.omega.subset_of(d.layer));
        CHECK(d.frozen.size() == d.node_count());
        CHECK(d.frozen[d.node(0, 0)] == 1);
        CHECK(d.frozen[d.node(32, 32)] == 0);
    }

    TEST_CASE("initial field is tangent in the layer and divergence free") {
        const Grid2 g = Grid2::square(128, -1.3, 1.3);
        const AgDomain d = AgDomain::make(g, Shape::disk({0, 0}, 1.0), 4 * g.hx);
        const StreamFunction s = initial_stream(d, 0.0, 1);
        const VectorField2 m = s.m();
        const Mask outside = d.layer.minus(d.omega);
        double worst = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!outside[k]) continue;
            const Vec2 x = g.center(static_cast<int>(k % 128), static_cast<int>(k / 128));
            worst = std::max(worst, std::abs(dot(Vec2{m.vx[k], m.vy[k]}, (1.0 / norm(x)) * x)));
        }
        CHECK(worst < 4 * g.hx);
        const auto div = stream_divergence(d, initial_stream(d, 0.05, 3).m());
        double dmax = 0.0;
        for (double v : div) dmax = std::max(dmax, std::abs(v));
        CHECK(dmax <= 1e-12);
    }

    TEST_CASE("analytic gradient matches finite differences") {
        const Grid2 g = Grid2::square(48, -1.3, 1.3);
        const AgDomain d = AgDomain::make(g, Shape::disk({0, 0}, 1.0), 4 * g.hx);
        const StreamFunction s = initial_stream(d, 0.05, 5);
        for (double eps : {0.2, 0.05}) {
            const GradientCheck gc = gradient_check(s, eps, 9, 50);
            CHECK(gc.directional_rel_error <= 1e-6);
            CHECK(gc.node_rel_error <= 1e-6);
        }
        const EnergyEval ev = ag_energy(s, 0.1);
        for (std::size_t k = 0; k < ev.grad.size(); ++k) {
            if (d.frozen[k]) CHECK(ev.grad[k] == 0.0);
        }
    }

    TEST_CASE("minimizer traces are monotone and seeded runs repeat") {
        const Grid2 g = Grid2::square(48, -1.3, 1.3);
        const AgDomain d = AgDomain::make(g, Shape::disk({0, 0}, 1.0), 4 * g.hx);
        MinimizeConfig cfg;
        cfg.max_iterations = 60;
        cfg.noise = 0.05;
        const StreamFunction u0 = initial_stream(d, cfg.noise, cfg.seed);
        const MinimizeResult a = minimize_stream(u0, 0.2, cfg), b = minimize_stream(u0, 0.2, cfg);
        REQUIRE(a.trace.size() > 2);
        for (std::size_t k = 1; k < a.trace.size(); ++k) CHECK(a.trace[k] <= a.trace[k - 1]);
        CHECK(a.trace.back() < a.trace.front());
        CHECK(a.u.u == b.u.u);
        CHECK(a.trace.back() == doctest::Approx(ag_energy(a.u, 0.2, false).energy).epsilon(1e-12));
    }

    TEST_CASE("minimizer config validation") {
        MinimizeConfig c;
        CHECK(c.schedule().size() == 5);
        CHECK(c.schedule().back() == doctest::Approx(0.0125));
        c.eps_factor = 1.5;
        CHECK_THROWS_AS(c.validate(), PreconditionError);
        c = MinimizeConfig{};
        c.memory = 0;
        CHECK_THROWS_AS(c.validate(), PreconditionError);
    }

    TEST_CASE("entropy comparison on the square") {
        const Grid2 g = Grid2::square(64, -1.3, 1.3);
        const AgDomain d = AgDomain::make(g, Shape::rect({0, 0}, 1.0, 1.0), 4 * g.hx);
        const StreamFunction s = initial_stream(d, 0.0, 1);
        const auto jk = jin_kohn_pair(0.5);
        const EntropyComparison c = entropy_energy_comparison(s.m(), 0.1, jk.first, jk.second, d.omega);
        CHECK(c.energy > 0.0);
        CHECK(c.total_variation > 0.0);
        CHECK(c.ratio == doctest::Approx(c.total_variation / c.energy));
        CHECK_THROWS_AS(entropy_energy_comparison(s.m(), 0.1, entropy_by_name("jk1-literal", 0.5), jk.second, d.omega),
                        PreconditionError);
    }
}
