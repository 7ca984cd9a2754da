#include <doctest.h>

#include <cmath>
#include <fstream>

#include "eklab/entropy.hpp"
#include "eklab/quadrature.hpp"

using namespace eklab;

namespace {

AngleField canonical(CanonicalSpec::Kind kind, const Grid2& g, const Mask& mask, double alpha = 0.0, double width = 0.0) {
    CanonicalSpec s;
    s.kind = kind;
    s.alpha = alpha;
    s.width = width;
    return make_canonical_field(s, g, mask);
}

// Independent oracle: kappa * int_{w.e^{is} > 0} psi(s) e^{is} ds by panel quadrature.
Vec2 oracle_phi(const std::function<double(double)>& psi, double theta) {
    const double a = theta - kPi / 2, b = theta + kPi / 2;
    quad::Options opt;
    opt.points = 24;
    opt.max_panel = 0.1;
    return {quad::integrate([&](double s) { return psi(s) * std::cos(s); }, a, b, {}, opt),
            quad::integrate([&](double s) { return psi(s) * std::sin(s); }, a, b, {}, opt)};
}

}  // namespace

TEST_SUITE("torus") {
    TEST_CASE("trigonometric interpolation is exact on low modes") {
        const TorusFunction f = TorusFunction::from_samples([] {
            std::vector<double> v(64);
            for (int k = 0; k < 64; ++k) {
                const double s = kTwoPi * k / 64;
                v[static_cast<std::size_t>(k)] = 0.3 + std::cos(2 * s) - 0.5 * std::sin(5 * s);
            }
            return v;
        }());
        for (double s : {0.1, 1.7, 4.0}) {
            CHECK(f(s) == doctest::Approx(0.3 + std::cos(2 * s) - 0.5 * std::sin(5 * s)).epsilon(1e-12));
            CHECK(f.derivative(s) == doctest::Approx(-2 * std::sin(2 * s) - 2.5 * std::cos(5 * s)).epsilon(1e-11));
        }
    }

    TEST_CASE("first moment and symmetry defects") {
        const TorusFunction c = TorusFunction::from_closed_form([](double s) { return std::cos(s); });
        CHECK(c.first_moment().x == doctest::Approx(kPi));
        CHECK(std::abs(c.first_moment().y) < 1e-13);
        const TorusFunction c2 = TorusFunction::from_closed_form([](double s) { return std::cos(2 * s); });
        CHECK(c2.pi_periodic_defect() < 1e-14);
        CHECK(c.pi_periodic_defect() > 1.0);
        CHECK_THROWS_AS(TorusFunction::from_closed_form([](double s) { return std::cos(s); }, 256, {.pi_periodic = true}),
                        PreconditionError);
    }
}

TEST_SUITE("entropy") {
    TEST_CASE("phi_from_psi against closed forms") {
        const auto c2 = TorusFunction::from_closed_form([](double s) { return std::cos(2 * s); }, 256, {.pi_periodic = true});
        const auto s2 = TorusFunction::from_closed_form([](double s) { return std::sin(2 * s); }, 256, {.pi_periodic = true});
        const Vec2 a = phi_from_psi(c2, {1, 0});
        CHECK(a.x == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(std::abs(a.y) < 1e-12);
        const Vec2 b = phi_from_psi(s2, {0, 1});
        CHECK(b.x == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
        CHECK(std::abs(b.y) < 1e-12);
        // closed form e^{-i theta} - 1/3 e^{3 i theta} for cos 2s
        for (double th : {0.3, 1.1, 2.9, -2.0}) {
            const Vec2 v = phi_from_psi_angle(c2, th);
            CHECK(v.x == doctest::Approx(std::cos(th) - std::cos(3 * th) / 3).epsilon(1e-12));
            CHECK(v.y == doctest::Approx(-std::sin(th) - std::sin(3 * th) / 3).epsilon(1e-12));
            const Vec2 o = oracle_phi([](double s) { return std::sin(2 * s); }, th);
            const Vec2 w = phi_from_psi_angle(s2, th);
            CHECK(norm(w - o) < 1e-11);
        }
    }

    TEST_CASE("generators with a nonzero first moment are rejected") {
        const auto bad = TorusFunction::from_closed_form([](double s) { return std::cos(s); });
        CHECK_THROWS_AS(phi_from_psi(bad, {1, 0}), PreconditionError);
    }

    TEST_CASE("Jin-Kohn values and lambda functions") {
        const auto jk = jin_kohn_pair(1.0);
        CHECK(jk.first(0.0).x == doctest::Approx(2.0 / 3.0));
        CHECK(std::abs(jk.first(0.0).y) < 1e-15);
        CHECK(std::abs(jk.second(0.0).x) < 1e-15);
        CHECK(jk.second(0.0).y == doctest::Approx(4.0 / 3.0));
        const double r = 2 * std::sqrt(2.0) / 3;
        CHECK(jk.first(kPi / 4).x == doctest::Approx(r));
        CHECK(jk.first(kPi / 4).y == doctest::Approx(-r));
        const double kappa = 0.5;
        const auto jh = jin_kohn_pair(kappa);
        const TangencyReport t1 = ent_tangency_defect(jh.first, 256), t2 = ent_tangency_defect(jh.second, 256);
        for (int k = 0; k < 256; ++k) {
            const double th = kTwoPi * k / 256;
            CHECK(std::abs(t1.lambda[static_cast<std::size_t>(k)] + 2 * kappa * std::cos(2 * th)) < 1e-8);
            CHECK(std::abs(t2.lambda[static_cast<std::size_t>(k)] + 2 * kappa * std::sin(2 * th)) < 1e-8);
        }
    }

    TEST_CASE("polynomial extensions agree with the circle values") {
        for (auto e : {jin_kohn_pair(0.5).first, jin_kohn_pair(0.5).second, identity_entropy(2.0)}) {
            REQUIRE(e.has_extension());
            for (double th : {0.0, 0.7, 2.2, -1.3}) CHECK(norm(e.extension(unit(th)) - e(th)) < 1e-14);
        }
        CHECK_FALSE(entropy_by_name("jk1-literal", 1.0).has_extension());
    }

    TEST_CASE("tangency defects: ent-fixed vs literal rows") {
        CHECK(ent_tangency_defect(entropy_by_name("jk1", 1.0)).defect <= 1e-8);
        CHECK(ent_tangency_defect(entropy_by_name("jk2", 1.0)).defect <= 1e-8);
        const TangencyReport lit = ent_tangency_defect(entropy_by_name("jk1-literal", 1.0));
        CHECK(lit.defect == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(std::abs(std::sin(2 * lit.defect_theta)) == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("psi from phi recovers cos 2s and round trips") {
        const auto jk = jin_kohn_pair(1.0);
        for (double s : {0.0, 0.4, 1.9, 3.3}) {
            CHECK(psi_from_phi(jk.first.circle, s) == doctest::Approx(std::cos(2 * s)).epsilon(1e-8));
            CHECK(psi_from_phi(jk.second.circle, s) == doctest::Approx(std::sin(2 * s)).epsilon(1e-8));
        }
        const Entropy id = identity_entropy(1.0);
        const TorusFunction psi = psi_table_from_phi(id.circle);
        for (double th : {0.2, 2.5}) CHECK(norm(phi_from_psi_angle(psi, th) - id(th)) < 1e-8);
        // Phi not odd
        CHECK_THROWS_AS(psi_table_from_phi([](double th) { return Vec2{std::cos(th) + 0.3 * std::cos(2 * th), std::sin(th)}; }),
                        PreconditionError);
    }

    TEST_CASE("entropy from a psi table file") {
        const auto path = std::filesystem::temp_directory_path() / "eklab_psi_table.txt";
        {
            std::ofstream f(path);
            f.precision(17);
            for (int k = 0; k < 128; ++k) {
                const double s = kTwoPi * k / 128;
                f << s << " " << std::sin(2 * s) << "\n";
            }
        }
        const Entropy e = entropy_by_name("psi:" + path.string(), 1.0);
        const Entropy ref = jin_kohn_pair(1.0).second;
        for (double th : {0.1, 1.4, 3.0, -2.2}) CHECK(norm(e(th) - ref(th)) < 1e-8);
        CHECK_THROWS_AS(entropy_by_name("nope", 1.0), PreconditionError);
        std::filesystem::remove(path);
    }

    TEST_CASE("jump flux of the pair") {
        const auto jk = jin_kohn_pair(1.0);
        const double a = kPi / 6;
        const Vec2 mm{std::cos(a), -std::sin(a)}, mp{std::cos(a), std::sin(a)};
        CHECK(jump_flux(mm, mp, {1, 0}, jk.second) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
        CHECK(std::abs(jump_flux(mm, mp, {1, 0}, jk.first)) < 1e-14);
        for (double al : {0.3, 1.0, kPi / 2}) {
            const Vec2 a1{std::cos(al), -std::sin(al)}, a2{std::cos(al), std::sin(al)};
            CHECK(jump_flux(a1, a2, {1, 0}, jk.second) == doctest::Approx(8.0 / 3.0 * std::pow(std::sin(al), 3)));
        }
        CHECK_THROWS_AS(jump_flux({1, 0}, {0, 1}, {1, 0}, jk.second), PreconditionError);
    }

    TEST_CASE("constant field has no production; vortex production vanishes under refinement") {
        const Grid2 g = Grid2::square(32, -1, 1);
        const ScalarField d = entropy_production(canonical(CanonicalSpec::Kind::constant, g, Mask(g, true)), jin_kohn_pair(1.0).second);
        CHECK(lp_norm(d, INFINITY) < 1e-12);
        double prev = 0.0;
        for (int n : {64, 128, 256}) {
            const Grid2 gv = Grid2::square(n, -1, 1);
            const AngleField m = canonical(CanonicalSpec::Kind::vortex, gv, Shape::annulus({0, 0}, 0.25, 1).mask(gv));
            const double v = lp_norm(entropy_production(m, jin_kohn_pair(1.0).first), 2.0);
            if (prev > 0) CHECK(prev / v > 2.0);
            prev = v;
        }
        // the literal rows are not entropies: the vortex production does not vanish
        const Grid2 gv = Grid2::square(256, -1, 1);
        const AngleField m = canonical(CanonicalSpec::Kind::vortex, gv, Shape::annulus({0, 0}, 0.25, 1).mask(gv));
        CHECK(lp_norm(entropy_production(m, entropy_by_name("jk1-literal", 1.0)), 2.0) > 0.1);
    }

    TEST_CASE("mollified wall alpha = pi/2 produces 8/3 per unit length") {
        const double h = 1.0 / 400;
        const Grid2 g = Grid2::box(800, 6, -1, 1, 0, 6 * h);
        const AngleField m = canonical(CanonicalSpec::Kind::mollified_wall, g, Mask(g, true), kPi / 2, 0.05);
        const ScalarField d = entropy_production(m, jin_kohn_pair(1.0).second);
        double row = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            if (d.mask.at(i, 3)) row += d.at(i, 3) * h;
        }
        CHECK(row == doctest::Approx(8.0 / 3.0).epsilon(1e-6));
    }

    TEST_CASE("scaling prefactor and dilation check") {
        const Grid2 src = Grid2::square(256, -2.2, 2.2), tgt = Grid2::square(256, -1.05, 1.05);
        const AngleField m = canonical(CanonicalSpec::Kind::mollified_wall, src, Mask(src, true), kPi / 4, 0.1);
        const ScalingCheck sc = scaling_check(m, jin_kohn_pair(0.5).second, 2.0, 4.0 / 3.0, tgt);
        CHECK(sc.prefactor == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(sc.lhs / sc.rhs == doctest::Approx(1.0).epsilon(0.03));
        CHECK_THROWS_AS(scaling_check(m, jin_kohn_pair(0.5).second, 4.0, 2.0, tgt), PreconditionError);
    }
}
