#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <vector>

#include "eklab/common.hpp"
#include "eklab/quadrature.hpp"

using namespace eklab;

TEST_SUITE("common") {
    TEST_CASE("wrap_angle lands in (-pi, pi]") {
        CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
        CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
        CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
        CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
        CHECK(wrap_angle(7 * kTwoPi + 0.25) == doctest::Approx(0.25));
    }

    TEST_CASE("pairwise sum is exact on representable data and order-stable") {
        std::vector<double> v(1000);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k);
        CHECK(pairwise_sum(v) == 499500.0);
        CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
        std::vector<double> w(777, 0.1);
        CHECK(pairwise_sum(w) == pairwise_sum(w));
    }

    TEST_CASE("parallel_rows visits every row exactly once") {
        std::vector<std::atomic<int>> hits(97);
        parallel_rows(97, [&](int r) { hits[static_cast<std::size_t>(r)]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }

    TEST_CASE("EKLAB_THREADS caps the worker count") {
        setenv("EKLAB_THREADS", "1", 1);
        CHECK(thread_count() == 1);
        unsetenv("EKLAB_THREADS");
        CHECK(thread_count() >= 1);
    }
}

TEST_SUITE("quadrature") {
    TEST_CASE("smooth integrals") {
        CHECK(quad::integrate([](double x) { return std::sin(x); }, 0.0, kPi) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
              doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    }

    TEST_CASE("breakpoints make kinks exact") {
        const double br[] = {0.3};
        const double v = quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, br);
        CHECK(v == doctest::Approx(0.29).epsilon(1e-14));
    }

    TEST_CASE("grading handles an integrable endpoint singularity") {
        quad::Options opt;
        opt.grade_levels = 30;
        const double br[] = {0.0};
        // int_0^1 x^{-1/2} = 2
        const double v = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, br, opt);
        CHECK(v == doctest::Approx(2.0).epsilon(1e-6));
    }

    TEST_CASE("lattice points and cut points") {
        std::vector<double> out;
        quad::lattice_points_in(0.0, 1.0, 0.1, 0.25, out);
        REQUIRE(out.size() == 4);
        CHECK(out[0] == doctest::Approx(0.1));
        CHECK(out[3] == doctest::Approx(0.85));
        const double br[] = {0.5, 2.0, 0.5, -1.0};
        const auto cuts = quad::cut_points(0.0, 1.0, br);
        REQUIRE(cuts.size() == 3);
        CHECK(cuts[1] == 0.5);
    }

    TEST_CASE("Gauss-Legendre weights sum to 2") {
        for (int n : {1, 4, 16, 32}) {
            double s = 0;
            for (double w : quad::gauss_legendre(n).weights) s += w;
            CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
        }
    }
}
