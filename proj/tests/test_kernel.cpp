#include <doctest.h>

#include <cmath>
#include <vector>

#include "eklab/common.hpp"
#include "eklab/kernel.hpp"
#include "eklab/quadrature.hpp"

using namespace eklab;

TEST_SUITE("kernel") {
    TEST_CASE("power kernel is t^gamma near zero, odd, pi-periodic, C1") {
        const TestKernel k = TestKernel::power(3.0);
        CHECK(k(0.5) == doctest::Approx(0.125));
        CHECK(k(-0.5) == doctest::Approx(-0.125));
        CHECK(k(0.5 + kPi) == doctest::Approx(0.125));
        CHECK(std::abs(k(kPi / 2)) < 1e-15);
        const double q = kPi / 4, e = 1e-7;
        CHECK(k(q - e) == doctest::Approx(k(q + e)).epsilon(1e-6));
        CHECK(k.derivative(q - e) == doctest::Approx(k.derivative(q + e)).epsilon(1e-5));
        for (double t : {0.2, 0.9, 1.3, 2.0, -0.7}) {
            const double fd = (k(t + 1e-6) - k(t - 1e-6)) / 2e-6;
            CHECK(k.derivative(t) == doctest::Approx(fd).epsilon(1e-6));
        }
    }

    TEST_CASE("sine kernel and norms") {
        const TestKernel s = TestKernel::sine();
        CHECK(s(kPi / 4) == doctest::Approx(1.0));
        CHECK(s.l1_norm() == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(s.derivative_l1_norm() == doctest::Approx(8.0).epsilon(1e-12));
        const TestKernel k = TestKernel::power(3.0);
        const double br[] = {kPi / 4};
        const double oracle = 4 * quad::integrate([&](double t) { return std::abs(k(t)); }, 0.0, kPi / 2, br);
        CHECK(k.l1_norm() == doctest::Approx(oracle).epsilon(1e-12));
    }

    TEST_CASE("regularized kernels for gamma <= 1") {
        const TestKernel k = TestKernel::power(0.6);
        CHECK(k.regularized());
        CHECK(k(0.0) == 0.0);
        CHECK(k(0.3) == doctest::Approx(std::pow(0.3 * 0.3 + 1e-12, -0.2) * 0.3).epsilon(1e-12));
        CHECK_FALSE(TestKernel::power(1.5).regularized());
        CHECK_THROWS_AS(TestKernel::power(0.0), PreconditionError);
    }

    TEST_CASE("seams are shifted multiples of pi/4") {
        const TestKernel k = TestKernel::power(3.0);
        std::vector<double> out;
        k.seams(0.0, kPi, 0.1, out);
        CHECK(out.size() == 4);
        CHECK(out.front() == doctest::Approx(0.1));
    }
}
