#include <doctest.h>

#include <cstring>
#include <sstream>

#include "eklab/field_io.hpp"
#include "eklab/kinetic.hpp"

using namespace eklab;

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::isnan(a[k]) && std::isnan(b[k])) continue;
        if (std::memcmp(&a[k], &b[k], sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("field_io") {
    TEST_CASE("64x64 vortex round trips bit-identically") {
        const Grid2 g = Grid2::square(64, -1, 1);
        CanonicalSpec s;
        s.kind = CanonicalSpec::Kind::vortex;
        const AngleField m = make_canonical_field(s, g, excise_disk(Mask(g, true), {0, 0}, 0.1));
        std::stringstream ss;
        write_field(ss, m);
        const AnyField back = read_field(ss);
        const auto& a = std::get<AngleField>(back);
        CHECK(a.grid == m.grid);
        CHECK(a.mask == m.mask);
        CHECK(bitwise_equal(a.theta, m.theta));
    }

    TEST_CASE("scalar and vector2 round trips") {
        const Grid2 g = Grid2::box(5, 4, 0.1, 1.1, -0.3, 0.5);
        Mask mk(g, true);
        mk.set(2, 1, false);
        ScalarField f(g, mk);
        VectorField2 v(g, mk);
        for (std::size_t k = 0; k < f.values.size(); ++k) {
            if (!mk[k]) continue;
            f.values[k] = 1.0 / (3.0 + k);
            v.vx[k] = std::sqrt(2.0 + k);
            v.vy[k] = -1e-300 * k;
        }
        std::stringstream a, b;
        write_field(a, f);
        write_field(b, v);
        const auto f2 = std::get<ScalarField>(read_field(a));
        const auto v2 = std::get<VectorField2>(read_field(b));
        CHECK(bitwise_equal(f2.values, f.values));
        CHECK(bitwise_equal(v2.vx, v.vx));
        CHECK(bitwise_equal(v2.vy, v.vy));
        CHECK(v2.mask == mk);
    }

    TEST_CASE("version and shape errors") {
        std::istringstream bad_version("EKLAB-FIELD 2\nscalar 4 4 0 0 1 1\n");
        CHECK_THROWS_AS(read_field(bad_version), ParseError);
        std::istringstream bad_magic("EKLAB-FEILD 1\n");
        CHECK_THROWS_AS(read_field(bad_magic), ParseError);
        std::ostringstream odd;
        odd << "EKLAB-FIELD 1\nvector2 4 4 0 0 1 1\n";
        for (int j = 0; j < 4; ++j) odd << "1 2 3 4 5 6 7\n";
        std::istringstream odd_in(odd.str());
        CHECK_THROWS_AS(read_field(odd_in), ParseError);
        std::ostringstream inf;
        inf << "EKLAB-FIELD 1\nscalar 4 4 0 0 1 1\n";
        for (int j = 0; j < 4; ++j) inf << "1 inf 3 4\n";
        std::istringstream inf_in(inf.str());
        CHECK_THROWS_AS(read_field(inf_in), ParseError);
    }

    TEST_CASE("kinetic stack round trip") {
        const KineticPair pair = builtin_kinetic_pair(Grid2::square(8, 0, kTwoPi), 128);
        std::stringstream ss;
        const FieldStack st = pair.sigma.to_stack();
        write_stack(ss, st);
        const FieldStack back = read_stack(ss);
        CHECK(back.blocks.size() == 128);
        CHECK(back.ds == st.ds);
        for (std::size_t k = 0; k < st.blocks.size(); ++k) CHECK(bitwise_equal(back.blocks[k], st.blocks[k]));
    }

    TEST_CASE("format_double prints 17 significant digits") {
        CHECK(format_double(0.1) == "0.10000000000000001");
        CHECK(format_double(0.5) == "0.5");
        CHECK(format_double(std::nan("")) == "nan");
        const double x = 1.0 / 3.0;
        CHECK(std::stod(format_double(x)) == x);
    }
}
