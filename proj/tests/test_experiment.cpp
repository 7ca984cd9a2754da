#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eklab/common.hpp"
#include "eklab/experiment.hpp"

using namespace eklab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("config parsing") {
        std::istringstream is("# comment\nexperiment = E4\nnx = 64   # trailing\nkappa=1.5\nentropies = jk2\n");
        const ExperimentConfig c = ExperimentConfig::parse(is);
        CHECK(c.experiment == "E4");
        CHECK(c.nx == 64);
        CHECK(c.kappa == 1.5);
        CHECK(c.entropies == "jk2");
        CHECK_NOTHROW(c.validate());
        std::istringstream bad("colour = red\n");
        CHECK_THROWS_AS(ExperimentConfig::parse(bad), ParseError);
        ExperimentConfig d;
        CHECK_THROWS_AS(d.set("nx", "many"), ParseError);
    }

    TEST_CASE("validation") {
        ExperimentConfig c;
        c.experiment = "E1";
        c.nx = 2;
        CHECK_THROWS_AS(c.validate(), PreconditionError);
        c.nx = 0;
        c.p = 3.0;
        CHECK_THROWS_AS(c.validate(), PreconditionError);
        c.p = 0.0;
        c.experiment = "E11";
        CHECK_THROWS(run_experiment(c));
    }

    TEST_CASE("E1 report carries values and tolerances; artifacts repeat byte for byte") {
        const auto base = std::filesystem::temp_directory_path() / "eklab_exp_test";
        std::filesystem::remove_all(base);
        ExperimentConfig c;
        c.experiment = "E1";
        c.output_dir = base / "a";
        const ExperimentReport r = run_experiment(c);
        CHECK(r.pass());
        const auto j = nlohmann::json::parse(slurp(base / "a" / "report.json"));
        CHECK(j["experiment"] == "E1");
        bool found = false;
        for (const auto& chk : j["checks"]) {
            if (chk["name"] == "xi_sin2t_beta_pi_4") {
                found = true;
                CHECK(chk["tolerance"].get<double>() == 1e-6);
                CHECK(chk["target"].get<double>() == doctest::Approx(32.0 / 9.0));
            }
        }
        CHECK(found);
        c.output_dir = base / "b";
        run_experiment(c);
        CHECK(slurp(base / "a" / "xi.csv") == slurp(base / "b" / "xi.csv"));
        CHECK_FALSE(slurp(base / "a" / "xi.csv").empty());
        std::filesystem::remove_all(base);
    }
}
