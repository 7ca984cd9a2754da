// Runs the acceptance experiments with their default settings and prints one
// pass/fail line per experiment, after the individual checks.
#include <iostream>
#include <string>
#include <vector>

#include "eklab/experiment.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> ids(argv + 1, argv + argc);
    if (ids.empty()) ids = eklab::kExperimentIds;
    std::vector<std::pair<std::string, bool>> summary;
    for (const std::string& id : ids) {
        eklab::ExperimentConfig cfg;
        cfg.experiment = id;
        bool ok = false;
        try {
            const eklab::ExperimentReport rep = eklab::run_experiment(cfg);
            rep.print(std::cout);
            ok = rep.pass();
        } catch (const std::exception& e) {
            std::cout << id << " ERROR " << e.what() << "\n";
        }
        summary.emplace_back(id, ok);
    }
    std::cout << "\n";
    int failed = 0;
    for (const auto& [id, ok] : summary) {
        std::cout << (ok ? "PASS " : "FAIL ") << id << "\n";
        failed += ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
