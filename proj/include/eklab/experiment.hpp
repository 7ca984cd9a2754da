#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace eklab {

// Flat `key = value` configuration; `#` starts a comment.
struct ExperimentConfig {
    std::string experiment;  // E0..E9
    int nx = 0;              // base grid size, 0 = experiment default
    int ns = 0;              // s-grid size, 0 = 2 nx
    double kappa = 0.5;
    double gamma = 3.0;      // power kernel exponent
    double p = 0.0;          // integrability exponent, 0 = experiment default
    std::string entropies = "jk1,jk2";
    double eps_start = 0.2;
    double eps_factor = 0.5;
    int eps_count = 5;
    int max_iterations = 3000;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;  // empty: no artifacts

    void set(const std::string& key, const std::string& value);
    static ExperimentConfig parse(std::istream& is);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    void validate() const;
    std::vector<std::pair<std::string, std::string>> entries() const;
};

// One measured value and the rule it was checked against.
struct Check {
    enum class Relation { near, at_most, at_least, greater, within };
    std::string name;
    double value = 0.0;
    Relation relation = Relation::near;
    double target = 0.0;     // near: target; at_most/at_least/greater: bound; within: lower end
    double tolerance = 0.0;  // near: allowed |value - target|; within: upper end
    bool pass = false;

    static Check near(std::string name, double value, double target, double tol);
    static Check at_most(std::string name, double value, double bound);
    static Check at_least(std::string name, double value, double bound);
    static Check greater(std::string name, double value, double bound);
    static Check within(std::string name, double value, double lo, double hi);
};

struct ExperimentReport {
    std::string experiment;
    std::string title;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<Check> checks;
    std::vector<std::string> artifacts;
    double runtime_s = 0.0;

    bool pass() const;
    std::string to_json() const;
    // One line per check plus a summary line.
    void print(std::ostream& os) const;
};

extern const std::vector<std::string> kExperimentIds;

// Runs one experiment. Artifacts (CSV, EKF1, report.json) go to
// config.output_dir when it is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace eklab
