#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eklab/entropy.hpp"
#include "eklab/grid.hpp"

namespace eklab {

// Domain Omega with the tangential layer Omega_delta. Stream-function nodes
// sit at cell corners; nodes outside Omega are frozen to the signed distance.
struct AgDomain {
    Grid2 grid;
    Shape shape;
    double delta = 0.0;
    Mask omega;  // cells with center in Omega
    Mask layer;  // cells of Omega_delta
    std::vector<std::uint8_t> frozen;  // per node

    static AgDomain make(const Grid2& g, const Shape& shape, double delta);
    int node_nx() const { return grid.nx + 1; }
    int node_ny() const { return grid.ny + 1; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(node_nx()) * static_cast<std::size_t>(node_ny());
    }
    std::size_t node(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(node_nx()) + static_cast<std::size_t>(i);
    }
    Vec2 node_position(int i, int j) const { return {grid.x0 + i * grid.hx, grid.y0 + j * grid.hy}; }
};

struct StreamFunction {
    const AgDomain* domain = nullptr;
    std::vector<double> u;  // per node

    // m = grad^perp u = (-d2 u, d1 u) at cell centers from corner-averaged differences.
    VectorField2 m() const;
};

// Signed distance on every node plus seeded uniform noise of the given
// amplitude on free nodes.
StreamFunction initial_stream(const AgDomain& d, double noise, std::uint64_t seed);

// Energy density eps/2 |grad m|^2 + (1 - |m|^2)^2 / (2 eps); the gradient term
// uses differences across cell faces with at least one cell in `cells` and
// both in the field mask (half of each face term is booked to each side).
double ag_energy(const VectorField2& m, double eps, const Mask& cells, ScalarField* density = nullptr);

// Discrete divergence dual to StreamFunction::m: at each node whose four
// cells lie in the field mask, differences of face averages of m. Vanishes up
// to rounding for every stream function. Indexed by node.
std::vector<double> stream_divergence(const AgDomain& d, const VectorField2& m);

struct EnergyEval {
    double energy = 0.0;
    std::vector<double> grad;  // d energy / d u per node, zero on frozen nodes
};

EnergyEval ag_energy(const StreamFunction& s, double eps, bool with_gradient = true);

struct GradientCheck {
    double directional_rel_error = 0.0;
    double node_rel_error = 0.0;  // max over sampled nodes
};

GradientCheck gradient_check(const StreamFunction& s, double eps, std::uint64_t seed, int nodes = 100);

struct MinimizeConfig {
    double eps_start = 0.2;
    double eps_factor = 0.5;
    int eps_count = 5;
    int max_iterations = 3000;
    double grad_tol = 1e-6;   // on max |dE/du| / cell area
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 50;
    int memory = 10;
    double noise = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;
    std::vector<double> schedule() const;
};

struct MinimizeResult {
    StreamFunction u;
    std::vector<double> trace;  // energy after each accepted step, starting with the initial energy
    int iterations = 0;
    double grad_norm = 0.0;
    std::string stop_reason;
};

// L-BFGS with monotone Armijo backtracking on the free nodes.
MinimizeResult minimize_stream(const StreamFunction& u0, double eps, const MinimizeConfig& cfg);

struct EntropyComparison {
    double energy = 0.0;
    double total_variation = 0.0;  // sum |(div S1(m), div S2(m))| over cells
    double ratio = 0.0;            // total_variation / energy
};

EntropyComparison entropy_energy_comparison(const VectorField2& m, double eps, const Entropy& s1, const Entropy& s2,
                                            const Mask& cells);

struct Rung {
    double eps = 0.0;
    StreamFunction u;
    double energy = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;
    std::string stop_reason;
    bool trace_monotone = true;
    EntropyComparison comparison;
    double max_div = 0.0;  // max |stream_divergence| over nodes
};

std::vector<Rung> continuation_run(const AgDomain& d, const MinimizeConfig& cfg, double kappa = 0.5);

// Angle RMS of m/|m| against the vortex around `center`, over cells of
// `cells` farther than r_core from the center.
double vortex_angle_rms(const VectorField2& m, Vec2 center, double r_core, const Mask& cells);

}  // namespace eklab
