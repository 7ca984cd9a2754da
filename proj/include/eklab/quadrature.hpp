#pragma once

#include <functional>
#include <span>
#include <vector>

namespace eklab::quad {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule; cached per n.
const Rule& gauss_legendre(int n);

struct Options {
    int points = 16;          // nodes per panel
    double max_panel = 0.5;   // longer pieces are split uniformly
    int grade_levels = 0;     // geometric refinement toward every breakpoint
    double grade_ratio = 0.2;
};

// Integrates f over [a, b] (a <= b) splitting at every breakpoint strictly
// inside (a, b). Each smooth piece gets composite Gauss-Legendre, optionally
// graded geometrically toward its ends.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breaks = {}, const Options& opt = {});

// Piece boundaries of [a, b] cut at the given points (sorted, deduplicated).
std::vector<double> cut_points(double a, double b, std::span<const double> breaks);

// All points c + k*step (k integer) lying strictly inside (a, b).
void lattice_points_in(double a, double b, double c, double step, std::vector<double>& out);

}  // namespace eklab::quad
