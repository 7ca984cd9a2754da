#pragma once

#include <vector>

#include "eklab/grid.hpp"

namespace eklab {

struct StructureSample {
    int direction = 0;  // 0..7, counter-clockwise from e1 in steps of pi/4
    Vec2 h{};
    double length = 0.0;
    double norm = 0.0;    // ||D^h m||_{L^q(U cap (U - h))}
    double scaled = 0.0;  // |h|^{-1/3} norm
};

struct StructureReport {
    double q = 0.0;
    std::vector<double> ladder;            // strictly decreasing |h|
    std::vector<StructureSample> samples;  // direction-major
    std::vector<double> direction_slopes;  // NaN for all-zero directions
    double slope = 0.0;                    // mean over non-degenerate directions
    double residual = 0.0;                 // RMS log residual of the per-direction fits
    double seminorm = 0.0;                 // max scaled norm
};

// |h| = 2^{-k} L for k = kmin..kmax.
std::vector<double> dyadic_ladder(double L, int kmin = 2, int kmax = 7);

// Fits log ||D^h m||_{L^q} against log |h| in eight compass directions.
StructureReport structure_exponent(const AngleField& m, double q, const Mask& U, const std::vector<double>& ladder);
// q = 3p; the seminorm is sup |h|^{-1/3} ||D^h m||_{L^{3p}}.
StructureReport besov_seminorm(const AngleField& m, double p, const Mask& U, const std::vector<double>& ladder);

}  // namespace eklab
