#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "eklab/grid.hpp"

namespace eklab {

// EKF1 text format:
//   EKLAB-FIELD 1
//   <kind> nx ny x0 y0 hx hy          kind in {angle, scalar, vector2}
//   ny rows of nx values (2*nx interleaved for vector2), 17 significant
//   digits, inactive cells written as `nan`.
// Stacks (kinetic fields) use kind `stack`, a third line `ns <Ns> <s0> <ds>`,
// then Ns blocks of ny rows.
using AnyField = std::variant<ScalarField, VectorField2, AngleField>;

void write_field(std::ostream& os, const ScalarField& f);
void write_field(std::ostream& os, const VectorField2& f);
void write_field(std::ostream& os, const AngleField& f);
AnyField read_field(std::istream& is);

void save_field(const std::filesystem::path& path, const AnyField& f);
AnyField load_field(const std::filesystem::path& path);

struct FieldStack {
    Grid2 grid;
    Mask mask;
    double s0 = 0.0;
    double ds = 0.0;
    std::vector<std::vector<double>> blocks;  // one per s-node, grid.size() values each
};

void write_stack(std::ostream& os, const FieldStack& st);
FieldStack read_stack(std::istream& is);

// 17 significant digits ("nan" for NaN); round-trips bit-exactly.
std::string format_double(double v);

}  // namespace eklab
