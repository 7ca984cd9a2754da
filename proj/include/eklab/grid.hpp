#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eklab/common.hpp"

namespace eklab {

// Uniform cell-centered grid. Cell (i, j) has center (x0 + (i+1/2)hx, y0 + (j+1/2)hy).
struct Grid2 {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double hx = 1.0;
    double hy = 1.0;

    // Square n-by-n grid covering [lo, hi]^2.
    static Grid2 square(int n, double lo, double hi);
    static Grid2 box(int nx, int ny, double xlo, double xhi, double ylo, double yhi);

    void validate() const;
    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
    }
    bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
    Vec2 center(int i, int j) const { return {x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy}; }
    double cell_area() const { return hx * hy; }
    double width() const { return nx * hx; }
    double height() const { return ny * hy; }
    // Continuous index coordinates of a point: cell centers sit at integers.
    Vec2 fractional_index(Vec2 p) const { return {(p.x - x0) / hx - 0.5, (p.y - y0) / hy - 0.5}; }

    friend bool operator==(const Grid2&, const Grid2&) = default;
};

// Cell mask on a grid; 1 = active.
class Mask {
public:
    Mask() = default;
    Mask(const Grid2& g, bool value);

    const Grid2& grid() const { return grid_; }
    bool operator[](std::size_t k) const { return bits_[k] != 0; }
    bool at(int i, int j) const { return grid_.in_range(i, j) && bits_[grid_.index(i, j)] != 0; }
    void set(int i, int j, bool v) { bits_[grid_.index(i, j)] = v ? 1 : 0; }
    void set(std::size_t k, bool v) { bits_[k] = v ? 1 : 0; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }
    double area() const { return static_cast<double>(count()) * grid_.cell_area(); }

    Mask operator&(const Mask& o) const;
    Mask operator|(const Mask& o) const;
    Mask minus(const Mask& o) const;
    bool subset_of(const Mask& o) const;
    // Cells that remain active after removing every cell within `cells` steps
    // (4-neighbour) of an inactive cell or the grid edge.
    Mask eroded(int cells) const;
    // Cells x with x and x + (di, dj) both active.
    Mask shifted_intersection(int di, int dj) const;
    // Minimum Euclidean distance between active cell centers of this mask and
    // inactive cells of `outer`; cells beyond the grid edge count as inactive.
    double distance_to_complement(const Mask& outer) const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    Grid2 grid_{};
    std::vector<std::uint8_t> bits_;
};

struct ScalarField {
    Grid2 grid;
    std::vector<double> values;  // NaN on inactive cells
    Mask mask;

    ScalarField() = default;
    ScalarField(const Grid2& g, const Mask& m, double fill = 0.0);
    double at(int i, int j) const { return values[grid.index(i, j)]; }
    double& at(int i, int j) { return values[grid.index(i, j)]; }
};

struct VectorField2 {
    Grid2 grid;
    std::vector<double> vx;
    std::vector<double> vy;
    Mask mask;

    VectorField2() = default;
    VectorField2(const Grid2& g, const Mask& m);
    Vec2 at(int i, int j) const {
        const auto k = grid.index(i, j);
        return {vx[k], vy[k]};
    }
    void put(int i, int j, Vec2 v) {
        const auto k = grid.index(i, j);
        vx[k] = v.x;
        vy[k] = v.y;
    }
    ScalarField magnitude() const;
};

// Unit vector field m = (cos theta, sin theta) stored by its angle.
struct AngleField {
    Grid2 grid;
    std::vector<double> theta;  // (-pi, pi], NaN on inactive cells
    Mask mask;
    bool smooth = true;          // false for piecewise-constant walls

    AngleField() = default;
    AngleField(const Grid2& g, const Mask& m);
    double at(int i, int j) const { return theta[grid.index(i, j)]; }
    Vec2 m(int i, int j) const { return unit(at(i, j)); }
    Vec2 m(std::size_t k) const { return unit(theta[k]); }
    VectorField2 vectors() const;
};

// Closed regions given by a signed distance (negative inside).
struct Shape {
    enum class Kind { plane, rect, disk, ellipse, annulus };
    Kind kind = Kind::plane;
    Vec2 center{};
    double a = 0.0;  // rect half-width, disk radius, ellipse semi-axis x, annulus inner radius
    double b = 0.0;  // rect half-height, ellipse semi-axis y, annulus outer radius

    static Shape plane() { return {}; }
    static Shape rect(Vec2 c, double half_w, double half_h) { return {Kind::rect, c, half_w, half_h}; }
    static Shape disk(Vec2 c, double r) { return {Kind::disk, c, r, r}; }
    static Shape ellipse(Vec2 c, double ax, double ay) { return {Kind::ellipse, c, ax, ay}; }
    static Shape annulus(Vec2 c, double r_in, double r_out) { return {Kind::annulus, c, r_in, r_out}; }

    double sdf(Vec2 p) const;
    bool contains(Vec2 p) const { return sdf(p) < 0.0; }
    Mask mask(const Grid2& g) const;
    // Cells with sdf < delta (the outer layer Omega_delta).
    Mask dilated_mask(const Grid2& g, double delta) const;
};

// Nested regions Omega' inside U inside Omega plus the layer Omega_delta.
struct RegionSpec {
    Grid2 grid;
    Shape omega_shape;
    Shape u_shape;
    Shape prime_shape;
    double delta = 0.0;
    Mask omega;
    Mask u;
    Mask prime;
    Mask layer;  // Omega_delta (equals omega when delta == 0)

    static RegionSpec make(const Grid2& g, const Shape& omega, const Shape& u, const Shape& prime,
                           double delta = 0.0);
    void validate() const;
};

// Smooth cutoff functions with values in [0, 1].
struct TestFunction {
    enum class Kind { radial, tensor, bump1d };
    Kind kind = Kind::radial;
    Vec2 center{};
    double inner = 0.0;   // radial: plateau radius; tensor: plateau half-widths (x)
    double outer = 1.0;   // radial: support radius; tensor: support half-widths (x)
    double inner_y = 0.0; // tensor only
    double outer_y = 1.0; // tensor only
    double lo = 0.0;      // bump1d support (lo, hi)
    double hi = 1.0;

    static TestFunction radial(Vec2 c, double plateau, double support);
    static TestFunction tensor(Vec2 c, double plateau_x, double support_x, double plateau_y,
                               double support_y);
    static TestFunction bump1d(double lo, double hi);

    double value(Vec2 p) const;
    Vec2 gradient(Vec2 p) const;
    // bump1d evaluators
    double value(double t) const;
    double derivative(double t) const;
    // Cells where the function is nonzero.
    Mask support(const Grid2& g) const;
    // Sup of |grad| (closed form bound evaluated on a fine radial sample).
    double grad_sup() const;
};

// Smooth step: 0 for u <= 0, 1 for u >= 1.
double smooth_step(double u);
double smooth_step_derivative(double u);

struct CanonicalSpec {
    enum class Kind { constant, vortex, wall, mollified_wall, synthetic_smooth };
    enum class Axis { vertical, horizontal };
    Kind kind = Kind::constant;
    double theta0 = 0.0;
    Vec2 center{};
    double alpha = 0.0;
    Axis axis = Axis::vertical;
    double position = 0.0;  // wall line x1 = position (vertical) or x2 = position
    double width = 0.0;     // mollified wall profile width
};

AngleField make_canonical_field(const CanonicalSpec& spec, const Grid2& grid, const Mask& mask);

// Mask with the disk of radius r_core around a point removed.
Mask excise_disk(const Mask& m, Vec2 center, double r_core);

enum class DiffMode { D, T };

// D^h f = f(x+h) - f(x) or T^h f = f(x+h), on cells where both x and x+h are
// active. Off-grid displacements use bilinear sampling; for angle fields the
// (cos, sin) pair is interpolated and renormalized.
ScalarField finite_difference(const ScalarField& f, Vec2 h, DiffMode mode,
                              const std::optional<Mask>& region = std::nullopt);
VectorField2 finite_difference(const AngleField& m, Vec2 h, DiffMode mode,
                               const std::optional<Mask>& region = std::nullopt);

// True when h is an integer number of cells along each axis.
bool on_lattice(const Grid2& g, Vec2 h, int* di = nullptr, int* dj = nullptr);

// (sum |f|^p hx hy)^(1/p) over region & field mask; p = infinity gives the max.
double lp_norm(const ScalarField& f, double p, const std::optional<Mask>& region = std::nullopt);
double lp_norm(const VectorField2& f, double p, const std::optional<Mask>& region = std::nullopt);
double integral(const ScalarField& f, const std::optional<Mask>& region = std::nullopt);

// Central-difference divergence and curl; active where all four neighbours are.
ScalarField divergence(const VectorField2& v, const std::optional<Mask>& region = std::nullopt);
ScalarField curl(const VectorField2& v, const std::optional<Mask>& region = std::nullopt);
// |grad m|^2 by central differences of the embedded unit vectors.
ScalarField grad_norm_sq(const AngleField& m, const std::optional<Mask>& region = std::nullopt);
ScalarField grad_norm(const VectorField2& m, const std::optional<Mask>& region = std::nullopt);

// Normalized gather convolution with a compactly supported smooth bump of radius `width`.
ScalarField mollify(const ScalarField& f, double width);
VectorField2 mollify(const VectorField2& f, double width);
AngleField mollify(const AngleField& m, double width);

// m_r(x) = m(r x) sampled on `target` cells of `target_mask`.
AngleField rescale_field(const AngleField& m, double r, const Grid2& target, const Mask& target_mask);

// Bilinear angle-safe sample; nullopt when a stencil cell is inactive or outside.
std::optional<Vec2> sample_unit(const AngleField& m, Vec2 p);
std::optional<double> sample_scalar(const ScalarField& f, Vec2 p);

}  // namespace eklab
